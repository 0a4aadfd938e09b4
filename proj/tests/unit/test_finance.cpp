#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "ckt/errors.hpp"
#include "ckt/finance.hpp"
#include "ckt/plot.hpp"
#include "ckt/sim.hpp"
#include "ckt/stats.hpp"
#include "support.hpp"

using namespace ckt;

namespace {

std::string write_temp(const std::string& name, const std::string& body) {
  const auto path = std::filesystem::temp_directory_path() / ("ckt_test_" + name);
  std::ofstream(path) << body;
  return path.string();
}

DatedSeries series(std::vector<std::string> dates, std::vector<double> values) {
  return DatedSeries{std::move(dates), std::move(values)};
}

std::string day(int d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "2012-09-%02d", d);
  return buf;
}

}  // namespace

TEST_CASE("intraday range proxy") {
  const auto s = compute_sigma({{"2010-01-04", 100, 100, 100}, {"2010-01-05", 110, 100, 105}, {"2010-01-06", 50, 50, 50}});
  REQUIRE(s.size() == 3);
  CHECK(s.values[0] == 0.0);
  CHECK(s.values[1] == doctest::Approx(10.0 / 105.0));
  CHECK(s.values[1] == doctest::Approx(0.095238).epsilon(1e-5));
  CHECK(s.values[2] == 0.0);
  CHECK(s.dates[1] == "2010-01-05");
}

TEST_CASE("implied volatility differences") {
  std::vector<std::string> warnings;
  const auto d = compute_delta_sigma({{"2010-01-04", 20}, {"2010-01-05", 22}, {"2010-01-06", 21}}, warnings);
  CHECK(d.values == std::vector<double>{2.0, -1.0});
  CHECK(d.dates == std::vector<std::string>{"2010-01-05", "2010-01-06"});
  CHECK(warnings.empty());
  const auto flat = compute_delta_sigma({{"2010-01-04", 30}, {"2010-01-05", 30}, {"2010-01-06", 30}}, warnings);
  CHECK(flat.values == std::vector<double>{0.0, 0.0});
  const auto single = compute_delta_sigma({{"2010-01-04", 30}}, warnings);
  CHECK(single.size() == 0);
  CHECK(warnings.size() == 1);
}

TEST_CASE("log returns") {
  const auto r = log_returns({{"2010-01-04", 100, 100, 100}, {"2010-01-05", 110, 110, 110}});
  REQUIRE(r.size() == 1);
  CHECK(r.values[0] == doctest::Approx(std::log(1.1)));
  CHECK(r.values[0] == doctest::Approx(0.09531).epsilon(1e-4));
  CHECK(r.dates[0] == "2010-01-05");
}

TEST_CASE("market file validation") {
  std::vector<std::string> warnings;
  const std::string path = write_temp("market.csv",
                                      "date,high,low,close\n"
                                      "2012-01-02,10,9,9.5\n"
                                      "2012-01-03,10,11,10.5\n"  // low above high
                                      "2012-01-04,10,9,12\n"     // close above high
                                      "2012-01-05,10,9,0\n"      // nonpositive close
                                      "2012-01-06,10,9,9.8\n");
  const auto rows = read_market_csv(path, warnings);
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].date == "2012-01-06");
  CHECK(warnings.size() == 3);
  CHECK_THROWS_AS(read_market_csv(write_temp("bad_date.csv", "date,high,low,close\n2012-13-01,1,1,1\n"), warnings),
                  DataError);
  CHECK_THROWS_AS(
      read_market_csv(write_temp("order.csv", "date,high,low,close\n2012-01-03,1,1,1\n2012-01-02,1,1,1\n"), warnings),
      DataError);
  CHECK_THROWS_AS(read_market_csv("/nonexistent/market.csv", warnings), DataError);
  const auto levels = read_level_csv(write_temp("level.csv", "date,level\n2012-01-02,20.5\n2012-01-03,21\n"), warnings);
  CHECK(levels.size() == 2);
  CHECK(levels[1].level == 21.0);
  CHECK(is_iso_date("2012-02-29"));
  CHECK_FALSE(is_iso_date("2011-02-29"));
  CHECK_FALSE(is_iso_date("2012-2-3"));
}

TEST_CASE("ten-day join fixture") {
  // a: days 1-10, b: misses day 4, conditioning: misses day 7, period days 2-9
  std::vector<std::string> da, db, dc;
  std::vector<double> va, vb, vc;
  for (int d = 1; d <= 10; ++d) {
    da.push_back(day(d));
    va.push_back(0.01 * d);
    if (d != 4) {
      db.push_back(day(d));
      vb.push_back(-0.01 * d);
    }
    if (d != 7) {
      dc.push_back(day(d));
      vc.push_back(d);
    }
  }
  const auto joined = build_returns_dataset(series(da, va), series(db, vb), series(dc, vc), day(2), day(9));
  // days 2, 3, 5, 6, 8, 9
  CHECK(joined.dates == std::vector<std::string>{day(2), day(3), day(5), day(6), day(8), day(9)});
  CHECK(joined.dropped == 2);
  REQUIRE(joined.data.size() == 6);
  CHECK(joined.data.x1(2) == doctest::Approx(0.05));
  CHECK(joined.data.x2(2) == doctest::Approx(-0.05));
  CHECK(joined.data.z(2)[0] == 5.0);

  const auto early = series({"2009-01-05", "2009-01-06"}, {0.1, 0.2});
  const auto late = series({"2013-01-07", "2013-01-08"}, {0.1, 0.2});
  CHECK_THROWS_AS(build_returns_dataset(early, late, early, "2009-01-01", "2014-01-01"), DataError);
  CHECK_THROWS_AS(build_returns_dataset(early, early, early, "2010-01-01", "2009-01-01"), DataError);
}

TEST_CASE("curve tables") {
  const Dataset d = testing::reference_dataset(300, 2);
  MethodSpec tree;
  tree.method = Method::tree;
  MethodSpec broken;
  broken.method = Method::logit;
  broken.bandwidth = 1e-9;  // no pair survives
  const CurveTable one = estimate_curve(d, {tree}, 1, 3);
  REQUIRE(one.z.size() == 1);
  const std::string csv = curve_csv(one);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
  CHECK(csv.rfind("z,tree\n", 0) == 0);

  const CurveTable t = estimate_curve(d, {tree, broken}, 25, 3);
  CHECK(t.methods == std::vector<std::string>{"tree", "logit"});
  CHECK(t.errors.size() == 1);
  for (double v : t.values[0]) CHECK(std::abs(v) <= 1.0);
  for (double v : t.values[1]) CHECK(std::isnan(v));
  CHECK(curve_csv(t).find(",nan\n") != std::string::npos);
  CHECK(t.z.front() < t.z.back());
  for (std::size_t g = 1; g < t.z.size(); ++g) CHECK(t.z[g] > t.z[g - 1]);

  const std::string svg = curves_svg(t, "tau & friends", "z");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("tau &amp; friends") != std::string::npos);
  CHECK(svg.find(method_color("tree")) != std::string::npos);
  CHECK(method_color("logit") != method_color("tree"));
  CHECK(method_color("forest") == method_color("forest_unadapted"));
  CHECK(method_color("something") == "black");
  CHECK_THROWS_AS(estimate_curve(d, {tree}, 0, 1), ConfigError);
  CHECK_THROWS_AS(estimate_curve(testing::random_dataset(50, 2, 1), {tree}, 5, 1), DataError);
}

TEST_CASE("every method recovers a constant tau") {
  // single-dataset curves carry boundary noise of about 0.05; the mean over
  // three independent samples isolates any systematic departure
  std::vector<MethodSpec> specs;
  for (auto m : {Method::logit, Method::probit, Method::tree, Method::forest, Method::knn, Method::nnet}) {
    MethodSpec s;
    s.method = m;
    specs.push_back(s);
  }
  const double rho = tau_to_param(CopulaFamily::gaussian, 0.5);
  std::vector<std::vector<double>> mean_curve(specs.size(), std::vector<double>(20, 0.0));
  for (std::uint64_t seed = 21; seed <= 23; ++seed) {
    SplitMix64 rng(seed);
    Dataset d(1);
    for (std::size_t i = 0; i < 2000; ++i) {
      const double z[1] = {rng.uniform()};
      const auto [u1, u2] = sample_copula(CopulaFamily::gaussian, rho, rng);
      d.add(z[0] + normal_quantile(u1), z[0] + normal_quantile(u2), z);
    }
    const CurveTable t = estimate_curve(d, specs, 20, seed);
    CHECK(t.errors.empty());
    for (std::size_t m = 0; m < specs.size(); ++m) {
      for (std::size_t g = 0; g < 20; ++g) {
        CHECK(std::abs(t.values[m][g]) <= 1.0);
        mean_curve[m][g] += t.values[m][g] / 3.0;
      }
    }
  }
  for (std::size_t m = 0; m < specs.size(); ++m) {
    double worst = 0.0;
    for (double v : mean_curve[m]) worst = std::max(worst, std::abs(v - 0.5));
    INFO(to_string(specs[m].method) << " worst deviation " << worst);
    CHECK(worst <= 0.1);
  }
}
