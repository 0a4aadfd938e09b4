#include <doctest.h>

#include <cmath>
#include <memory>
#include <vector>

#include "ckt/errors.hpp"
#include "ckt/sim.hpp"
#include "ckt/stats.hpp"
#include "support.hpp"

using namespace ckt;

namespace {

// Returns the true tau of the setting, shifted by a constant.
class ShiftedTruth final : public Estimator {
 public:
  ShiftedTruth(TauFunction f, double shift) : f_(f), shift_(shift) {}
  double predict(std::span<const double> z) const override { return tau_function_eval(f_, z) + shift_; }
  std::string name() const override { return "truth"; }
  nlohmann::json to_json() const override { return {}; }

 private:
  TauFunction f_;
  double shift_;
};

double tau_at_fixed_z(const SimulationConfig& cfg, std::vector<double> z, std::size_t draws, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<double> x1(draws), x2(draws);
  for (std::size_t i = 0; i < draws; ++i) std::tie(x1[i], x2[i]) = sample_conditional(cfg, z, rng);
  return testing::kendall_tau_by_inversions(x1, x2);
}

}  // namespace

TEST_CASE("tau function examples") {
  auto at = [](TauFunction f, std::vector<double> z) { return tau_function_eval(f, z); };
  CHECK(at(TauFunction::reference, {0.5}) == 0.75);
  CHECK(at(TauFunction::f2, {0.2}) == doctest::Approx(0.48));
  CHECK(at(TauFunction::f1, {0.49}) == doctest::Approx(0.9));
  CHECK(at(TauFunction::f1, {0.5}) == doctest::Approx(0.1));
  CHECK(at(TauFunction::f3, {0.125}) == doctest::Approx(0.9));
  CHECK(at(TauFunction::f4, {0.25}) == doctest::Approx(0.5));
  CHECK(at(TauFunction::f4, {0.75}) == doctest::Approx(0.5));
  CHECK(at(TauFunction::setting2d_1, {1.0, 0.5}) == doctest::Approx(0.5 * std::tanh(1.0)));
  CHECK(at(TauFunction::setting2d_2, {0.3, 0.4}) == doctest::Approx(std::expm1(0.7) / (std::exp(0.7) + 1.0)));
  CHECK(at(TauFunction::setting2d_3, {2.0, -0.5}) == doctest::Approx(std::exp(-1.0)));
  CHECK_THROWS_AS(at(TauFunction::reference, {0.1, 0.2}), DataError);
  CHECK_THROWS_AS(tau_function_from_string("f9"), ConfigError);
  for (auto f : {TauFunction::reference, TauFunction::f1, TauFunction::f3, TauFunction::setting2d_3}) {
    CHECK(tau_function_from_string(to_string(f)) == f);
  }
}

TEST_CASE("reference setting moments") {
  SimulationConfig cfg;
  cfg.n = 100000;
  cfg.seed = 3;
  const Dataset d = simulate_dataset(cfg);
  double sum = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    sum += d.x1(i);
    CHECK(d.z(i)[0] >= 0.0);
    CHECK(d.z(i)[0] <= 1.0);
  }
  CHECK(std::abs(sum / d.size() - 0.5) <= 0.01);
  CHECK(std::abs(tau_at_fixed_z(cfg, {0.5}, 10000, 4) - 0.75) <= 0.02);
}

TEST_CASE("increasing margin transforms preserve the dependence") {
  for (double z : {0.2, 0.5, 0.8}) {
    SimulationConfig cfg;
    const double truth = tau_function_eval(cfg.tau, std::vector<double>{z});
    const double base = tau_at_fixed_z(cfg, {z}, 20000, 8);
    for (auto margins : {Margins::m2, Margins::m3, Margins::m4, Margins::normal_z1}) {
      cfg.margins = margins;
      const double got = tau_at_fixed_z(cfg, {z}, 20000, 8);
      CHECK(got == doctest::Approx(base).epsilon(1e-12));  // same uniforms, same ranks
      CHECK(std::abs(got - truth) <= 0.02);
    }
  }
}

TEST_CASE("other laws, copulas and guards") {
  SimulationConfig two_d;
  two_d.z_law = ZLaw::normal_uniform;
  two_d.tau = TauFunction::setting2d_1;
  two_d.n = 20000;
  const Dataset d = simulate_dataset(two_d);
  CHECK(d.dim() == 2);
  std::vector<double> z1(d.size()), z2(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    z1[i] = d.z(i)[0];
    z2[i] = d.z(i)[1];
    CHECK(std::abs(z2[i]) <= 1.0);
  }
  CHECK(std::abs(testing::kendall_tau_by_inversions(z1, z2) - 0.5) <= 0.02);

  SimulationConfig expo = two_d;
  expo.z_law = ZLaw::exp_normal;
  expo.tau = TauFunction::setting2d_3;
  const Dataset e = simulate_dataset(expo);
  for (std::size_t i = 0; i < e.size(); ++i) CHECK(e.z(i)[0] > 0.0);

  SimulationConfig mismatch;
  mismatch.tau = TauFunction::setting2d_1;
  CHECK_THROWS_AS(simulate_dataset(mismatch), ConfigError);
  mismatch = SimulationConfig{};
  mismatch.n = 0;
  CHECK_THROWS_AS(simulate_dataset(mismatch), ConfigError);

  SimulationConfig m3;
  m3.margins = Margins::m3;
  m3.n = 2000;
  const Dataset m3d = simulate_dataset(m3);
  for (std::size_t i = 0; i < m3d.size(); ++i) {
    CHECK(m3d.x1(i) >= 0.0);
    CHECK(m3d.x2(i) >= m3d.z(i)[0]);
    CHECK(m3d.x2(i) <= m3d.z(i)[0] + 1.0);
  }
  SplitMix64 rng(1);
  const std::vector<double> zero{0.0};
  CHECK_THROWS_AS(sample_conditional(m3, zero, rng), DataError);

  SimulationConfig student;
  student.copula.family = CopulaFamily::student;
  student.copula.df_from_z = true;
  student.n = 500;
  CHECK(simulate_dataset(student).size() == 500);
  for (auto family : {CopulaFamily::clayton, CopulaFamily::gumbel, CopulaFamily::frank}) {
    SimulationConfig c;
    c.copula.family = family;
    CHECK(std::abs(tau_at_fixed_z(c, {0.3}, 20000, 5) - 0.63) <= 0.02);
  }
}

TEST_CASE("error criterion") {
  SimulationConfig cfg;
  cfg.n = 50;
  const auto grid = default_error_grid(1);
  REQUIRE(grid.size() == 100);
  CHECK(grid.front()[0] == doctest::Approx(0.01));
  CHECK(grid.back()[0] == doctest::Approx(0.99));
  CHECK(default_error_grid(2).size() == 400);
  auto fitter = [](double shift) -> Fitter {
    return [shift](const Dataset&, std::uint64_t) { return std::make_unique<ShiftedTruth>(TauFunction::reference, shift); };
  };
  const ErrorReport exact = error_criterion(fitter(0.0), cfg, 3, grid);
  CHECK(exact.err == 0.0);
  CHECK(exact.n_simu == 3);
  CHECK(exact.n_points == 100);
  const ErrorReport biased = error_criterion(fitter(0.1), cfg, 3, grid);
  CHECK(biased.err == doctest::Approx(0.01));
  CHECK(biased.squared_errors.size() == 300);

  CHECK(integrated_error({{1.0, 2.0}, {3.0, 4.0}}, {0.0, 1.0}) == doctest::Approx((1.0 + 1.0 + 9.0 + 9.0) / 4.0));
  CHECK_THROWS_AS(integrated_error({{1.0}}, {0.0, 1.0}), DataError);
  CHECK_THROWS_AS(error_criterion(fitter(0.0), cfg, 0, grid), ConfigError);
}

TEST_CASE("failing simulations are excluded and counted") {
  SimulationConfig cfg;
  cfg.n = 30;
  cfg.seed = 77;
  // fail whenever the first draw of x1 is positive
  const Fitter picky = [](const Dataset& d, std::uint64_t) -> std::unique_ptr<Estimator> {
    if (d.x1(0) > 0.5) throw NumericalError("refused");
    return std::make_unique<ShiftedTruth>(TauFunction::reference, 0.2);
  };
  std::size_t expected = 0;
  for (std::size_t s = 0; s < 12; ++s) {
    SimulationConfig local = cfg;
    local.seed = stream_seed(cfg.seed, s);
    expected += simulate_dataset(local).x1(0) > 0.5;
  }
  REQUIRE(expected > 0);
  REQUIRE(expected < 12);
  const ErrorReport r = error_criterion(picky, cfg, 12, default_error_grid(1));
  CHECK(r.failures == expected);
  CHECK(r.failure_messages.size() == expected);
  CHECK(r.per_simulation.size() == 12 - expected);
  CHECK(r.err == doctest::Approx(0.04));
}

TEST_CASE("experiments are reproducible and tabulated") {
  const nlohmann::json config = {
      {"seed", 5},
      {"n_simu", 2},
      {"settings", {{{"name", "reference"}, {"n", 150}}, {{"name", "f3"}, {"tau", "f3"}, {"n", 150}}}},
      {"methods", {{{"method", "tree"}}, {{"method", "knn"}}}}};
  const ExperimentResult a = run_experiment(config);
  const ExperimentResult b = run_experiment(config);
  REQUIRE(a.cells.size() == 4);
  for (std::size_t c = 0; c < 4; ++c) {
    CHECK(a.cells[c].report.err == b.cells[c].report.err);
    CHECK(a.cells[c].report.failures == 0);
  }
  CHECK(a.config_hash == config_hash(config));
  const std::string csv = experiment_csv(a);
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(a.config_hash));
  CHECK(csv.rfind(std::string("# config_hash=") + hash + " seed=5\n", 0) == 0);
  CHECK(csv.find("setting,n,tree,knn,tree_seconds,knn_seconds,failures\n") != std::string::npos);
  CHECK(csv.find("\nreference,150,") != std::string::npos);
  CHECK(csv.find("\nf3,150,") != std::string::npos);
  CHECK_THROWS_AS(run_experiment({{"settings", nlohmann::json::array()}}), ConfigError);

  SimulationConfig s;
  s.tau = TauFunction::f4;
  s.margins = Margins::m4;
  s.copula.family = CopulaFamily::student;
  s.copula.df_from_z = true;
  s.n = 123;
  const SimulationConfig back = simulation_config_from_json(to_json(s));
  CHECK(back.tau == TauFunction::f4);
  CHECK(back.margins == Margins::m4);
  CHECK(back.copula.df_from_z);
  CHECK(back.n == 123);
}

TEST_CASE("logit error shrinks with the sample size") {
  // five independent batches of two simulations each
  int improved = 0;
  const auto grid = default_error_grid(1);
  MethodSpec spec;
  spec.method = Method::logit;
  const Fitter fit = [&](const Dataset& d, std::uint64_t seed) { return fit_method(d, spec, seed); };
  for (std::uint64_t batch = 0; batch < 5; ++batch) {
    SimulationConfig small;
    small.n = 1000;
    small.seed = 1000 + 97 * batch;
    SimulationConfig large = small;
    large.n = 2000;
    const double e_small = error_criterion(fit, small, 2, grid).err;
    const double e_large = error_criterion(fit, large, 2, grid).err;
    MESSAGE("batch " << batch << ": n=1000 " << 1000 * e_small << ", n=2000 " << 1000 * e_large);
    improved += e_large < e_small;
  }
  CHECK(improved >= 4);
}
