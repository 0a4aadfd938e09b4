#include "ckt/finance.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "ckt/csv.hpp"
#include "ckt/errors.hpp"
#include "ckt/stats.hpp"

namespace ckt {
namespace {

void check_dates(const std::vector<std::string>& dates, const std::string& path) {
  for (std::size_t i = 0; i < dates.size(); ++i) {
    if (!is_iso_date(dates[i])) throw DataError(path + ": invalid date '" + dates[i] + "'");
    if (i > 0 && !(dates[i - 1] < dates[i])) throw DataError(path + ": dates are not strictly increasing at " + dates[i]);
  }
}

}  // namespace

bool is_iso_date(const std::string& s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u}) {
    if (s[i] < '0' || s[i] > '9') return false;
  }
  const int year = std::stoi(s.substr(0, 4));
  const int month = std::stoi(s.substr(5, 2));
  const int day = std::stoi(s.substr(8, 2));
  if (month < 1 || month > 12 || day < 1) return false;
  static constexpr int days[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  const bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
  return day <= days[month - 1] + (month == 2 && leap ? 1 : 0);
}

std::vector<MarketRow> read_market_csv(const std::string& path, std::vector<std::string>& warnings) {
  const CsvTable t = read_csv_file(path);
  const std::size_t cd = t.column("date"), ch = t.column("high"), cl = t.column("low"), cc = t.column("close");
  std::vector<MarketRow> rows;
  std::vector<std::string> dates;
  for (const auto& r : t.rows) {
    MarketRow row{r[cd], parse_double(r[ch], "high"), parse_double(r[cl], "low"), parse_double(r[cc], "close")};
    dates.push_back(row.date);
    if (!(row.close > 0.0)) {
      warnings.push_back(path + ": " + row.date + " rejected, nonpositive close");
      continue;
    }
    if (row.low > row.high || row.close < row.low || row.close > row.high) {
      warnings.push_back(path + ": " + row.date + " dropped, inconsistent high/low/close");
      continue;
    }
    rows.push_back(row);
  }
  check_dates(dates, path);
  return rows;
}

std::vector<LevelRow> read_level_csv(const std::string& path, std::vector<std::string>& warnings) {
  const CsvTable t = read_csv_file(path);
  const std::size_t cd = t.column("date"), cv = t.column("level");
  std::vector<LevelRow> rows;
  std::vector<std::string> dates;
  for (const auto& r : t.rows) {
    LevelRow row{r[cd], parse_double(r[cv], "level")};
    dates.push_back(row.date);
    if (!std::isfinite(row.level)) {
      warnings.push_back(path + ": " + row.date + " dropped, non-finite level");
      continue;
    }
    rows.push_back(row);
  }
  check_dates(dates, path);
  return rows;
}

DatedSeries compute_sigma(const std::vector<MarketRow>& rows) {
  DatedSeries s;
  for (const auto& r : rows) {
    if (!(r.close > 0.0)) throw DataError(r.date + ": nonpositive close");
    s.dates.push_back(r.date);
    s.values.push_back((r.high - r.low) / r.close);
  }
  return s;
}

DatedSeries compute_delta_sigma(const std::vector<LevelRow>& rows, std::vector<std::string>& warnings) {
  DatedSeries s;
  if (rows.size() < 2) {
    warnings.push_back("implied-volatility series has fewer than two rows; no differences");
    return s;
  }
  for (std::size_t i = 1; i < rows.size(); ++i) {
    s.dates.push_back(rows[i].date);
    s.values.push_back(rows[i].level - rows[i - 1].level);
  }
  return s;
}

DatedSeries log_returns(const std::vector<MarketRow>& rows) {
  DatedSeries s;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (!(rows[i].close > 0.0) || !(rows[i - 1].close > 0.0)) throw DataError(rows[i].date + ": nonpositive close");
    s.dates.push_back(rows[i].date);
    s.values.push_back(std::log(rows[i].close / rows[i - 1].close));
  }
  return s;
}

ReturnsDataset build_returns_dataset(const DatedSeries& returns_a, const DatedSeries& returns_b,
                                     const DatedSeries& conditioning, const std::string& start,
                                     const std::string& end) {
  if (!is_iso_date(start) || !is_iso_date(end)) throw DataError("period bounds must be ISO dates");
  if (end < start) throw DataError("period ends before it starts");
  auto in_period = [&](const std::string& d) { return !(d < start) && !(end < d); };
  std::map<std::string, double> b, c;
  for (std::size_t i = 0; i < returns_b.size(); ++i) b.emplace(returns_b.dates[i], returns_b.values[i]);
  for (std::size_t i = 0; i < conditioning.size(); ++i) c.emplace(conditioning.dates[i], conditioning.values[i]);

  std::map<std::string, int> seen;  // every date of any series inside the period
  for (const auto* s : {&returns_a, &returns_b, &conditioning}) {
    for (const auto& d : s->dates) {
      if (in_period(d)) ++seen[d];
    }
  }
  ReturnsDataset out;
  for (std::size_t i = 0; i < returns_a.size(); ++i) {
    const std::string& d = returns_a.dates[i];
    if (!in_period(d)) continue;
    const auto ib = b.find(d);
    const auto ic = c.find(d);
    if (ib == b.end() || ic == c.end()) continue;
    const double z[1] = {ic->second};
    out.data.add(returns_a.values[i], ib->second, z);
    out.dates.push_back(d);
  }
  out.dropped = seen.size() - out.dates.size();
  if (out.data.empty()) throw DataError("the series share no date inside the period");
  return out;
}

CurveTable estimate_curve(const Dataset& data, const std::vector<MethodSpec>& methods, std::size_t points,
                          std::uint64_t seed) {
  if (data.dim() != 1) throw DataError("curve estimation needs a one-dimensional covariate");
  if (points < 1) throw ConfigError("the curve grid needs at least one point");
  std::vector<double> z(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) z[i] = data.z(i)[0];
  const double lo = quantile(z, 0.01);
  const double hi = quantile(z, 0.99);
  CurveTable t;
  for (std::size_t g = 0; g < points; ++g) {
    t.z.push_back(points == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * static_cast<double>(g) / static_cast<double>(points - 1));
  }
  for (const auto& spec : methods) {
    t.methods.push_back(spec.display_name());
    std::vector<double> col(points, std::nan(""));
    try {
      const auto est = fit_method(data, spec, seed);
      for (std::size_t g = 0; g < points; ++g) {
        const double zz[1] = {t.z[g]};
        col[g] = est->predict(zz);
      }
    } catch (const std::exception& e) {
      std::fill(col.begin(), col.end(), std::nan(""));
      t.errors.push_back(spec.display_name() + ": " + e.what());
    }
    t.values.push_back(std::move(col));
  }
  return t;
}

std::string curve_csv(const CurveTable& t) {
  std::ostringstream out;
  out << 'z';
  for (const auto& m : t.methods) out << ',' << m;
  out << '\n';
  for (std::size_t g = 0; g < t.z.size(); ++g) {
    out << format_double(t.z[g]);
    for (const auto& col : t.values) out << ',' << (std::isnan(col[g]) ? std::string("nan") : format_double(col[g]));
    out << '\n';
  }
  return out.str();
}

}  // namespace ckt
