#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ckt/dataset.hpp"
#include "ckt/estimator.hpp"

namespace ckt {

/// Validated ISO-8601 calendar date (YYYY-MM-DD); compares as a string.
bool is_iso_date(const std::string& s);

struct MarketRow {
  std::string date;
  double high = 0.0;
  double low = 0.0;
  double close = 0.0;
};

struct LevelRow {
  std::string date;
  double level = 0.0;
};

/// A value per trading day, dates strictly increasing.
struct DatedSeries {
  std::vector<std::string> dates;
  std::vector<double> values;
  std::size_t size() const { return dates.size(); }
};

/// Reads `date,high,low,close`. Rows with low > high or close outside
/// [low, high], and rows with a nonpositive close, are dropped with a warning.
/// Throws DataError on malformed dates or non-increasing dates.
std::vector<MarketRow> read_market_csv(const std::string& path, std::vector<std::string>& warnings);
/// Reads `date,level`.
std::vector<LevelRow> read_level_csv(const std::string& path, std::vector<std::string>& warnings);

/// (high - low) / close per day.
DatedSeries compute_sigma(const std::vector<MarketRow>& rows);

/// level(i) - level(i - 1), dated at day i. A single row gives an empty series and a warning.
DatedSeries compute_delta_sigma(const std::vector<LevelRow>& rows, std::vector<std::string>& warnings);

/// log(close(i) / close(i - 1)), dated at day i.
DatedSeries log_returns(const std::vector<MarketRow>& rows);

struct ReturnsDataset {
  Dataset data{1};
  std::vector<std::string> dates;
  std::size_t dropped = 0;  ///< days in the period missing from some series
};

/// Exact inner join of the two return series and the conditioning series on
/// dates in [start, end] (inclusive). Throws DataError when nothing is left.
ReturnsDataset build_returns_dataset(const DatedSeries& returns_a, const DatedSeries& returns_b,
                                     const DatedSeries& conditioning, const std::string& start,
                                     const std::string& end);

/// Estimates per method on an equispaced grid of the covariate.
struct CurveTable {
  std::vector<double> z;
  std::vector<std::string> methods;
  std::vector<std::vector<double>> values;  ///< values[m][g]; NaN where the method failed
  std::vector<std::string> errors;          ///< one message per failed method
};

/// Grid of `points` values over [q_0.01, q_0.99] of z (p = 1 only).
CurveTable estimate_curve(const Dataset& data, const std::vector<MethodSpec>& methods, std::size_t points,
                          std::uint64_t seed);

/// Header z,<method>...; failed values are written as "nan".
std::string curve_csv(const CurveTable& table);

}  // namespace ckt
