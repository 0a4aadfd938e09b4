#include "ckt/stats.hpp"

#include <cmath>
#include <numeric>
#include <utility>

#include <boost/math/distributions/normal.hpp>

#include "ckt/dataset.hpp"
#include "ckt/errors.hpp"

namespace ckt {

double empirical_kendall_tau(std::span<const double> x1, std::span<const double> x2) {
  if (x1.size() != x2.size()) throw DataError("kendall tau: columns differ in length");
  const std::size_t n = x1.size();
  if (n < 2) throw DataError("kendall tau needs at least two points");
  long long balance = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) balance += concordance_indicator(x1[i], x2[i], x1[j], x2[j]);
  }
  return static_cast<double>(balance) / (0.5 * static_cast<double>(n) * static_cast<double>(n - 1));
}

namespace {

// Number of pairs sharing a key, sum over groups of C(g, 2); `keys` is sorted in place.
template <class Key>
double tied_pairs(std::vector<Key>& keys) {
  std::sort(keys.begin(), keys.end());
  double total = 0.0;
  for (std::size_t a = 0; a < keys.size();) {
    std::size_t b = a + 1;
    while (b < keys.size() && keys[b] == keys[a]) ++b;
    const double g = static_cast<double>(b - a);
    total += 0.5 * g * (g - 1.0);
    a = b;
  }
  return total;
}

}  // namespace

double tie_fraction(std::span<const double> x1, std::span<const double> x2) {
  if (x1.size() != x2.size()) throw DataError("tie fraction: columns differ in length");
  const std::size_t n = x1.size();
  if (n < 2) return 0.0;
  std::vector<double> a(x1.begin(), x1.end());
  std::vector<double> b(x2.begin(), x2.end());
  std::vector<std::pair<double, double>> both(n);
  for (std::size_t i = 0; i < n; ++i) both[i] = {x1[i], x2[i]};
  // inclusion-exclusion over "tied in x1" and "tied in x2"
  const double tied = tied_pairs(a) + tied_pairs(b) - tied_pairs(both);
  return tied / (0.5 * static_cast<double>(n) * static_cast<double>(n - 1));
}

double quantile(std::vector<double> values, double prob) {
  if (values.empty()) throw DataError("quantile of an empty sample");
  if (!(prob >= 0.0 && prob <= 1.0)) throw ConfigError("quantile level outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = prob * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double median(std::vector<double> values) {
  if (values.empty()) throw DataError("median of an empty sample");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

double mean(std::span<const double> values) {
  if (values.empty()) throw DataError("mean of an empty sample");
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ConfigError("normal quantile level must lie in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, SplitMix64& rng) {
  if (k > n) throw ConfigError("cannot draw more items than available");
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  // partial Fisher-Yates; the first k slots hold the draw
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (n - i));
    std::swap(all[i], all[j]);
  }
  all.resize(k);
  std::sort(all.begin(), all.end());
  return all;
}

}  // namespace ckt
