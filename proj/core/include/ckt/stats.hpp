#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "ckt/rng.hpp"

namespace ckt {

/// (concordant - discordant) / C(n, 2) by exhaustive enumeration; tied
/// pairs count as discordant, like concordance_indicator.
double empirical_kendall_tau(std::span<const double> x1, std::span<const double> x2);

/// Fraction of the C(n, 2) pairs tied in x1 or in x2; 0 when n < 2.
double tie_fraction(std::span<const double> x1, std::span<const double> x2);

/// Linear-interpolation sample quantile (type 7). Takes a copy.
double quantile(std::vector<double> values, double prob);

/// Median; mean of the two middle values for an even count.
double median(std::vector<double> values);

double mean(std::span<const double> values);

/// Standard normal cdf and quantile.
double normal_cdf(double x);
double normal_quantile(double p);

template <class T>
void shuffle(std::vector<T>& values, SplitMix64& rng) {
  std::shuffle(values.begin(), values.end(), rng);
}

/// k distinct indices of [0, n), returned sorted ascending.
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, SplitMix64& rng);

}  // namespace ckt
