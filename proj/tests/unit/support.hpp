#pragma once

// Generators and brute-force oracles shared by the unit tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "ckt/dataset.hpp"
#include "ckt/features.hpp"
#include "ckt/rng.hpp"
#include "ckt/sim.hpp"

namespace ckt::testing {

// Continuous coordinates: no ties in x1, x2 or z with probability one.
inline Dataset random_dataset(std::size_t n, std::size_t p, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Dataset d(p);
  std::vector<double> z(p);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& c : z) c = rng.uniform();
    const double x1 = rng.uniform() + 0.5 * z[0];
    const double x2 = rng.uniform() + 0.5 * x1;
    d.add(x1, x2, z);
  }
  return d;
}

inline Dataset reference_dataset(std::size_t n, std::uint64_t seed) {
  SimulationConfig cfg;
  cfg.n = n;
  cfg.seed = seed;
  return simulate_dataset(cfg);
}

// 1 when concordant, -1 otherwise (ties included).
inline int sign_label(double a1, double a2, double b1, double b2) {
  const double prod = (b1 - a1) * (b2 - a2);
  return prod > 0.0 ? 1 : -1;
}

// Kendall's tau of a tie-free sample in O(n log n): sort by x1, then count
// inversions of x2 by merge sort; each inversion is a discordant pair.
inline double kendall_tau_by_inversions(const std::vector<double>& x1, const std::vector<double>& x2) {
  const std::size_t n = x1.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x1[a] < x1[b]; });
  std::vector<double> y(n), buffer(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = x2[order[i]];
  double inversions = 0.0;
  for (std::size_t width = 1; width < n; width *= 2) {
    for (std::size_t lo = 0; lo < n; lo += 2 * width) {
      const std::size_t mid = std::min(lo + width, n), hi = std::min(lo + 2 * width, n);
      std::size_t a = lo, b = mid, out = lo;
      while (a < mid && b < hi) {
        if (y[b] < y[a]) {
          inversions += static_cast<double>(mid - a);
          buffer[out++] = y[b++];
        } else {
          buffer[out++] = y[a++];
        }
      }
      while (a < mid) buffer[out++] = y[a++];
      while (b < hi) buffer[out++] = y[b++];
    }
    y.swap(buffer);
  }
  const double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  return 1.0 - 2.0 * inversions / pairs;
}

// Fixed-step gradient ascent on the logit criterion, coded from scratch:
// log(1/2 + g(w t)/2) = log sigmoid(w t). The step 1/L uses the bound
// L = (1/4) sum v |psi|^2 on the Hessian norm, so every step is an ascent step.
inline std::vector<double> gradient_ascent_oracle(const PairDataset& pairs, const FeatureMap& f) {
  const std::size_t q = f.output_dim();
  std::vector<std::vector<double>> psi;
  double lipschitz = 0.0, total_v = 0.0;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    psi.push_back(f.apply(pairs.z_tilde(k)));
    double sq = 0.0;
    for (double x : psi.back()) sq += x * x;
    lipschitz += 0.25 * pairs.v(k) * sq;
    total_v += pairs.v(k);
  }
  std::vector<double> b(q, 0.0), g(q);
  for (int it = 0; it < 5000000; ++it) {
    std::fill(g.begin(), g.end(), 0.0);
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      double t = 0.0;
      for (std::size_t c = 0; c < q; ++c) t += psi[k][c] * b[c];
      const double coef = pairs.v(k) * pairs.w(k) * (1.0 - 1.0 / (1.0 + std::exp(-pairs.w(k) * t)));
      for (std::size_t c = 0; c < q; ++c) g[c] += coef * psi[k][c];
    }
    double gmax = 0.0;
    for (double x : g) gmax = std::max(gmax, std::abs(x));
    if (gmax < 1e-12 * total_v) break;
    for (std::size_t c = 0; c < q; ++c) b[c] += g[c] / lipschitz;
  }
  return b;
}

inline double epanechnikov(double u) { return std::abs(u) <= 1.0 ? 0.75 * (1.0 - u * u) : 0.0; }

}  // namespace ckt::testing
