#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ckt {

/// One row (x1, x2, z) of the initial sample.
struct Observation {
  double x1 = 0.0;
  double x2 = 0.0;
  std::vector<double> z;
};

/// The initial sample: n observations sharing the covariate dimension p.
/// Stored column-wise for x and row-major for z.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::size_t p);

  void reserve(std::size_t n);
  /// Appends an observation; throws DataError on a dimension mismatch or
  /// non-finite coordinate.
  void add(double x1, double x2, std::span<const double> z);
  void add(const Observation& obs) { add(obs.x1, obs.x2, obs.z); }

  std::size_t size() const { return x1_.size(); }
  std::size_t dim() const { return p_; }
  bool empty() const { return x1_.empty(); }

  double x1(std::size_t i) const { return x1_[i]; }
  double x2(std::size_t i) const { return x2_[i]; }
  std::span<const double> z(std::size_t i) const { return {z_.data() + i * p_, p_}; }
  Observation observation(std::size_t i) const;

  /// Rows `rows` in the given order.
  Dataset subset(std::span<const std::size_t> rows) const;

  /// Sample standard deviation of covariate coordinate c.
  double z_stddev(std::size_t c) const;

 private:
  std::size_t p_ = 0;
  std::vector<double> x1_;
  std::vector<double> x2_;
  std::vector<double> z_;
};

enum class KernelFamily { epanechnikov, triangular, uniform, truncated_gaussian };

std::string to_string(KernelFamily family);
KernelFamily kernel_family_from_string(const std::string& name);

/// Product kernel K_h(dz) = prod_c K(dz_c / (h s_c)) / (h s_c), with every
/// one-dimensional profile K supported on [-1, 1] and integrating to one.
/// The per-coordinate scales s_c default to 1; scott_kernel() sets them to
/// the sample standard deviations so one scalar h serves every coordinate.
struct KernelSpec {
  KernelFamily family = KernelFamily::epanechnikov;
  double h = 1.0;
  std::size_t p = 1;
  std::vector<double> scale;  // empty means all ones

  double coordinate_scale(std::size_t c) const { return scale.empty() ? 1.0 : scale[c]; }
  /// Half-width of the support along coordinate c (h s_c).
  double radius(std::size_t c) const { return h * coordinate_scale(c); }
};

/// Normalized one-dimensional profile on [-1, 1]; zero outside.
double kernel_profile(KernelFamily family, double u);

/// K_h(dz). Exactly zero whenever some |dz_c| > h s_c. An infinite h gives
/// the flat limit h^p K_h(dz) -> K(0)^p, i.e. equal weight for every pair.
double kernel_weight(const KernelSpec& kernel, std::span<const double> dz);

/// Rule-of-thumb bandwidth sigma * n^(-1/(p+4)), sigma the average
/// per-coordinate sample standard deviation of Z.
double scott_bandwidth(const Dataset& data);

/// Kernel with h = n^(-1/(p+4)) on covariates standardized by their sample
/// standard deviations. Coincides with scott_bandwidth() when p = 1.
KernelSpec scott_kernel(const Dataset& data, KernelFamily family = KernelFamily::epanechnikov);

/// W = 2 * 1{(b1 - a1)(b2 - a2) > 0} - 1. Ties give -1.
int concordance_indicator(double a1, double a2, double b1, double b2);
int concordance_indicator(const Observation& a, const Observation& b);

/// The dataset of pairs: labels w in {-1, +1}, midpoint covariates, kernel
/// weights v > 0 and the source indices i < j. Records are kept in (i, j)
/// order. Optionally keeps both endpoint covariates for likelihoods anchored
/// at Z_i / Z_j.
class PairDataset {
 public:
  PairDataset() = default;
  PairDataset(std::size_t p, std::size_t source_size, bool keep_endpoints = false);

  void reserve(std::size_t m);
  void add(int w, std::uint32_t i, std::uint32_t j, double v, std::span<const double> z_i,
           std::span<const double> z_j);
  void append(const PairDataset& other);

  std::size_t size() const { return w_.size(); }
  bool empty() const { return w_.empty(); }
  std::size_t dim() const { return p_; }
  /// n of the sample the pairs were built from; normalizes the likelihood.
  std::size_t source_size() const { return n_; }
  bool has_endpoints() const { return endpoints_; }

  int w(std::size_t k) const { return w_[k]; }
  std::uint32_t first(std::size_t k) const { return i_[k]; }
  std::uint32_t second(std::size_t k) const { return j_[k]; }
  double v(std::size_t k) const { return v_[k]; }
  std::span<const double> z_tilde(std::size_t k) const { return {zt_.data() + k * p_, p_}; }
  std::span<const double> z_first(std::size_t k) const { return {za_.data() + k * p_, p_}; }
  std::span<const double> z_second(std::size_t k) const { return {zb_.data() + k * p_, p_}; }

  std::span<const std::int8_t> labels() const { return w_; }
  std::span<const double> weights() const { return v_; }

  double total_weight() const;
  /// Records `records` in the given order.
  PairDataset subset(std::span<const std::size_t> records) const;

 private:
  std::size_t p_ = 0;
  std::size_t n_ = 0;
  bool endpoints_ = false;
  std::vector<std::int8_t> w_;
  std::vector<std::uint32_t> i_;
  std::vector<std::uint32_t> j_;
  std::vector<double> v_;
  std::vector<double> zt_;
  std::vector<double> za_;
  std::vector<double> zb_;
};

struct PairOptions {
  bool keep_endpoints = false;
};

/// All pairs i < j with K_h(Z_i - Z_j) > 0.
PairDataset build_pair_dataset(const Dataset& data, const KernelSpec& kernel, PairOptions options = {});

/// Disjoint consecutive pairs (1,2), (3,4), ... with positive weight.
PairDataset build_consecutive_pairs(const Dataset& data, const KernelSpec& kernel,
                                    PairOptions options = {});

enum class PairScheme { all, consecutive };

PairDataset build_pairs(const Dataset& data, const KernelSpec& kernel, PairScheme scheme,
                        PairOptions options = {});

/// Number of couples of distinct pairs, and of couples sharing no observation.
struct PairCounts {
  std::uint64_t total = 0;
  std::uint64_t independent = 0;
};

PairCounts pair_independence_counts(std::uint64_t n);

}  // namespace ckt
