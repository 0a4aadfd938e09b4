#include "ckt/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/normal.hpp>

#include "ckt/errors.hpp"
#include "ckt/parallel.hpp"

namespace ckt {

Dataset::Dataset(std::size_t p) : p_(p) {
  if (p == 0) throw DataError("covariate dimension must be at least 1");
}

void Dataset::reserve(std::size_t n) {
  x1_.reserve(n);
  x2_.reserve(n);
  z_.reserve(n * p_);
}

void Dataset::add(double x1, double x2, std::span<const double> z) {
  if (p_ == 0) {
    if (z.empty()) throw DataError("covariate dimension must be at least 1");
    p_ = z.size();
  }
  if (z.size() != p_) {
    throw DataError("observation has " + std::to_string(z.size()) + " covariates, expected " +
                    std::to_string(p_));
  }
  if (!std::isfinite(x1) || !std::isfinite(x2) ||
      !std::all_of(z.begin(), z.end(), [](double v) { return std::isfinite(v); })) {
    throw DataError("observation " + std::to_string(size()) + " has a non-finite coordinate");
  }
  x1_.push_back(x1);
  x2_.push_back(x2);
  z_.insert(z_.end(), z.begin(), z.end());
}

Observation Dataset::observation(std::size_t i) const {
  auto zi = z(i);
  return {x1_[i], x2_[i], {zi.begin(), zi.end()}};
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out(p_);
  out.reserve(rows.size());
  for (std::size_t r : rows) out.add(x1_[r], x2_[r], z(r));
  return out;
}

double Dataset::z_stddev(std::size_t c) const {
  const std::size_t n = size();
  if (n < 2) return 0.0;
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += z_[i * p_ + c];
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = z_[i * p_ + c] - mean;
    ss += d * d;
  }
  return std::sqrt(ss / static_cast<double>(n - 1));
}

std::string to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::epanechnikov: return "epanechnikov";
    case KernelFamily::triangular: return "triangular";
    case KernelFamily::uniform: return "uniform";
    case KernelFamily::truncated_gaussian: return "truncated-gaussian";
  }
  return "unknown";
}

KernelFamily kernel_family_from_string(const std::string& name) {
  if (name == "epanechnikov") return KernelFamily::epanechnikov;
  if (name == "triangular") return KernelFamily::triangular;
  if (name == "uniform") return KernelFamily::uniform;
  if (name == "truncated-gaussian" || name == "truncated_gaussian") {
    return KernelFamily::truncated_gaussian;
  }
  throw ConfigError("unknown kernel family '" + name + "'");
}

double kernel_profile(KernelFamily family, double u) {
  const double a = std::abs(u);
  if (a > 1.0) return 0.0;
  switch (family) {
    case KernelFamily::epanechnikov: return 0.75 * (1.0 - u * u);
    case KernelFamily::triangular: return 1.0 - a;
    case KernelFamily::uniform: return 0.5;
    case KernelFamily::truncated_gaussian: {
      // gamma * phi(u) on [-1, 1], gamma = 1 / (2 Phi(1) - 1)
      static const double gamma = [] {
        boost::math::normal_distribution<> n01;
        return 1.0 / (2.0 * boost::math::cdf(n01, 1.0) - 1.0);
      }();
      constexpr double inv_sqrt_2pi = 0.39894228040143267794;
      return gamma * inv_sqrt_2pi * std::exp(-0.5 * u * u);
    }
  }
  return 0.0;
}

double kernel_weight(const KernelSpec& kernel, std::span<const double> dz) {
  if (dz.size() != kernel.p) {
    throw DataError("kernel of dimension " + std::to_string(kernel.p) + " applied to a vector of length " +
                    std::to_string(dz.size()));
  }
  if (std::isinf(kernel.h)) return std::pow(kernel_profile(kernel.family, 0.0), static_cast<double>(kernel.p));
  double weight = 1.0;
  for (std::size_t c = 0; c < dz.size(); ++c) {
    const double r = kernel.radius(c);
    const double k = kernel_profile(kernel.family, dz[c] / r);
    if (k == 0.0) return 0.0;
    weight *= k / r;
  }
  return weight;
}

double scott_bandwidth(const Dataset& data) {
  const std::size_t n = data.size();
  if (n < 2) throw DataError("bandwidth selection needs at least 2 observations");
  double sigma = 0.0;
  for (std::size_t c = 0; c < data.dim(); ++c) sigma += data.z_stddev(c);
  sigma /= static_cast<double>(data.dim());
  if (!(sigma > 0.0)) throw DataError("degenerate sample: every covariate value is identical");
  return sigma * std::pow(static_cast<double>(n), -1.0 / (static_cast<double>(data.dim()) + 4.0));
}

KernelSpec scott_kernel(const Dataset& data, KernelFamily family) {
  const std::size_t n = data.size();
  if (n < 2) throw DataError("bandwidth selection needs at least 2 observations");
  KernelSpec k;
  k.family = family;
  k.p = data.dim();
  k.h = std::pow(static_cast<double>(n), -1.0 / (static_cast<double>(k.p) + 4.0));
  k.scale.resize(k.p);
  for (std::size_t c = 0; c < k.p; ++c) {
    k.scale[c] = data.z_stddev(c);
    if (!(k.scale[c] > 0.0)) {
      throw DataError("degenerate sample: covariate " + std::to_string(c + 1) + " is constant");
    }
  }
  return k;
}

int concordance_indicator(double a1, double a2, double b1, double b2) {
  return (b1 - a1) * (b2 - a2) > 0.0 ? 1 : -1;
}

int concordance_indicator(const Observation& a, const Observation& b) {
  return concordance_indicator(a.x1, a.x2, b.x1, b.x2);
}

PairDataset::PairDataset(std::size_t p, std::size_t source_size, bool keep_endpoints)
    : p_(p), n_(source_size), endpoints_(keep_endpoints) {}

void PairDataset::reserve(std::size_t m) {
  w_.reserve(m);
  i_.reserve(m);
  j_.reserve(m);
  v_.reserve(m);
  zt_.reserve(m * p_);
  if (endpoints_) {
    za_.reserve(m * p_);
    zb_.reserve(m * p_);
  }
}

void PairDataset::add(int w, std::uint32_t i, std::uint32_t j, double v, std::span<const double> z_i,
                      std::span<const double> z_j) {
  w_.push_back(static_cast<std::int8_t>(w));
  i_.push_back(i);
  j_.push_back(j);
  v_.push_back(v);
  for (std::size_t c = 0; c < p_; ++c) zt_.push_back(0.5 * (z_i[c] + z_j[c]));
  if (endpoints_) {
    za_.insert(za_.end(), z_i.begin(), z_i.end());
    zb_.insert(zb_.end(), z_j.begin(), z_j.end());
  }
}

void PairDataset::append(const PairDataset& other) {
  w_.insert(w_.end(), other.w_.begin(), other.w_.end());
  i_.insert(i_.end(), other.i_.begin(), other.i_.end());
  j_.insert(j_.end(), other.j_.begin(), other.j_.end());
  v_.insert(v_.end(), other.v_.begin(), other.v_.end());
  zt_.insert(zt_.end(), other.zt_.begin(), other.zt_.end());
  za_.insert(za_.end(), other.za_.begin(), other.za_.end());
  zb_.insert(zb_.end(), other.zb_.begin(), other.zb_.end());
}

double PairDataset::total_weight() const { return std::accumulate(v_.begin(), v_.end(), 0.0); }

PairDataset PairDataset::subset(std::span<const std::size_t> records) const {
  PairDataset out(p_, n_, endpoints_);
  out.reserve(records.size());
  for (std::size_t k : records) {
    out.w_.push_back(w_[k]);
    out.i_.push_back(i_[k]);
    out.j_.push_back(j_[k]);
    out.v_.push_back(v_[k]);
    out.zt_.insert(out.zt_.end(), zt_.begin() + k * p_, zt_.begin() + (k + 1) * p_);
    if (endpoints_) {
      out.za_.insert(out.za_.end(), za_.begin() + k * p_, za_.begin() + (k + 1) * p_);
      out.zb_.insert(out.zb_.end(), zb_.begin() + k * p_, zb_.begin() + (k + 1) * p_);
    }
  }
  return out;
}

namespace {

void check_kernel(const Dataset& data, const KernelSpec& kernel) {
  if (kernel.p != data.dim()) throw DataError("kernel dimension does not match the covariate dimension");
  if (!(kernel.h > 0.0)) throw ConfigError("bandwidth must be positive");
  if (!kernel.scale.empty() && kernel.scale.size() != kernel.p) {
    throw ConfigError("kernel scale vector has the wrong length");
  }
}

// Appends pair (i, j) when its weight is positive; dz is scratch space.
inline void try_pair(const Dataset& data, const KernelSpec& kernel, std::size_t i, std::size_t j,
                     std::vector<double>& dz, PairDataset& out) {
  auto zi = data.z(i);
  auto zj = data.z(j);
  for (std::size_t c = 0; c < dz.size(); ++c) dz[c] = zi[c] - zj[c];
  const double v = kernel_weight(kernel, dz);
  if (v > 0.0) {
    out.add(concordance_indicator(data.x1(i), data.x2(i), data.x1(j), data.x2(j)),
            static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), v, zi, zj);
  }
}

}  // namespace

PairDataset build_pair_dataset(const Dataset& data, const KernelSpec& kernel, PairOptions options) {
  check_kernel(data, kernel);
  const std::size_t n = data.size();
  const std::size_t p = data.dim();
  if (n < 2) return PairDataset(p, n, options.keep_endpoints);

  // Candidate partners of i are restricted to the support window along the
  // first coordinate; the exact weight decides the rest.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> key(n);
  for (std::size_t i = 0; i < n; ++i) key[i] = data.z(i)[0];
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key[a] < key[b]; });
  std::vector<double> sorted_key(n);
  for (std::size_t r = 0; r < n; ++r) sorted_key[r] = key[order[r]];
  // slightly widened so rounding never drops a boundary partner
  const double radius = kernel.radius(0) * (1.0 + 1e-9);
  const bool unbounded = std::isinf(radius);

  const std::size_t chunk = 64;
  const std::size_t n_chunks = (n + chunk - 1) / chunk;
  std::vector<PairDataset> parts(n_chunks);
  parallel_for(n_chunks, [&](std::size_t c) {
    PairDataset part(p, n, options.keep_endpoints);
    std::vector<double> dz(p);
    std::vector<std::size_t> partners;
    const std::size_t end = std::min(n, (c + 1) * chunk);
    for (std::size_t i = c * chunk; i < end; ++i) {
      partners.clear();
      if (unbounded) {
        for (std::size_t j = i + 1; j < n; ++j) partners.push_back(j);
      } else {
        auto lo = std::lower_bound(sorted_key.begin(), sorted_key.end(), key[i] - radius);
        auto hi = std::upper_bound(sorted_key.begin(), sorted_key.end(), key[i] + radius);
        for (auto it = lo; it != hi; ++it) {
          const std::size_t j = order[static_cast<std::size_t>(it - sorted_key.begin())];
          if (j > i) partners.push_back(j);
        }
        std::sort(partners.begin(), partners.end());
      }
      for (std::size_t j : partners) try_pair(data, kernel, i, j, dz, part);
    }
    parts[c] = std::move(part);
  });

  std::size_t total = 0;
  for (const auto& part : parts) total += part.size();
  PairDataset out(p, n, options.keep_endpoints);
  out.reserve(total);
  for (const auto& part : parts) out.append(part);
  return out;
}

PairDataset build_consecutive_pairs(const Dataset& data, const KernelSpec& kernel, PairOptions options) {
  check_kernel(data, kernel);
  const std::size_t n = data.size();
  PairDataset out(data.dim(), n, options.keep_endpoints);
  out.reserve(n / 2);
  std::vector<double> dz(data.dim());
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) try_pair(data, kernel, 2 * k, 2 * k + 1, dz, out);
  return out;
}

PairDataset build_pairs(const Dataset& data, const KernelSpec& kernel, PairScheme scheme, PairOptions options) {
  return scheme == PairScheme::all ? build_pair_dataset(data, kernel, options)
                                   : build_consecutive_pairs(data, kernel, options);
}

PairCounts pair_independence_counts(std::uint64_t n) {
  if (n < 2) throw DataError("pair counts need n >= 2");
  using u128 = unsigned __int128;
  const u128 nn = n;
  const u128 m = nn * (nn - 1);
  PairCounts counts;
  counts.total = static_cast<std::uint64_t>(m * (m - 2) / 8);
  counts.independent = n < 4 ? 0 : static_cast<std::uint64_t>(m * (nn - 2) * (nn - 3) / 8);
  return counts;
}

}  // namespace ckt
