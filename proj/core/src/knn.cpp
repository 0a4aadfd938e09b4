#include "ckt/knn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ckt/errors.hpp"
#include "ckt/stats.hpp"

namespace ckt {
namespace {

struct Key {
  double d;
  std::uint32_t k;
};

bool key_less(const Key& a, const Key& b) { return a.d < b.d || (a.d == b.d && a.k < b.k); }

std::size_t resolve_per_axis(std::size_t requested, std::size_t p) {
  if (requested > 0) return requested;
  if (p == 1) return 10;
  return std::max<std::size_t>(2, static_cast<std::size_t>(std::lround(std::pow(10.0, 1.0 / static_cast<double>(p)))));
}

std::vector<std::vector<double>> quantile_cuts(const Dataset& data, std::size_t per_axis) {
  std::vector<std::vector<double>> cuts(data.dim());
  for (std::size_t c = 0; c < data.dim(); ++c) {
    std::vector<double> col(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) col[i] = data.z(i)[c];
    std::sort(col.begin(), col.end());
    for (std::size_t k = 1; k < per_axis; ++k) {
      cuts[c].push_back(quantile(col, static_cast<double>(k) / static_cast<double>(per_axis)));
    }
  }
  return cuts;
}

std::vector<LepskiCell> cells_from_cuts(const Dataset& data, const std::vector<std::vector<double>>& cuts,
                                        std::size_t per_axis, std::size_t probes) {
  const std::size_t p = data.dim();
  std::vector<double> lo(p, std::numeric_limits<double>::infinity());
  std::vector<double> hi(p, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t c = 0; c < p; ++c) {
      lo[c] = std::min(lo[c], data.z(i)[c]);
      hi[c] = std::max(hi[c], data.z(i)[c]);
    }
  }
  std::size_t total = 1;
  for (std::size_t c = 0; c < p; ++c) total *= per_axis;
  std::vector<LepskiCell> cells(total);
  for (std::size_t idx = 0; idx < total; ++idx) {
    LepskiCell& cell = cells[idx];
    cell.lower.resize(p);
    cell.upper.resize(p);
    std::size_t rest = idx;
    for (std::size_t c = 0; c < p; ++c) {
      const std::size_t k = rest % per_axis;
      rest /= per_axis;
      cell.lower[c] = k == 0 ? lo[c] : cuts[c][k - 1];
      cell.upper[c] = k + 1 == per_axis ? hi[c] : cuts[c][k];
    }
    for (std::size_t j = 1; j <= probes; ++j) {
      const double frac = static_cast<double>(j) / static_cast<double>(probes + 1);
      std::vector<double> probe(p);
      for (std::size_t c = 0; c < p; ++c) probe[c] = cell.lower[c] + frac * (cell.upper[c] - cell.lower[c]);
      cell.probes.push_back(std::move(probe));
    }
  }
  return cells;
}

}  // namespace

std::string to_string(Distance d) {
  switch (d) {
    case Distance::euclidean: return "euclidean";
    case Distance::manhattan: return "manhattan";
    case Distance::chebyshev: return "chebyshev";
  }
  return "euclidean";
}

Distance distance_from_string(const std::string& name) {
  if (name == "euclidean") return Distance::euclidean;
  if (name == "manhattan") return Distance::manhattan;
  if (name == "chebyshev") return Distance::chebyshev;
  throw ConfigError("unknown distance '" + name + "'");
}

KnnIndex::KnnIndex(const PairDataset& pairs, FeatureMap features, Distance distance)
    : features_(std::move(features)), distance_(distance), q_(features_.output_dim()) {
  if (features_.input_dim() != pairs.dim()) throw DataError("feature map does not match the covariate dimension");
  psi_ = pair_feature_matrix(features_, pairs);
  w_.resize(pairs.size());
  v_.resize(pairs.size());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    w_[k] = pairs.w(k);
    v_[k] = pairs.v(k);
  }
}

double KnnIndex::estimate(std::span<const double> z, std::size_t n_neighbors) const {
  const std::size_t n[1] = {n_neighbors};
  return estimate_many(z, n)[0];
}

std::vector<double> KnnIndex::estimate_many(std::span<const double> z,
                                            std::span<const std::size_t> n_neighbors) const {
  const std::size_t m = size();
  if (m == 0) throw DataError("nearest-neighbour estimate on an empty pair set");
  for (std::size_t t = 0; t < n_neighbors.size(); ++t) {
    if (n_neighbors[t] < 1 || n_neighbors[t] > m) throw ConfigError("number of neighbours outside [1, |K|]");
    if (t > 0 && n_neighbors[t] < n_neighbors[t - 1]) throw ConfigError("neighbour counts must be ascending");
  }
  const std::vector<double> target = features_.apply(z);
  std::vector<Key> keys(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double* row = psi_.data() + k * q_;
    double d = 0.0;
    for (std::size_t c = 0; c < q_; ++c) {
      const double diff = std::abs(row[c] - target[c]);
      switch (distance_) {
        case Distance::euclidean: d += diff * diff; break;  // squared: same ordering
        case Distance::manhattan: d += diff; break;
        case Distance::chebyshev: d = std::max(d, diff); break;
      }
    }
    keys[k] = {d, static_cast<std::uint32_t>(k)};
  }
  std::vector<double> out(n_neighbors.size());
  std::size_t done = 0;
  double sum_vw = 0.0;
  double sum_v = 0.0;
  for (std::size_t t = 0; t < n_neighbors.size(); ++t) {
    const std::size_t target_n = n_neighbors[t];
    if (target_n > done) {
      auto first = keys.begin() + static_cast<std::ptrdiff_t>(done);
      auto nth = keys.begin() + static_cast<std::ptrdiff_t>(target_n - 1);
      std::nth_element(first, nth, keys.end(), key_less);
      // summing in key order makes the result independent of the other requested counts
      std::sort(first, nth + 1, key_less);
      for (std::size_t r = done; r < target_n; ++r) {
        sum_vw += v_[keys[r].k] * w_[keys[r].k];
        sum_v += v_[keys[r].k];
      }
      done = target_n;
    }
    out[t] = std::clamp(sum_vw / sum_v, -1.0, 1.0);
  }
  return out;
}

double knn_estimate(const PairDataset& pairs, const FeatureMap& features, std::span<const double> z,
                    std::size_t n_neighbors, Distance distance) {
  return KnnIndex(pairs, features, distance).estimate(z, n_neighbors);
}

std::vector<std::size_t> geometric_candidates(double a1, double a2, std::size_t max_value) {
  if (!(a1 > 0.0) || !(a2 > 1.0)) throw ConfigError("candidate progression needs a1 > 0 and a2 > 1");
  std::vector<std::size_t> out;
  for (int i = 1;; ++i) {
    const double value = std::floor(a1 * std::pow(a2, i));
    if (value > static_cast<double>(max_value)) break;
    if (value >= 1.0) out.push_back(static_cast<std::size_t>(value));
  }
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<LepskiCell> quantile_cells(const Dataset& data, std::size_t cells_per_axis, std::size_t probes) {
  if (data.empty()) throw DataError("cannot partition an empty sample");
  if (probes < 1) throw ConfigError("each cell needs at least one probe");
  const std::size_t per_axis = resolve_per_axis(cells_per_axis, data.dim());
  return cells_from_cuts(data, quantile_cuts(data, per_axis), per_axis, probes);
}

double lepski_distance(std::span<const double> f, std::span<const double> g, double M) {
  if (!(M > 0.0)) throw NumericalError("normalization M must be positive");
  if (f.size() != g.size() || f.empty()) throw DataError("probe vectors differ in length or are empty");
  double ss = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j) {
    const double d = (f[j] - g[j]) / M;
    ss += d * d;
  }
  return std::sqrt(ss / static_cast<double>(f.size()));
}

double lepski_threshold(std::size_t n_prime, std::size_t max_n, double A) {
  const double np = static_cast<double>(n_prime);
  return A * std::sqrt(std::log(static_cast<double>(max_n) / np) / np);
}

RangeResult default_M(const std::vector<std::vector<std::vector<double>>>& values) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& curve : values) {
    for (const auto& cell : curve) {
      for (double x : cell) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
      }
    }
  }
  if (!(hi > lo)) return {1.0, true};
  return {hi - lo, false};
}

LepskiSelection lepski_select(std::span<const std::size_t> candidates,
                              const std::vector<std::vector<std::vector<double>>>& values, double A,
                              double M) {
  if (candidates.empty() || values.size() != candidates.size()) {
    throw DataError("need one estimate per candidate neighbour count");
  }
  const std::size_t max_n = *std::max_element(candidates.begin(), candidates.end());
  const std::size_t n_cells = values.front().size();
  LepskiSelection sel;
  sel.M = M;
  sel.neighbors.resize(n_cells);
  sel.accepted.resize(n_cells);
  for (std::size_t i = 0; i < n_cells; ++i) {
    for (std::size_t a = 0; a < candidates.size(); ++a) {
      bool ok = true;
      for (std::size_t b = 0; b < candidates.size() && ok; ++b) {
        if (candidates[b] > candidates[a]) continue;
        ok = lepski_distance(values[a][i], values[b][i], M) <= lepski_threshold(candidates[b], max_n, A);
      }
      if (ok) sel.accepted[i].push_back(candidates[a]);
    }
    std::sort(sel.accepted[i].begin(), sel.accepted[i].end());
    sel.neighbors[i] = sel.accepted[i].empty() ? *std::min_element(candidates.begin(), candidates.end())
                                               : sel.accepted[i].back();
  }
  return sel;
}

KnnLepski::KnnLepski(const PairDataset& pairs, const Dataset& source, FeatureMap features,
                     const LepskiConfig& config)
    : index_(pairs, std::move(features), config.distance) {
  if (pairs.empty()) throw DataError("nearest-neighbour estimator needs a nonempty pair set");
  if (config.probes_per_cell < 1) throw ConfigError("each cell needs at least one probe");
  if (!(config.A > 0.0)) throw ConfigError("Lepski constant A must be positive");
  per_axis_ = resolve_per_axis(config.cells_per_axis, source.dim());
  cuts_ = quantile_cuts(source, per_axis_);
  cells_ = cells_from_cuts(source, cuts_, per_axis_, config.probes_per_cell);

  candidates_ = config.candidates;
  if (candidates_.empty()) candidates_ = geometric_candidates(config.a1, config.a2, pairs.size() / 2);
  std::sort(candidates_.begin(), candidates_.end());
  candidates_.erase(std::unique(candidates_.begin(), candidates_.end()), candidates_.end());
  std::erase_if(candidates_, [&](std::size_t n) { return n < 1 || n > pairs.size(); });
  if (candidates_.empty()) candidates_.push_back(std::max<std::size_t>(1, pairs.size() / 2));

  // values[c][i][j]
  std::vector<std::vector<std::vector<double>>> values(
      candidates_.size(), std::vector<std::vector<double>>(cells_.size()));
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    for (const auto& probe : cells_[i].probes) {
      const auto est = index_.estimate_many(probe, candidates_);
      for (std::size_t c = 0; c < candidates_.size(); ++c) values[c][i].push_back(est[c]);
    }
  }
  const RangeResult range = default_M(values);
  selection_ = lepski_select(candidates_, values, config.A, range.M);
  selection_.M_fallback = range.fallback;
}

std::size_t KnnLepski::cell_of(std::span<const double> z) const {
  if (z.size() != cuts_.size()) throw DataError("covariate dimension mismatch");
  std::size_t idx = 0;
  std::size_t stride = 1;
  for (std::size_t c = 0; c < cuts_.size(); ++c) {
    const auto k = static_cast<std::size_t>(std::upper_bound(cuts_[c].begin(), cuts_[c].end(), z[c]) - cuts_[c].begin());
    idx += k * stride;
    stride *= per_axis_;
  }
  return idx;
}

double KnnLepski::predict(std::span<const double> z) const {
  return index_.estimate(z, selection_.neighbors[cell_of(z)]);
}

std::string KnnLepski::selection_csv() const {
  std::ostringstream out;
  out.precision(17);
  const std::size_t p = cuts_.size();
  out << "cell";
  for (std::size_t c = 0; c < p; ++c) out << ",lower" << c + 1 << ",upper" << c + 1;
  out << ",accepted,selected\n";
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    out << i;
    for (std::size_t c = 0; c < p; ++c) out << ',' << cells_[i].lower[c] << ',' << cells_[i].upper[c];
    out << ',';
    for (std::size_t a = 0; a < selection_.accepted[i].size(); ++a) {
      out << (a ? ";" : "") << selection_.accepted[i][a];
    }
    out << ',' << selection_.neighbors[i] << '\n';
  }
  return out.str();
}

nlohmann::json to_json(const LepskiConfig& config) {
  return {{"a1", config.a1},
          {"a2", config.a2},
          {"candidates", config.candidates},
          {"A", config.A},
          {"cells_per_axis", config.cells_per_axis},
          {"probes_per_cell", config.probes_per_cell},
          {"distance", to_string(config.distance)}};
}

LepskiConfig lepski_config_from_json(const nlohmann::json& j) {
  LepskiConfig c;
  c.a1 = j.value("a1", c.a1);
  c.a2 = j.value("a2", c.a2);
  c.candidates = j.value("candidates", c.candidates);
  c.A = j.value("A", c.A);
  c.cells_per_axis = j.value("cells_per_axis", c.cells_per_axis);
  c.probes_per_cell = j.value("probes_per_cell", c.probes_per_cell);
  c.distance = distance_from_string(j.value("distance", std::string("euclidean")));
  return c;
}

}  // namespace ckt
