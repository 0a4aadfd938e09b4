#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ckt/dataset.hpp"
#include "ckt/features.hpp"

namespace ckt {

enum class Distance { euclidean, manhattan, chebyshev };

std::string to_string(Distance d);
Distance distance_from_string(const std::string& name);

/// Feature-space view of a pair dataset for nearest-neighbour queries.
/// Neighbours are ranked by (distance, record index), a strict total order,
/// so ties at the N-th distance go to the lower record index.
class KnnIndex {
 public:
  KnnIndex(const PairDataset& pairs, FeatureMap features, Distance distance = Distance::euclidean);

  std::size_t size() const { return w_.size(); }
  const FeatureMap& features() const { return features_; }

  /// (sum v w) / (sum v) over the n_neighbors nearest records.
  double estimate(std::span<const double> z, std::size_t n_neighbors) const;

  /// One estimate per entry of n_neighbors (ascending, each in [1, size()]),
  /// sharing a single distance pass.
  std::vector<double> estimate_many(std::span<const double> z, std::span<const std::size_t> n_neighbors) const;

 private:
  FeatureMap features_;
  Distance distance_;
  std::size_t q_ = 0;
  std::vector<double> psi_;
  std::vector<double> w_;
  std::vector<double> v_;
};

double knn_estimate(const PairDataset& pairs, const FeatureMap& features, std::span<const double> z,
                    std::size_t n_neighbors, Distance distance = Distance::euclidean);

/// A cell of the partition used for the local choice of N, with its probes.
struct LepskiCell {
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<std::vector<double>> probes;
};

struct LepskiConfig {
  double a1 = 5.0;
  double a2 = 2.0;
  /// Explicit candidate set; when empty, floor(a1 a2^i), i >= 1, up to |K| / 2.
  std::vector<std::size_t> candidates;
  double A = 1.0;
  /// Quantile cells per coordinate; 0 picks 10 for p = 1 and round(10^(1/p)) otherwise.
  std::size_t cells_per_axis = 0;
  std::size_t probes_per_cell = 5;
  Distance distance = Distance::euclidean;
};

/// {floor(a1 a2^i) : i = 1, 2, ...} capped at max_value, sorted and distinct.
std::vector<std::size_t> geometric_candidates(double a1, double a2, std::size_t max_value);

/// Quantile partition of the observed covariates. Cells are half-open on the
/// right; the extreme cells absorb everything beyond the sample range.
/// Probes are equispaced interior points (along the diagonal when p >= 2).
std::vector<LepskiCell> quantile_cells(const Dataset& data, std::size_t cells_per_axis, std::size_t probes);

/// ((1/j) sum ((f_j - g_j) / M)^2)^(1/2). Throws NumericalError when M <= 0.
double lepski_distance(std::span<const double> f, std::span<const double> g, double M);

/// A sqrt((1/N') log(max_n / N')).
double lepski_threshold(std::size_t n_prime, std::size_t max_n, double A);

struct RangeResult {
  double M = 1.0;
  bool fallback = false;  ///< every value equal; M set to 1
};

/// Range of all candidate values; falls back to 1 when the range is 0.
RangeResult default_M(const std::vector<std::vector<std::vector<double>>>& values);

struct LepskiSelection {
  std::vector<std::size_t> neighbors;            ///< N_i per cell
  std::vector<std::vector<std::size_t>> accepted;  ///< S_i per cell
  double M = 1.0;
  bool M_fallback = false;
};

/// values[c][i][j]: estimate with candidates[c] neighbours at probe j of cell i.
/// N is kept in S_i when d_i(N, N') <= threshold(N') for every candidate N' <= N.
LepskiSelection lepski_select(std::span<const std::size_t> candidates,
                              const std::vector<std::vector<std::vector<double>>>& values, double A,
                              double M);

/// kNN estimator with a cell-wise N chosen by the selection above.
class KnnLepski {
 public:
  KnnLepski(const PairDataset& pairs, const Dataset& source, FeatureMap features, const LepskiConfig& config);

  double predict(std::span<const double> z) const;
  std::size_t cell_of(std::span<const double> z) const;

  const std::vector<LepskiCell>& cells() const { return cells_; }
  const std::vector<std::size_t>& candidates() const { return candidates_; }
  const LepskiSelection& selection() const { return selection_; }
  const KnnIndex& index() const { return index_; }

  /// Per-cell table: cell, bounds, S_i, N_i.
  std::string selection_csv() const;

 private:
  KnnIndex index_;
  std::size_t per_axis_ = 1;
  std::vector<std::vector<double>> cuts_;  // interior cut points per coordinate
  std::vector<LepskiCell> cells_;
  std::vector<std::size_t> candidates_;
  LepskiSelection selection_;
};

nlohmann::json to_json(const LepskiConfig& config);
LepskiConfig lepski_config_from_json(const nlohmann::json& j);

}  // namespace ckt
