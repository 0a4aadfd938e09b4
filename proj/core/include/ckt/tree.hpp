#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "ckt/dataset.hpp"
#include "ckt/features.hpp"

namespace ckt {

struct TreeConfig {
  int max_depth = 8;
  /// Minimum child weight as a fraction of the root weight.
  double min_node_weight = 1e-3;
  /// Minimum of (W_node / W_root) * (Gini decrease) for a split to be kept.
  double min_impurity_decrease = 1e-4;
};

/// Internal nodes have feature >= 0; leaves have feature == -1.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double p_hat = 0.5;   ///< weighted share of concordant pairs
  double weight = 0.0;  ///< training weight reaching the node
};

class FittedTree {
 public:
  FittedTree() = default;
  FittedTree(FeatureMap features, std::vector<TreeNode> nodes);

  /// 2 p_hat(leaf) - 1 at psi(z); values <= threshold go left.
  double predict(std::span<const double> z) const;
  /// Same, from an already evaluated feature vector.
  double predict_features(std::span<const double> psi) const;

  const FeatureMap& features() const { return features_; }
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::size_t leaf_count() const;
  int depth() const;

 private:
  FeatureMap features_;
  std::vector<TreeNode> nodes_;
};

/// Weighted Gini split on one feature.
struct SplitResult {
  double threshold = 0.0;
  double decrease = 0.0;  ///< parent Gini minus weighted child Gini; 0 when no split exists
  bool valid = false;
};

/// Best threshold over midpoints of sorted distinct values, ties toward the
/// smallest threshold.
SplitResult best_weighted_split(std::span<const double> x, std::span<const int> w, std::span<const double> v);

/// psi(z_tilde) with labels, weights and per-feature presorted record orders,
/// shared by every tree grown on (a subset of) the same pairs.
struct TreeTrainingData {
  std::size_t q = 0;
  std::vector<double> x;  // row-major, size() x q
  std::vector<std::int8_t> w;
  std::vector<double> v;
  /// order[f]: records sorted by (x_f, w, v, record index)
  std::vector<std::vector<std::uint32_t>> order;

  std::size_t size() const { return w.size(); }
  static TreeTrainingData from_pairs(const PairDataset& pairs, const FeatureMap& features);
};

/// Grows a tree on the records whose mask entry is nonzero (all when the mask
/// is empty), using only the listed features (all when empty).
FittedTree grow_tree(const TreeTrainingData& data, const FeatureMap& features, const TreeConfig& config,
                     std::span<const std::uint8_t> record_mask = {},
                     std::span<const std::size_t> feature_subset = {});

/// Throws DataError on empty input.
FittedTree fit_tree(const PairDataset& pairs, const FeatureMap& features, const TreeConfig& config);

nlohmann::json to_json(const TreeConfig& config);
TreeConfig tree_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FittedTree& tree);
FittedTree tree_from_json(const nlohmann::json& j);

}  // namespace ckt
