#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "ckt/dataset.hpp"
#include "ckt/features.hpp"
#include "ckt/tree.hpp"

namespace ckt {

struct ForestConfig {
  std::size_t n_tree = 100;
  double row_fraction = 0.8;
  double feature_fraction = 0.8;
  TreeConfig tree;
  std::uint64_t seed = 0;
};

struct ForestMember {
  FittedTree tree;
  std::vector<std::size_t> feature_subset;  ///< indices into psi, ascending
};

class FittedForest {
 public:
  FittedForest() = default;
  FittedForest(FeatureMap features, std::vector<ForestMember> members, std::size_t skipped = 0);

  /// Mean of the member predictions.
  double predict(std::span<const double> z) const;

  const FeatureMap& features() const { return features_; }
  const std::vector<ForestMember>& members() const { return members_; }
  std::size_t size() const { return members_.size(); }
  /// Trees dropped because their subsample produced no pair.
  std::size_t skipped() const { return skipped_; }

 private:
  FeatureMap features_;
  std::vector<ForestMember> members_;
  std::size_t skipped_ = 0;
};

/// Each tree sees a without-replacement subsample of the pair records.
FittedForest fit_forest_unadapted(const PairDataset& pairs, const FeatureMap& features, const ForestConfig& config);

/// Each tree sees the pairs built on a without-replacement subsample of the
/// observations, with the kernel unchanged. Trees are grown on the records of
/// `pairs` whose endpoints both belong to the subsample, which are exactly the
/// pairs of that subsample; `pairs` must therefore come from `data` and `kernel`.
FittedForest fit_forest_adapted(const Dataset& data, const PairDataset& pairs, const FeatureMap& features,
                                const ForestConfig& config);

/// Convenience overload building the pairs first.
FittedForest fit_forest_adapted(const Dataset& data, const KernelSpec& kernel, const FeatureMap& features,
                                const ForestConfig& config);

/// Observation subsample drawn for tree j (shared by the adapted forest and tests).
std::vector<std::size_t> forest_row_sample(std::size_t n, const ForestConfig& config, std::size_t tree_index);

nlohmann::json to_json(const ForestConfig& config);
ForestConfig forest_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FittedForest& forest);
FittedForest forest_from_json(const nlohmann::json& j);

}  // namespace ckt
