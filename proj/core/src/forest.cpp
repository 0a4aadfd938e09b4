#include "ckt/forest.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "ckt/errors.hpp"
#include "ckt/parallel.hpp"
#include "ckt/rng.hpp"
#include "ckt/stats.hpp"

namespace ckt {
namespace {

void validate(const ForestConfig& c) {
  if (c.n_tree < 1) throw ConfigError("a forest needs at least one tree");
  if (!(c.row_fraction > 0.0 && c.row_fraction <= 1.0) || !(c.feature_fraction > 0.0 && c.feature_fraction <= 1.0)) {
    throw ConfigError("forest sampling fractions must lie in (0, 1]");
  }
}

std::size_t subsample_size(double fraction, std::size_t total) {
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(fraction * static_cast<double>(total))), 1, total);
}

// Row draw first, feature draw second, both from the stream seed + j.
struct TreeDraw {
  std::vector<std::size_t> rows;
  std::vector<std::size_t> features;
};

TreeDraw draw(std::size_t n_rows, std::size_t q, const ForestConfig& config, std::size_t j) {
  SplitMix64 rng(config.seed + j);
  TreeDraw d;
  d.rows = sample_without_replacement(n_rows, subsample_size(config.row_fraction, n_rows), rng);
  d.features = sample_without_replacement(q, subsample_size(config.feature_fraction, q), rng);
  return d;
}

FittedForest assemble(const FeatureMap& features, std::vector<std::optional<ForestMember>>& slots) {
  std::vector<ForestMember> members;
  std::size_t skipped = 0;
  for (auto& s : slots) {
    if (s) members.push_back(std::move(*s));
    else ++skipped;
  }
  if (members.empty()) throw DataError("every forest subsample produced an empty pair set");
  return FittedForest(features, std::move(members), skipped);
}

}  // namespace

FittedForest::FittedForest(FeatureMap features, std::vector<ForestMember> members, std::size_t skipped)
    : features_(std::move(features)), members_(std::move(members)), skipped_(skipped) {
  if (members_.empty()) throw ConfigError("a forest needs at least one tree");
}

double FittedForest::predict(std::span<const double> z) const {
  const std::vector<double> psi = features_.apply(z);
  double sum = 0.0;
  for (const auto& m : members_) sum += m.tree.predict_features(psi);
  return std::clamp(sum / static_cast<double>(members_.size()), -1.0, 1.0);
}

std::vector<std::size_t> forest_row_sample(std::size_t n, const ForestConfig& config, std::size_t tree_index) {
  SplitMix64 rng(config.seed + tree_index);
  return sample_without_replacement(n, subsample_size(config.row_fraction, n), rng);
}

FittedForest fit_forest_unadapted(const PairDataset& pairs, const FeatureMap& features, const ForestConfig& config) {
  validate(config);
  if (pairs.empty()) throw DataError("cannot fit a forest on an empty pair dataset");
  const TreeTrainingData data = TreeTrainingData::from_pairs(pairs, features);
  std::vector<std::optional<ForestMember>> slots(config.n_tree);
  parallel_for(config.n_tree, [&](std::size_t j) {
    const TreeDraw d = draw(pairs.size(), data.q, config, j);
    std::vector<std::uint8_t> mask(pairs.size(), 0);
    for (std::size_t r : d.rows) mask[r] = 1;
    slots[j] = ForestMember{grow_tree(data, features, config.tree, mask, d.features), d.features};
  });
  return assemble(features, slots);
}

FittedForest fit_forest_adapted(const Dataset& data, const PairDataset& pairs, const FeatureMap& features,
                                const ForestConfig& config) {
  validate(config);
  if (data.size() < 2) throw DataError("adapted forest needs at least two observations");
  if (pairs.source_size() != data.size()) throw DataError("pairs were not built from this dataset");
  const TreeTrainingData train = TreeTrainingData::from_pairs(pairs, features);
  std::vector<std::optional<ForestMember>> slots(config.n_tree);
  parallel_for(config.n_tree, [&](std::size_t j) {
    const TreeDraw d = draw(data.size(), train.q, config, j);
    std::vector<std::uint8_t> in_sample(data.size(), 0);
    for (std::size_t r : d.rows) in_sample[r] = 1;
    std::vector<std::uint8_t> mask(pairs.size(), 0);
    bool any = false;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      mask[k] = in_sample[pairs.first(k)] && in_sample[pairs.second(k)];
      any = any || mask[k];
    }
    if (!any) return;
    slots[j] = ForestMember{grow_tree(train, features, config.tree, mask, d.features), d.features};
  });
  return assemble(features, slots);
}

FittedForest fit_forest_adapted(const Dataset& data, const KernelSpec& kernel, const FeatureMap& features,
                                const ForestConfig& config) {
  return fit_forest_adapted(data, build_pair_dataset(data, kernel), features, config);
}

nlohmann::json to_json(const ForestConfig& c) {
  return {{"n_tree", c.n_tree},
          {"row_fraction", c.row_fraction},
          {"feature_fraction", c.feature_fraction},
          {"tree", to_json(c.tree)},
          {"seed", c.seed}};
}

ForestConfig forest_config_from_json(const nlohmann::json& j) {
  ForestConfig c;
  c.n_tree = j.value("n_tree", c.n_tree);
  c.row_fraction = j.value("row_fraction", c.row_fraction);
  c.feature_fraction = j.value("feature_fraction", c.feature_fraction);
  if (j.contains("tree")) c.tree = tree_config_from_json(j.at("tree"));
  c.seed = j.value("seed", c.seed);
  validate(c);
  return c;
}

nlohmann::json to_json(const FittedForest& forest) {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& m : forest.members()) {
    nlohmann::json t = to_json(m.tree);
    t["feature_subset"] = m.feature_subset;
    trees.push_back(std::move(t));
  }
  return {{"method", "forest"},
          {"features", to_json(forest.features())},
          {"feature_dim", forest.features().input_dim()},
          {"skipped", forest.skipped()},
          {"trees", trees}};
}

FittedForest forest_from_json(const nlohmann::json& j) {
  FeatureMap features = feature_map_from_json(j.at("features"), j.value("feature_dim", std::size_t{1}));
  std::vector<ForestMember> members;
  for (const auto& t : j.at("trees")) {
    members.push_back({tree_from_json(t), t.value("feature_subset", std::vector<std::size_t>{})});
  }
  return FittedForest(std::move(features), std::move(members), j.value("skipped", std::size_t{0}));
}

}  // namespace ckt
