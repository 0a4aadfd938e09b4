#include <doctest.h>

#include <cmath>
#include <vector>

#include "ckt/errors.hpp"
#include "ckt/forest.hpp"
#include "support.hpp"

using namespace ckt;

namespace {

ForestConfig small_forest(std::size_t n_tree, std::uint64_t seed) {
  ForestConfig c;
  c.n_tree = n_tree;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("degenerate forests reduce to a single tree") {
  const Dataset d = testing::reference_dataset(300, 1);
  const KernelSpec k = scott_kernel(d);
  const auto pairs = build_pair_dataset(d, k);
  const auto psi = psi_dictionary(6);
  ForestConfig c = small_forest(1, 5);
  c.row_fraction = 1.0;
  c.feature_fraction = 1.0;
  const FittedTree tree = fit_tree(pairs, psi, c.tree);
  const FittedForest unadapted = fit_forest_unadapted(pairs, psi, c);
  const FittedForest adapted = fit_forest_adapted(d, pairs, psi, c);
  for (double z = 0.0; z <= 1.0; z += 0.01) {
    const double zz[1] = {z};
    CHECK(unadapted.predict(zz) == tree.predict(zz));
    CHECK(adapted.predict(zz) == tree.predict(zz));
  }
}

TEST_CASE("adapted forest equals trees grown on explicitly rebuilt subsample pairs") {
  const Dataset d = testing::reference_dataset(250, 2);
  const KernelSpec k = scott_kernel(d);
  const auto psi = psi_dictionary(6);
  const ForestConfig c = small_forest(6, 17);
  const FittedForest forest = fit_forest_adapted(d, k, psi, c);
  REQUIRE(forest.size() == 6);
  for (std::size_t j = 0; j < forest.size(); ++j) {
    const auto rows = forest_row_sample(d.size(), c, j);
    const auto sub_pairs = build_pair_dataset(d.subset(rows), k);
    const auto& member = forest.members()[j];
    const FittedTree rebuilt =
        grow_tree(TreeTrainingData::from_pairs(sub_pairs, psi), psi, c.tree, {}, member.feature_subset);
    REQUIRE(rebuilt.nodes().size() == member.tree.nodes().size());
    for (double z = 0.0; z <= 1.0; z += 0.005) {
      const double zz[1] = {z};
      CHECK(rebuilt.predict(zz) == member.tree.predict(zz));
    }
  }
}

TEST_CASE("an unsampled observation cannot influence its trees") {
  const Dataset d = testing::reference_dataset(200, 3);
  const KernelSpec k = scott_kernel(d);
  const ForestConfig c = small_forest(10, 4);
  // perturb every observation left out of some tree and check that tree is unchanged
  const FittedForest base = fit_forest_adapted(d, k, psi_dictionary(6), c);
  Dataset changed(1);
  for (std::size_t i = 0; i < d.size(); ++i) {
    changed.add(i == 0 ? -d.x1(i) : d.x1(i), i == 0 ? 5.0 : d.x2(i), d.z(i));
  }
  const FittedForest other = fit_forest_adapted(changed, k, psi_dictionary(6), c);
  int untouched = 0;
  for (std::size_t j = 0; j < c.n_tree; ++j) {
    const auto rows = forest_row_sample(d.size(), c, j);
    if (std::find(rows.begin(), rows.end(), 0) != rows.end()) continue;
    ++untouched;
    for (double z = 0.0; z <= 1.0; z += 0.01) {
      const double zz[1] = {z};
      CHECK(base.members()[j].tree.predict(zz) == other.members()[j].tree.predict(zz));
    }
  }
  CHECK(untouched > 0);
}

TEST_CASE("seeded determinism and feature subsets") {
  const Dataset d = testing::reference_dataset(300, 5);
  const auto pairs = build_pair_dataset(d, scott_kernel(d));
  const auto psi = psi_dictionary(6);
  const ForestConfig c = small_forest(8, 99);
  for (bool adapted : {false, true}) {
    const FittedForest a = adapted ? fit_forest_adapted(d, pairs, psi, c) : fit_forest_unadapted(pairs, psi, c);
    const FittedForest b = adapted ? fit_forest_adapted(d, pairs, psi, c) : fit_forest_unadapted(pairs, psi, c);
    CHECK(a.size() == c.n_tree);
    for (std::size_t j = 0; j < a.size(); ++j) {
      CHECK(a.members()[j].feature_subset == b.members()[j].feature_subset);
      CHECK(a.members()[j].feature_subset.size() == 8);  // lround(0.8 * 10)
      for (const auto& node : a.members()[j].tree.nodes()) {
        if (node.feature < 0) continue;
        const auto& fs = a.members()[j].feature_subset;
        CHECK(std::find(fs.begin(), fs.end(), static_cast<std::size_t>(node.feature)) != fs.end());
      }
    }
    for (double z = 0.0; z <= 1.0; z += 0.05) {
      const double zz[1] = {z};
      CHECK(a.predict(zz) == b.predict(zz));
      CHECK(std::abs(a.predict(zz)) <= 1.0);
    }
  }
}

TEST_CASE("forest prediction is the mean of its trees") {
  auto leaf = [](double p) { return FittedTree(psi_dictionary(1), {TreeNode{-1, 0, -1, -1, p, 1}}); };
  const double z[1] = {0.4};
  CHECK(FittedForest(psi_dictionary(1), {{leaf(1.0), {0}}, {leaf(1.0), {0}}}).predict(z) == 1.0);
  CHECK(FittedForest(psi_dictionary(1), {{leaf(0.0), {0}}, {leaf(1.0), {0}}}).predict(z) == 0.0);
  const FittedForest three(psi_dictionary(1), {{leaf(0.9), {0}}, {leaf(0.2), {0}}, {leaf(0.6), {0}}});
  CHECK(three.predict(z) == doctest::Approx(((0.8) + (-0.6) + (0.2)) / 3.0));
  CHECK_THROWS_AS(FittedForest(psi_dictionary(1), {}), ConfigError);
}

TEST_CASE("forest configuration errors") {
  const Dataset d = testing::reference_dataset(100, 6);
  const auto pairs = build_pair_dataset(d, scott_kernel(d));
  ForestConfig c;
  c.n_tree = 0;
  CHECK_THROWS_AS(fit_forest_unadapted(pairs, psi_dictionary(6), c), ConfigError);
  c = ForestConfig{};
  c.row_fraction = 0.0;
  CHECK_THROWS_AS(fit_forest_adapted(d, pairs, psi_dictionary(6), c), ConfigError);
  c.row_fraction = 1.5;
  CHECK_THROWS_AS(fit_forest_unadapted(pairs, psi_dictionary(6), c), ConfigError);
  CHECK_THROWS_AS(fit_forest_unadapted(PairDataset(1, 10), psi_dictionary(6), ForestConfig{}), DataError);
  const Dataset other = testing::reference_dataset(50, 6);
  CHECK_THROWS_AS(fit_forest_adapted(other, pairs, psi_dictionary(6), ForestConfig{}), DataError);
}

TEST_CASE("trees with an empty pair set are skipped and counted") {
  // two far-apart clusters of two points: a two-row sample often holds no pair
  Dataset d(1);
  for (double z : {0.0, 0.01, 5.0, 5.01}) {
    const double zz[1] = {z};
    d.add(z, z * z, zz);
  }
  const KernelSpec k{KernelFamily::epanechnikov, 0.1, 1, {}};
  ForestConfig c = small_forest(40, 3);
  c.row_fraction = 0.5;
  const FittedForest f = fit_forest_adapted(d, k, psi_dictionary(1), c);
  CHECK(f.skipped() > 0);
  CHECK(f.size() + f.skipped() == 40);
}

TEST_CASE("forest serialization") {
  const Dataset d = testing::reference_dataset(200, 7);
  const FittedForest f = fit_forest_adapted(d, scott_kernel(d), psi_dictionary(6), small_forest(5, 1));
  const FittedForest back = forest_from_json(to_json(f));
  for (double z = 0.0; z <= 1.0; z += 0.02) {
    const double zz[1] = {z};
    CHECK(back.predict(zz) == f.predict(zz));
  }
  ForestConfig c = small_forest(7, 3);
  c.feature_fraction = 0.5;
  const ForestConfig cb = forest_config_from_json(to_json(c));
  CHECK(cb.n_tree == 7);
  CHECK(cb.feature_fraction == 0.5);
  CHECK(cb.seed == 3);
}
