#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "ckt/errors.hpp"
#include "ckt/knn.hpp"
#include "ckt/sim.hpp"
#include "ckt/stats.hpp"
#include "support.hpp"

using namespace ckt;

namespace {

PairDataset labelled_pairs(const std::vector<double>& z, const std::vector<int>& w, const std::vector<double>& v) {
  PairDataset pairs(1, 2 * z.size());
  for (std::size_t k = 0; k < z.size(); ++k) {
    const double zz[1] = {z[k]};
    pairs.add(w[k], static_cast<std::uint32_t>(2 * k), static_cast<std::uint32_t>(2 * k + 1), v[k], zz, zz);
  }
  return pairs;
}

// O(n^2) share of concordant pairs among all unordered pairs, as 2 p - 1.
double kendall_oracle(const Dataset& d) {
  double concordant = 0.0, total = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (std::size_t j = i + 1; j < d.size(); ++j) {
      total += 1.0;
      if (testing::sign_label(d.x1(i), d.x2(i), d.x1(j), d.x2(j)) > 0) concordant += 1.0;
    }
  }
  return 2.0 * concordant / total - 1.0;
}

}  // namespace

TEST_CASE("nearest-neighbour examples") {
  const auto psi = psi_dictionary(1);
  const double at[1] = {0.0};
  CHECK(knn_estimate(labelled_pairs({0.1, 0.2, 0.9}, {1, 1, -1}, {1, 2, 3}), psi, at, 2) == 1.0);
  CHECK(knn_estimate(labelled_pairs({0.1, -0.1, 3.0}, {1, -1, 1}, {1, 1, 1}), psi, at, 2) == 0.0);
  // distance ties at the N-th neighbour go to the lower record index
  const auto tied = labelled_pairs({0.5, -0.5, 0.5}, {1, -1, -1}, {1, 1, 1});
  CHECK(knn_estimate(tied, psi, at, 1) == 1.0);
  CHECK(knn_estimate(tied, psi, at, 2) == 0.0);
}

TEST_CASE("five-record instance matches exhaustive subset enumeration") {
  const std::vector<double> z{0.30, 0.05, 0.62, 0.41, 0.90};
  const std::vector<int> w{1, -1, 1, -1, 1};
  const std::vector<double> v{0.4, 1.3, 2.0, 0.7, 0.9};
  const auto pairs = labelled_pairs(z, w, v);
  const auto psi = psi_dictionary(6);
  for (double query : {0.0, 0.2, 0.45, 0.7, 1.1}) {
    const double q[1] = {query};
    const auto psi_q = psi.apply(q);
    // minimize the summed distance over all C(5,3) subsets
    double best = std::numeric_limits<double>::infinity();
    double want = 0.0;
    for (int mask = 0; mask < 32; ++mask) {
      if (__builtin_popcount(mask) != 3) continue;
      double dist = 0.0, sv = 0.0, svw = 0.0;
      for (int k = 0; k < 5; ++k) {
        if (!(mask >> k & 1)) continue;
        const double zk[1] = {z[k]};
        const auto psi_k = psi.apply(zk);
        double ss = 0.0;
        for (std::size_t c = 0; c < psi_k.size(); ++c) ss += (psi_k[c] - psi_q[c]) * (psi_k[c] - psi_q[c]);
        dist += std::sqrt(ss);
        sv += v[k];
        svw += v[k] * w[k];
      }
      if (dist < best) {
        best = dist;
        want = svw / sv;
      }
    }
    CHECK(knn_estimate(pairs, psi, q, 3) == doctest::Approx(want).epsilon(1e-14));
  }
}

TEST_CASE("all pairs with a flat kernel reproduce the empirical Kendall's tau") {
  const KernelSpec flat{KernelFamily::uniform, std::numeric_limits<double>::infinity(), 1, {}};
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Dataset d = testing::random_dataset(20 + 18 * seed, 1, seed);
    const auto pairs = build_pair_dataset(d, flat);
    const double want = kendall_oracle(d);
    for (double z : {-1.0, 0.3, 0.8, 5.0}) {
      const double zz[1] = {z};
      CHECK(std::abs(knn_estimate(pairs, psi_dictionary(1), zz, pairs.size()) - want) <= 1e-12);
    }
    std::vector<double> x1(d.size()), x2(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
      x1[i] = d.x1(i);
      x2[i] = d.x2(i);
    }
    CHECK(std::abs(empirical_kendall_tau(x1, x2) - want) <= 1e-12);
  }
}

TEST_CASE("several neighbour counts share one pass") {
  const Dataset d = testing::reference_dataset(300, 8);
  const auto pairs = build_pair_dataset(d, scott_kernel(d));
  const KnnIndex index(pairs, psi_dictionary(6));
  const std::vector<std::size_t> counts{1, 7, 50, 400, pairs.size()};
  for (double z = 0.0; z <= 1.0; z += 0.1) {
    const double zz[1] = {z};
    const auto many = index.estimate_many(zz, counts);
    for (std::size_t t = 0; t < counts.size(); ++t) {
      CHECK(many[t] == index.estimate(zz, counts[t]));
      CHECK(std::abs(many[t]) <= 1.0);
    }
  }
  const double zz[1] = {0.5};
  CHECK_THROWS_AS(index.estimate(zz, 0), ConfigError);
  CHECK_THROWS_AS(index.estimate(zz, pairs.size() + 1), ConfigError);
  const std::vector<std::size_t> descending{10, 5};
  CHECK_THROWS_AS(index.estimate_many(zz, descending), ConfigError);
  CHECK_THROWS_AS(KnnIndex(PairDataset(1, 3), psi_dictionary(1)).estimate(zz, 1), DataError);
  CHECK(distance_from_string(to_string(Distance::chebyshev)) == Distance::chebyshev);
  CHECK_THROWS_AS(distance_from_string("cosine"), ConfigError);
}

TEST_CASE("other distances") {
  const auto pairs = labelled_pairs({0.1, 0.2, 0.35}, {1, -1, 1}, {1, 1, 1});
  const auto feats = custom_features(1, {FeatureTerm{}, FeatureTerm{FeatureTerm::Kind::scaled_monomial, 0, 3.0, 0.0, 2, 1}});
  // from 0: manhattan and chebyshev orders agree here, both put 0.35 last
  const double zz[1] = {0.0};
  CHECK(KnnIndex(pairs, feats, Distance::manhattan).estimate(zz, 2) == 0.0);
  CHECK(KnnIndex(pairs, feats, Distance::chebyshev).estimate(zz, 1) == 1.0);
}

TEST_CASE("Lepski distance, threshold and normalization") {
  const std::vector<double> f{0.2, 0.4, -0.1};
  CHECK(lepski_distance(f, f, 1.0) == 0.0);
  for (std::size_t m : {1u, 3u, 10u}) {
    std::vector<double> a(m, 0.5), b(m, 0.4);
    CHECK(lepski_distance(a, b, 1.0) == doctest::Approx(0.1));
  }
  const std::vector<double> a{0.1, -0.3}, zero{0.0, 0.0};
  CHECK(lepski_distance(a, zero, 2.0) == doctest::Approx(std::sqrt((0.0025 + 0.0225) / 2)));
  CHECK(lepski_distance(a, zero, 2.0) == doctest::Approx(0.1118).epsilon(1e-4));
  CHECK_THROWS_AS(lepski_distance(a, zero, 0.0), NumericalError);
  CHECK(lepski_threshold(10, 100, 1.0) == doctest::Approx(std::sqrt(0.1 * std::log(10.0))));
  CHECK(lepski_threshold(10, 100, 1.0) == doctest::Approx(0.4799).epsilon(1e-4));
  CHECK(lepski_threshold(100, 100, 1.0) == 0.0);

  const RangeResult spread = default_M({{{-0.2, 0.3}}, {{0.8, 0.1}}});
  CHECK(spread.M == doctest::Approx(1.0));
  CHECK_FALSE(spread.fallback);
  const RangeResult flat = default_M({{{0.3, 0.3}}, {{0.3}}});
  CHECK(flat.M == 1.0);
  CHECK(flat.fallback);

  CHECK(geometric_candidates(5, 2, 100) == std::vector<std::size_t>{10, 20, 40, 80});
  CHECK(geometric_candidates(1.5, 1.5, 5) == std::vector<std::size_t>{2, 3, 5});
  CHECK_THROWS_AS(geometric_candidates(5, 1, 100), ConfigError);
}

TEST_CASE("Lepski selection rules") {
  const std::vector<std::size_t> cand{10, 20, 40, 80};
  // identical curves: the largest candidate everywhere
  std::vector<std::vector<std::vector<double>>> same(4, {{0.1, 0.2}, {0.5, 0.5}, {-0.3, 0.0}});
  const auto sel = lepski_select(cand, same, 1.0, 1.0);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(sel.neighbors[i] == 80);
    CHECK(sel.accepted[i] == cand);
  }
  // the last candidate departs far from the rest in cell 1 only
  auto shifted = same;
  shifted[3][1] = {-0.5, -0.5};
  const auto s2 = lepski_select(cand, shifted, 0.5, 1.0);
  CHECK(s2.neighbors[0] == 80);
  CHECK(s2.neighbors[1] == 40);

  // random curves: S_i always holds the minimum and N_i = max S_i
  SplitMix64 rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::vector<std::vector<double>>> values(cand.size(), std::vector<std::vector<double>>(4));
    for (auto& curve : values) {
      for (auto& cell : curve) {
        for (int j = 0; j < 3; ++j) cell.push_back(2 * rng.uniform() - 1);
      }
    }
    const double A = 0.05 + rng.uniform();
    const auto s = lepski_select(cand, values, A, default_M(values).M);
    for (std::size_t i = 0; i < 4; ++i) {
      REQUIRE_FALSE(s.accepted[i].empty());
      CHECK(s.accepted[i].front() == 10);
      CHECK(s.neighbors[i] == s.accepted[i].back());
    }
  }
}

TEST_CASE("stitched estimator reuses candidate curves cell by cell") {
  const Dataset d = testing::reference_dataset(400, 9);
  const auto pairs = build_pair_dataset(d, scott_kernel(d));
  const KnnLepski knn(pairs, d, psi_dictionary(1), LepskiConfig{});
  CHECK(knn.cells().size() == 10);
  CHECK(knn.candidates().front() == 10);
  CHECK(knn.candidates().back() <= pairs.size() / 2);
  for (double z = -0.05; z <= 1.05; z += 0.01) {
    const double zz[1] = {z};
    const std::size_t cell = knn.cell_of(zz);
    REQUIRE(cell < knn.cells().size());
    const double got = knn.predict(zz);
    CHECK(std::abs(got) <= 1.0);
    const auto all = knn.index().estimate_many(zz, knn.candidates());
    CHECK(std::find(all.begin(), all.end(), got) != all.end());
    CHECK(got == knn.index().estimate(zz, knn.selection().neighbors[cell]));
  }
  for (const auto& cell : knn.cells()) {
    CHECK(cell.probes.size() == 5);
    for (const auto& probe : cell.probes) CHECK(knn.cell_of(probe) == static_cast<std::size_t>(&cell - knn.cells().data()));
  }
  CHECK(knn.selection().M > 0.5);
  CHECK(knn.selection().M < 2.0);
  const std::string table = knn.selection_csv();
  CHECK(table.rfind("cell,lower1,upper1,accepted,selected\n", 0) == 0);
  CHECK(std::count(table.begin(), table.end(), '\n') == 11);
  CHECK_THROWS_AS(KnnLepski(PairDataset(1, 3), d, psi_dictionary(1), LepskiConfig{}), DataError);
  LepskiConfig bad;
  bad.A = 0.0;
  CHECK_THROWS_AS(KnnLepski(pairs, d, psi_dictionary(1), bad), ConfigError);
}

TEST_CASE("two-dimensional cells cover the plane") {
  const Dataset d = testing::random_dataset(200, 2, 4);
  const auto cells = quantile_cells(d, 0, 5);
  CHECK(cells.size() == 9);  // round(10^(1/2)) = 3 per axis
  for (const auto& cell : cells) {
    CHECK(cell.probes.size() == 5);
    for (const auto& probe : cell.probes) {
      for (std::size_t c = 0; c < 2; ++c) {
        CHECK(probe[c] >= cell.lower[c]);
        CHECK(probe[c] <= cell.upper[c]);
      }
    }
  }
  CHECK_THROWS_AS(quantile_cells(Dataset(1), 4, 5), DataError);
  CHECK_THROWS_AS(quantile_cells(d, 4, 0), ConfigError);
}

TEST_CASE("local selection prefers smoothing away from a jump") {
  SimulationConfig cfg;
  cfg.tau = TauFunction::f1;
  cfg.n = 1000;
  std::vector<double> near, far;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    cfg.seed = seed;
    const Dataset d = simulate_dataset(cfg);
    const auto pairs = build_pair_dataset(d, scott_kernel(d));
    const KnnLepski knn(pairs, d, psi_dictionary(1), LepskiConfig{});
    const double below[1] = {0.4999};
    const double above[1] = {0.5};
    const std::size_t a = knn.cell_of(below), b = knn.cell_of(above);
    std::vector<double> n_far;
    for (std::size_t i = 0; i < knn.cells().size(); ++i) {
      const double n_i = static_cast<double>(knn.selection().neighbors[i]);
      if (i == a || i == b) {
        near.push_back(n_i);
      } else if (i + 1 < std::min(a, b) || i > std::max(a, b) + 1) {
        far.push_back(n_i);
      }
    }
  }
  MESSAGE("median N near the jump " << median(near) << ", away " << median(far));
  CHECK(median(far) > median(near));
}
