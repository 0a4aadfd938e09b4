// Throughput of the pair construction and the three core fitters on the reference setting.

#include <benchmark/benchmark.h>

#include "ckt/dataset.hpp"
#include "ckt/features.hpp"
#include "ckt/glm.hpp"
#include "ckt/knn.hpp"
#include "ckt/sim.hpp"
#include "ckt/tree.hpp"

namespace {

ckt::Dataset reference_sample(std::size_t n) {
  ckt::SimulationConfig cfg;
  cfg.n = n;
  cfg.seed = 7;
  return ckt::simulate_dataset(cfg);
}

ckt::KernelSpec reference_kernel(std::size_t n) {
  return ckt::scott_kernel(reference_sample(n), ckt::KernelFamily::epanechnikov);
}

void BM_BuildPairs(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto data = reference_sample(n);
  const auto kernel = reference_kernel(n);
  for (auto _ : state) benchmark::DoNotOptimize(ckt::build_pair_dataset(data, kernel));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * (n - 1) / 2));
}
BENCHMARK(BM_BuildPairs)->Arg(500)->Arg(1000)->Arg(3000)->Unit(benchmark::kMillisecond);

void BM_FitAdmm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto pairs = ckt::build_pair_dataset(reference_sample(n), reference_kernel(n));
  const auto features = ckt::psi_dictionary(6);
  for (auto _ : state) benchmark::DoNotOptimize(ckt::fit_admm(pairs, features, ckt::logit_link(), ckt::GlmConfig{}));
}
BENCHMARK(BM_FitAdmm)->Arg(500)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_FitTree(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto pairs = ckt::build_pair_dataset(reference_sample(n), reference_kernel(n));
  const auto features = ckt::psi_dictionary(6);
  for (auto _ : state) benchmark::DoNotOptimize(ckt::fit_tree(pairs, features, ckt::TreeConfig{}));
}
BENCHMARK(BM_FitTree)->Arg(500)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_KnnEstimate(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto pairs = ckt::build_pair_dataset(reference_sample(n), reference_kernel(n));
  const ckt::KnnIndex index(pairs, ckt::psi_dictionary(1));
  const std::size_t neighbours = std::max<std::size_t>(1, pairs.size() / 20);
  double z = 0.05;
  for (auto _ : state) {
    const double probe[1] = {z};
    benchmark::DoNotOptimize(index.estimate(probe, neighbours));
    z = z < 0.95 ? z + 0.01 : 0.05;
  }
}
BENCHMARK(BM_KnnEstimate)->Arg(500)->Arg(1000)->Arg(3000)->Unit(benchmark::kMicrosecond);

}  // namespace
BENCHMARK_MAIN();
