#include <benchmark/benchmark.h>

#include <random>

#include "corrlab/gauss_stats.hpp"

using namespace corrlab;

static std::vector<double> normal_sample(std::size_t n) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  std::vector<double> x(n);
  for (double& v : x) v = normal(rng);
  return x;
}

static void BM_Wasserstein(benchmark::State& state) {
  const std::vector<double> x = normal_sample(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(wasserstein1_to_gaussian(x, true));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Wasserstein)->RangeMultiplier(4)->Range(64, 16384)->Complexity(benchmark::oNLogN);

static void BM_ComputeStats(benchmark::State& state) {
  const std::vector<double> x = normal_sample(200);
  for (auto _ : state) benchmark::DoNotOptimize(compute_stats(x, {1000, 0.95, 0, 0}, 400));
}
BENCHMARK(BM_ComputeStats)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
