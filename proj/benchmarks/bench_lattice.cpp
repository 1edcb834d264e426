#include <benchmark/benchmark.h>

#include <random>

#include "corrlab/environment.hpp"
#include "corrlab/lattice.hpp"

using namespace corrlab;

static void BM_ApplyOperator(benchmark::State& state) {
  const LatticeShape shape(3, static_cast<int>(state.range(0)));
  const Environment env = sample_environment(shape, ConductanceLaw{}, {1, 0});
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  VertexField u(shape);
  for (double& v : u.values) v = normal(rng);
  std::vector<double> out(shape.num_vertices());
  for (auto _ : state) {
    apply_operator_into(env.a, 0.0, u.values, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(shape.num_vertices()));
}
BENCHMARK(BM_ApplyOperator)->Arg(16)->Arg(32)->Arg(64);

static void BM_SampleEnvironment(benchmark::State& state) {
  const LatticeShape shape(3, static_cast<int>(state.range(0)));
  std::uint32_t r = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sample_environment(shape, ConductanceLaw{}, {2, r++}));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(shape.num_edges()));
}
BENCHMARK(BM_SampleEnvironment)->Arg(32);
