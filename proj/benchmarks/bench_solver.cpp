#include <benchmark/benchmark.h>

#include "corrlab/corrector.hpp"
#include "corrlab/covariance.hpp"

using namespace corrlab;

static void BM_CorrectorSolve(benchmark::State& state) {
  const LatticeShape shape(3, static_cast<int>(state.range(0)));
  const Environment env = sample_environment(shape, ConductanceLaw{}, {3, 0});
  SolverConfig cfg;
  cfg.preconditioner = static_cast<Preconditioner>(state.range(1));
  const std::vector<double> xi{1.0, 0.0, 0.0};
  int iterations = 0;
  for (auto _ : state) {
    const CorrectorSolution c = solve_corrector(env, xi, 0.0, cfg);
    iterations = c.report.iterations;
    benchmark::DoNotOptimize(c.phi.values.data());
  }
  state.counters["pcg_iterations"] = iterations;
}
BENCHMARK(BM_CorrectorSolve)
    ->ArgsProduct({{16, 32}, {0, 1, 2}})
    ->ArgNames({"L", "preconditioner"})
    ->Unit(benchmark::kMillisecond);

static void BM_Autocorrelation(benchmark::State& state) {
  const LatticeShape shape(3, static_cast<int>(state.range(0)));
  const Environment env = sample_environment(shape, ConductanceLaw{}, {4, 0});
  const CorrectorSolution c = solve_corrector(env, std::vector<double>{1.0, 0.0, 0.0}, 0.0, SolverConfig{});
  for (auto _ : state) {
    CovarianceAccumulator acc(shape);
    acc.add(c.phi);
    benchmark::DoNotOptimize(acc.count());
  }
}
BENCHMARK(BM_Autocorrelation)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
