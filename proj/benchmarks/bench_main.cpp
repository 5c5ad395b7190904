#include <benchmark/benchmark.h>

#include <vector>

#include "abdsde/abdsde.hpp"

namespace {

using namespace abdsde;

Scenario drift_scenario(double h) {
  const Dims dims{};
  return Scenario(make_grid(1.0, 0.5, h), DelaySpec::uniform(DelayForm::constant(0.5)),
                  builtin_generator("anticipated_drift", {}, dims),
                  builtin_terminal("constant", {{"value", 1.0}}, dims));
}

void BM_SamplePaths(benchmark::State& state) {
  const TimeGrid grid = make_grid(1.0, 0.5, 1.0 / 64);
  const auto P = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(sample_paths(grid, 1, 1, P, 7));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(P));
}
BENCHMARK(BM_SamplePaths)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_Condexp(benchmark::State& state) {
  const TimeGrid grid = make_grid(1.0, 0.0, 1.0 / 32);
  const auto P = static_cast<std::size_t>(state.range(0));
  const PathEnsemble paths = sample_paths(grid, 1, 1, P, 7);
  std::vector<double> target(P);
  for (std::size_t p = 0; p < P; ++p) target[p] = static_cast<double>(p % 17) / 17.0;
  const CondExpBackend backend = CondExpBackend::regression();
  for (auto _ : state) benchmark::DoNotOptimize(condexp(backend, target, 1, 16, paths));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(P));
}
BENCHMARK(BM_Condexp)->Arg(1000)->Arg(10000)->Unit(benchmark::kMicrosecond);

void BM_SweepRegression(benchmark::State& state) {
  const Scenario scenario = drift_scenario(1.0 / static_cast<double>(state.range(0)));
  const PathEnsemble paths = sample_paths(scenario.grid(), 1, 1, 2000, 3);
  const CondExpBackend backend = CondExpBackend::regression();
  for (auto _ : state) benchmark::DoNotOptimize(solve_backward_sweep(scenario, paths, backend));
}
BENCHMARK(BM_SweepRegression)->Arg(16)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_SweepExactTree(benchmark::State& state) {
  const Scenario scenario = drift_scenario(0.25);
  const TreeModel tree = build_tree(scenario.grid().n_end, scenario.grid().h);
  const PathEnsemble paths = tree.ensemble(scenario.grid());
  const CondExpBackend backend = CondExpBackend::exact();
  for (auto _ : state) benchmark::DoNotOptimize(solve_backward_sweep(scenario, paths, backend));
}
BENCHMARK(BM_SweepExactTree)->Unit(benchmark::kMillisecond);

void BM_DualityCheck(benchmark::State& state) {
  LinearDualityCoeffs c;
  c.mu = 0.1;
  c.mu_bar = 0.05;
  c.sigma = 0.1;
  c.kappa = 0.1;
  c.rho = 0.2;
  const TimeGrid grid = make_grid(c.T, c.delta, 1.0 / 16);
  const PathEnsemble paths = nested_paths(grid, 16, 512, 17);
  const CondExpBackend backend = CondExpBackend::regression();
  for (auto _ : state) benchmark::DoNotOptimize(duality_check(c, paths, 512, backend, 2));
}
BENCHMARK(BM_DualityCheck)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
