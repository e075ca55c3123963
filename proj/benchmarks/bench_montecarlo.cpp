#include <benchmark/benchmark.h>

#include "mumle/mumle.hpp"

namespace {

using namespace mumle;

void BM_SampleParetoRate(benchmark::State& state) {
  const auto& f = ModelFamily::of(FamilyId::ParetoRate);
  auto rng = substream(4, 0);
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(sample(f, {{1.0}, 1.0}, n, 0, rng).size());
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SampleParetoRate)->Arg(20)->Arg(4096);

void BM_SampleNormal(benchmark::State& state) {
  const auto& f = ModelFamily::of(FamilyId::NormalMeanVar);
  auto rng = substream(5, 0);
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(sample(f, {{0.0}, 1.0}, n, 0, rng).size());
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SampleNormal)->Arg(20)->Arg(4096);

// Replicates per second for the headline Pareto experiment shape.
void BM_ParetoExperiment(benchmark::State& state) {
  ExperimentConfig c;
  c.family = FamilyId::ParetoRate;
  c.true_params = {{1.0}, 1.0};
  c.n = 20;
  c.replicates = static_cast<std::size_t>(state.range(0));
  c.seed = 42;
  c.estimators = {{EstimatorKind::MLE}, {EstimatorKind::MUMLE}};
  for (auto _ : state) benchmark::DoNotOptimize(run_experiment(c, 1).estimators.size());
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ParetoExperiment)->Arg(10'000)->Unit(benchmark::kMillisecond);

void BM_NormalMmlExperiment(benchmark::State& state) {
  ExperimentConfig c;
  c.family = FamilyId::NormalMeanVar;
  c.true_params = {{0.0}, 1.0};
  c.n = 10;
  c.replicates = static_cast<std::size_t>(state.range(0));
  c.seed = 7;
  c.estimators = {{EstimatorKind::MML87}};
  for (auto _ : state) benchmark::DoNotOptimize(run_experiment(c, 1).estimators.size());
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_NormalMmlExperiment)->Arg(1'000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
