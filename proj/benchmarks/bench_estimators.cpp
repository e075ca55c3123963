#include <benchmark/benchmark.h>

#include "mumle/mumle.hpp"

namespace {

using namespace mumle;

DataSet normal_data(std::size_t n) {
  auto rng = substream(1, n);
  return sample(ModelFamily::of(FamilyId::NormalMeanVar), {{0.0}, 1.0}, n, 0, rng);
}

void BM_ClosedFormMumle(benchmark::State& state) {
  const auto& f = ModelFamily::of(FamilyId::NormalMeanVar);
  const auto data = normal_data(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(psi_mumle(f, data));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ClosedFormMumle)->RangeMultiplier(8)->Range(8, 32768)->Complexity();

void BM_ScoreRoot(benchmark::State& state) {
  const auto& f = ModelFamily::of(FamilyId::ParetoRate);
  auto rng = substream(2, 0);
  const auto data = sample(f, {{1.0}, 2.0}, static_cast<std::size_t>(state.range(0)), 0, rng);
  const auto theta = nuisance_mle(f, data);
  const double hint = moment_hint(f, data);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        solve_score_root([&](double p) { return psi_score(f, data, {theta, p}); }, hint));
  }
}
BENCHMARK(BM_ScoreRoot)->Arg(20)->Arg(1000);

void BM_Mml87Normal(benchmark::State& state) {
  const auto& f = ModelFamily::of(FamilyId::NormalMeanVar);
  const auto data = normal_data(static_cast<std::size_t>(state.range(0)));
  const auto prior = PriorSpec::psi_power(-0.5);
  for (auto _ : state) benchmark::DoNotOptimize(mml87_estimate(f, data, prior).value);
}
BENCHMARK(BM_Mml87Normal)->Arg(20)->Arg(1000);

void BM_FirthNeymanScott(benchmark::State& state) {
  const auto& f = ModelFamily::of(FamilyId::NeymanScott);
  auto rng = substream(3, 0);
  const auto data = sample(f, {{0.0}, 1.0}, static_cast<std::size_t>(state.range(0)), 2, rng);
  for (auto _ : state) benchmark::DoNotOptimize(firth_corrected_estimate(f, data).value);
}
BENCHMARK(BM_FirthNeymanScott)->Arg(10)->Arg(100);

void BM_GammaFisherFiniteDifference(benchmark::State& state) {
  const auto& f = ModelFamily::of(FamilyId::GammaTwoParam);
  FisherOptions opts;
  opts.samples = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(fisher_information_determinant(f, 50, {{3.0}, 2.0}, opts).determinant);
  }
}
BENCHMARK(BM_GammaFisherFiniteDifference)->Arg(4096)->Arg(65536)->Unit(benchmark::kMillisecond);

}  // namespace
