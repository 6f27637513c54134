#include "lakedo/physics.hpp"
#include "lakedo/synthetic.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace lakedo;

const LayerPair kPrev{9.0, 6.0};
const ExoFluxes kFlux{0.2, -0.4};
const LayerVolumes kVolumes{100.0, 150.0, 200.0, 150.0};

void BM_DailyStep(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(simulate_stratified_step(kPrev, kFlux, kVolumes, 1.0));
}
BENCHMARK(BM_DailyStep);

void BM_MultiStepEuler(benchmark::State& state) {
    const int k = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(multi_step_euler(kPrev, kFlux, kVolumes, {k}));
    state.SetItemsProcessed(state.iterations() * k);
}
BENCHMARK(BM_MultiStepEuler)->Arg(1)->Arg(12)->Arg(192);

void BM_SimulateTrajectory(benchmark::State& state) {
    GenConfig cfg;
    cfg.lakes = 1;
    cfg.years = 1;
    const auto lake = generate_lake(cfg, 0);
    const int k = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(simulate_trajectory(lake.series, lake.truth.state, k));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(lake.series.size()));
}
BENCHMARK(BM_SimulateTrajectory)->Arg(1)->Arg(12)->Unit(benchmark::kMicrosecond);

void BM_GenerateLake(benchmark::State& state) {
    GenConfig cfg;
    cfg.lakes = 1;
    for (auto _ : state) benchmark::DoNotOptimize(generate_lake(cfg, 0));
}
BENCHMARK(BM_GenerateLake)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
