#include "lakedo/networks.hpp"
#include "lakedo/pril.hpp"
#include "lakedo/synthetic.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace lakedo;

LakeSeries one_year() {
    GenConfig cfg;
    cfg.lakes = 1;
    cfg.years = 1;
    return generate_lake(cfg, 0).series;
}

void BM_PredictorForward(benchmark::State& state) {
    const auto s = one_year();
    const auto p = PredictorParams::initialize(s.feature_count, static_cast<std::size_t>(state.range(0)), 0);
    for (auto _ : state) benchmark::DoNotOptimize(predictor_forward(p, features_of(s)));
}
BENCHMARK(BM_PredictorForward)->Arg(20)->Arg(64)->Unit(benchmark::kMillisecond);

// Forward and reverse pass of the combined loss over one 365-day window.
void BM_LossGradient(benchmark::State& state) {
    const auto s = one_year();
    const std::vector<int> k(s.size(), static_cast<int>(state.range(0)));
    const auto maps = linearize_trajectory(s, k);
    const TrainConfig cfg;
    const auto p = PredictorParams::initialize(s.feature_count, cfg.hidden_size, 0);
    const LossProgram f = [&](Tape& tape, std::span<const Var> leaves) {
        const auto heads = predictor_forward(tape, p, leaves, features_of(s));
        return build_combined_loss(tape, heads, s, maps, cfg).total;
    };
    for (auto _ : state) benchmark::DoNotOptimize(evaluate_with_gradient(f, p.blocks));
}
BENCHMARK(BM_LossGradient)->Arg(1)->Arg(12)->Unit(benchmark::kMillisecond);

void BM_TrainEpoch(benchmark::State& state) {
    GenConfig gen;
    gen.lakes = 2;
    gen.years = 2;
    std::vector<LakeSeries> lakes;
    for (const auto& l : generate_dataset(gen)) lakes.push_back(l.series);
    TrainConfig cfg;
    cfg.max_epochs = 1;
    const auto split = split_dataset(lakes, cfg.window_length, cfg.validation_windows);
    for (auto _ : state) benchmark::DoNotOptimize(train_pril(split.train, split.validation, cfg));
}
BENCHMARK(BM_TrainEpoch)->Unit(benchmark::kMillisecond);

}  // namespace
