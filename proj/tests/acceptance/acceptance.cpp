// Acceptance checks for the released behaviour. Prints one PASS/FAIL line
// per criterion and exits nonzero when any fails.
//
// usage: lakedo_acceptance <work-dir> [criterion numbers to run]

#include "fixtures.hpp"
#include "random_inputs.hpp"

#include "lakedo/april.hpp"
#include "lakedo/eval.hpp"
#include "lakedo/physics.hpp"
#include "lakedo/pril.hpp"
#include "lakedo/synthetic.hpp"
#include "lakedo_cli/commands.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>
#include <string>

using namespace lakedo;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

double relative(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1.0}); }

std::string fmt(const char* pattern, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, pattern, args...);
    return buf;
}

// 1. Entrainment moves equal mass and every scheme closes the budget.
Outcome conservation_suite() {
    const auto start = Clock::now();
    testgen::Gen g(1001);
    const int steps = 10000;
    double worst_transport = 0.0, worst_budget = 0.0;
    for (int i = 0; i < steps; ++i) {
        const auto v = g.volumes();
        const auto y = g.concentrations();
        const auto f = g.fluxes();
        const double scale = y.epi * v.epi_prev + y.hyp * v.hyp_prev + std::abs(f.epi) * v.epi_prev +
                             std::abs(f.hyp) * v.hyp_prev;

        const auto d = entrainment_fluxes_daily(v, y.epi, y.hyp);
        const double moved = std::max(std::abs(v.epi_cur - v.epi_prev) * std::max(y.epi, y.hyp), 1.0);
        worst_transport = std::max(worst_transport, std::abs(d.epi * v.epi_cur + d.hyp * v.hyp_cur) / moved);

        const auto daily = simulate_stratified_step(y, f, v, 1.0);
        worst_budget = std::max(worst_budget, std::abs(mass_balance_residual(daily, y, f, v, 1.0)) / scale);
        for (int k : {1, 2, 12}) {
            const auto sub = multi_step_euler(y, f, v, {k});
            worst_budget = std::max(worst_budget, std::abs(mass_balance_residual(sub, y, f, v, 1.0)) / scale);
            const auto volumes_epi = interpolate_volumes(v.epi_prev, v.epi_cur, k);
            const auto volumes_hyp = interpolate_volumes(v.hyp_prev, v.hyp_cur, k);
            for (int j = 0; j < k; ++j) {
                const double dv = volumes_epi[j + 1] - volumes_epi[j];
                const auto s = entrainment_fluxes_substep(dv, dv >= 0 ? y.hyp : y.epi, volumes_epi[j + 1],
                                                          volumes_hyp[j + 1]);
                const double m = std::max(std::abs(dv) * std::max(y.epi, y.hyp), 1.0);
                worst_transport =
                    std::max(worst_transport, std::abs(s.epi * volumes_epi[j + 1] + s.hyp * volumes_hyp[j + 1]) / m);
            }
        }
    }
    const double secs = seconds_since(start);
    return {worst_transport <= 1e-9 && worst_budget <= 1e-9 && secs < 10.0,
            fmt("%d steps, transport %.2e, budget %.2e, %.2fs", steps, worst_transport, worst_budget, secs)};
}

// 2. One substep is the daily step, closed forms are the composed step, and the worked two-substep trace.
Outcome reduction_and_closed_forms() {
    testgen::Gen g(1002);
    double worst_reduction = 0.0, worst_closed = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const auto v = g.volumes();
        const auto y = g.concentrations();
        const auto f = g.fluxes();
        const auto a = multi_step_euler(y, f, v, {1});
        const auto b = simulate_stratified_step(y, f, v, 1.0);
        worst_reduction = std::max({worst_reduction, relative(a.epi, b.epi), relative(a.hyp, b.hyp)});
        const double closed = v.epi_cur >= v.epi_prev ? closed_form_hyp_shrink(y.hyp, f.hyp, v.hyp_prev, v.hyp_cur, 1)
                                                      : closed_form_epi_shrink(y.epi, f.epi, v.epi_prev, v.epi_cur, 1);
        worst_closed = std::max(worst_closed, relative(closed, v.epi_cur >= v.epi_prev ? b.hyp : b.epi));
    }
    const auto two = multi_step_euler({9.0, 6.0}, {0.2, -0.4}, {100, 150, 200, 150}, {2});
    const bool trace = std::abs(two.epi - 8.095238095238095) < 1e-12 && std::abs(two.hyp - 5.504761904761905) < 1e-12;
    return {worst_reduction <= 1e-12 && worst_closed <= 1e-12 && trace,
            fmt("reduction %.2e, closed forms %.2e, k=2 trace (%.15f, %.15f)", worst_reduction, worst_closed, two.epi,
                two.hyp)};
}

// 3. Refinement error against k = 192 shrinks as k doubles.
Outcome convergence() {
    testgen::Gen g(1003);
    const int days = 100;
    int monotone = 0;
    for (int i = 0; i < days; ++i) {
        const auto v = g.volumes();
        const auto y = g.concentrations();
        const auto f = g.fluxes();
        const auto ref = multi_step_euler(y, f, v, {192});
        double last = std::numeric_limits<double>::infinity();
        bool ok = true;
        for (int k : {12, 24, 48, 96}) {
            const auto a = multi_step_euler(y, f, v, {k});
            const double gap = std::max(std::abs(a.epi - ref.epi), std::abs(a.hyp - ref.hyp));
            // Days without thermocline motion are exact for every k up to roundoff.
            if (gap > last + 1e-12 * 14.0) ok = false;
            last = gap;
        }
        monotone += ok;
    }
    return {monotone * 100 >= days * 95, fmt("%d/%d days monotone", monotone, days)};
}

// 4. On collapse days the daily step overshoots in both layers; the canonical instance gives -14.
Outcome scenario_a_ordering() {
    int days = 0, ordered = 0;
    for (const auto& lake : generate_dataset(GenConfig{})) {
        for (std::size_t t = 1; t < lake.series.size(); ++t) {
            if (lake.truth.tag[t] != "A") continue;
            ++days;
            const auto& prev = lake.truth.state[t - 1];
            const auto one = simulate_day(lake.series, t, prev, 1);
            const auto sub = simulate_day(lake.series, t, prev, 12);
            ordered += *one.epi > *sub.epi && *one.hyp < *sub.hyp;
        }
    }
    const auto canonical = simulate_stratified_step({9.0, 6.0}, {0.0, -2.0}, {800, 980, 200, 20}, 1.0);
    const double closed = closed_form_hyp_shrink(6, -2, 200, 20, 1);
    return {days > 0 && ordered == days && canonical.hyp == -14.0 && closed == -14.0,
            fmt("%d/%d scenario A days ordered, canonical hyp %.17g", ordered, days, canonical.hyp)};
}

// 5. Reverse-mode gradients of the full losses agree with finite differences.
Outcome gradient_correctness() {
    const auto start = Clock::now();
    const auto s = fixtures::ten_day_window();
    TrainConfig cfg;
    cfg.tau_mc = 0.01 + 1e-9;  // off the threshold kink
    double worst = 0.0;
    for (const bool adaptive : {false, true}) {
        std::vector<int> k(s.size(), 1);
        if (adaptive) k[3] = k[4] = k[6] = 12;
        const auto maps = linearize_trajectory(s, k);
        auto p = PredictorParams::initialize(s.feature_count, 20, 3);
        p.blocks[PredictorParams::kHeadBias].values = {8.3, 6.0, 7.6};
        const LossProgram f = [&](Tape& tape, std::span<const Var> leaves) {
            const auto heads = predictor_forward(tape, p, leaves, features_of(s));
            return build_combined_loss(tape, heads, s, maps, cfg).total;
        };
        worst = std::max(worst, gradient_check(f, p.blocks, 1e-2));
    }
    const double secs = seconds_since(start);
    return {worst < 1e-4 && secs < 30.0, fmt("max relative error %.2e, %.2fs", worst, secs)};
}

// 6. Zero weights reduce to the supervised loss, tau monotonicity, unobserved series.
Outcome loss_identities() {
    testgen::Gen g(1006);
    const auto s = fixtures::ten_day_window();
    TrainConfig zero;
    zero.lambda_mc_epi = zero.lambda_mc_hyp = zero.lambda_mc_total = 0.0;
    bool exact = true, monotone = true;
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<LayerState> preds(s.size());
        for (auto& p : preds) p = {g.uniform(0, 14), g.uniform(0, 14), g.uniform(0, 14)};
        exact &= combined_loss(preds, s, zero, std::vector<int>(s.size(), 1)).total == supervised_loss(preds, s).value;
        const auto sim = simulate_trajectory(s, preds, trial % 2 ? 12 : 1);
        TaskValues last{{1e300, 1e300, 1e300}};
        for (double tau : kTauGrid) {
            const auto loss = mass_conservation_loss(preds, sim, tau);
            for (Task t : kAllTasks) {
                monotone &= loss.value[t] <= last[t];
                last[t] = loss.value[t];
            }
        }
    }
    auto blind = s;
    for (Task t : kAllTasks)
        for (auto& y : blind.observations(t)) y.reset();
    std::vector<LayerState> preds(s.size());
    for (auto& p : preds) p = {g.uniform(0, 14), g.uniform(0, 14), g.uniform(0, 14)};
    const auto loss = combined_loss(preds, blind, TrainConfig{}, std::vector<int>(s.size(), 1));
    const double conservation = loss.conservation.values[0] + loss.conservation.values[1] + loss.conservation.values[2];
    const bool unobserved = loss.empty_mask && std::isfinite(conservation) && conservation > 0.0;
    return {exact && monotone && unobserved,
            fmt("zero-weight exact %d, tau-monotone %d, unobserved conservation %.4f", exact, monotone,
                conservation)};
}

// 7. The gamma rule on a pooled RMSE of 1 and the volume rule overriding the discriminator.
Outcome labeling_rules() {
    // Eight epilimnion residuals 2, 1, 1, 1, 1, 0, 0, 0 pool to an RMSE of exactly 1.
    const double residuals[] = {2, 1, 1, 1, 1, 0, 0, 0};
    std::vector<fixtures::Day> days{{'M'}};
    for (int i = 0; i < 8; ++i) days.push_back({'S', 0.4, 0, 0, 0, 6.5});
    const auto s = fixtures::build(days);
    std::vector<LayerState> preds(s.size(), LayerState{6.5, 5.0, 6.0});
    for (int i = 0; i < 8; ++i) preds[i + 1].epi = 6.5 + residuals[i];
    const std::vector<std::vector<LayerState>> all{preds};
    const std::vector<LakeSeries> series{s};
    AprilConfig cfg;
    const auto gamma = error_threshold(all, series, cfg);
    const auto labels = label_from_predictions(all, series, cfg);
    bool rule = gamma.epi == 1.5 && labels.size() == 8;
    for (const auto& l : labels) {
        const double r = residuals[l.day - 1];
        if (r == 2.0) rule &= l.cls == DayClass::Drastic;
        if (r == 1.0) rule &= l.cls == DayClass::Mild;
    }

    // A discriminator that calls every day mild.
    const auto lakes = generate_dataset(GenConfig{});
    auto always_mild = DiscriminatorParams::zeros(lakes.front().series.feature_count + 1, cfg.discriminator_hidden);
    always_mild.blocks.back().values[0] = 20.0;
    std::size_t volume_days = 0, flagged = 0;
    for (const auto& lake : lakes) {
        const auto policy = classify_days(always_mild, lake.series, cfg);
        for (const auto& l : policy.labels) {
            if (lake.series.relative_epi_change(l.day) <= 0.20) continue;
            ++volume_days;
            flagged += l.cls == DayClass::Drastic && policy.k[l.day] == cfg.k_drastic;
        }
    }
    return {rule && volume_days > 0 && flagged == volume_days,
            fmt("gamma threshold %.3f, %zu/%zu large volume-change days drastic", gamma.epi, flagged, volume_days)};
}

struct Inconsistency {
    double all = 0.0;       // summed per-task means
    double scenario = 0.0;  // epi + hyp on scenario days
};

Inconsistency measure(const PredictorParams& p, const std::vector<SyntheticLake>& lakes, std::size_t window) {
    std::array<double, 3> sum{}, scen{};
    std::array<int, 3> n{}, sn{};
    for (const auto& lake : lakes) {
        const auto preds = predict_series(p, lake.series, window);
        const auto inc = mass_inconsistency(preds, lake.series);
        std::vector<std::size_t> rows;
        for (std::size_t t = 0; t < lake.series.size(); ++t)
            if (lake.truth.tag[t] == "A" || lake.truth.tag[t] == "B") rows.push_back(t);
        const auto sinc = mass_inconsistency_on(preds, lake.series, rows);
        for (std::size_t i = 0; i < 3; ++i) {
            if (std::isfinite(inc.values[i])) sum[i] += inc.values[i], ++n[i];
            if (std::isfinite(sinc.values[i])) scen[i] += sinc.values[i], ++sn[i];
        }
    }
    Inconsistency out;
    for (std::size_t i = 0; i < 3; ++i) out.all += n[i] ? sum[i] / n[i] : 0.0;
    for (std::size_t i = 0; i < 2; ++i) out.scenario += sn[i] ? scen[i] / sn[i] : 0.0;
    return out;
}

// 8. Conservation lowers inconsistency; adaptive substeps lower it further on collapse days.
Outcome end_to_end() {
    const auto start = Clock::now();
    const auto lakes = generate_dataset(GenConfig{});
    std::vector<LakeSeries> series;
    for (const auto& l : lakes) series.push_back(l.series);
    int pril_wins = 0, april_wins = 0;
    std::string runs;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        TrainConfig cfg;
        cfg.seed = seed;
        const auto split = split_dataset(series, cfg.window_length, cfg.validation_windows);
        TrainConfig plain = cfg;
        plain.lambda_mc_epi = plain.lambda_mc_hyp = plain.lambda_mc_total = 0.0;
        const auto base = train_pril(split.train, split.validation, plain);
        const auto pril = train_pril(split.train, split.validation, cfg);
        const auto april = refine_april(pril, split.train, split.validation, cfg, AprilConfig{});
        const auto mb = measure(base.params, lakes, cfg.window_length);
        const auto mp = measure(pril.params, lakes, cfg.window_length);
        const auto ma = measure(april.final.params, lakes, cfg.window_length);
        pril_wins += mp.all < mb.all;
        april_wins += ma.scenario < mp.scenario;
        runs += fmt(" [%.3f<%.3f %.2f<%.2f]", mp.all, mb.all, ma.scenario, mp.scenario);
    }
    const double secs = seconds_since(start);
    return {pril_wins >= 4 && april_wins >= 4 && secs < 900.0,
            fmt("pril beats baseline %d/5, april beats pril on scenario days %d/5, %.0fs;", pril_wins, april_wins,
                secs) +
                runs};
}

// 9. The largest conservation weight is never the best grid point on validation RMSE.
Outcome sweep_shape() {
    const auto lakes = generate_dataset(GenConfig{});
    std::vector<LakeSeries> series;
    for (const auto& l : lakes) series.push_back(l.series);
    const double grid[] = {0, 1, 10, 100, 1000};
    int holds = 0;
    std::string runs;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        TrainConfig cfg;
        cfg.seed = seed;
        const auto split = split_dataset(series, cfg.window_length, cfg.validation_windows);
        std::vector<double> rmse;
        for (double lambda : grid) {
            cfg.lambda_mc_epi = lambda;
            const auto r = train_pril(split.train, split.validation, cfg);
            rmse.push_back(validation_score(r.params, split.validation, cfg.window_length).pooled);
        }
        const double best_other = *std::min_element(rmse.begin(), rmse.end() - 1);
        holds += rmse.back() >= best_other;
        runs += fmt(" [%.3f vs %.3f]", rmse.back(), best_other);
    }
    return {holds >= 4, fmt("lambda 1000 no better than the best smaller weight in %d/5 seeds;", holds) + runs};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

// Output files of a run, manifests without their wall-clock duration.
std::map<std::string, std::string> payload(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        const auto rel = fs::relative(e.path(), dir).string();
        auto text = slurp(e.path());
        if (e.path().filename() == "manifest.json") {
            auto j = nlohmann::json::parse(text);
            j.erase("duration_seconds");
            text = j.dump();
        }
        out[rel] = std::move(text);
    }
    return out;
}

// 10. Every command run twice on identical inputs writes identical outputs.
Outcome determinism(const fs::path& work) {
    using namespace lakedo::cli;
    fs::remove_all(work);
    fs::create_directories(work);
    const auto config = work / "config.json";
    {
        std::ofstream out(config);
        out << R"({"schema_version": 1,
                   "generate": {"lakes": 2, "years": 2},
                   "train": {"max_epochs": 8, "patience": 8},
                   "april": {"finetune_epochs": 3, "discriminator_updates": 100},
                   "sweep": {"lambda_epi": [0, 10], "lambda_hyp": [1]}})";
    }
    // Both passes use the same paths so that the inputs are identical.
    const auto root = work / "run";
    auto run_all = [&] {
        fs::remove_all(root);
        cmd_generate({config, root / "data", 11});
        for (const char* mode : {"baseline", "pril", "april"})
            cmd_train({mode, config, root / "data", root / mode, 5, std::nullopt});
        cmd_evaluate({root / "april" / "checkpoint.txt", config, root / "data", root / "eval", std::nullopt, false});
        cmd_sweep({config, root / "data", root / "sweep", 5, 2});
        return payload(root);
    };
    const auto a = run_all();
    const auto b = run_all();
    std::vector<std::string> differing;
    std::size_t files = 0;
    for (const auto& [name, text] : a) {
        ++files;
        const auto it = b.find(name);
        if (it == b.end() || it->second != text) differing.push_back(name);
    }
    if (a.size() != b.size()) differing.push_back("<file set>");
    std::string detail = fmt("%zu files compared", files);
    for (const auto& d : differing) detail += ", differs: " + d;
    return {differing.empty() && files > 0, detail};
}

}  // namespace

int main(int argc, char** argv) {
    const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "lakedo_acceptance";
    const std::pair<const char*, std::function<Outcome()>> criteria[] = {
        {"conservation suite", conservation_suite},
        {"reduction and closed forms", reduction_and_closed_forms},
        {"convergence", convergence},
        {"scenario A ordering", scenario_a_ordering},
        {"gradient correctness", gradient_correctness},
        {"loss identities", loss_identities},
        {"labeling rules", labeling_rules},
        {"end-to-end paired comparison", end_to_end},
        {"sweep shape", sweep_shape},
        {"determinism", [&] { return determinism(work); }},
    };
    std::set<int> selected;
    for (int i = 2; i < argc; ++i) selected.insert(std::atoi(argv[i]));
    int failed = 0, index = 0, ran = 0;
    for (const auto& [name, check] : criteria) {
        ++index;
        if (!selected.empty() && !selected.count(index)) continue;
        ++ran;
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        failed += !o.pass;
        std::cout << "criterion " << index << " (" << name << "): " << (o.pass ? "PASS" : "FAIL") << " - " << o.detail
                  << std::endl;
    }
    std::cout << (failed ? "FAILED " : "PASSED ") << (ran - failed) << "/" << ran << std::endl;
    return failed ? 1 : 0;
}
