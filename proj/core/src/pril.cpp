#include "lakedo/pril.hpp"

#include "lakedo/csv.hpp"
#include "lakedo/error.hpp"
#include "lakedo/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace lakedo {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double head(const LayerState& s, Task task, std::size_t day) {
    const auto v = s.get(task);
    if (!v) {
        throw DomainError("prediction for task " + std::string(task_name(task)) + " missing on row " +
                          std::to_string(day));
    }
    return *v;
}

}  // namespace

double TrainConfig::lambda(Task task) const noexcept {
    switch (task) {
        case Task::Epi: return lambda_mc_epi;
        case Task::Hyp: return lambda_mc_hyp;
        case Task::Total: break;
    }
    return lambda_mc_total;
}

void TrainConfig::validate() const {
    auto fail = [](const std::string& field, const std::string& why) {
        throw ConfigError("invalid training config field '" + field + "': " + why);
    };
    for (Task t : kAllTasks) {
        const double l = lambda(t);
        if (!(l >= 0.0 && l <= kMaxLambda)) {
            fail(std::string("lambda_mc_") + task_name(t), "must lie in [0, 1000]");
        }
    }
    if (!(tau_mc >= 0.0) || !std::isfinite(tau_mc)) fail("tau_mc", "must be >= 0");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) fail("learning_rate", "must be > 0");
    if (batch_size == 0) fail("batch_size", "must be >= 1");
    if (window_length < 2) fail("window_length", "must be >= 2");
    if (max_epochs == 0) fail("max_epochs", "must be >= 1");
    if (hidden_size < kMinHidden || hidden_size > kMaxHidden) fail("hidden_size", "must lie in [20, 200]");
    if (substep_k < 1) fail("substep_k", "must be >= 1");
}

SupervisedLoss supervised_loss(std::span<const LayerState> preds, const LakeSeries& s) {
    if (preds.size() != s.size()) throw DomainError("prediction count does not match series length");
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t t = 0; t < s.size(); ++t) {
        for (Task task : kAllTasks) {
            const auto& y = s.observations(task)[t];
            if (!y) continue;
            const double d = head(preds[t], task, t) - *y;
            acc += d * d;
            ++n;
        }
    }
    if (n == 0) return {0.0, true};
    return {acc / static_cast<double>(n), false};
}

ConservationLoss mass_conservation_loss(std::span<const LayerState> preds, std::span<const LayerState> simulated,
                                        double tau) {
    if (preds.size() != simulated.size()) throw DomainError("prediction and simulation lengths differ");
    ConservationLoss out;
    for (Task task : kAllTasks) {
        const auto ti = static_cast<std::size_t>(task);
        double acc = 0.0;
        std::size_t n = 0;
        for (std::size_t t = 0; t < preds.size(); ++t) {
            const auto sim = simulated[t].get(task);
            const auto pred = preds[t].get(task);
            if (!sim || !pred) continue;
            acc += std::max(0.0, std::abs(*pred - *sim) - tau);
            ++n;
        }
        out.count[ti] = n;
        out.value[task] = n ? acc / static_cast<double>(n) : 0.0;
    }
    return out;
}

LossNodes build_combined_loss(Tape& tape, std::span<const Var> heads, const LakeSeries& s,
                              std::span<const AffineDayMap> maps, const TrainConfig& cfg) {
    if (heads.size() != s.size() || maps.size() != s.size()) {
        throw DomainError("loss inputs do not match series length");
    }
    const std::size_t T = s.size();
    std::vector<std::array<Var, 3>> y(T);
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t i = 0; i < 3; ++i) y[t][i] = tape.element(heads[t], i);

    LossNodes nodes;
    std::vector<Var> terms;
    for (std::size_t t = 0; t < T; ++t) {
        for (Task task : kAllTasks) {
            const auto& obs = s.observations(task)[t];
            if (!obs) continue;
            const Var d = tape.add_scalar(y[t][static_cast<std::size_t>(task)], -*obs);
            terms.push_back(tape.square(d));
        }
    }
    nodes.empty_mask = terms.empty();
    nodes.supervised = tape.mean(terms);

    Var total = nodes.supervised;
    for (Task task : kAllTasks) {
        const auto o = static_cast<std::size_t>(task);
        terms.clear();
        for (std::size_t t = 1; t < T; ++t) {
            const auto& map = maps[t];
            if (!map.present[o]) continue;
            const std::array<double, 3>& c = map.coeff[o];
            const Var sim = tape.linear_combination(y[t - 1], c, map.constant[o]);
            const Var gap = tape.abs(tape.sub(y[t][o], sim));
            terms.push_back(tape.relu(tape.add_scalar(gap, -cfg.tau_mc)));
        }
        nodes.conservation[o] = tape.mean(terms);
        const double lambda = cfg.lambda(task);
        if (lambda > 0.0) total = tape.add(total, tape.scale(nodes.conservation[o], lambda));
    }
    nodes.total = total;
    return nodes;
}

LossBreakdown combined_loss(std::span<const LayerState> preds, const LakeSeries& s, const TrainConfig& cfg,
                            std::span<const int> k) {
    if (preds.size() != s.size()) throw DomainError("prediction count does not match series length");
    const auto maps = linearize_trajectory(s, k);
    Tape tape;
    std::vector<Var> heads;
    heads.reserve(s.size());
    for (std::size_t t = 0; t < s.size(); ++t) {
        const double v[3] = {head(preds[t], Task::Epi, t), head(preds[t], Task::Hyp, t),
                             head(preds[t], Task::Total, t)};
        heads.push_back(tape.constant(v));
    }
    const auto nodes = build_combined_loss(tape, heads, s, maps, cfg);
    LossBreakdown out;
    out.supervised = tape.value(nodes.supervised);
    for (Task task : kAllTasks) out.conservation[task] = tape.value(nodes.conservation[static_cast<std::size_t>(task)]);
    out.total = tape.value(nodes.total);
    out.empty_mask = nodes.empty_mask;
    return out;
}

std::string format_history(const TrainHistory& h) {
    std::ostringstream out;
    out << "epoch,loss_ml,loss_mc_epi,loss_mc_hyp,loss_mc_total,val_rmse_epi,val_rmse_hyp,val_rmse_total\n";
    auto cell = [](double x) { return std::isfinite(x) ? csv::format_double(x) : std::string{}; };
    for (std::size_t e = 0; e < h.size(); ++e) {
        out << e + 1 << ',' << cell(h.loss_ml[e]) << ',' << cell(h.loss_mc_epi[e]) << ',' << cell(h.loss_mc_hyp[e])
            << ',' << cell(h.loss_mc_total[e]) << ',' << cell(h.val_rmse_epi[e]) << ','
            << cell(h.val_rmse_hyp[e]) << ',' << cell(h.val_rmse_total[e]) << '\n';
    }
    return out.str();
}

void write_history(const TrainHistory& history, const std::filesystem::path& path) {
    csv::write_file_atomic(path, format_history(history));
}

ValidationScore validation_score(const PredictorParams& params, std::span<const LakeSeries> validation,
                                 std::size_t window_length) {
    std::array<std::vector<double>, 3> pred, obs;
    std::vector<double> all_pred, all_obs;
    for (const auto& s : validation) {
        const auto p = predict_series(params, s, window_length);
        for (std::size_t t = 0; t < s.size(); ++t) {
            for (Task task : kAllTasks) {
                const auto& y = s.observations(task)[t];
                if (!y) continue;
                const auto i = static_cast<std::size_t>(task);
                pred[i].push_back(*p[t].get(task));
                obs[i].push_back(*y);
                all_pred.push_back(*p[t].get(task));
                all_obs.push_back(*y);
            }
        }
    }
    ValidationScore score;
    for (Task task : kAllTasks) {
        const auto i = static_cast<std::size_t>(task);
        score.rmse[task] = pred[i].empty() ? kNaN : rmse(pred[i], obs[i]);
    }
    score.pooled = all_pred.empty() ? kNaN : rmse(all_pred, all_obs);
    return score;
}

DatasetSplit split_dataset(std::span<const LakeSeries> lakes, std::size_t window_length,
                           std::size_t validation_windows) {
    if (window_length == 0) throw ConfigError("window_length must be > 0");
    DatasetSplit split;
    for (const auto& lake : lakes) {
        const std::size_t windows = (lake.size() + window_length - 1) / window_length;
        if (windows <= validation_windows) {
            throw DomainError("lake '" + lake.lake_id + "' has " + std::to_string(windows) +
                              " windows; cannot hold out " + std::to_string(validation_windows));
        }
        const std::size_t cut = (windows - validation_windows) * window_length;
        split.train.push_back(lake.slice(0, cut));
        if (validation_windows > 0) split.validation.push_back(lake.slice(cut, lake.size()));
    }
    return split;
}

namespace {

struct Window {
    LakeSeries series;
    std::vector<AffineDayMap> maps;
};

void initialize_head_bias(PredictorParams& params, std::span<const LakeSeries> train) {
    std::array<double, 3> sum{};
    std::array<std::size_t, 3> n{};
    double all = 0.0;
    std::size_t all_n = 0;
    for (const auto& s : train) {
        for (Task task : kAllTasks) {
            for (const auto& y : s.observations(task)) {
                if (!y) continue;
                sum[static_cast<std::size_t>(task)] += *y;
                ++n[static_cast<std::size_t>(task)];
                all += *y;
                ++all_n;
            }
        }
    }
    auto& bias = params.blocks[PredictorParams::kHeadBias].values;
    for (std::size_t i = 0; i < 3; ++i) {
        if (n[i]) bias[i] = sum[i] / static_cast<double>(n[i]);
        else if (all_n) bias[i] = all / static_cast<double>(all_n);
    }
}

}  // namespace

TrainResult train_pril(std::span<const LakeSeries> train, std::span<const LakeSeries> validation,
                       const TrainConfig& cfg, const TrainOptions& options) {
    cfg.validate();
    if (train.empty()) throw DomainError("training set is empty");
    const std::size_t m = train.front().feature_count;
    for (const auto& s : train)
        if (s.feature_count != m) throw DomainError("training series disagree on feature count");
    for (const auto& s : validation)
        if (s.feature_count != m) throw DomainError("validation series feature count differs from training");
    if (!options.policy.empty() && options.policy.size() != train.size()) {
        throw DomainError("substep policy must cover every training series");
    }

    PredictorParams params;
    if (options.initial) {
        params = *options.initial;
        params.validate();
        if (params.feature_count != m) throw DomainError("initial predictor feature count differs from data");
    } else {
        params = PredictorParams::initialize(m, cfg.hidden_size, cfg.seed);
        initialize_head_bias(params, train);
    }

    std::vector<Window> windows;
    for (std::size_t i = 0; i < train.size(); ++i) {
        const auto& s = train[i];
        std::vector<int> k(s.size(), cfg.substep_k);
        if (!options.policy.empty()) {
            if (options.policy[i].size() != s.size()) throw DomainError("substep policy length mismatch");
            k = options.policy[i];
        }
        for (std::size_t b = 0; b < s.size(); b += cfg.window_length) {
            const std::size_t e = std::min(s.size(), b + cfg.window_length);
            Window w;
            w.series = s.slice(b, e);
            const std::span<const int> kw(k.data() + b, e - b);
            w.maps = linearize_trajectory(w.series, kw);
            windows.push_back(std::move(w));
        }
    }

    std::mt19937_64 rng(cfg.seed ^ 0x5851F42D4C957F2DULL);
    Adam adam(params.blocks, cfg.learning_rate);
    Tape tape;
    std::vector<std::size_t> order(windows.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainResult result;
    result.params = params;
    double best = std::numeric_limits<double>::infinity();
    std::size_t since_best = 0;

    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double sum_ml = 0.0;
        std::array<double, 3> sum_mc{};
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            tape.clear();
            std::vector<Var> leaves;
            for (const auto& block : params.blocks) leaves.push_back(tape.parameter(block.values));
            std::vector<Var> window_losses;
            for (std::size_t j = start; j < stop; ++j) {
                const auto& w = windows[order[j]];
                const auto heads = predictor_forward(tape, params, leaves, features_of(w.series));
                const auto nodes = build_combined_loss(tape, heads, w.series, w.maps, cfg);
                sum_ml += tape.value(nodes.supervised);
                for (std::size_t o = 0; o < 3; ++o) sum_mc[o] += tape.value(nodes.conservation[o]);
                window_losses.push_back(nodes.total);
            }
            const Var loss = tape.mean(window_losses);
            if (!std::isfinite(tape.value(loss))) {
                throw NumericalError("training diverged: non-finite loss at epoch " + std::to_string(epoch + 1),
                                     epoch + 1);
            }
            tape.backward(loss);
            std::vector<std::vector<double>> grad;
            grad.reserve(leaves.size());
            for (const Var leaf : leaves) {
                const auto g = tape.grad(leaf);
                grad.emplace_back(g.begin(), g.end());
            }
            adam.step(params.blocks, grad);
        }
        for (const auto& block : params.blocks) {
            for (double w : block.values) {
                if (!std::isfinite(w)) {
                    throw NumericalError("training diverged: non-finite weights after epoch " +
                                             std::to_string(epoch + 1),
                                         epoch + 1);
                }
            }
        }

        const double nw = static_cast<double>(windows.size());
        auto& h = result.history;
        h.loss_ml.push_back(sum_ml / nw);
        h.loss_mc_epi.push_back(sum_mc[0] / nw);
        h.loss_mc_hyp.push_back(sum_mc[1] / nw);
        h.loss_mc_total.push_back(sum_mc[2] / nw);
        const auto score = validation_score(params, validation, cfg.window_length);
        h.val_rmse_epi.push_back(score.rmse[Task::Epi]);
        h.val_rmse_hyp.push_back(score.rmse[Task::Hyp]);
        h.val_rmse_total.push_back(score.rmse[Task::Total]);

        if (!options.early_stopping || !std::isfinite(score.pooled)) {
            result.params = params;
            result.best_epoch = epoch;
            continue;
        }
        if (score.pooled < best) {
            best = score.pooled;
            result.params = params;
            result.best_epoch = epoch;
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            break;
        }
    }
    return result;
}

}  // namespace lakedo
