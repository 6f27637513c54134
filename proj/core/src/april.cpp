#include "lakedo/april.hpp"

#include "lakedo/csv.hpp"
#include "lakedo/error.hpp"

#include <cmath>
#include <sstream>

namespace lakedo {

void AprilConfig::validate() const {
    if (!(gamma_factor > 0.0) || !std::isfinite(gamma_factor)) throw ConfigError("gamma_factor must be positive");
    if (!(volume_change_threshold >= 0.0) || !std::isfinite(volume_change_threshold)) {
        throw ConfigError("volume_change_threshold must be nonnegative");
    }
    if (k_drastic < 1) throw ConfigError("k_drastic must be at least 1");
    if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("threshold must lie in (0, 1)");
    if (discriminator_hidden.empty()) throw ConfigError("discriminator_hidden needs at least one layer");
    for (auto w : discriminator_hidden)
        if (w == 0) throw ConfigError("discriminator_hidden widths must be positive");
    if (imbalance_weight && !(*imbalance_weight > 0.0)) throw ConfigError("imbalance_weight must be positive");
    if (discriminator_updates == 0) throw ConfigError("discriminator_updates must be positive");
    if (!(discriminator_learning_rate > 0.0)) throw ConfigError("discriminator_learning_rate must be positive");
}

const char* class_name(DayClass cls) noexcept { return cls == DayClass::Mild ? "MILD" : "DRASTIC"; }

const char* provenance_name(LabelProvenance p) noexcept {
    switch (p) {
        case LabelProvenance::ErrorRule: return "ERROR_RULE";
        case LabelProvenance::VolumeRule: return "VOLUME_RULE";
        case LabelProvenance::Discriminator: return "DISCRIMINATOR";
    }
    return "";
}

namespace {

void check_predictions(std::span<const std::vector<LayerState>> preds, std::span<const LakeSeries> series) {
    if (preds.size() != series.size()) throw DomainError("one prediction sequence per validation series expected");
    for (std::size_t i = 0; i < series.size(); ++i)
        if (preds[i].size() != series[i].size()) throw DomainError("prediction length does not match series");
}

}  // namespace

ErrorThreshold error_threshold(std::span<const std::vector<LayerState>> preds, std::span<const LakeSeries> validation,
                               const AprilConfig& cfg) {
    check_predictions(preds, validation);
    double sq[2] = {0.0, 0.0};
    std::size_t n[2] = {0, 0};
    for (std::size_t i = 0; i < validation.size(); ++i) {
        const auto& s = validation[i];
        for (std::size_t t = 0; t < s.size(); ++t) {
            for (Task task : {Task::Epi, Task::Hyp}) {
                const auto& obs = s.observations(task)[t];
                const auto p = preds[i][t].get(task);
                if (!obs || !p) continue;
                const auto j = static_cast<std::size_t>(task);
                sq[j] += (*p - *obs) * (*p - *obs);
                ++n[j];
            }
        }
    }
    if (n[0] + n[1] == 0) throw DomainError("no observed validation days: error threshold is undefined");
    ErrorThreshold out;
    if (cfg.per_layer_gamma) {
        if (n[0] == 0 || n[1] == 0) throw DomainError("per-layer threshold needs observations in both layers");
        out.epi = cfg.gamma_factor * std::sqrt(sq[0] / static_cast<double>(n[0]));
        out.hyp = cfg.gamma_factor * std::sqrt(sq[1] / static_cast<double>(n[1]));
    } else {
        out.epi = out.hyp = cfg.gamma_factor * std::sqrt((sq[0] + sq[1]) / static_cast<double>(n[0] + n[1]));
    }
    return out;
}

bool volume_rule_fires(const LakeSeries& series, std::size_t day, const AprilConfig& cfg) {
    return series.relative_epi_change(day) > cfg.volume_change_threshold;
}

std::vector<DayLabel> label_from_predictions(std::span<const std::vector<LayerState>> preds,
                                             std::span<const LakeSeries> validation, const AprilConfig& cfg) {
    const auto gamma = error_threshold(preds, validation, cfg);
    std::vector<DayLabel> labels;
    for (std::size_t i = 0; i < validation.size(); ++i) {
        const auto& s = validation[i];
        for (std::size_t t = 0; t < s.size(); ++t) {
            if (s.regime[t] != Regime::Stratified) continue;
            DayLabel label{i, t, s.dates[t], DayClass::Drastic, LabelProvenance::VolumeRule};
            if (volume_rule_fires(s, t, cfg)) {
                labels.push_back(label);
                continue;
            }
            bool observed = false, drastic = false;
            for (Task task : {Task::Epi, Task::Hyp}) {
                const auto& obs = s.observations(task)[t];
                const auto p = preds[i][t].get(task);
                if (!obs || !p) continue;
                observed = true;
                const double limit = task == Task::Epi ? gamma.epi : gamma.hyp;
                if (std::abs(*p - *obs) > limit) drastic = true;
            }
            if (!observed) continue;
            label.cls = drastic ? DayClass::Drastic : DayClass::Mild;
            label.provenance = LabelProvenance::ErrorRule;
            labels.push_back(label);
        }
    }
    return labels;
}

std::vector<DayLabel> label_drastic_days(const PredictorParams& generator, std::span<const LakeSeries> validation,
                                         const AprilConfig& cfg, std::size_t window_length) {
    std::vector<std::vector<LayerState>> preds;
    preds.reserve(validation.size());
    for (const auto& s : validation) preds.push_back(predict_series(generator, s, window_length));
    return label_from_predictions(preds, validation, cfg);
}

std::vector<double> discriminator_input(const LakeSeries& series, std::size_t day) {
    const auto row = series.feature_row(day);
    std::vector<double> x(row.begin(), row.end());
    x.push_back(series.relative_epi_change(day));
    return x;
}

double discriminator_objective(std::span<const double> probs, std::span<const DayClass> classes) {
    if (probs.size() != classes.size()) throw DomainError("probability and class counts differ");
    double mild = 0.0, drastic = 0.0;
    std::size_t n_mild = 0, n_drastic = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (classes[i] == DayClass::Mild) {
            mild += std::log(probs[i]);
            ++n_mild;
        } else {
            drastic += std::log1p(-probs[i]);
            ++n_drastic;
        }
    }
    return (n_mild ? mild / static_cast<double>(n_mild) : 0.0) +
           (n_drastic ? drastic / static_cast<double>(n_drastic) : 0.0);
}

DiscriminatorParams train_discriminator(std::span<const DayLabel> labels, std::span<const LakeSeries> series,
                                        const AprilConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    std::size_t n_mild = 0, n_drastic = 0;
    for (const auto& l : labels) (l.cls == DayClass::Mild ? n_mild : n_drastic)++;
    if (n_mild == 0 || n_drastic == 0) {
        throw DomainError("discriminator needs both MILD and DRASTIC labels; fall back to the rule-only policy");
    }

    std::vector<std::vector<double>> inputs;
    inputs.reserve(labels.size());
    for (const auto& l : labels) {
        if (l.series >= series.size() || l.day >= series[l.series].size()) {
            throw DomainError("label refers to a day outside the series");
        }
        inputs.push_back(discriminator_input(series[l.series], l.day));
    }
    const std::size_t width = inputs.front().size();

    const bool mild_minority = n_mild < n_drastic;
    const double minority_weight =
        cfg.imbalance_weight.value_or(static_cast<double>(std::max(n_mild, n_drastic)) /
                                      static_cast<double>(std::min(n_mild, n_drastic)));
    std::vector<double> weights;
    double weight_sum = 0.0;
    for (const auto& l : labels) {
        const bool minority = (l.cls == DayClass::Mild) == mild_minority;
        weights.push_back(minority ? minority_weight : 1.0);
        weight_sum += weights.back();
    }
    std::vector<double> coeff(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i) coeff[i] = weights[i] / weight_sum;

    auto params = DiscriminatorParams::initialize(width, cfg.discriminator_hidden, seed);
    const DiscriminatorParams shape = params;
    const LossProgram program = [&](Tape& tape, std::span<const Var> blocks) {
        std::vector<Var> terms;
        terms.reserve(inputs.size());
        for (std::size_t i = 0; i < inputs.size(); ++i) {
            const Var logit = discriminator_logit(tape, shape, blocks, tape.constant(inputs[i]));
            // -log D = softplus(-z) for mild, -log(1 - D) = softplus(z) for drastic
            const Var signed_logit = labels[i].cls == DayClass::Mild ? tape.scale(logit, -1.0) : logit;
            terms.push_back(tape.softplus(signed_logit));
        }
        return tape.linear_combination(terms, coeff, 0.0);
    };

    Adam adam(params.blocks, cfg.discriminator_learning_rate);
    for (std::size_t step = 0; step < cfg.discriminator_updates; ++step) {
        const auto vg = evaluate_with_gradient(program, params.blocks);
        if (!std::isfinite(vg.value)) {
            throw NumericalError("discriminator training diverged at update " + std::to_string(step), step);
        }
        adam.step(params.blocks, vg.gradient);
    }
    return params;
}

DayPolicy classify_days(const DiscriminatorParams* d, const LakeSeries& series, const AprilConfig& cfg,
                        std::size_t series_index) {
    DayPolicy policy;
    policy.k.assign(series.size(), 1);
    for (std::size_t t = 0; t < series.size(); ++t) {
        if (series.regime[t] != Regime::Stratified) continue;
        DayLabel label{series_index, t, series.dates[t], DayClass::Mild, LabelProvenance::Discriminator};
        if (volume_rule_fires(series, t, cfg)) {
            label.cls = DayClass::Drastic;
            label.provenance = LabelProvenance::VolumeRule;
        } else if (d != nullptr && discriminator_forward(*d, discriminator_input(series, t)) < cfg.threshold) {
            label.cls = DayClass::Drastic;
        }
        if (label.cls == DayClass::Drastic) policy.k[t] = cfg.k_drastic;
        policy.labels.push_back(label);
    }
    return policy;
}

DayPolicy classify_days(const DiscriminatorParams& d, const LakeSeries& series, const AprilConfig& cfg,
                        std::size_t series_index) {
    return classify_days(&d, series, cfg, series_index);
}

std::string format_labels(const LakeSeries& series, const DayPolicy& policy) {
    std::ostringstream out;
    out << "date,class,provenance,k\n";
    for (const auto& l : policy.labels) {
        if (l.day >= series.size() || l.day >= policy.k.size()) throw DomainError("label outside the series");
        out << l.date << ',' << class_name(l.cls) << ',' << provenance_name(l.provenance) << ',' << policy.k[l.day]
            << '\n';
    }
    return out.str();
}

void write_labels(const LakeSeries& series, const DayPolicy& policy, const std::filesystem::path& path) {
    csv::write_file_atomic(path, format_labels(series, policy));
}

namespace {

template <class F>
auto in_stage(int stage, F&& body) {
    const std::string prefix = "april stage " + std::to_string(stage) + ": ";
    try {
        return body();
    } catch (const NumericalError& e) {
        throw NumericalError(prefix + e.what(), e.epoch());
    } catch (const ConfigError& e) {
        throw ConfigError(prefix + e.what());
    } catch (const Error& e) {
        throw DomainError(prefix + e.what());
    }
}

}  // namespace

TrainResult train_with_policy(const PredictorParams& stage1, std::span<const LakeSeries> train,
                              std::span<const LakeSeries> validation, const TrainConfig& train_cfg,
                              const AprilConfig& april_cfg, std::span<const DayPolicy> policies) {
    if (policies.size() != train.size()) throw DomainError("one policy per training series expected");
    TrainConfig cfg = train_cfg;
    TrainOptions options;
    if (!april_cfg.retrain_from_scratch) {
        options.initial = stage1;
        if (april_cfg.finetune_epochs > 0) cfg.max_epochs = april_cfg.finetune_epochs;
        options.early_stopping = april_cfg.finetune_early_stopping;
    }
    for (const auto& p : policies) options.policy.push_back(p.k);
    return train_pril(train, validation, cfg, options);
}

AprilResult refine_april(TrainResult stage1, std::span<const LakeSeries> train, std::span<const LakeSeries> validation,
                         const TrainConfig& train_cfg, const AprilConfig& april_cfg) {
    april_cfg.validate();
    AprilResult result;
    result.stage1 = std::move(stage1);
    result.validation_labels = in_stage(2, [&] {
        return label_drastic_days(result.stage1.params, validation, april_cfg, train_cfg.window_length);
    });
    result.discriminator =
        in_stage(2, [&] { return train_discriminator(result.validation_labels, validation, april_cfg, train_cfg.seed); });
    for (std::size_t i = 0; i < train.size(); ++i)
        result.policies.push_back(classify_days(result.discriminator, train[i], april_cfg, i));
    result.final = in_stage(3, [&] {
        return train_with_policy(result.stage1.params, train, validation, train_cfg, april_cfg, result.policies);
    });
    return result;
}

AprilResult train_april(std::span<const LakeSeries> train, std::span<const LakeSeries> validation,
                        const TrainConfig& train_cfg, const AprilConfig& april_cfg) {
    april_cfg.validate();
    TrainConfig daily = train_cfg;
    daily.substep_k = 1;
    auto stage1 = in_stage(1, [&] { return train_pril(train, validation, daily); });
    return refine_april(std::move(stage1), train, validation, train_cfg, april_cfg);
}

}  // namespace lakedo
