/**
 * @file april.hpp
 * @brief Adaptive substepping: drastic-day labeling, the day discriminator,
 *        per-day substep policies and the three-stage training pipeline.
 */
#pragma once

#include "lakedo/lake_data.hpp"
#include "lakedo/networks.hpp"
#include "lakedo/pril.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lakedo {

struct AprilConfig {
    double gamma_factor = 1.5;
    double volume_change_threshold = 0.20;
    int k_drastic = 12;
    double threshold = 0.5;  // D(x) below this is drastic
    std::vector<std::size_t> discriminator_hidden{32, 32};
    /// Weight of the minority class in the cross-entropy; unset means
    /// |majority| / |minority|.
    std::optional<double> imbalance_weight;
    std::size_t discriminator_updates = 2000;
    double discriminator_learning_rate = 0.01;
    bool per_layer_gamma = false;
    bool retrain_from_scratch = false;
    std::size_t finetune_epochs = 50;   // 0 keeps the training config's max_epochs
    /// Early stopping during the fine-tune; off means a fixed epoch budget.
    bool finetune_early_stopping = false;

    void validate() const;
};

enum class DayClass { Mild, Drastic };
enum class LabelProvenance { ErrorRule, VolumeRule, Discriminator };

const char* class_name(DayClass cls) noexcept;
const char* provenance_name(LabelProvenance provenance) noexcept;

struct DayLabel {
    std::size_t series = 0;  // index into the labeled series list
    std::size_t day = 0;     // 0-based row
    int date = 0;
    DayClass cls = DayClass::Mild;
    LabelProvenance provenance = LabelProvenance::ErrorRule;

    bool operator==(const DayLabel&) const = default;
};

/// Error thresholds derived from validation residuals.
struct ErrorThreshold {
    double epi = 0.0;
    double hyp = 0.0;
};

/// gamma_factor times the validation RMSE pooled over epi and hyp residuals
/// (or per layer when cfg.per_layer_gamma). Throws DomainError when no
/// stratified observation exists.
ErrorThreshold error_threshold(std::span<const std::vector<LayerState>> preds,
                               std::span<const LakeSeries> validation, const AprilConfig& cfg);

/// True when the relative epilimnion volume change of `day` exceeds the
/// configured threshold.
bool volume_rule_fires(const LakeSeries& series, std::size_t day, const AprilConfig& cfg);

/// Labels stratified days from given predictions: volume-rule days are
/// DRASTIC, observed days with a residual strictly above the threshold in
/// either layer are DRASTIC, other observed days MILD. Unobserved days
/// without a volume-rule hit stay unlabeled.
std::vector<DayLabel> label_from_predictions(std::span<const std::vector<LayerState>> preds,
                                             std::span<const LakeSeries> validation, const AprilConfig& cfg);

/// Runs the generator over the validation series and labels them.
std::vector<DayLabel> label_drastic_days(const PredictorParams& generator, std::span<const LakeSeries> validation,
                                         const AprilConfig& cfg, std::size_t window_length);

/// Features of `day` followed by the relative epilimnion volume change.
std::vector<double> discriminator_input(const LakeSeries& series, std::size_t day);

/// E_mild[log D] + E_drastic[log(1 - D)] with D = probability of mild.
double discriminator_objective(std::span<const double> probabilities, std::span<const DayClass> classes);

/// Class-weighted binary cross-entropy minimized with Adam, full batch.
/// Throws DomainError when only one class is present.
DiscriminatorParams train_discriminator(std::span<const DayLabel> labels, std::span<const LakeSeries> series,
                                        const AprilConfig& cfg, std::uint64_t seed);

struct DayPolicy {
    std::vector<int> k;            // substeps per day
    std::vector<DayLabel> labels;  // one per stratified day
};

/// k = k_drastic on stratified days with D(x) < threshold or a volume-rule
/// hit, 1 elsewhere. Without a discriminator only the volume rule applies.
DayPolicy classify_days(const DiscriminatorParams* discriminator, const LakeSeries& series, const AprilConfig& cfg,
                        std::size_t series_index = 0);
DayPolicy classify_days(const DiscriminatorParams& discriminator, const LakeSeries& series, const AprilConfig& cfg,
                        std::size_t series_index = 0);

/// CSV `date,class,provenance,k` for the labeled days of a policy.
std::string format_labels(const LakeSeries& series, const DayPolicy& policy);
void write_labels(const LakeSeries& series, const DayPolicy& policy, const std::filesystem::path& path);

struct AprilResult {
    TrainResult stage1;
    std::vector<DayLabel> validation_labels;
    DiscriminatorParams discriminator;
    std::vector<DayPolicy> policies;  // per training series
    TrainResult final;
};

/// Stages 2 and 3 on top of an already trained stage-1 generator.
AprilResult refine_april(TrainResult stage1, std::span<const LakeSeries> train, std::span<const LakeSeries> validation,
                         const TrainConfig& train_cfg, const AprilConfig& april_cfg);

/// Stage 3 alone: trains with the given per-series policies, either from
/// `stage1` (fine-tune) or from scratch.
TrainResult train_with_policy(const PredictorParams& stage1, std::span<const LakeSeries> train,
                              std::span<const LakeSeries> validation, const TrainConfig& train_cfg,
                              const AprilConfig& april_cfg, std::span<const DayPolicy> policies);

AprilResult train_april(std::span<const LakeSeries> train, std::span<const LakeSeries> validation,
                        const TrainConfig& train_cfg, const AprilConfig& april_cfg);

}  // namespace lakedo
