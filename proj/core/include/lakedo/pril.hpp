/**
 * @file pril.hpp
 * @brief Process-guided training: the sparse supervised loss, the
 *        thresholded mass-conservation loss, their weighted sum, and the
 *        windowed training loop.
 */
#pragma once

#include "lakedo/autodiff.hpp"
#include "lakedo/lake_data.hpp"
#include "lakedo/networks.hpp"
#include "lakedo/physics.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lakedo {

/// Threshold values searched for the conservation tolerance.
inline constexpr double kTauGrid[] = {0.0, 0.01, 0.05, 0.1, 0.5};
inline constexpr double kMaxLambda = 1000.0;

struct TrainConfig {
    double lambda_mc_epi = 1.0;
    double lambda_mc_hyp = 1.0;
    double lambda_mc_total = 1.0;
    double tau_mc = 0.01;
    double learning_rate = 0.01;
    std::size_t batch_size = 8;       // windows per update
    std::size_t window_length = 365;  // days per training window
    std::size_t validation_windows = 1;
    std::size_t max_epochs = 300;
    std::size_t patience = 40;
    std::size_t hidden_size = 20;
    int substep_k = 1;  // constant policy used when no per-day policy is given
    std::uint64_t seed = 0;

    double lambda(Task task) const noexcept;
    void validate() const;
};

struct SupervisedLoss {
    double value = 0.0;
    bool empty_mask = false;  // no observation at all: value is 0
};

/// (1/|B|) sum over observed (day, task) pairs of (y - y_hat)^2.
SupervisedLoss supervised_loss(std::span<const LayerState> preds, const LakeSeries& series);

struct ConservationLoss {
    TaskValues value;                   // 0 for tasks with no defined day
    std::array<std::size_t, 3> count{};  // defined residuals per task
};

/// Per task, mean over days where both the prediction and the simulation
/// exist of max(0, |y_hat - y_sim| - tau). Day 1 never has a simulation.
ConservationLoss mass_conservation_loss(std::span<const LayerState> preds,
                                        std::span<const LayerState> simulated, double tau);

struct LossBreakdown {
    double supervised = 0.0;
    TaskValues conservation;
    double total = 0.0;
    bool empty_mask = false;
};

/// L = L_ML + sum_task lambda_task * L_MC_task with the simulation from the
/// given per-day substep policy.
LossBreakdown combined_loss(std::span<const LayerState> preds, const LakeSeries& series, const TrainConfig& cfg,
                            std::span<const int> k);

struct LossNodes {
    Var total;
    Var supervised;
    std::array<Var, 3> conservation;
    bool empty_mask = false;
};

/// Tape version. `heads` holds one (epi, hyp, total) node per day and
/// `maps` the affine day maps of the series under the chosen policy.
LossNodes build_combined_loss(Tape& tape, std::span<const Var> heads, const LakeSeries& series,
                              std::span<const AffineDayMap> maps, const TrainConfig& cfg);

struct TrainHistory {
    std::vector<double> loss_ml;
    std::vector<double> loss_mc_epi;
    std::vector<double> loss_mc_hyp;
    std::vector<double> loss_mc_total;
    std::vector<double> val_rmse_epi;  // NaN when the validation set has no such observation
    std::vector<double> val_rmse_hyp;
    std::vector<double> val_rmse_total;

    std::size_t size() const noexcept { return loss_ml.size(); }
    bool operator==(const TrainHistory&) const = default;
};

/// CSV: epoch,loss_ml,loss_mc_epi,loss_mc_hyp,loss_mc_total,val_rmse_epi,val_rmse_hyp,val_rmse_total
std::string format_history(const TrainHistory& history);
void write_history(const TrainHistory& history, const std::filesystem::path& path);

struct TrainResult {
    PredictorParams params;  // best on validation
    TrainHistory history;
    std::size_t best_epoch = 0;  // 0-based index into history
};

struct TrainOptions {
    /// Fine-tune from these weights instead of a fresh initialization.
    std::optional<PredictorParams> initial;
    /// Per training series, per day substep counts; empty means
    /// cfg.substep_k everywhere.
    std::vector<std::vector<int>> policy;
    /// When false, run all epochs and return the final parameters.
    bool early_stopping = true;
};

/// Adaptive-moment training over contiguous windows with early stopping on
/// pooled validation RMSE. Throws NumericalError on a non-finite loss.
TrainResult train_pril(std::span<const LakeSeries> train, std::span<const LakeSeries> validation,
                       const TrainConfig& cfg, const TrainOptions& options = {});

/// Validation RMSE per task (pooled over series) plus the pooled value.
struct ValidationScore {
    TaskValues rmse;
    double pooled = 0.0;  // NaN when there is no observation
};

ValidationScore validation_score(const PredictorParams& params, std::span<const LakeSeries> validation,
                                 std::size_t window_length);

struct DatasetSplit {
    std::vector<LakeSeries> train;
    std::vector<LakeSeries> validation;
};

/// The last `validation_windows` windows of each lake are held out.
DatasetSplit split_dataset(std::span<const LakeSeries> lakes, std::size_t window_length,
                           std::size_t validation_windows);

}  // namespace lakedo
