/**
 * @file eval.hpp
 * @brief RMSE, DO mass inconsistency, multi-seed comparison tables and
 *        plot-ready time-series export.
 *
 * Mass inconsistency is the mean absolute one-day-ahead balance residual
 * |y_hat_t - y_ref_t|, where y_ref_t is simulated from y_hat_{t-1} with a
 * fine reference substep count on stratified days.
 */
#pragma once

#include "lakedo/lake_data.hpp"
#include "lakedo/physics.hpp"

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lakedo {

inline constexpr int kReferenceSubsteps = 192;

/// sqrt(mean((pred - obs)^2)). Throws DomainError when empty or mismatched.
double rmse(std::span<const double> preds, std::span<const double> obs);

/// RMSE of one task over the observed days of a series.
double rmse(std::span<const LayerState> preds, const LakeSeries& series, Task task);

struct InconsistencyOptions {
    int reference_k = kReferenceSubsteps;
    bool daily_reference = false;  // use k = 1 instead of reference_k
};

/// Per-task mean |y_hat_t - y_ref_t| over days 2..T (NaN if a task has no day).
TaskValues mass_inconsistency(std::span<const LayerState> preds, const LakeSeries& series,
                              const InconsistencyOptions& options = {});

/// Same metric restricted to the given 0-based rows (rows < 1 are skipped).
TaskValues mass_inconsistency_on(std::span<const LayerState> preds, const LakeSeries& series,
                                 std::span<const std::size_t> rows, const InconsistencyOptions& options = {});

/// Metrics of one trained model (one seed).
struct SeedMetrics {
    TaskValues rmse;
    TaskValues inconsistency;
};

struct EvalReport {
    std::string model;
    std::size_t seeds = 0;
    TaskValues rmse_mean;
    TaskValues rmse_std;  // sample standard deviation; 0 for one seed
    TaskValues inconsistency;
};

EvalReport aggregate_report(std::string model, std::span<const SeedMetrics> runs);

struct ComparisonTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::string to_csv() const;
};

/// Rows are models; columns are model then, per task, rmse_mean, rmse_std,
/// inconsistency.
ComparisonTable compare_models(std::span<const EvalReport> reports);

/// Plot-ready CSV
/// date,pred_*,sim_*,obs_*,true_* for epi, hyp and total; empty cells for
/// absent values. `truth` may be empty.
std::string format_timeseries(const LakeSeries& series, std::span<const LayerState> preds,
                              std::span<const LayerState> simulated, std::span<const LayerState> truth);
void export_timeseries(const LakeSeries& series, std::span<const LayerState> preds,
                       std::span<const LayerState> simulated, std::span<const LayerState> truth,
                       const std::filesystem::path& path);

}  // namespace lakedo
