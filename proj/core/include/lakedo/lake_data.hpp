/**
 * @file lake_data.hpp
 * @brief Per-day lake time series: data model, CSV I/O, validation and
 *        regime segmentation.
 *
 * A LakeSeries holds one row per day. Layer volumes, layer fluxes and layer
 * observations exist only on stratified days; the total observation exists
 * only on mixed days. Exogenous fluxes are concentration rates
 * (g m^-3 day^-1) relative to the start-of-day volume and are already the
 * sum of atmospheric exchange, net ecosystem production and sediment demand.
 */
#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lakedo {

enum class Regime { Mixed, Stratified };

/// Prediction tasks. Epi/Hyp apply to stratified days, Total to mixed days.
enum class Task { Epi = 0, Hyp = 1, Total = 2 };

inline constexpr Task kAllTasks[] = {Task::Epi, Task::Hyp, Task::Total};

const char* task_name(Task task) noexcept;

/// One number per task; NaN marks an undefined entry.
struct TaskValues {
    std::array<double, 3> values{};

    double& operator[](Task task) noexcept { return values[static_cast<std::size_t>(task)]; }
    double operator[](Task task) const noexcept { return values[static_cast<std::size_t>(task)]; }
};
char regime_code(Regime regime) noexcept;

using OptionalColumn = std::vector<std::optional<double>>;

struct LakeSeries {
    std::string lake_id;
    std::vector<int> dates;
    std::size_t feature_count = 0;
    std::vector<double> features;  // row-major, size() x feature_count
    std::vector<Regime> regime;
    std::vector<double> v_total;
    OptionalColumn v_epi;
    OptionalColumn v_hyp;
    OptionalColumn f_exo_total;
    OptionalColumn f_exo_epi;
    OptionalColumn f_exo_hyp;
    OptionalColumn obs_total;
    OptionalColumn obs_epi;
    OptionalColumn obs_hyp;

    std::size_t size() const noexcept { return dates.size(); }
    std::span<const double> feature_row(std::size_t day) const;

    const OptionalColumn& observations(Task task) const;
    OptionalColumn& observations(Task task);

    /// Resize every column to `days` rows with absent optional values.
    void resize(std::size_t days, std::size_t features_per_day);

    /// Copy of rows [begin, end).
    LakeSeries slice(std::size_t begin, std::size_t end) const;

    /// Exogenous flux acting on the whole water column on `day`. Uses the
    /// stored total when present, otherwise the volume-weighted layer fluxes.
    double total_flux(std::size_t day) const;

    /// Relative day-over-day epilimnion volume change |dV|/V_prev; 0 when
    /// either day is not stratified or day == 0.
    double relative_epi_change(std::size_t day) const;
};

/// Set B of observed day indices (0-based rows) per task.
struct ObservationMask {
    std::vector<std::size_t> epi;
    std::vector<std::size_t> hyp;
    std::vector<std::size_t> total;

    const std::vector<std::size_t>& days(Task task) const;
    std::size_t size() const noexcept { return epi.size() + hyp.size() + total.size(); }
};

ObservationMask observation_mask(const LakeSeries& series);

struct ValidationIssue {
    int date;
    std::string message;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;
    bool ok() const noexcept { return issues.empty(); }
};

ValidationReport validate_series(const LakeSeries& series);

struct RegimeSpan {
    int start_day;
    int end_day;
    Regime regime;

    bool operator==(const RegimeSpan&) const = default;
};

/// Maximal contiguous runs of equal regime, ordered, covering every day once.
std::vector<RegimeSpan> segment_regimes(const LakeSeries& series);

/// Parse the lake CSV format. Throws SchemaError, OrderingError or
/// DomainError (with the 1-based data row) on malformed input.
LakeSeries load_series(const std::filesystem::path& path);
LakeSeries parse_series(const std::string& csv_text, const std::string& lake_id);

/// Render with 17 significant digits; absent values are empty cells.
std::string format_series(const LakeSeries& series);
void write_series(const LakeSeries& series, const std::filesystem::path& path);

}  // namespace lakedo
