/**
 * @file synthetic.hpp
 * @brief Synthetic two-layer lakes with known dissolved-oxygen ground
 *        truth, sparse noisy observations and injected thermocline
 *        collapses.
 *
 * Truth is integrated with the same mass balance as the physics module at
 * a fine substep count, clamping at zero. Exogenous fluxes are seasonal:
 * the epilimnion relaxes toward a seasonal saturation value plus net
 * production, the hypolimnion loses oxygen at a saturating (Michaelis-Menten)
 * demand rate.
 */
#pragma once

#include "lakedo/lake_data.hpp"
#include "lakedo/physics.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace lakedo {

struct GenConfig {
    std::size_t lakes = 4;
    std::size_t years = 3;
    int stratified_start = 135;  // day of year, inclusive
    int stratified_end = 314;

    // Thermocline: epilimnion fraction of the total volume.
    double epi_fraction_mean = 0.4;
    double epi_fraction_drift = 0.2;   // rise from early to late summer
    double epi_fraction_noise = 0.004;  // daily random-walk step
    double epi_fraction_cap = 0.75;
    double epi_fraction_floor = 0.1;
    double shock_probability = 0.01;
    double shock_magnitude = 0.3;  // relative epilimnion jump

    // Exogenous fluxes (g m^-3 day^-1).
    double saturation_mean = 10.0;
    double saturation_amplitude = 2.0;
    double seasonal_phase = 200.0;  // day of year of minimum saturation
    double reaeration_rate = 0.3;   // day^-1
    double epi_production_amplitude = 0.3;
    double hyp_demand_amplitude = 0.15;
    double hyp_half_saturation = 1.0;
    double flux_noise = 0.03;

    double sparsity = 0.15;
    double observation_sigma = 0.3;

    std::size_t scenario_a_per_year = 1;
    double scenario_a_ratio = 10.0;
    double scenario_a_flux = -2.0;
    int scenario_a_offset = 110;  // earliest day after stratification onset
    /// Scenario A waits for the first day whose previous hypolimnion DO is at
    /// most this value, or the last day of the span if none qualifies.
    double scenario_a_max_hyp_do = 0.3;
    std::size_t scenario_b_per_year = 1;
    double scenario_b_ratio = 3.0;
    double scenario_b_flux = 0.1;
    int scenario_b_offset = 40;

    std::size_t noise_channels = 2;
    int truth_substeps = 192;
    double volume_mean = 1.0e6;  // m^3
    std::uint64_t seed = 0;

    void validate() const;
};

struct GroundTruth {
    std::vector<LayerState> state;
    std::vector<std::string> tag;  // "", "A", "B" or "shock"
    std::vector<bool> clamped;
};

struct SyntheticLake {
    LakeSeries series;
    GroundTruth truth;
};

/// Lake `index` of the dataset; the random stream depends on (seed, index) only.
SyntheticLake generate_lake(const GenConfig& cfg, std::size_t index);
std::vector<SyntheticLake> generate_dataset(const GenConfig& cfg);

/// Forward integration of the stored fluxes from `initial` (the state of
/// day 0) with `k` substeps on stratified days and clamping at zero.
GroundTruth integrate_truth(const LakeSeries& series, const LayerState& initial, int k);

/// Hypolimnion collapse on `day`: V_hyp drops by `shrink_ratio` relative to
/// the previous day for the rest of the stratified span, the epilimnion
/// absorbs the difference, the hypolimnion flux of day-1 becomes `f_exo_hyp`
/// and truth is re-integrated from `day`.
void inject_scenario_a(LakeSeries& series, GroundTruth& truth, std::size_t day, double shrink_ratio,
                       double f_exo_hyp, int k = 192);
/// Epilimnion collapse, symmetric to scenario A.
void inject_scenario_b(LakeSeries& series, GroundTruth& truth, std::size_t day, double shrink_ratio,
                       double f_exo_epi, int k = 192);

/// Bernoulli(sparsity) day selection with additive Gaussian noise clamped at
/// zero. Stratified days observe both layers, mixed days the total.
void sparsify_observations(LakeSeries& series, const GroundTruth& truth, double sparsity, double sigma,
                           std::uint64_t seed);

/// CSV `date,true_epi,true_hyp,true_total,scenario_tag`.
std::string format_truth(const LakeSeries& series, const GroundTruth& truth);
void write_truth(const LakeSeries& series, const GroundTruth& truth, const std::filesystem::path& path);
GroundTruth read_truth(const std::filesystem::path& path);

}  // namespace lakedo
