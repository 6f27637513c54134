/**
 * @file physics.hpp
 * @brief Two-layer dissolved-oxygen mass balance: forward Euler steps for
 *        the mixed and stratified regimes, entrainment fluxes, sub-daily
 *        multi-step integration and the affine day maps used by the
 *        conservation loss.
 *
 * Concentrations are g m^-3, volumes m^3, exogenous fluxes g m^-3 day^-1
 * relative to the start-of-day volume, time in days.
 *
 * Every step is affine in the previous day's concentrations. Negative
 * outputs are legal and are propagated unchanged unless a caller asks for
 * clamping (only the synthetic ground-truth integrator does).
 */
#pragma once

#include "lakedo/lake_data.hpp"

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace lakedo {

/// DO concentrations on one day. Layers are set on stratified days, the
/// total on mixed days.
struct LayerState {
    std::optional<double> epi;
    std::optional<double> hyp;
    std::optional<double> total;

    std::optional<double> get(Task task) const;
    void set(Task task, double value);
};

/// Concentrations of both layers during a stratified step.
struct LayerPair {
    double epi = 0.0;
    double hyp = 0.0;
};

/// Exogenous flux rates of both layers (g m^-3 day^-1).
struct ExoFluxes {
    double epi = 0.0;
    double hyp = 0.0;
};

/// Start-of-step and end-of-step layer volumes.
struct LayerVolumes {
    double epi_prev = 0.0;
    double epi_cur = 0.0;
    double hyp_prev = 0.0;
    double hyp_cur = 0.0;
};

struct SubstepConfig {
    int k = 12;  // two-hour substeps
    double dt() const noexcept { return 1.0 / static_cast<double>(k); }
};

/// Concentration increments from thermocline motion. Both transport the
/// same mass: epi * V_epi_target + hyp * V_hyp_target == 0.
struct EntrainmentFluxes {
    double epi = 0.0;
    double hyp = 0.0;
};

double simulate_mixed_step(double y_prev_total, double f_exo_total, double dt);

/// Daily entrainment. The source concentration is the hypolimnion when the
/// epilimnion grows or holds, the epilimnion when it shrinks. Fluxes are the
/// signed per-layer volume change times the source, over the current volume.
EntrainmentFluxes entrainment_fluxes_daily(const LayerVolumes& v, double y_epi_prev, double y_hyp_prev);

LayerPair simulate_stratified_step(LayerPair prev, ExoFluxes f, const LayerVolumes& v, double dt);

/// Growing epilimnion: y_hyp + f_hyp*dt*V_hyp_prev/V_hyp_cur.
double closed_form_hyp_shrink(double y_hyp_prev, double f_exo_hyp, double v_hyp_prev, double v_hyp_cur,
                              double dt);
/// Shrinking epilimnion: y_epi + f_epi*dt*V_epi_prev/V_epi_cur.
double closed_form_epi_shrink(double y_epi_prev, double f_exo_epi, double v_epi_prev, double v_epi_cur,
                              double dt);

/// k+1 linearly interpolated volumes with exact endpoints.
std::vector<double> interpolate_volumes(double v_prev, double v_cur, int k);

EntrainmentFluxes entrainment_fluxes_substep(double dv_epi, double y_src, double v_epi_next,
                                             double v_hyp_next);

struct SubstepOutcome {
    LayerPair state;
    bool clamped = false;  // a substep value was raised to zero
};

/// Sub-daily Euler scheme: k substeps over one day with interpolated
/// volumes, exogenous mass f*dt*V_prev(start of day) per substep and the
/// running substep concentration as entrainment source.
LayerPair multi_step_euler(LayerPair prev, ExoFluxes f, const LayerVolumes& v, SubstepConfig cfg);

/// Same scheme with optional clamping of each substep result at zero.
SubstepOutcome integrate_substeps(LayerPair prev, ExoFluxes f, const LayerVolumes& v, SubstepConfig cfg,
                                  bool clamp_at_zero);

/// Signed mass error of a stratified step over total time `dt`:
/// (out . V_cur) - (prev . V_prev) - (f . V_prev) * dt.
double mass_balance_residual(LayerPair out, LayerPair prev, ExoFluxes f, const LayerVolumes& v, double dt);

/// One-day-ahead simulation of day `t` (t >= 1) seeded from `prev`, the
/// state of day t-1. `k` is the substep count for stratified days.
///
/// Regime transitions: entering stratification both layers start from the
/// previous total and advance by the previous day's whole-column flux with
/// no entrainment; leaving it the total starts from the volume-weighted
/// layer mixture of the previous day.
LayerState simulate_day(const LakeSeries& series, std::size_t t, const LayerState& prev, int k,
                        bool clamp_at_zero = false, bool* clamped = nullptr);

/// Simulated states for every day; element 0 is empty (no day-ahead value).
/// Each day is seeded from `preds[t-1]`, never from the simulated chain.
std::vector<LayerState> simulate_trajectory(const LakeSeries& series, std::span<const LayerState> preds,
                                            std::span<const int> k);

/// Convenience: every day uses the same substep count.
std::vector<LayerState> simulate_trajectory(const LakeSeries& series, std::span<const LayerState> preds,
                                            int k);

/// simulate_day written as an affine map of the previous day's
/// (epi, hyp, total). Rows are output tasks; `present[o]` says whether the
/// day defines that output.
struct AffineDayMap {
    std::array<bool, 3> present{};
    std::array<std::array<double, 3>, 3> coeff{};
    std::array<double, 3> constant{};
};

AffineDayMap linearize_day(const LakeSeries& series, std::size_t t, int k);

/// Maps for days 1..T-1 (index 0 is a placeholder with nothing present).
std::vector<AffineDayMap> linearize_trajectory(const LakeSeries& series, std::span<const int> k);

}  // namespace lakedo
