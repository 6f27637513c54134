#include "lakedo/physics.hpp"

#include "lakedo/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lakedo {

namespace {

constexpr double kVolumeChangeTolerance = 1e-9;

void require_finite(double x, const char* what) {
    if (!std::isfinite(x)) throw DomainError(std::string(what) + " is not finite");
}

void require_positive_dt(double dt) {
    require_finite(dt, "time step");
    if (dt <= 0.0) throw DomainError("time step must be > 0");
}

void check_volumes(const LayerVolumes& v) {
    for (double x : {v.epi_prev, v.epi_cur, v.hyp_prev, v.hyp_cur}) {
        require_finite(x, "layer volume");
        if (x <= 0.0) throw DomainError("layer volumes must be > 0");
    }
    const double d_epi = v.epi_cur - v.epi_prev;
    const double d_hyp = v.hyp_cur - v.hyp_prev;
    const double scale = std::max({v.epi_prev, v.epi_cur, v.hyp_prev, v.hyp_cur});
    if (std::abs(d_epi + d_hyp) > kVolumeChangeTolerance * scale) {
        throw DomainError("epilimnion and hypolimnion volume changes do not cancel");
    }
}

bool epi_grows(const LayerVolumes& v) { return v.epi_cur >= v.epi_prev; }

}  // namespace

std::optional<double> LayerState::get(Task task) const {
    switch (task) {
        case Task::Epi: return epi;
        case Task::Hyp: return hyp;
        case Task::Total: break;
    }
    return total;
}

void LayerState::set(Task task, double value) {
    switch (task) {
        case Task::Epi: epi = value; return;
        case Task::Hyp: hyp = value; return;
        case Task::Total: total = value; return;
    }
}

double simulate_mixed_step(double y_prev_total, double f_exo_total, double dt) {
    require_finite(y_prev_total, "previous concentration");
    require_finite(f_exo_total, "exogenous flux");
    require_positive_dt(dt);
    return y_prev_total + f_exo_total * dt;
}

EntrainmentFluxes entrainment_fluxes_daily(const LayerVolumes& v, double y_epi_prev, double y_hyp_prev) {
    check_volumes(v);
    require_finite(y_epi_prev, "epilimnion concentration");
    require_finite(y_hyp_prev, "hypolimnion concentration");
    const double source = epi_grows(v) ? y_hyp_prev : y_epi_prev;
    return {(v.epi_cur - v.epi_prev) * source / v.epi_cur, (v.hyp_cur - v.hyp_prev) * source / v.hyp_cur};
}

LayerPair simulate_stratified_step(LayerPair prev, ExoFluxes f, const LayerVolumes& v, double dt) {
    require_positive_dt(dt);
    require_finite(f.epi, "epilimnion flux");
    require_finite(f.hyp, "hypolimnion flux");
    const auto ent = entrainment_fluxes_daily(v, prev.epi, prev.hyp);
    return {(prev.epi + f.epi * dt) * (v.epi_prev / v.epi_cur) + ent.epi,
            (prev.hyp + f.hyp * dt) * (v.hyp_prev / v.hyp_cur) + ent.hyp};
}

double closed_form_hyp_shrink(double y_hyp_prev, double f_exo_hyp, double v_hyp_prev, double v_hyp_cur,
                              double dt) {
    require_positive_dt(dt);
    require_finite(y_hyp_prev, "hypolimnion concentration");
    require_finite(f_exo_hyp, "hypolimnion flux");
    if (!(v_hyp_prev > 0.0) || !(v_hyp_cur > 0.0)) throw DomainError("volumes must be > 0");
    if (v_hyp_cur > v_hyp_prev) {
        throw DomainError("closed form requires a shrinking (or constant) hypolimnion");
    }
    return y_hyp_prev + f_exo_hyp * dt * (v_hyp_prev / v_hyp_cur);
}

double closed_form_epi_shrink(double y_epi_prev, double f_exo_epi, double v_epi_prev, double v_epi_cur,
                              double dt) {
    require_positive_dt(dt);
    require_finite(y_epi_prev, "epilimnion concentration");
    require_finite(f_exo_epi, "epilimnion flux");
    if (!(v_epi_prev > 0.0) || !(v_epi_cur > 0.0)) throw DomainError("volumes must be > 0");
    if (v_epi_cur >= v_epi_prev) throw DomainError("closed form requires a shrinking epilimnion");
    return y_epi_prev + f_exo_epi * dt * (v_epi_prev / v_epi_cur);
}

std::vector<double> interpolate_volumes(double v_prev, double v_cur, int k) {
    if (k < 1) throw DomainError("substep count must be >= 1");
    require_finite(v_prev, "volume");
    require_finite(v_cur, "volume");
    if (v_prev <= 0.0 || v_cur <= 0.0) throw DomainError("volumes must be > 0");
    std::vector<double> out(static_cast<std::size_t>(k) + 1);
    const double step = (v_cur - v_prev) / k;
    for (int i = 0; i <= k; ++i) out[i] = v_prev + step * i;
    out.front() = v_prev;
    out.back() = v_cur;
    for (double x : out) {
        if (x <= 0.0) throw DomainError("interpolated volume collapsed to a non-positive value");
    }
    return out;
}

EntrainmentFluxes entrainment_fluxes_substep(double dv_epi, double y_src, double v_epi_next,
                                             double v_hyp_next) {
    require_finite(dv_epi, "volume change");
    require_finite(y_src, "source concentration");
    require_finite(v_epi_next, "volume");
    require_finite(v_hyp_next, "volume");
    if (v_epi_next <= 0.0 || v_hyp_next <= 0.0) throw DomainError("volumes must be > 0");
    return {dv_epi * y_src / v_epi_next, -dv_epi * y_src / v_hyp_next};
}

SubstepOutcome integrate_substeps(LayerPair prev, ExoFluxes f, const LayerVolumes& v, SubstepConfig cfg,
                                  bool clamp_at_zero) {
    check_volumes(v);
    require_finite(prev.epi, "epilimnion concentration");
    require_finite(prev.hyp, "hypolimnion concentration");
    require_finite(f.epi, "epilimnion flux");
    require_finite(f.hyp, "hypolimnion flux");
    const auto epi_v = interpolate_volumes(v.epi_prev, v.epi_cur, cfg.k);
    const auto hyp_v = interpolate_volumes(v.hyp_prev, v.hyp_cur, cfg.k);
    const double dt = cfg.dt();
    const double dv_epi = (v.epi_cur - v.epi_prev) / cfg.k;
    const bool from_hyp = epi_grows(v);
    const double exo_mass_epi = f.epi * dt * v.epi_prev;
    const double exo_mass_hyp = f.hyp * dt * v.hyp_prev;

    SubstepOutcome out{prev, false};
    auto& y = out.state;
    for (int i = 0; i < cfg.k; ++i) {
        const double source = from_hyp ? y.hyp : y.epi;
        const auto ent = entrainment_fluxes_substep(dv_epi, source, epi_v[i + 1], hyp_v[i + 1]);
        const double mass_epi = y.epi * epi_v[i] + exo_mass_epi;
        const double mass_hyp = y.hyp * hyp_v[i] + exo_mass_hyp;
        y.epi = mass_epi / epi_v[i + 1] + ent.epi;
        y.hyp = mass_hyp / hyp_v[i + 1] + ent.hyp;
        if (clamp_at_zero) {
            if (y.epi < 0.0) {
                y.epi = 0.0;
                out.clamped = true;
            }
            if (y.hyp < 0.0) {
                y.hyp = 0.0;
                out.clamped = true;
            }
        }
    }
    return out;
}

LayerPair multi_step_euler(LayerPair prev, ExoFluxes f, const LayerVolumes& v, SubstepConfig cfg) {
    return integrate_substeps(prev, f, v, cfg, false).state;
}

double mass_balance_residual(LayerPair out, LayerPair prev, ExoFluxes f, const LayerVolumes& v, double dt) {
    return (out.epi * v.epi_cur + out.hyp * v.hyp_cur) - (prev.epi * v.epi_prev + prev.hyp * v.hyp_prev) -
           (f.epi * v.epi_prev + f.hyp * v.hyp_prev) * dt;
}

namespace {

double need(const std::optional<double>& x, const char* what, int date) {
    if (!x) throw DomainError(std::string("missing ") + what + " on date " + std::to_string(date));
    return *x;
}

}  // namespace

LayerState simulate_day(const LakeSeries& s, std::size_t t, const LayerState& prev, int k,
                        bool clamp_at_zero, bool* clamped) {
    if (t == 0 || t >= s.size()) throw DomainError("simulate_day needs 1 <= t < T");
    if (k < 1) throw DomainError("substep count must be >= 1");
    const std::size_t p = t - 1;
    const int date = s.dates[t];
    LayerState out;
    bool did_clamp = false;
    auto clamp = [&](double x) {
        if (clamp_at_zero && x < 0.0) {
            did_clamp = true;
            return 0.0;
        }
        return x;
    };

    if (s.regime[t] == Regime::Mixed) {
        double seed = 0.0;
        if (s.regime[p] == Regime::Mixed) {
            seed = need(prev.total, "previous total concentration", date);
        } else {
            const double ve = need(s.v_epi[p], "epilimnion volume", s.dates[p]);
            const double vh = need(s.v_hyp[p], "hypolimnion volume", s.dates[p]);
            seed = (need(prev.epi, "previous epilimnion concentration", date) * ve +
                    need(prev.hyp, "previous hypolimnion concentration", date) * vh) /
                   s.v_total[p];
        }
        out.total = clamp(simulate_mixed_step(seed, s.total_flux(p), 1.0));
    } else if (s.regime[p] == Regime::Mixed) {
        const double seed = need(prev.total, "previous total concentration", date);
        const double y = simulate_mixed_step(seed, s.total_flux(p), 1.0);
        out.epi = clamp(y);
        out.hyp = clamp(y);
    } else {
        const LayerPair y{need(prev.epi, "previous epilimnion concentration", date),
                          need(prev.hyp, "previous hypolimnion concentration", date)};
        const ExoFluxes f{need(s.f_exo_epi[p], "epilimnion flux", s.dates[p]),
                          need(s.f_exo_hyp[p], "hypolimnion flux", s.dates[p])};
        const LayerVolumes v{need(s.v_epi[p], "epilimnion volume", s.dates[p]),
                             need(s.v_epi[t], "epilimnion volume", date),
                             need(s.v_hyp[p], "hypolimnion volume", s.dates[p]),
                             need(s.v_hyp[t], "hypolimnion volume", date)};
        LayerPair next;
        if (k == 1 && !clamp_at_zero) {
            next = simulate_stratified_step(y, f, v, 1.0);
        } else {
            const auto r = integrate_substeps(y, f, v, SubstepConfig{k}, clamp_at_zero);
            next = r.state;
            did_clamp = did_clamp || r.clamped;
        }
        out.epi = next.epi;
        out.hyp = next.hyp;
    }
    if (clamped) *clamped = did_clamp;
    return out;
}

std::vector<LayerState> simulate_trajectory(const LakeSeries& s, std::span<const LayerState> preds,
                                            std::span<const int> k) {
    if (preds.size() != s.size()) throw DomainError("prediction count does not match series length");
    if (k.size() != s.size()) throw DomainError("substep policy length does not match series length");
    std::vector<LayerState> out(s.size());
    for (std::size_t t = 1; t < s.size(); ++t) out[t] = simulate_day(s, t, preds[t - 1], k[t]);
    return out;
}

std::vector<LayerState> simulate_trajectory(const LakeSeries& s, std::span<const LayerState> preds, int k) {
    const std::vector<int> policy(s.size(), k);
    return simulate_trajectory(s, preds, policy);
}

AffineDayMap linearize_day(const LakeSeries& s, std::size_t t, int k) {
    AffineDayMap map;
    const LayerState zero{0.0, 0.0, 0.0};
    const auto base = simulate_day(s, t, zero, k);
    for (Task o : kAllTasks) {
        const auto oi = static_cast<std::size_t>(o);
        map.present[oi] = base.get(o).has_value();
        if (map.present[oi]) map.constant[oi] = *base.get(o);
    }
    for (Task in : kAllTasks) {
        LayerState unit = zero;
        unit.set(in, 1.0);
        const auto probe = simulate_day(s, t, unit, k);
        for (Task o : kAllTasks) {
            const auto oi = static_cast<std::size_t>(o);
            if (map.present[oi]) map.coeff[oi][static_cast<std::size_t>(in)] = *probe.get(o) - map.constant[oi];
        }
    }
    return map;
}

std::vector<AffineDayMap> linearize_trajectory(const LakeSeries& s, std::span<const int> k) {
    if (k.size() != s.size()) throw DomainError("substep policy length does not match series length");
    std::vector<AffineDayMap> maps(s.size());
    for (std::size_t t = 1; t < s.size(); ++t) maps[t] = linearize_day(s, t, k[t]);
    return maps;
}

}  // namespace lakedo
