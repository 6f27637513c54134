// Small hand-built lake series used across test files.
#pragma once

#include "lakedo/lake_data.hpp"

#include <optional>
#include <string>
#include <vector>

namespace fixtures {

// Day-by-day description: regime, epilimnion fraction (ignored when mixed),
// fluxes and optional observations.
struct Day {
    char regime = 'M';
    double epi_fraction = 0.0;
    double f_epi = 0.0;
    double f_hyp = 0.0;
    double f_total = 0.0;
    std::optional<double> obs_epi, obs_hyp, obs_total;
};

inline lakedo::LakeSeries build(const std::vector<Day>& days, double volume = 1000.0, std::size_t features = 2) {
    using namespace lakedo;
    LakeSeries s;
    s.lake_id = "fixture";
    s.resize(days.size(), features);
    for (std::size_t t = 0; t < days.size(); ++t) {
        const Day& d = days[t];
        s.dates[t] = static_cast<int>(t) + 1;
        s.v_total[t] = volume;
        for (std::size_t j = 0; j < features; ++j) {
            s.features[t * features + j] = 0.1 * static_cast<double>(t + 1) - 0.3 * static_cast<double>(j);
        }
        if (d.regime == 'S') {
            s.regime[t] = Regime::Stratified;
            s.v_epi[t] = volume * d.epi_fraction;
            s.v_hyp[t] = volume - *s.v_epi[t];
            s.f_exo_epi[t] = d.f_epi;
            s.f_exo_hyp[t] = d.f_hyp;
            s.obs_epi[t] = d.obs_epi;
            s.obs_hyp[t] = d.obs_hyp;
        } else {
            s.regime[t] = Regime::Mixed;
            s.f_exo_total[t] = d.f_total;
            s.obs_total[t] = d.obs_total;
        }
    }
    return s;
}

// Mixed, stratified with entrainment both ways, then mixed again.
inline lakedo::LakeSeries ten_day_window() {
    return build({
        {'M', 0, 0, 0, 0.3, {}, {}, 8.0},
        {'M', 0, 0, 0, -0.2, {}, {}, {}},
        {'S', 0.40, 0.2, -0.4, 0, 8.2, 7.5, {}},
        {'S', 0.45, 0.1, -0.3, 0, {}, {}, {}},
        {'S', 0.55, 0.3, -0.2, 0, 8.9, {}, {}},
        {'S', 0.50, -0.1, -0.5, 0, {}, 6.1, {}},
        {'S', 0.35, 0.2, -0.1, 0, {}, {}, {}},
        {'S', 0.35, 0.0, -0.6, 0, 8.4, 5.0, {}},
        {'M', 0, 0, 0, 0.1, {}, {}, 7.2},
        {'M', 0, 0, 0, 0.0, {}, {}, {}},
    });
}

}  // namespace fixtures
