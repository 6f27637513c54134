#include "lakedo/synthetic.hpp"

#include "lakedo/csv.hpp"
#include "lakedo/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <sstream>

namespace lakedo {

namespace {

constexpr int kDaysPerYear = 365;
constexpr std::size_t kBaseFeatures = 9;

// Independent streams per (seed, lake, purpose).
enum Stream : std::uint32_t { kVolumeStream = 1, kFluxStream = 2, kObservationStream = 3, kNoiseStream = 4 };

std::mt19937_64 make_rng(std::uint64_t seed, std::size_t lake, Stream stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(lake), static_cast<std::uint32_t>(stream)};
    return std::mt19937_64(seq);
}

int day_of_year(std::size_t t) { return static_cast<int>(t % kDaysPerYear) + 1; }

void require(bool ok, const char* field, const char* rule) {
    if (!ok) throw ConfigError(std::string(field) + " " + rule);
}

void check_injection(const LakeSeries& s, const GroundTruth& truth, std::size_t day, const char* name) {
    if (truth.state.size() != s.size() || truth.tag.size() != s.size() || truth.clamped.size() != s.size()) {
        throw DomainError(std::string(name) + ": truth length does not match series");
    }
    if (day == 0 || day >= s.size()) throw DomainError(std::string(name) + ": day out of range");
    if (s.regime[day] != Regime::Stratified) throw DomainError(std::string(name) + ": day is not stratified");
    if (s.regime[day - 1] != Regime::Stratified) {
        throw DomainError(std::string(name) + ": day is the first day of a stratified span");
    }
}

void set_weighted_total_flux(LakeSeries& s, std::size_t t) {
    s.f_exo_total[t] = (*s.f_exo_epi[t] * *s.v_epi[t] + *s.f_exo_hyp[t] * *s.v_hyp[t]) / s.v_total[t];
}

void reintegrate_from(const LakeSeries& s, GroundTruth& truth, std::size_t day, int k) {
    for (std::size_t t = day; t < s.size(); ++t) {
        bool clamped = false;
        truth.state[t] = simulate_day(s, t, truth.state[t - 1], k, true, &clamped);
        truth.clamped[t] = clamped;
    }
}

// Rescales one layer from `day` to the end of its stratified span so that
// it is 1/ratio of the previous day's volume on `day`.
void collapse_layer(LakeSeries& s, std::size_t day, double ratio, bool epilimnion) {
    OptionalColumn& shrink = epilimnion ? s.v_epi : s.v_hyp;
    OptionalColumn& other = epilimnion ? s.v_hyp : s.v_epi;
    const double factor = (*shrink[day - 1] / ratio) / *shrink[day];
    for (std::size_t t = day; t < s.size() && s.regime[t] == Regime::Stratified; ++t) {
        shrink[t] = *shrink[t] * factor;
        other[t] = s.v_total[t] - *shrink[t];
        if (!(*other[t] > 0.0) || !(*shrink[t] > 0.0)) throw DomainError("injection produced a non-positive volume");
        if (s.f_exo_epi[t] && s.f_exo_hyp[t]) set_weighted_total_flux(s, t);
    }
}

void standardize_column(LakeSeries& s, std::size_t col) {
    const std::size_t m = s.feature_count;
    const std::size_t n = s.size();
    double mean = 0.0;
    for (std::size_t t = 0; t < n; ++t) mean += s.features[t * m + col];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        const double d = s.features[t * m + col] - mean;
        var += d * d;
    }
    const double sd = std::sqrt(var / static_cast<double>(n));
    const double scale = sd > 1e-12 ? 1.0 / sd : 1.0;
    for (std::size_t t = 0; t < n; ++t) s.features[t * m + col] = (s.features[t * m + col] - mean) * scale;
}

void build_features(LakeSeries& s, std::size_t noise_channels, std::mt19937_64& rng) {
    const std::size_t m = s.feature_count;
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t t = 0; t < s.size(); ++t) {
        double* row = s.features.data() + t * m;
        const bool strat = s.regime[t] == Regime::Stratified;
        const double angle = 2.0 * std::numbers::pi * day_of_year(t) / kDaysPerYear;
        row[0] = s.f_exo_epi[t].value_or(0.0);
        row[1] = s.f_exo_hyp[t].value_or(0.0);
        row[2] = s.total_flux(t);
        row[3] = strat ? *s.v_epi[t] / s.v_total[t] : 0.0;
        row[4] = strat ? *s.v_hyp[t] / s.v_total[t] : 0.0;
        row[5] = s.relative_epi_change(t);
        row[6] = std::sin(angle);
        row[7] = std::cos(angle);
        row[8] = strat ? 1.0 : 0.0;
        for (std::size_t j = 0; j < noise_channels; ++j) row[kBaseFeatures + j] = normal(rng);
    }
    for (std::size_t col = 0; col < 6; ++col) standardize_column(s, col);
}

}  // namespace

void GenConfig::validate() const {
    require(lakes >= 1, "lakes", "must be at least 1");
    require(years >= 1, "years", "must be at least 1");
    require(stratified_start >= 2 && stratified_start < stratified_end && stratified_end <= kDaysPerYear,
            "stratified_start", "and stratified_end must satisfy 2 <= start < end <= 365");
    require(epi_fraction_floor > 0.0 && epi_fraction_floor < epi_fraction_cap && epi_fraction_cap < 1.0,
            "epi_fraction_cap", "must exceed epi_fraction_floor, both in (0, 1)");
    require(epi_fraction_mean > 0.0 && epi_fraction_mean < 1.0, "epi_fraction_mean", "must lie in (0, 1)");
    require(std::isfinite(epi_fraction_drift), "epi_fraction_drift", "must be finite");
    require(epi_fraction_noise >= 0.0 && std::isfinite(epi_fraction_noise), "epi_fraction_noise",
            "must be nonnegative");
    require(shock_probability >= 0.0 && shock_probability <= 1.0, "shock_probability", "must lie in [0, 1]");
    require(shock_magnitude >= 0.0 && shock_magnitude < 1.0, "shock_magnitude", "must lie in [0, 1)");
    require(std::isfinite(saturation_mean) && std::isfinite(saturation_amplitude) && std::isfinite(seasonal_phase),
            "saturation_mean", "and related amplitudes must be finite");
    require(reaeration_rate >= 0.0 && reaeration_rate < 2.0, "reaeration_rate", "must lie in [0, 2)");
    require(std::isfinite(epi_production_amplitude), "epi_production_amplitude", "must be finite");
    require(hyp_demand_amplitude >= 0.0 && std::isfinite(hyp_demand_amplitude), "hyp_demand_amplitude",
            "must be nonnegative");
    require(hyp_half_saturation > 0.0, "hyp_half_saturation", "must be positive");
    require(flux_noise >= 0.0 && std::isfinite(flux_noise), "flux_noise", "must be nonnegative");
    require(sparsity > 0.0 && sparsity <= 1.0, "sparsity", "must lie in (0, 1]");
    require(observation_sigma >= 0.0 && std::isfinite(observation_sigma), "observation_sigma",
            "must be nonnegative");
    require(scenario_a_ratio >= 10.0, "scenario_a_ratio", "must be at least 10");
    require(scenario_a_flux < 0.0, "scenario_a_flux", "must be negative");
    require(scenario_a_max_hyp_do >= 0.0 && std::isfinite(scenario_a_max_hyp_do), "scenario_a_max_hyp_do",
            "must be nonnegative");
    require(scenario_b_ratio > 1.0, "scenario_b_ratio", "must exceed 1");
    require(std::isfinite(scenario_b_flux), "scenario_b_flux", "must be finite");
    const int span = stratified_end - stratified_start;
    require(scenario_a_offset >= 1 && scenario_a_offset <= span, "scenario_a_offset",
            "must fall inside the stratified span");
    require(scenario_b_offset >= 1 && scenario_b_offset <= span, "scenario_b_offset",
            "must fall inside the stratified span");
    require(truth_substeps >= 1, "truth_substeps", "must be at least 1");
    require(volume_mean > 0.0 && std::isfinite(volume_mean), "volume_mean", "must be positive");
}

GroundTruth integrate_truth(const LakeSeries& s, const LayerState& initial, int k) {
    GroundTruth truth;
    truth.state.resize(s.size());
    truth.tag.assign(s.size(), "");
    truth.clamped.assign(s.size(), false);
    if (s.size() == 0) return truth;
    truth.state[0] = initial;
    reintegrate_from(s, truth, 1, k);
    return truth;
}

SyntheticLake generate_lake(const GenConfig& cfg, std::size_t index) {
    cfg.validate();
    const std::size_t n = cfg.years * kDaysPerYear;
    SyntheticLake lake;
    LakeSeries& s = lake.series;
    GroundTruth& truth = lake.truth;
    char id[32];
    std::snprintf(id, sizeof id, "lake_%02zu", index);
    s.lake_id = id;
    s.resize(n, kBaseFeatures + cfg.noise_channels);
    truth.state.resize(n);
    truth.tag.assign(n, "");
    truth.clamped.assign(n, false);

    auto vol_rng = make_rng(cfg.seed, index, kVolumeStream);
    auto flux_rng = make_rng(cfg.seed, index, kFluxStream);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    const double v_total = cfg.volume_mean * (0.5 + unit(vol_rng));
    const double lake_mean_fraction = cfg.epi_fraction_mean * (0.9 + 0.2 * unit(vol_rng));
    const double span = static_cast<double>(cfg.stratified_end - cfg.stratified_start);

    double walk = 0.0, shock_factor = 1.0;
    for (std::size_t t = 0; t < n; ++t) {
        const int doy = day_of_year(t);
        s.dates[t] = static_cast<int>(t) + 1;
        s.v_total[t] = v_total;
        const bool strat = doy >= cfg.stratified_start && doy <= cfg.stratified_end;
        s.regime[t] = strat ? Regime::Stratified : Regime::Mixed;
        if (!strat) {
            walk = 0.0;
            shock_factor = 1.0;
            continue;
        }
        const double progress = (doy - cfg.stratified_start) / span;
        walk += cfg.epi_fraction_noise * normal(vol_rng);
        const double shock_draw = unit(vol_rng);
        const double shock_sign = unit(vol_rng) < 0.5 ? -1.0 : 1.0;
        if (doy > cfg.stratified_start && shock_draw < cfg.shock_probability) {
            shock_factor *= 1.0 + shock_sign * cfg.shock_magnitude;
            truth.tag[t] = "shock";
        }
        const double fraction = std::clamp(
            (lake_mean_fraction + cfg.epi_fraction_drift * (progress - 0.5) + walk) * shock_factor,
            cfg.epi_fraction_floor, cfg.epi_fraction_cap);
        s.v_epi[t] = fraction * v_total;
        s.v_hyp[t] = v_total - *s.v_epi[t];
    }

    // Fluxes depend on the current truth, so fluxes, injections and truth
    // advance together.
    auto saturation = [&](int doy) {
        return cfg.saturation_mean -
               cfg.saturation_amplitude * std::cos(2.0 * std::numbers::pi * (doy - cfg.seasonal_phase) / kDaysPerYear);
    };
    auto last_of_span = [&](std::size_t t) { return t + 1 >= n || s.regime[t + 1] != Regime::Stratified; };

    std::size_t a_count = 0, b_count = 0, a_earliest = 0, b_next = 0;
    truth.state[0].total = saturation(day_of_year(0)) + 0.2 * normal(flux_rng);
    for (std::size_t t = 0; t < n; ++t) {
        const int doy = day_of_year(t);
        const double sat = saturation(doy);
        const LayerState& y = truth.state[t];
        if (s.regime[t] == Regime::Stratified) {
            const double progress = (doy - cfg.stratified_start) / span;
            const double production = cfg.epi_production_amplitude * std::sin(std::numbers::pi * progress);
            const double hyp = *y.hyp;
            s.f_exo_epi[t] = cfg.reaeration_rate * (sat - *y.epi) + production + cfg.flux_noise * normal(flux_rng);
            s.f_exo_hyp[t] = -cfg.hyp_demand_amplitude * hyp / (cfg.hyp_half_saturation + hyp) +
                             0.3 * cfg.flux_noise * normal(flux_rng);
            set_weighted_total_flux(s, t);
        } else {
            s.f_exo_total[t] = cfg.reaeration_rate * (sat - *y.total) + cfg.flux_noise * normal(flux_rng);
        }
        if (t + 1 >= n) break;

        const std::size_t next = t + 1;
        if (s.regime[next] == Regime::Stratified && s.regime[t] == Regime::Stratified) {
            if (t == 0 || s.regime[t - 1] != Regime::Stratified) {
                a_count = b_count = 0;
                a_earliest = t + static_cast<std::size_t>(cfg.scenario_a_offset);
                b_next = t + static_cast<std::size_t>(cfg.scenario_b_offset);
            }
            if (b_count < cfg.scenario_b_per_year && next == b_next) {
                collapse_layer(s, next, cfg.scenario_b_ratio, true);
                s.f_exo_epi[t] = cfg.scenario_b_flux;
                set_weighted_total_flux(s, t);
                truth.tag[next] = "B";
                ++b_count;
                b_next = next + 7;
            } else if (a_count < cfg.scenario_a_per_year && next >= a_earliest &&
                       (*y.hyp <= cfg.scenario_a_max_hyp_do || last_of_span(next))) {
                collapse_layer(s, next, cfg.scenario_a_ratio, false);
                s.f_exo_hyp[t] = cfg.scenario_a_flux;
                set_weighted_total_flux(s, t);
                truth.tag[next] = "A";
                ++a_count;
                a_earliest = next + 7;
            }
        }
        bool clamped = false;
        truth.state[next] = simulate_day(s, next, truth.state[t], cfg.truth_substeps, true, &clamped);
        truth.clamped[next] = clamped;
    }

    auto obs_rng = make_rng(cfg.seed, index, kObservationStream);
    sparsify_observations(s, truth, cfg.sparsity, cfg.observation_sigma, obs_rng());
    auto noise_rng = make_rng(cfg.seed, index, kNoiseStream);
    build_features(s, cfg.noise_channels, noise_rng);

    const auto report = validate_series(s);
    if (!report.ok()) throw DomainError("generated series is invalid: " + report.issues.front().message);
    return lake;
}

std::vector<SyntheticLake> generate_dataset(const GenConfig& cfg) {
    cfg.validate();
    std::vector<SyntheticLake> lakes;
    lakes.reserve(cfg.lakes);
    for (std::size_t i = 0; i < cfg.lakes; ++i) lakes.push_back(generate_lake(cfg, i));
    return lakes;
}

void inject_scenario_a(LakeSeries& s, GroundTruth& truth, std::size_t day, double shrink_ratio, double f_exo_hyp,
                       int k) {
    check_injection(s, truth, day, "scenario A");
    if (!(shrink_ratio >= 10.0)) throw DomainError("scenario A: shrink ratio must be at least 10");
    if (!(f_exo_hyp < 0.0)) throw DomainError("scenario A: hypolimnion flux must be negative");
    collapse_layer(s, day, shrink_ratio, false);
    s.f_exo_hyp[day - 1] = f_exo_hyp;
    set_weighted_total_flux(s, day - 1);
    truth.tag[day] = "A";
    reintegrate_from(s, truth, day, k);
}

void inject_scenario_b(LakeSeries& s, GroundTruth& truth, std::size_t day, double shrink_ratio, double f_exo_epi,
                       int k) {
    check_injection(s, truth, day, "scenario B");
    if (!(shrink_ratio > 1.0)) throw DomainError("scenario B: shrink ratio must exceed 1");
    if (!std::isfinite(f_exo_epi)) throw DomainError("scenario B: epilimnion flux must be finite");
    collapse_layer(s, day, shrink_ratio, true);
    s.f_exo_epi[day - 1] = f_exo_epi;
    set_weighted_total_flux(s, day - 1);
    truth.tag[day] = "B";
    reintegrate_from(s, truth, day, k);
}

void sparsify_observations(LakeSeries& s, const GroundTruth& truth, double sparsity, double sigma,
                           std::uint64_t seed) {
    if (!(sparsity > 0.0 && sparsity <= 1.0)) throw ConfigError("sparsity must lie in (0, 1]");
    if (!(sigma >= 0.0)) throw ConfigError("observation_sigma must be nonnegative");
    if (truth.state.size() != s.size()) throw DomainError("truth length does not match series");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, 1.0);
    auto observe = [&](double value) { return std::max(0.0, value + sigma * noise(rng)); };
    for (std::size_t t = 0; t < s.size(); ++t) {
        s.obs_epi[t].reset();
        s.obs_hyp[t].reset();
        s.obs_total[t].reset();
        if (!(unit(rng) < sparsity)) continue;
        const auto& y = truth.state[t];
        if (s.regime[t] == Regime::Stratified) {
            s.obs_epi[t] = observe(*y.epi);
            s.obs_hyp[t] = observe(*y.hyp);
        } else {
            s.obs_total[t] = observe(*y.total);
        }
    }
}

std::string format_truth(const LakeSeries& s, const GroundTruth& truth) {
    if (truth.state.size() != s.size() || truth.tag.size() != s.size()) {
        throw DomainError("truth length does not match series");
    }
    std::ostringstream out;
    out << "date,true_epi,true_hyp,true_total,scenario_tag\n";
    for (std::size_t t = 0; t < s.size(); ++t) {
        const auto& y = truth.state[t];
        out << s.dates[t] << ',' << csv::format_optional(y.epi) << ',' << csv::format_optional(y.hyp) << ','
            << csv::format_optional(y.total) << ',' << truth.tag[t] << '\n';
    }
    return out.str();
}

void write_truth(const LakeSeries& series, const GroundTruth& truth, const std::filesystem::path& path) {
    csv::write_file_atomic(path, format_truth(series, truth));
}

GroundTruth read_truth(const std::filesystem::path& path) {
    const auto table = csv::read_table(path);
    const char* columns[] = {"date", "true_epi", "true_hyp", "true_total", "scenario_tag"};
    std::size_t idx[5];
    for (std::size_t i = 0; i < 5; ++i) {
        const auto c = table.find(columns[i]);
        if (!c) throw SchemaError(std::string("truth file is missing column ") + columns[i]);
        idx[i] = *c;
    }
    GroundTruth truth;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::string context = "truth row " + std::to_string(r + 1);
        LayerState y;
        y.epi = csv::parse_optional(row.at(idx[1]), context);
        y.hyp = csv::parse_optional(row.at(idx[2]), context);
        y.total = csv::parse_optional(row.at(idx[3]), context);
        truth.state.push_back(y);
        truth.tag.push_back(row.at(idx[4]));
        truth.clamped.push_back(false);
    }
    return truth;
}

}  // namespace lakedo
