#include "lakedo/lake_data.hpp"

#include "lakedo/csv.hpp"
#include "lakedo/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

namespace lakedo {

namespace {

constexpr double kVolumeSumTolerance = 1e-9;

bool volumes_sum(double epi, double hyp, double total) {
    return std::abs(epi + hyp - total) <= kVolumeSumTolerance * std::abs(total);
}

}  // namespace

const char* task_name(Task task) noexcept {
    switch (task) {
        case Task::Epi: return "epi";
        case Task::Hyp: return "hyp";
        case Task::Total: return "total";
    }
    return "?";
}

char regime_code(Regime regime) noexcept { return regime == Regime::Mixed ? 'M' : 'S'; }

std::span<const double> LakeSeries::feature_row(std::size_t day) const {
    return {features.data() + day * feature_count, feature_count};
}

const OptionalColumn& LakeSeries::observations(Task task) const {
    switch (task) {
        case Task::Epi: return obs_epi;
        case Task::Hyp: return obs_hyp;
        case Task::Total: break;
    }
    return obs_total;
}

OptionalColumn& LakeSeries::observations(Task task) {
    return const_cast<OptionalColumn&>(std::as_const(*this).observations(task));
}

void LakeSeries::resize(std::size_t days, std::size_t features_per_day) {
    dates.assign(days, 0);
    feature_count = features_per_day;
    features.assign(days * features_per_day, 0.0);
    regime.assign(days, Regime::Mixed);
    v_total.assign(days, 0.0);
    for (auto* col : {&v_epi, &v_hyp, &f_exo_total, &f_exo_epi, &f_exo_hyp, &obs_total, &obs_epi,
                      &obs_hyp}) {
        col->assign(days, std::nullopt);
    }
}

LakeSeries LakeSeries::slice(std::size_t begin, std::size_t end) const {
    end = std::min(end, size());
    begin = std::min(begin, end);
    LakeSeries out;
    out.lake_id = lake_id;
    out.feature_count = feature_count;
    auto cut = [&](const auto& v) { return std::decay_t<decltype(v)>(v.begin() + begin, v.begin() + end); };
    out.dates = cut(dates);
    out.features.assign(features.begin() + begin * feature_count, features.begin() + end * feature_count);
    out.regime = cut(regime);
    out.v_total = cut(v_total);
    out.v_epi = cut(v_epi);
    out.v_hyp = cut(v_hyp);
    out.f_exo_total = cut(f_exo_total);
    out.f_exo_epi = cut(f_exo_epi);
    out.f_exo_hyp = cut(f_exo_hyp);
    out.obs_total = cut(obs_total);
    out.obs_epi = cut(obs_epi);
    out.obs_hyp = cut(obs_hyp);
    return out;
}

double LakeSeries::total_flux(std::size_t day) const {
    if (f_exo_total[day]) return *f_exo_total[day];
    if (regime[day] == Regime::Stratified && f_exo_epi[day] && f_exo_hyp[day] && v_epi[day] &&
        v_hyp[day]) {
        return (*f_exo_epi[day] * *v_epi[day] + *f_exo_hyp[day] * *v_hyp[day]) / v_total[day];
    }
    throw DomainError("no exogenous flux available for the water column on date " +
                      std::to_string(dates[day]));
}

double LakeSeries::relative_epi_change(std::size_t day) const {
    if (day == 0 || regime[day] != Regime::Stratified || regime[day - 1] != Regime::Stratified)
        return 0.0;
    if (!v_epi[day] || !v_epi[day - 1]) return 0.0;
    return std::abs(*v_epi[day] - *v_epi[day - 1]) / *v_epi[day - 1];
}

const std::vector<std::size_t>& ObservationMask::days(Task task) const {
    switch (task) {
        case Task::Epi: return epi;
        case Task::Hyp: return hyp;
        case Task::Total: break;
    }
    return total;
}

ObservationMask observation_mask(const LakeSeries& series) {
    ObservationMask mask;
    for (std::size_t t = 0; t < series.size(); ++t) {
        if (series.obs_epi[t]) mask.epi.push_back(t);
        if (series.obs_hyp[t]) mask.hyp.push_back(t);
        if (series.obs_total[t]) mask.total.push_back(t);
    }
    return mask;
}

ValidationReport validate_series(const LakeSeries& s) {
    ValidationReport report;
    auto add = [&](std::size_t t, std::string message) {
        report.issues.push_back({s.dates[t], std::move(message)});
    };
    if (s.features.size() != s.size() * s.feature_count) {
        report.issues.push_back({0, "feature matrix size mismatch"});
    }
    for (std::size_t t = 0; t < s.size(); ++t) {
        if (t > 0 && s.dates[t] != s.dates[t - 1] + 1) {
            add(t, "dates not strictly increasing with unit spacing");
        }
        if (!std::isfinite(s.v_total[t]) || s.v_total[t] <= 0.0) {
            add(t, "non-positive total volume");
        }
        const bool stratified = s.regime[t] == Regime::Stratified;
        if (stratified) {
            if (!s.v_epi[t]) add(t, "missing epilimnion volume");
            if (!s.v_hyp[t]) add(t, "missing hypolimnion volume");
            if (s.v_epi[t] && *s.v_epi[t] <= 0.0) add(t, "non-positive epilimnion volume");
            if (s.v_hyp[t] && *s.v_hyp[t] <= 0.0) add(t, "non-positive hypolimnion volume");
            if (s.v_epi[t] && s.v_hyp[t] && !volumes_sum(*s.v_epi[t], *s.v_hyp[t], s.v_total[t])) {
                add(t, "layer volumes do not sum to total volume");
            }
            if (!s.f_exo_epi[t] || !s.f_exo_hyp[t]) add(t, "missing layer exogenous flux");
            if (s.obs_total[t]) add(t, "observation/regime mismatch");
        } else {
            if (!s.f_exo_total[t]) add(t, "missing total exogenous flux");
            if (s.obs_epi[t] || s.obs_hyp[t]) add(t, "observation/regime mismatch");
        }
        for (const auto* obs : {&s.obs_epi, &s.obs_hyp, &s.obs_total}) {
            if ((*obs)[t] && !((*obs)[t] >= 0.0 && std::isfinite(*(*obs)[t]))) {
                add(t, "negative or non-finite observation");
            }
        }
        for (const auto* flux : {&s.f_exo_epi, &s.f_exo_hyp, &s.f_exo_total}) {
            if ((*flux)[t] && !std::isfinite(*(*flux)[t])) add(t, "non-finite exogenous flux");
        }
    }
    return report;
}

std::vector<RegimeSpan> segment_regimes(const LakeSeries& s) {
    std::vector<RegimeSpan> spans;
    for (std::size_t t = 0; t < s.size(); ++t) {
        if (!spans.empty() && spans.back().regime == s.regime[t]) {
            spans.back().end_day = s.dates[t];
        } else {
            spans.push_back({s.dates[t], s.dates[t], s.regime[t]});
        }
    }
    return spans;
}

namespace {

const char* const kFixedColumns[] = {"date",      "regime",    "v_total",   "v_epi",
                                     "v_hyp",     "f_exo_total", "f_exo_epi", "f_exo_hyp",
                                     "obs_total", "obs_epi",   "obs_hyp"};
const char* const kRequiredColumns[] = {"date", "regime", "v_total", "f_exo_total"};

std::string row_context(std::size_t row, const char* column) {
    return "row " + std::to_string(row) + " column " + column;
}

}  // namespace

LakeSeries parse_series(const std::string& text, const std::string& lake_id) {
    const auto table = csv::parse_table(text);
    for (const char* col : kRequiredColumns) {
        if (!table.find(col)) throw SchemaError(std::string("missing column '") + col + "'");
    }
    std::size_t features = 0;
    while (table.find("feat_" + std::to_string(features))) ++features;
    for (const auto& name : table.header) {
        if (name.rfind("feat_", 0) == 0) {
            const bool known = [&] {
                for (std::size_t j = 0; j < features; ++j)
                    if (name == "feat_" + std::to_string(j)) return true;
                return false;
            }();
            if (!known) throw SchemaError("feature columns must be contiguous: unexpected '" + name + "'");
        }
    }

    LakeSeries s;
    s.lake_id = lake_id;
    s.resize(table.rows.size(), features);

    std::optional<std::size_t> idx[std::size(kFixedColumns)];
    for (std::size_t c = 0; c < std::size(kFixedColumns); ++c) idx[c] = table.find(kFixedColumns[c]);
    std::vector<std::size_t> feat_idx(features);
    for (std::size_t j = 0; j < features; ++j) feat_idx[j] = *table.find("feat_" + std::to_string(j));

    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::size_t line = r + 1;
        if (row.size() != table.header.size()) {
            throw SchemaError("row " + std::to_string(line) + " has " + std::to_string(row.size()) +
                              " cells, header has " + std::to_string(table.header.size()));
        }
        auto cell = [&](std::size_t c) -> std::string_view {
            return idx[c] ? std::string_view(row[*idx[c]]) : std::string_view{};
        };
        const double date = csv::parse_double(cell(0), row_context(line, "date"));
        if (date != std::floor(date)) throw DomainError(row_context(line, "date") + ": not an integer day");
        s.dates[r] = static_cast<int>(date);
        const auto regime = cell(1);
        if (regime == "M") {
            s.regime[r] = Regime::Mixed;
        } else if (regime == "S") {
            s.regime[r] = Regime::Stratified;
        } else {
            throw DomainError(row_context(line, "regime") + ": expected M or S, got '" +
                              std::string(regime) + "'");
        }
        s.v_total[r] = csv::parse_double(cell(2), row_context(line, "v_total"));
        s.v_epi[r] = csv::parse_optional(cell(3), row_context(line, "v_epi"));
        s.v_hyp[r] = csv::parse_optional(cell(4), row_context(line, "v_hyp"));
        s.f_exo_total[r] = csv::parse_optional(cell(5), row_context(line, "f_exo_total"));
        s.f_exo_epi[r] = csv::parse_optional(cell(6), row_context(line, "f_exo_epi"));
        s.f_exo_hyp[r] = csv::parse_optional(cell(7), row_context(line, "f_exo_hyp"));
        s.obs_total[r] = csv::parse_optional(cell(8), row_context(line, "obs_total"));
        s.obs_epi[r] = csv::parse_optional(cell(9), row_context(line, "obs_epi"));
        s.obs_hyp[r] = csv::parse_optional(cell(10), row_context(line, "obs_hyp"));
        for (std::size_t j = 0; j < features; ++j) {
            s.features[r * features + j] =
                csv::parse_double(row[feat_idx[j]], "row " + std::to_string(line) + " column feat_" +
                                                        std::to_string(j));
        }

        if (r > 0 && s.dates[r] != s.dates[r - 1] + 1) {
            throw OrderingError("row " + std::to_string(line) + ": date " + std::to_string(s.dates[r]) +
                                " does not follow " + std::to_string(s.dates[r - 1]) +
                                " with unit spacing");
        }
        for (auto [value, name] : {std::pair{std::optional<double>(s.v_total[r]), "v_total"},
                                   std::pair{s.v_epi[r], "v_epi"}, std::pair{s.v_hyp[r], "v_hyp"}}) {
            if (value && !(*value > 0.0)) {
                throw DomainError("row " + std::to_string(line) + ": " + name + " must be > 0, got " +
                                  csv::format_double(*value));
            }
        }
    }

    const auto report = validate_series(s);
    if (!report.ok()) {
        const auto& issue = report.issues.front();
        std::size_t row = 0;
        for (std::size_t r = 0; r < s.size(); ++r) {
            if (s.dates[r] == issue.date) {
                row = r + 1;
                break;
            }
        }
        throw DomainError("row " + std::to_string(row) + " (date " + std::to_string(issue.date) +
                          "): " + issue.message);
    }
    return s;
}

LakeSeries load_series(const std::filesystem::path& path) {
    return parse_series(csv::read_file(path), path.stem().string());
}

std::string format_series(const LakeSeries& s) {
    std::ostringstream out;
    for (std::size_t c = 0; c < std::size(kFixedColumns); ++c) out << (c ? "," : "") << kFixedColumns[c];
    for (std::size_t j = 0; j < s.feature_count; ++j) out << ",feat_" << j;
    out << '\n';
    for (std::size_t t = 0; t < s.size(); ++t) {
        out << s.dates[t] << ',' << regime_code(s.regime[t]) << ',' << csv::format_double(s.v_total[t]);
        for (const auto* col : {&s.v_epi, &s.v_hyp, &s.f_exo_total, &s.f_exo_epi, &s.f_exo_hyp,
                                &s.obs_total, &s.obs_epi, &s.obs_hyp}) {
            out << ',' << csv::format_optional((*col)[t]);
        }
        for (double x : s.feature_row(t)) out << ',' << csv::format_double(x);
        out << '\n';
    }
    return out.str();
}

void write_series(const LakeSeries& series, const std::filesystem::path& path) {
    csv::write_file_atomic(path, format_series(series));
}

}  // namespace lakedo
