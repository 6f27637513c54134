#include "lakedo/eval.hpp"

#include "lakedo/csv.hpp"
#include "lakedo/error.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace lakedo {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string cell(double x) { return std::isfinite(x) ? csv::format_double(x) : std::string{}; }

}  // namespace

double rmse(std::span<const double> preds, std::span<const double> obs) {
    if (preds.size() != obs.size()) throw DomainError("rmse: prediction and observation counts differ");
    if (preds.empty()) throw DomainError("rmse: empty mask");
    double acc = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const double d = preds[i] - obs[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(preds.size()));
}

double rmse(std::span<const LayerState> preds, const LakeSeries& s, Task task) {
    if (preds.size() != s.size()) throw DomainError("rmse: prediction count does not match series length");
    std::vector<double> p, o;
    const auto& obs = s.observations(task);
    for (std::size_t t = 0; t < s.size(); ++t) {
        if (!obs[t]) continue;
        const auto v = preds[t].get(task);
        if (!v) throw DomainError("rmse: missing prediction on an observed day");
        p.push_back(*v);
        o.push_back(*obs[t]);
    }
    return rmse(p, o);
}

TaskValues mass_inconsistency_on(std::span<const LayerState> preds, const LakeSeries& s,
                                 std::span<const std::size_t> rows, const InconsistencyOptions& options) {
    if (preds.size() != s.size()) throw DomainError("prediction count does not match series length");
    const int k = options.daily_reference ? 1 : options.reference_k;
    std::array<double, 3> sum{};
    std::array<std::size_t, 3> n{};
    for (std::size_t t : rows) {
        if (t < 1 || t >= s.size()) continue;
        const auto ref = simulate_day(s, t, preds[t - 1], k);
        for (Task task : kAllTasks) {
            const auto r = ref.get(task);
            const auto p = preds[t].get(task);
            if (!r || !p) continue;
            sum[static_cast<std::size_t>(task)] += std::abs(*p - *r);
            ++n[static_cast<std::size_t>(task)];
        }
    }
    TaskValues out;
    for (Task task : kAllTasks) {
        const auto i = static_cast<std::size_t>(task);
        out[task] = n[i] ? sum[i] / static_cast<double>(n[i]) : kNaN;
    }
    return out;
}

TaskValues mass_inconsistency(std::span<const LayerState> preds, const LakeSeries& s,
                              const InconsistencyOptions& options) {
    if (s.size() < 2) throw DomainError("mass inconsistency needs at least two days");
    std::vector<std::size_t> rows(s.size() - 1);
    std::iota(rows.begin(), rows.end(), std::size_t{1});
    return mass_inconsistency_on(preds, s, rows, options);
}

EvalReport aggregate_report(std::string model, std::span<const SeedMetrics> runs) {
    EvalReport report;
    report.model = std::move(model);
    report.seeds = runs.size();
    for (Task task : kAllTasks) {
        double mean = 0.0, inc = 0.0;
        std::size_t n = 0, ni = 0;
        for (const auto& r : runs) {
            if (std::isfinite(r.rmse[task])) {
                mean += r.rmse[task];
                ++n;
            }
            if (std::isfinite(r.inconsistency[task])) {
                inc += r.inconsistency[task];
                ++ni;
            }
        }
        mean = n ? mean / static_cast<double>(n) : kNaN;
        double var = 0.0;
        for (const auto& r : runs)
            if (std::isfinite(r.rmse[task])) var += (r.rmse[task] - mean) * (r.rmse[task] - mean);
        report.rmse_mean[task] = mean;
        report.rmse_std[task] = n > 1 ? std::sqrt(var / static_cast<double>(n - 1)) : (n ? 0.0 : kNaN);
        report.inconsistency[task] = ni ? inc / static_cast<double>(ni) : kNaN;
    }
    return report;
}

ComparisonTable compare_models(std::span<const EvalReport> reports) {
    ComparisonTable table;
    table.header.push_back("model");
    for (Task task : kAllTasks) {
        const std::string name = task_name(task);
        table.header.push_back("rmse_mean_" + name);
        table.header.push_back("rmse_std_" + name);
        table.header.push_back("inconsistency_" + name);
    }
    for (const auto& r : reports) {
        std::vector<std::string> row{r.model};
        for (Task task : kAllTasks) {
            row.push_back(cell(r.rmse_mean[task]));
            row.push_back(cell(r.rmse_std[task]));
            row.push_back(cell(r.inconsistency[task]));
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

std::string ComparisonTable::to_csv() const {
    std::ostringstream out;
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
        out << '\n';
    }
    return out.str();
}

std::string format_timeseries(const LakeSeries& s, std::span<const LayerState> preds,
                              std::span<const LayerState> simulated, std::span<const LayerState> truth) {
    if (preds.size() != s.size() || simulated.size() != s.size() || (!truth.empty() && truth.size() != s.size())) {
        throw DomainError("export_timeseries: input lengths do not match the series");
    }
    std::ostringstream out;
    out << "date,pred_epi,pred_hyp,pred_total,sim_epi,sim_hyp,sim_total,obs_epi,obs_hyp,obs_total,"
           "true_epi,true_hyp,true_total\n";
    for (std::size_t t = 0; t < s.size(); ++t) {
        out << s.dates[t];
        for (Task task : kAllTasks) out << ',' << csv::format_optional(preds[t].get(task));
        for (Task task : kAllTasks) out << ',' << csv::format_optional(simulated[t].get(task));
        for (Task task : kAllTasks) out << ',' << csv::format_optional(s.observations(task)[t]);
        for (Task task : kAllTasks) {
            out << ',' << (truth.empty() ? std::string{} : csv::format_optional(truth[t].get(task)));
        }
        out << '\n';
    }
    return out.str();
}

void export_timeseries(const LakeSeries& series, std::span<const LayerState> preds,
                       std::span<const LayerState> simulated, std::span<const LayerState> truth,
                       const std::filesystem::path& path) {
    csv::write_file_atomic(path, format_timeseries(series, preds, simulated, truth));
}

}  // namespace lakedo
