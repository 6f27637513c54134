#include "doctest.h"
#include "fixtures.hpp"
#include "random_inputs.hpp"

#include "lakedo/error.hpp"
#include "lakedo/eval.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace lakedo;

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

}  // namespace

TEST_CASE("rmse of two residuals") {
    const double p[] = {8, 6};
    const double o[] = {7, 8};
    CHECK(rmse(p, o) == doctest::Approx(std::sqrt(2.5)));
    CHECK(rmse(p, p) == 0.0);
    CHECK(rmse(std::span(p, 1), std::span(o, 1)) == 1.0);
    CHECK_THROWS_AS(rmse(std::span<const double>{}, std::span<const double>{}), DomainError);
    CHECK_THROWS_AS(rmse(std::span(p, 1), o), DomainError);
}

TEST_CASE("property: rmse ignores the order of days") {
    testgen::Gen g(51);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = g.integer(1, 30);
        std::vector<double> p(n), o(n);
        for (int i = 0; i < n; ++i) {
            p[i] = g.uniform(0, 14);
            o[i] = g.uniform(0, 14);
        }
        const double before = rmse(p, o);
        std::vector<int> order(n);
        for (int i = 0; i < n; ++i) order[i] = i;
        std::shuffle(order.begin(), order.end(), g.engine());
        std::vector<double> ps(n), os(n);
        for (int i = 0; i < n; ++i) {
            ps[i] = p[order[i]];
            os[i] = o[order[i]];
        }
        CHECK(rmse(ps, os) == doctest::Approx(before).epsilon(1e-14));
    }
}

TEST_CASE("task rmse uses the observed days") {
    const auto s = fixtures::ten_day_window();
    std::vector<LayerState> preds(s.size(), LayerState{1.0, 2.0, 3.0});
    double acc = 0;
    for (std::size_t t : {2u, 4u, 7u}) acc += std::pow(1.0 - *s.obs_epi[t], 2);
    CHECK(rmse(preds, s, Task::Epi) == doctest::Approx(std::sqrt(acc / 3)));
}

TEST_CASE("predictions rolled by the reference scheme are consistent") {
    const auto s = fixtures::ten_day_window();
    std::vector<LayerState> preds(s.size());
    preds[0] = {{}, {}, 8.0};
    for (std::size_t t = 1; t < s.size(); ++t) preds[t] = simulate_day(s, t, preds[t - 1], kReferenceSubsteps);
    const auto inc = mass_inconsistency(preds, s);
    for (Task task : kAllTasks) {
        if (std::isfinite(inc[task])) CHECK(inc[task] <= 1e-9);
    }
    CHECK(std::isfinite(inc[Task::Epi]));
    CHECK(std::isfinite(inc[Task::Total]));
}

TEST_CASE("constant predictions measure the flux-driven change") {
    const auto s = fixtures::build({{'M', 0, 0, 0, 0.4}, {'M', 0, 0, 0, -0.2}, {'M', 0, 0, 0, 0.1}});
    const std::vector<LayerState> preds(3, LayerState{{}, {}, 6.0});
    // Mixed days: reference is y + f dt, so each residual is the flux of the previous day.
    CHECK(mass_inconsistency(preds, s)[Task::Total] == doctest::Approx((0.4 + 0.2) / 2));
    CHECK(std::isnan(mass_inconsistency(preds, s)[Task::Epi]));
    CHECK_THROWS_AS(mass_inconsistency(std::span(preds).first(1), s), DomainError);
}

TEST_CASE("property: moving toward the reference never increases inconsistency") {
    testgen::Gen g(52);
    const auto s = fixtures::ten_day_window();
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<LayerState> preds(s.size());
        for (auto& p : preds) p = {g.uniform(0, 12), g.uniform(0, 12), g.uniform(0, 12)};
        std::vector<LayerState> ref(s.size());
        ref[0] = preds[0];
        for (std::size_t t = 1; t < s.size(); ++t) ref[t] = simulate_day(s, t, preds[t - 1], kReferenceSubsteps);
        double last = 1e300;
        for (double alpha : {0.0, 0.5, 1.0}) {
            // Only the current day moves; the reference stays pinned to the previous predictions.
            double total = 0;
            for (std::size_t t = 1; t < s.size(); ++t) {
                for (Task task : kAllTasks) {
                    const auto p = preds[t].get(task), r = ref[t].get(task);
                    if (p && r) total += std::abs((1 - alpha) * *p + alpha * *r - *r);
                }
            }
            CHECK(total <= last + 1e-12);
            last = total;
        }
        CHECK(last == doctest::Approx(0.0));
        std::vector<std::size_t> rows{3};
        auto moved = preds;
        moved[3] = ref[3];
        for (Task task : kAllTasks) {
            const double a = mass_inconsistency_on(moved, s, rows)[task];
            if (std::isfinite(a)) CHECK(a == doctest::Approx(0.0).scale(1.0));
        }
    }
}

TEST_CASE("daily reference differs from the fine reference on moving thermoclines") {
    const auto s = fixtures::ten_day_window();
    std::vector<LayerState> preds(s.size(), LayerState{9.0, 3.0, 6.0});
    InconsistencyOptions daily;
    daily.daily_reference = true;
    CHECK(mass_inconsistency(preds, s, daily)[Task::Epi] != mass_inconsistency(preds, s)[Task::Epi]);
}

TEST_CASE("aggregation over seeds") {
    const SeedMetrics runs[] = {
        {TaskValues{{1.0, 2.0, 3.0}}, TaskValues{{0.1, 0.2, 0.3}}},
        {TaskValues{{3.0, 2.0, 5.0}}, TaskValues{{0.3, 0.2, 0.1}}},
    };
    const auto r = aggregate_report("pril", runs);
    CHECK(r.seeds == 2);
    CHECK(r.rmse_mean[Task::Epi] == 2.0);
    CHECK(r.rmse_std[Task::Epi] == doctest::Approx(std::sqrt(2.0)));
    CHECK(r.rmse_std[Task::Hyp] == 0.0);
    CHECK(r.inconsistency[Task::Total] == doctest::Approx(0.2));
    CHECK(aggregate_report("one", std::span(runs, 1)).rmse_std[Task::Total] == 0.0);
}

TEST_CASE("comparison table shape") {
    const SeedMetrics run[] = {{TaskValues{{1.0, 2.0, 3.0}}, TaskValues{{0.1, 0.2, 0.3}}}};
    const auto a = aggregate_report("baseline", run);
    const EvalReport reports[] = {a, a};
    const auto table = compare_models(reports);
    CHECK(table.header.size() == 3 * 3 + 1);
    REQUIRE(table.rows.size() == 2);
    CHECK(table.rows[0] == table.rows[1]);
    CHECK(table.rows[0][0] == "baseline");
    const auto lines = lines_of(table.to_csv());
    REQUIRE(lines.size() == 3);
    CHECK(lines[0].rfind("model,rmse_mean_epi,rmse_std_epi,inconsistency_epi,", 0) == 0);
    CHECK(compare_models(std::span(reports, 1)).rows.size() == 1);
}

TEST_CASE("time-series export") {
    const auto s = fixtures::build({{'M', 0, 0, 0, 0.1, {}, {}, 7.25},
                                    {'S', 0.4, 0.1, -0.1},
                                    {'S', 0.4, 0.1, -0.1, 0, 8.5, 3.125},
                                    {'S', 0.4},
                                    {'M'}});
    testgen::Gen g(53);
    std::vector<LayerState> preds(5), sim(5), truth(5);
    for (std::size_t t = 0; t < 5; ++t) {
        preds[t] = {g.uniform(0, 12), g.uniform(0, 12), g.uniform(0, 12)};
        sim[t] = simulate_day(s, std::max<std::size_t>(t, 1), preds[t == 0 ? 0 : t - 1], 1);
        truth[t] = {g.uniform(0, 12), g.uniform(0, 12), g.uniform(0, 12)};
    }
    sim[0] = {};
    const auto path = std::filesystem::temp_directory_path() / "lakedo_export_test.csv";
    export_timeseries(s, preds, sim, truth, path);
    std::ifstream in(path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    std::filesystem::remove(path);
    const auto lines = lines_of(buffer.str());
    REQUIRE(lines.size() == 6);
    CHECK(lines[0] ==
          "date,pred_epi,pred_hyp,pred_total,sim_epi,sim_hyp,sim_total,obs_epi,obs_hyp,obs_total,"
          "true_epi,true_hyp,true_total");
    for (std::size_t t = 0; t < 5; ++t) {
        const auto cells = split_line(lines[t + 1]);
        REQUIRE(cells.size() == 13);
        CHECK(std::stoi(cells[0]) == s.dates[t]);
        CHECK(std::stod(cells[1]) == doctest::Approx(*preds[t].epi).epsilon(1e-12));
        CHECK(std::stod(cells[12]) == doctest::Approx(*truth[t].total).epsilon(1e-12));
    }
    // Absent values are empty cells, not zeros.
    CHECK(split_line(lines[1])[4].empty());
    CHECK(split_line(lines[1])[9] == "7.25");
    CHECK(split_line(lines[2])[7].empty());
    CHECK(split_line(lines[3])[7] == "8.5");
    CHECK(split_line(lines[3])[8] == "3.125");

    CHECK_THROWS_AS(format_timeseries(s, std::span(preds).first(4), sim, truth), DomainError);
    const auto no_truth = format_timeseries(s, preds, sim, {});
    CHECK(split_line(lines_of(no_truth)[1])[10].empty());
}
