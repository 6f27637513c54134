#include "doctest.h"
#include "fixtures.hpp"
#include "random_inputs.hpp"

#include "lakedo/april.hpp"
#include "lakedo/error.hpp"
#include "lakedo/synthetic.hpp"

#include <cmath>

using namespace lakedo;

namespace {

// Predictions equal to the observations plus the given residuals.
std::vector<LayerState> with_residuals(const LakeSeries& s, double epi_residual, double hyp_residual) {
    std::vector<LayerState> p(s.size(), LayerState{5.0, 5.0, 5.0});
    for (std::size_t t = 0; t < s.size(); ++t) {
        if (s.obs_epi[t]) p[t].epi = *s.obs_epi[t] + epi_residual;
        if (s.obs_hyp[t]) p[t].hyp = *s.obs_hyp[t] + hyp_residual;
    }
    return p;
}

std::string describe(const std::vector<DayLabel>& labels) {
    std::string out;
    for (const auto& l : labels)
        out += std::to_string(l.day) + ":" + class_name(l.cls) + "/" + provenance_name(l.provenance) + " ";
    return out;
}

}  // namespace

TEST_CASE("error threshold scales the pooled layer rmse") {
    const auto s = fixtures::ten_day_window();
    auto preds = with_residuals(s, 0.0, 0.0);
    // Three epi residuals and three hyp residuals.
    *preds[2].epi += 0.3;
    *preds[4].epi -= 0.6;
    *preds[7].epi += 0.0;
    *preds[2].hyp += 1.2;
    *preds[5].hyp -= 0.3;
    *preds[7].hyp += 0.6;
    const std::vector<std::vector<LayerState>> all{preds};
    const std::vector<LakeSeries> series{s};
    AprilConfig cfg;
    const auto pooled = error_threshold(all, series, cfg);
    const double rmse = std::sqrt((0.09 + 0.36 + 0.0 + 1.44 + 0.09 + 0.36) / 6.0);
    CHECK(pooled.epi == doctest::Approx(1.5 * rmse));
    CHECK(pooled.hyp == pooled.epi);

    cfg.per_layer_gamma = true;
    cfg.gamma_factor = 2.0;
    const auto split = error_threshold(all, series, cfg);
    CHECK(split.epi == doctest::Approx(2.0 * std::sqrt(0.45 / 3.0)));
    CHECK(split.hyp == doctest::Approx(2.0 * std::sqrt(1.89 / 3.0)));
}

TEST_CASE("error threshold needs stratified observations") {
    auto s = fixtures::ten_day_window();
    for (auto& y : s.obs_epi) y.reset();
    for (auto& y : s.obs_hyp) y.reset();
    const std::vector<std::vector<LayerState>> preds{with_residuals(s, 0, 0)};
    const std::vector<LakeSeries> series{s};
    CHECK_THROWS_AS(error_threshold(preds, series, AprilConfig{}), DomainError);
}

TEST_CASE("labeling combines the error and volume rules") {
    const auto s = fixtures::ten_day_window();
    auto preds = with_residuals(s, 0.1, 0.1);
    // One large hypolimnion residual on day 5 pushes that day over the threshold.
    *preds[5].hyp += 2.0;
    const std::vector<std::vector<LayerState>> all{preds};
    const std::vector<LakeSeries> series{s};
    const auto labels = label_from_predictions(all, series, AprilConfig{});
    CHECK(describe(labels) ==
          "2:MILD/ERROR_RULE 4:DRASTIC/VOLUME_RULE 5:DRASTIC/ERROR_RULE "
          "6:DRASTIC/VOLUME_RULE 7:MILD/ERROR_RULE ");
    CHECK(labels[0].date == 3);
}

TEST_CASE("residual exactly at the threshold stays mild") {
    auto s = fixtures::ten_day_window();
    for (auto* col : {&s.obs_epi, &s.obs_hyp})
        for (auto& y : *col)
            if (y) y = 6.25;
    // Equal residuals everywhere give a threshold of gamma * r; gamma = 1 puts every residual on it.
    const std::vector<std::vector<LayerState>> all{with_residuals(s, 0.5, -0.5)};
    const std::vector<LakeSeries> series{s};
    AprilConfig cfg;
    cfg.gamma_factor = 1.0;
    const auto gamma = error_threshold(all, series, cfg);
    REQUIRE(gamma.epi == 0.5);
    for (const auto& l : label_from_predictions(all, series, cfg))
        if (l.provenance == LabelProvenance::ErrorRule) CHECK(l.cls == DayClass::Mild);
}

TEST_CASE("volume rule uses the relative epilimnion change") {
    const auto s = fixtures::ten_day_window();
    AprilConfig cfg;
    CHECK_FALSE(volume_rule_fires(s, 3, cfg));
    CHECK(volume_rule_fires(s, 4, cfg));
    CHECK(volume_rule_fires(s, 6, cfg));
    cfg.volume_change_threshold = 0.3;
    CHECK_FALSE(volume_rule_fires(s, 6, cfg));
}

TEST_CASE("property: raising gamma never adds error-rule drastic labels") {
    testgen::Gen g(41);
    const auto s = fixtures::ten_day_window();
    const std::vector<LakeSeries> series{s};
    for (int trial = 0; trial < 200; ++trial) {
        auto preds = with_residuals(s, 0, 0);
        for (std::size_t t = 0; t < s.size(); ++t) {
            if (s.obs_epi[t]) *preds[t].epi += g.uniform(-2, 2);
            if (s.obs_hyp[t]) *preds[t].hyp += g.uniform(-2, 2);
        }
        const std::vector<std::vector<LayerState>> all{preds};
        AprilConfig lo, hi;
        lo.gamma_factor = g.uniform(0.1, 2.0);
        hi.gamma_factor = lo.gamma_factor + g.uniform(0.0, 2.0);
        const auto a = label_from_predictions(all, series, lo);
        const auto b = label_from_predictions(all, series, hi);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].day == b[i].day);
            if (b[i].cls == DayClass::Drastic) CHECK(a[i].cls == DayClass::Drastic);
        }
    }
}

TEST_CASE("discriminator objective") {
    const double p[] = {0.8, 0.5, 0.25};
    const DayClass c[] = {DayClass::Mild, DayClass::Mild, DayClass::Drastic};
    CHECK(discriminator_objective(p, c) == doctest::Approx((std::log(0.8) + std::log(0.5)) / 2 + std::log(0.75)));
    CHECK_THROWS_AS(discriminator_objective(std::span(p, 2), c), DomainError);
}

TEST_CASE("discriminator separates days by volume change") {
    // Same features everywhere: only the volume change tells the classes apart.
    std::vector<fixtures::Day> days{{'M'}};
    for (int t = 0; t < 60; ++t) days.push_back({'S', 0.4 + (t % 3 == 0 ? 0.1 : 0.0)});
    auto s = fixtures::build(days);
    std::fill(s.features.begin(), s.features.end(), 0.3);
    std::vector<DayLabel> labels;
    for (std::size_t t = 2; t < s.size(); ++t) {
        const bool drastic = s.relative_epi_change(t) > 0.0;
        labels.push_back({0, t, s.dates[t], drastic ? DayClass::Drastic : DayClass::Mild, LabelProvenance::ErrorRule});
    }
    const std::vector<LakeSeries> series{s};
    AprilConfig cfg;
    cfg.discriminator_updates = 500;
    const auto d = train_discriminator(labels, series, cfg, 3);
    std::vector<double> probs;
    std::vector<DayClass> classes;
    for (const auto& l : labels) {
        const double p = discriminator_forward(d, discriminator_input(s, l.day));
        CHECK((p < 0.5) == (l.cls == DayClass::Drastic));
        probs.push_back(p);
        classes.push_back(l.cls);
    }
    const auto untrained = DiscriminatorParams::initialize(d.input_size, cfg.discriminator_hidden, 3);
    std::vector<double> before;
    for (const auto& l : labels) before.push_back(discriminator_forward(untrained, discriminator_input(s, l.day)));
    CHECK(discriminator_objective(probs, classes) > discriminator_objective(before, classes));

    for (auto& l : labels) l.cls = DayClass::Mild;
    CHECK_THROWS_AS(train_discriminator(labels, series, cfg, 3), DomainError);
}

TEST_CASE("discriminator input appends the volume change") {
    const auto s = fixtures::ten_day_window();
    const auto x = discriminator_input(s, 4);
    REQUIRE(x.size() == s.feature_count + 1);
    CHECK(x.back() == doctest::Approx(0.10 / 0.45));
}

TEST_CASE("policy without a discriminator follows the volume rule") {
    const auto s = fixtures::ten_day_window();
    const auto policy = classify_days(nullptr, s, AprilConfig{});
    CHECK(policy.k == std::vector<int>{1, 1, 1, 1, 12, 1, 12, 1, 1, 1});
    CHECK(policy.labels.size() == 6);
    CHECK(format_labels(s, policy) ==
          "date,class,provenance,k\n"
          "3,MILD,DISCRIMINATOR,1\n"
          "4,MILD,DISCRIMINATOR,1\n"
          "5,DRASTIC,VOLUME_RULE,12\n"
          "6,MILD,DISCRIMINATOR,1\n"
          "7,DRASTIC,VOLUME_RULE,12\n"
          "8,MILD,DISCRIMINATOR,1\n");
}

TEST_CASE("policy flags days the discriminator rejects") {
    const auto s = fixtures::ten_day_window();
    // Bias the output strongly negative: every stratified day reads as drastic.
    auto d = DiscriminatorParams::zeros(s.feature_count + 1, {4});
    d.blocks.back().values[0] = -5.0;
    AprilConfig cfg;
    cfg.k_drastic = 6;
    const auto policy = classify_days(d, s, cfg);
    CHECK(policy.k == std::vector<int>{1, 1, 6, 6, 6, 6, 6, 6, 1, 1});
    CHECK(policy.labels[2].provenance == LabelProvenance::VolumeRule);
    CHECK(policy.labels[1].provenance == LabelProvenance::Discriminator);
}

TEST_CASE("config validation") {
    AprilConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.threshold = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.k_drastic = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.discriminator_hidden = {};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("pipeline runs end to end on a small dataset") {
    GenConfig gen;
    gen.lakes = 2;
    gen.years = 2;
    std::vector<LakeSeries> lakes;
    for (const auto& l : generate_dataset(gen)) lakes.push_back(l.series);
    const auto split = split_dataset(lakes, 365, 1);
    TrainConfig cfg;
    cfg.max_epochs = 15;
    AprilConfig acfg;
    acfg.finetune_epochs = 4;
    acfg.discriminator_updates = 100;
    const auto r = train_april(split.train, split.validation, cfg, acfg);
    CHECK(r.stage1.history.size() <= 15);
    CHECK(r.final.history.size() == 4);
    REQUIRE(r.policies.size() == split.train.size());
    for (std::size_t i = 0; i < r.policies.size(); ++i) {
        CHECK(r.policies[i].k.size() == split.train[i].size());
        for (std::size_t t = 0; t < r.policies[i].k.size(); ++t) {
            if (split.train[i].regime[t] == Regime::Mixed) CHECK(r.policies[i].k[t] == 1);
        }
    }
    CHECK_FALSE(r.validation_labels.empty());
    const auto again = train_april(split.train, split.validation, cfg, acfg);
    CHECK(again.final.history == r.final.history);
}
