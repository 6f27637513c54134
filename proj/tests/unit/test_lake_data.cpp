#include "doctest.h"
#include "fixtures.hpp"
#include "random_inputs.hpp"

#include "lakedo/error.hpp"
#include "lakedo/lake_data.hpp"

#include <filesystem>
#include <fstream>
#include <string>

using namespace lakedo;

namespace {

std::string regimes_of(const LakeSeries& s) {
    std::string out;
    for (Regime r : s.regime) out += regime_code(r);
    return out;
}

LakeSeries from_regimes(const std::string& codes) {
    std::vector<fixtures::Day> days;
    for (char c : codes) days.push_back({c, 0.4, 0.1, -0.1, 0.05});
    return fixtures::build(days);
}

// A random valid series with observations in the right places.
LakeSeries random_series(testgen::Gen& g) {
    std::vector<fixtures::Day> days;
    const int n = g.integer(1, 40);
    for (int t = 0; t < n; ++t) {
        fixtures::Day d;
        d.regime = g.coin() ? 'S' : 'M';
        d.epi_fraction = g.uniform(0.05, 0.95);
        d.f_epi = g.uniform(-2, 2);
        d.f_hyp = g.uniform(-2, 2);
        d.f_total = g.uniform(-2, 2);
        if (g.coin(0.3)) (d.regime == 'S' ? d.obs_epi : d.obs_total) = g.uniform(0, 14);
        if (d.regime == 'S' && g.coin(0.3)) d.obs_hyp = g.uniform(0, 14);
        days.push_back(d);
    }
    auto s = fixtures::build(days, g.uniform(1e2, 1e8), static_cast<std::size_t>(g.integer(0, 3)));
    for (double& x : s.features) x = g.uniform(-5, 5) / 3.0;
    return s;
}

bool has_issue(const ValidationReport& r, const std::string& text) {
    for (const auto& i : r.issues)
        if (i.message == text) return true;
    return false;
}

}  // namespace

TEST_CASE("minimal csv loads as all-mixed series") {
    const auto s = parse_series("date,regime,v_total,f_exo_total\n1,M,100,0.1\n2,M,100,0\n3,M,100,-0.2\n", "x");
    CHECK(s.size() == 3);
    CHECK(regimes_of(s) == "MMM");
    CHECK(s.feature_count == 0);
    CHECK(*s.f_exo_total[2] == doctest::Approx(-0.2));
    CHECK(s.lake_id == "x");
}

TEST_CASE("load errors name the offending column or row") {
    SUBCASE("missing column") {
        try {
            parse_series("date,regime,f_exo_total\n1,M,0\n", "x");
            FAIL("expected SchemaError");
        } catch (const SchemaError& e) {
            CHECK(std::string(e.what()).find("v_total") != std::string::npos);
        }
    }
    SUBCASE("dates out of order") {
        CHECK_THROWS_AS(parse_series("date,regime,v_total,f_exo_total\n1,M,100,0\n3,M,100,0\n", "x"),
                        OrderingError);
        CHECK_THROWS_AS(parse_series("date,regime,v_total,f_exo_total\n2,M,100,0\n1,M,100,0\n", "x"),
                        OrderingError);
    }
    SUBCASE("non-positive volume cites its row") {
        try {
            parse_series("date,regime,v_total,f_exo_total\n1,M,100,0\n2,M,0,0\n", "x");
            FAIL("expected DomainError");
        } catch (const DomainError& e) {
            CHECK(std::string(e.what()).find("row 2") != std::string::npos);
        }
    }
    SUBCASE("layer volumes that do not add up") {
        const std::string text =
            "date,regime,v_total,v_epi,v_hyp,f_exo_total,f_exo_epi,f_exo_hyp\n"
            "1,M,100,,,0,,\n"
            "2,S,100,40,50,,0,0\n";
        try {
            parse_series(text, "x");
            FAIL("expected DomainError");
        } catch (const DomainError& e) {
            CHECK(std::string(e.what()).find("row 2") != std::string::npos);
        }
    }
    SUBCASE("bad regime code") {
        CHECK_THROWS_AS(parse_series("date,regime,v_total,f_exo_total\n1,X,100,0\n", "x"), DomainError);
    }
    SUBCASE("gap in feature columns") {
        CHECK_THROWS_AS(parse_series("date,regime,v_total,f_exo_total,feat_1\n1,M,100,0,3\n", "x"), SchemaError);
    }
}

TEST_CASE("validation flags each problem once") {
    auto s = fixtures::ten_day_window();
    CHECK(validate_series(s).ok());

    SUBCASE("missing hypolimnion volume") {
        s.v_hyp[3].reset();
        const auto r = validate_series(s);
        REQUIRE(r.issues.size() == 1);
        CHECK(r.issues[0].message == "missing hypolimnion volume");
        CHECK(r.issues[0].date == 4);
    }
    SUBCASE("total observation on a stratified day") {
        s.obs_total[4] = 7.0;
        const auto r = validate_series(s);
        REQUIRE(r.issues.size() == 1);
        CHECK(r.issues[0].message == "observation/regime mismatch");
    }
    SUBCASE("layer observation on a mixed day") {
        s.obs_hyp[0] = 7.0;
        CHECK(has_issue(validate_series(s), "observation/regime mismatch"));
    }
    SUBCASE("date gap") {
        s.dates[5] += 1;
        CHECK(has_issue(validate_series(s), "dates not strictly increasing with unit spacing"));
    }
}

TEST_CASE("segment_regimes splits maximal runs") {
    CHECK(segment_regimes(from_regimes("MMSSSM")) ==
          std::vector<RegimeSpan>{{1, 2, Regime::Mixed}, {3, 5, Regime::Stratified}, {6, 6, Regime::Mixed}});
    CHECK(segment_regimes(from_regimes("SSSS")) == std::vector<RegimeSpan>{{1, 4, Regime::Stratified}});
    const auto alt = segment_regimes(from_regimes("MSMS"));
    REQUIRE(alt.size() == 4);
    for (std::size_t i = 0; i < alt.size(); ++i) CHECK(alt[i].start_day == alt[i].end_day);
}

TEST_CASE("property: spans reproduce the regime sequence") {
    testgen::Gen g(11);
    for (int trial = 0; trial < 300; ++trial) {
        const auto s = random_series(g);
        REQUIRE(validate_series(s).ok());
        std::string rebuilt;
        int expected_start = s.dates.front();
        for (const auto& span : segment_regimes(s)) {
            CHECK(span.start_day == expected_start);
            rebuilt.append(static_cast<std::size_t>(span.end_day - span.start_day + 1), regime_code(span.regime));
            expected_start = span.end_day + 1;
        }
        CHECK(rebuilt == regimes_of(s));
    }
}

TEST_CASE("property: write then load is the identity on numeric payload") {
    testgen::Gen g(12);
    const auto dir = std::filesystem::temp_directory_path() / "lakedo_lake_data_test";
    std::filesystem::create_directories(dir);
    for (int trial = 0; trial < 100; ++trial) {
        const auto s = random_series(g);
        const auto path = dir / "lake.csv";
        write_series(s, path);
        const auto back = load_series(path);
        REQUIRE(back.size() == s.size());
        CHECK(back.dates == s.dates);
        CHECK(back.regime == s.regime);
        CHECK(back.features == s.features);
        CHECK(back.v_total == s.v_total);
        CHECK(back.v_epi == s.v_epi);
        CHECK(back.f_exo_hyp == s.f_exo_hyp);
        CHECK(back.obs_epi == s.obs_epi);
        CHECK(back.obs_total == s.obs_total);
        CHECK(format_series(back) == format_series(s));
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("observation mask lists observed rows per task") {
    const auto s = fixtures::ten_day_window();
    const auto m = observation_mask(s);
    CHECK(m.epi == std::vector<std::size_t>{2, 4, 7});
    CHECK(m.hyp == std::vector<std::size_t>{2, 5, 7});
    CHECK(m.total == std::vector<std::size_t>{0, 8});
    CHECK(m.size() == 8);
}

TEST_CASE("whole-column flux and epilimnion volume change") {
    const auto s = fixtures::ten_day_window();
    CHECK(s.total_flux(0) == doctest::Approx(0.3));
    // Volume-weighted layer fluxes on a stratified day.
    CHECK(s.total_flux(2) == doctest::Approx(0.4 * 0.2 + 0.6 * -0.4));
    CHECK(s.relative_epi_change(0) == 0.0);
    CHECK(s.relative_epi_change(2) == 0.0);
    CHECK(s.relative_epi_change(3) == doctest::Approx(0.05 / 0.40));
    CHECK(s.relative_epi_change(6) == doctest::Approx(0.15 / 0.50));
}
