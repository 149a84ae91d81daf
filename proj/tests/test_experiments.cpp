#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ionwave/experiments.hpp"
#include "ionwave/oracle.hpp"

using namespace ionwave;

namespace {

constexpr double kPi = std::numbers::pi;

double sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double w = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) w = std::max(w, std::abs(a[i] - b[i]));
    return w;
}

double max_of(const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); }

}  // namespace

TEST_CASE("scenarios") {
    CHECK(Scenario{ScenarioKind::no_interaction}.label() == "No int.");
    CHECK(Scenario{ScenarioKind::carrier_only}.label() == "Carrier");
    CHECK(Scenario{ScenarioKind::jc_only}.label() == "JC");
    CHECK(Scenario{ScenarioKind::constructive}.label() == "CI");
    CHECK(Scenario{ScenarioKind::destructive}.label() == "DI");
    CHECK(Scenario::custom(1.0).phase == 1.0);
    CHECK_THROWS_AS(Scenario::custom(2 * kPi), InvalidParameter);
    CHECK_THROWS_AS(Scenario::custom(-0.1), InvalidParameter);
    for (auto k : {ScenarioKind::no_interaction, ScenarioKind::carrier_only, ScenarioKind::jc_only,
                   ScenarioKind::constructive, ScenarioKind::destructive, ScenarioKind::custom})
        CHECK(parse_scenario_kind(Scenario{k}.key()) == k);
    CHECK_FALSE(parse_scenario_kind("bogus").has_value());
}

TEST_CASE("single ion scenarios") {
    SUBCASE("destructive interference keeps the ion dark") {
        const RunResult r = run_single_ion({ScenarioKind::destructive}, -1.0, 1.0, 10.0, 1001);
        CHECK(max_of(r.series.column("P_e")) < 1e-9);
        const RunResult r2 = run_single_ion({ScenarioKind::destructive}, 1.0, 1.0, 10.0, 1001);
        CHECK(max_of(r2.series.column("P_e")) < 1e-9);
    }
    SUBCASE("constructive interference doubles the Rabi rate") {
        const RunResult r = run_single_ion({ScenarioKind::constructive}, 1.0, 1.0, 10.0, 1001);
        const auto& t = r.series.times();
        double w = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i) w = std::max(w, std::abs(r.series.column("P_e")[i] - std::pow(std::sin(t[i]), 2)));
        CHECK(w < 1e-7);
    }
    SUBCASE("carrier alone") {
        const RunResult r = run_single_ion({ScenarioKind::carrier_only}, 1.0, 1.0, 10.0, 1001);
        const auto& t = r.series.times();
        double w = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i) w = std::max(w, std::abs(r.series.column("P_e")[i] - std::pow(std::sin(t[i] / 2), 2)));
        CHECK(w < 1e-7);
    }
    SUBCASE("time axis is gt for any g") {
        const RunResult a = run_single_ion({ScenarioKind::jc_only}, 1.0, 1.0, 10.0, 101);
        const RunResult b = run_single_ion({ScenarioKind::jc_only}, 1.0, 3.5, 10.0, 101);
        CHECK(a.series.times() == b.series.times());
        CHECK(sup_diff(a.series.column("P_e"), b.series.column("P_e")) < 1e-8);
    }
    SUBCASE("custom phase pi matches destructive") {
        const RunResult r = run_single_ion(Scenario::custom(kPi), 1.0, 1.0, 10.0, 201);
        CHECK(max_of(r.series.column("P_e")) < 1e-9);
    }
    SUBCASE("bad input") {
        CHECK_THROWS_AS(run_single_ion({ScenarioKind::jc_only}, 1.0, 1.0, 10.0, 1), InvalidParameter);
        CHECK_THROWS_AS(run_single_ion({ScenarioKind::jc_only}, 1.0, 0.0, 10.0, 10), InvalidParameter);
    }
    SUBCASE("integration failure names the scenario") {
        IntegratorSettings s;
        s.max_steps = 3;
        CHECK_THROWS_WITH_AS(run_single_ion({ScenarioKind::constructive}, 1.0, 1.0, 10.0, 11, s),
                             doctest::Contains("constructive"), IntegrationError);
    }
}

TEST_CASE("chain runs") {
    const ChainParams p;
    const RunResult free = run_chain({ScenarioKind::no_interaction}, p, 30.0, 301);
    const RunResult di = run_chain({ScenarioKind::destructive}, p, 30.0, 301);
    const RunResult jc = run_chain({ScenarioKind::jc_only}, p, 30.0, 301);
    const RunResult ci = run_chain({ScenarioKind::constructive}, p, 30.0, 301);

    SUBCASE("free run follows the eigenmode solution") {
        double worst = 0.0;
        const auto& t = free.series.times();
        for (std::size_t i = 0; i < t.size(); ++i) {
            const auto exact = eigenmode_propagate(p, t[i]);
            for (std::size_t k = 0; k < p.n_ions; ++k) worst = std::max(worst, std::abs(free.site_amplitudes[i][k] - exact[k]));
        }
        CHECK(worst < 1e-6);
        CHECK(free.warnings.empty());
    }
    SUBCASE("destructive drive is transparent") {
        CHECK(max_of(di.series.column("P_e")) < 1e-6);
        CHECK(sup_diff(di.series.column("alpha_next_sq"), free.series.column("alpha_next_sq")) < 1e-6);
    }
    SUBCASE("JC alone reduces the transmitted energy") {
        CHECK(jc.metrics.at("transmitted_energy") < free.metrics.at("transmitted_energy"));
        CHECK(ci.metrics.at("transmitted_energy") < jc.metrics.at("transmitted_energy"));
    }
    SUBCASE("conservation diagnostics") {
        for (const RunResult* r : {&free, &di, &jc, &ci}) CHECK(r->metrics.at("bloch_norm_drift") < 1e-8);
        for (const RunResult* r : {&free, &jc}) CHECK(r->metrics.at("excitation_drift") < 1e-8);
        CHECK(ci.metrics.at("excitation_variation") > 1e-3);
    }
    SUBCASE("metrics are a pure function of the series") {
        for (const RunResult* r : {&free, &di, &jc, &ci}) CHECK(chain_metrics(r->series) == r->metrics);
    }
    SUBCASE("transmission") {
        CHECK(transmission(free, 50, 0.0) == 0.0);
        CHECK(transmission(free, 50, 30.0) == doctest::Approx(free.metrics.at("transmission")));
        CHECK(transmission(free, 10, 30.0) > 0.99);
        const double mid = transmission(free, 50, 20.05);
        const double lo = transmission(free, 50, 20.0), hi = transmission(free, 50, 20.1);
        CHECK(mid == doctest::Approx(0.5 * (lo + hi)));
        CHECK_THROWS_AS(transmission(free, 50, 31.0), std::out_of_range);
        CHECK_THROWS(transmission(RunResult{}, 50, 0.0));
    }
}

TEST_CASE("phonon blockade") {
    ChainParams p;
    p.coupling = 50.0;
    const RunResult r = run_chain({ScenarioKind::jc_only}, p, 30.0, 301);
    MESSAGE("g/J = 50 transmission ", r.metrics.at("transmission"));
    CHECK(r.metrics.at("transmission") < 0.01);
}

TEST_CASE("scenario degeneracy without a pulse") {
    ChainParams p;
    p.alpha0 = 0.0;
    const RunResult a = run_chain({ScenarioKind::constructive}, p, 30.0, 61);
    const RunResult b = run_chain({ScenarioKind::destructive}, p, 30.0, 61);
    CHECK(a.series.column("P_e") == b.series.column("P_e"));
    CHECK(a.site_populations == b.site_populations);
    CHECK(max_of(a.series.column("P_e")) == 0.0);
    CHECK(max_of(a.series.column("phonon_total")) == 0.0);
}

TEST_CASE("doubling the chain leaves the driven site unchanged") {
    ChainParams small, large;
    large.n_ions = 200;
    large.driven_site = 50;
    for (auto k : {ScenarioKind::jc_only, ScenarioKind::constructive, ScenarioKind::destructive}) {
        const RunResult a = run_chain({k}, small, 30.0, 301), b = run_chain({k}, large, 30.0, 301);
        CAPTURE(Scenario{k}.key());
        CHECK(sup_diff(a.series.column("P_e"), b.series.column("P_e")) < 1e-6);
        CHECK(sup_diff(a.series.column("alpha_next_sq"), b.series.column("alpha_next_sq")) < 1e-6);
    }
}

TEST_CASE("reflection warning") {
    ChainParams p = ChainParams::centered(40);
    const RunResult r = run_chain({ScenarioKind::jc_only}, p, 40.0, 81);
    REQUIRE_FALSE(r.warnings.empty());
    CHECK(r.warnings[0].find("reflection") != std::string::npos);
    CHECK(reflection_contamination(ChainParams{}, 30.0) < 1e-6);
}

TEST_CASE("phase sweep") {
    const ChainParams p;
    std::vector<double> phases = default_phase_grid(16);
    CHECK(phases.size() == 16);
    CHECK(phases.front() == 0.0);
    CHECK(phases.back() < 2 * kPi);
    phases.push_back(2 * kPi);
    const auto rows = phase_sweep(p, phases, 30.0, SweepOptions{201, 2, {}});
    REQUIRE(rows.size() == 17);
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].phase > rows[i - 1].phase);
    for (const auto& r : rows) CHECK(r.error.empty());
    const auto at_pi = std::find_if(rows.begin(), rows.end(), [](const PhaseRow& r) { return r.phase == kPi; });
    REQUIRE(at_pi != rows.end());
    CHECK(at_pi->max_pe < 1e-6);
    CHECK(std::abs(rows.front().max_pe - rows.back().max_pe) < 1e-8);
    const auto best = std::max_element(rows.begin(), rows.end(), [](const PhaseRow& a, const PhaseRow& b) { return a.max_pe < b.max_pe; });
    CHECK((best->phase == 0.0 || best->phase == 2 * kPi));
    CHECK_THROWS(phase_sweep(p, {}, 30.0));
}

TEST_CASE("blockade sweep") {
    const ChainParams p;
    const RunResult free = run_chain({ScenarioKind::no_interaction}, p, 30.0, 201);
    SweepOptions opt{201, 2, {}};
    SUBCASE("monotone on the default grid") {
        const auto grid = default_ratio_grid(16);
        CHECK(grid.front() == doctest::Approx(0.1));
        CHECK(grid.back() == doctest::Approx(100.0));
        const auto rows = blockade_sweep(p, grid, 30.0, opt);
        for (std::size_t i = 1; i < rows.size(); ++i) {
            CAPTURE(rows[i].ratio);
            CHECK(rows[i].transmission <= rows[i - 1].transmission + 1e-9);
        }
    }
    SUBCASE("g/J = 0 is free propagation; laboratory ratio blocks") {
        const auto rows = blockade_sweep(p, {0.0, 53.3}, 30.0, opt);
        CHECK(std::abs(rows[0].transmission - free.metrics.at("transmission")) < 1e-9);
        CHECK(rows[1].transmission < 0.01);
    }
    SUBCASE("transparency beats blockade") {
        const auto rows = blockade_sweep(p, {0.5, 5.0, 50.0}, 30.0, opt, {ScenarioKind::destructive});
        for (const auto& r : rows) {
            CAPTURE(r.ratio);
            CHECK(std::abs(r.transmission - free.metrics.at("transmission")) < 1e-6);
        }
    }
    SUBCASE("failures are recorded per point") {
        SweepOptions bad = opt;
        bad.settings.max_steps = 2;
        const auto rows = blockade_sweep(p, {1.0, 2.0}, 30.0, bad);
        REQUIRE(rows.size() == 2);
        for (const auto& r : rows) CHECK_FALSE(r.error.empty());
    }
}

TEST_CASE("semiclassical versus exact single ion") {
    const QuantumGap carrier = single_ion_quantum_gap({ScenarioKind::carrier_only}, 1.0, 1.0, 10.0, 201);
    CHECK(carrier.max_abs_gap < 1e-7);
    const QuantumGap di = single_ion_quantum_gap({ScenarioKind::destructive}, 1.0, 1.0, 10.0, 201);
    const QuantumGap jc = single_ion_quantum_gap({ScenarioKind::jc_only}, 1.0, 1.0, 10.0, 201);
    MESSAGE("alpha = 1 gaps: JC ", jc.max_abs_gap, ", DI ", di.max_abs_gap);
    CHECK(jc.exact.size() == 201);
    CHECK(jc.max_abs_gap > 0.0);
}
