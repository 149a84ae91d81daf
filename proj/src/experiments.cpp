#include "ionwave/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <sstream>
#include <thread>

#include "ionwave/jacobian.hpp"
#include "ionwave/oracle.hpp"

namespace ionwave {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

std::string fmt(Complex v) { return fmt(v.real()) + (v.imag() < 0 ? "-" : "+") + fmt(std::abs(v.imag())) + "i"; }

template <class Fn>
void parallel_for(std::size_t count, std::size_t workers, Fn&& fn) {
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) fn(i);
        });
    for (auto& th : pool) th.join();
}

void add_settings_provenance(RunResult& r, const IntegratorSettings& s) {
    r.provenance.emplace_back("method", to_string(s.method));
    r.provenance.emplace_back("rtol", fmt(s.rtol));
    r.provenance.emplace_back("atol", fmt(s.atol));
}

}  // namespace

Scenario Scenario::custom(double phase) {
    if (!(phase >= 0.0 && phase < kTwoPi)) throw InvalidParameter("phase", "custom scenario phase must lie in [0, 2 pi)");
    return Scenario{ScenarioKind::custom, phase};
}

std::string Scenario::label() const {
    switch (kind) {
        case ScenarioKind::no_interaction: return "No int.";
        case ScenarioKind::carrier_only: return "Carrier";
        case ScenarioKind::jc_only: return "JC";
        case ScenarioKind::constructive: return "CI";
        case ScenarioKind::destructive: return "DI";
        case ScenarioKind::custom: return "custom";
    }
    return "?";
}

std::string Scenario::key() const {
    switch (kind) {
        case ScenarioKind::no_interaction: return "no_interaction";
        case ScenarioKind::carrier_only: return "carrier_only";
        case ScenarioKind::jc_only: return "jc_only";
        case ScenarioKind::constructive: return "constructive";
        case ScenarioKind::destructive: return "destructive";
        case ScenarioKind::custom: return "custom";
    }
    return "?";
}

std::optional<ScenarioKind> parse_scenario_kind(std::string_view key) {
    if (key == "no_interaction") return ScenarioKind::no_interaction;
    if (key == "carrier_only") return ScenarioKind::carrier_only;
    if (key == "jc_only") return ScenarioKind::jc_only;
    if (key == "constructive") return ScenarioKind::constructive;
    if (key == "destructive") return ScenarioKind::destructive;
    if (key == "custom") return ScenarioKind::custom;
    return std::nullopt;
}

namespace {

struct SingleIonDrive {
    Complex omega_tilde;
    Complex omega2;
};

// JC field g*alpha and carrier g*|alpha| arranged per scenario.
SingleIonDrive single_ion_drive(const Scenario& sc, Complex alpha, double g) {
    const double mag = std::abs(alpha);
    switch (sc.kind) {
        case ScenarioKind::no_interaction: return {};
        case ScenarioKind::carrier_only: return {{}, g * mag};
        case ScenarioKind::jc_only: return {g * alpha, {}};
        case ScenarioKind::constructive: return {g * mag, g * mag};
        case ScenarioKind::destructive: return {-g * mag, g * mag};
        case ScenarioKind::custom: return {g * mag, g * mag * std::polar(1.0, sc.phase)};
    }
    return {};
}

}  // namespace

RunResult run_single_ion(const Scenario& scenario, Complex alpha, double g, double gt_max, std::size_t samples,
                         const IntegratorSettings& settings) {
    if (samples < 2) throw InvalidParameter("samples", "need at least 2 samples");
    if (!(g > 0.0)) throw InvalidParameter("coupling", "single-ion runs need g > 0");
    if (!(gt_max > 0.0)) throw InvalidParameter("gt_max", "must be positive");
    const SingleIonDrive d = single_ion_drive(scenario, alpha, g);
    // integrate directly in gt, so the drive is scaled by 1/g
    const Complex w_scaled = (d.omega_tilde + d.omega2) / g;
    const Rhs rhs = [w_scaled](double, std::span<const double> y, std::span<double> dy) {
        const Bloch ds = single_ion_rhs(0.0, Bloch{y[0], y[1], y[2]}, w_scaled, Complex{});
        dy[0] = ds.x;
        dy[1] = ds.y;
        dy[2] = ds.z;
    };
    const std::vector<double> grid = uniform_grid(0.0, gt_max, samples);
    const std::array<double, 3> y0{0.0, 0.0, -1.0};
    RunResult r;
    Solution sol;
    try {
        sol = integrate(rhs, nullptr, y0, {0.0, gt_max}, settings, grid);
    } catch (const IntegrationError& e) {
        throw IntegrationError("single-ion " + scenario.key() + ": " + e.what(), e.last_time());
    }
    r.stats = sol.stats;
    r.series = TimeSeries(sol.times);
    std::vector<double> pe, norm;
    for (const auto& y : sol.states) {
        const Bloch b{y[0], y[1], y[2]};
        pe.push_back(excited_population(b));
        norm.push_back(bloch_norm(b));
    }
    double max_pe = 0.0, drift = 0.0;
    for (std::size_t i = 0; i < pe.size(); ++i) {
        max_pe = std::max(max_pe, pe[i]);
        drift = std::max(drift, std::abs(norm[i] - 1.0));
    }
    r.series.add_column("P_e", std::move(pe));
    r.series.add_column("bloch_norm", std::move(norm));
    r.metrics["max_P_e"] = max_pe;
    r.metrics["bloch_norm_drift"] = drift;
    r.provenance = {{"experiment", "single_ion"},
                    {"scenario", scenario.key()},
                    {"alpha", fmt(alpha)},
                    {"g", fmt(g)},
                    {"omega_tilde", fmt(d.omega_tilde)},
                    {"omega2", fmt(d.omega2)},
                    {"gt_max", fmt(gt_max)},
                    {"samples", std::to_string(samples)}};
    add_settings_provenance(r, settings);
    return r;
}

DriveConfig chain_drive(const Scenario& scenario) {
    switch (scenario.kind) {
        case ScenarioKind::no_interaction: return DriveConfig::none();
        case ScenarioKind::carrier_only: return DriveConfig{false, true, TrackingCarrier{0.0}};
        case ScenarioKind::jc_only: return DriveConfig::jc_only();
        case ScenarioKind::constructive: return DriveConfig::tracking(0.0);
        case ScenarioKind::destructive: return DriveConfig::tracking(std::numbers::pi);
        case ScenarioKind::custom: return DriveConfig::tracking(scenario.phase);
    }
    return {};
}

double reflection_contamination(const ChainParams& params, double t_max, std::size_t probes) {
    const EigenmodeBasis small(params.n_ions, params.hop);
    const EigenmodeBasis large(2 * params.n_ions, params.hop);
    std::vector<Complex> a_small(params.n_ions, Complex{}), a_large(2 * params.n_ions, Complex{});
    a_small[0] = params.alpha0;
    a_large[0] = params.alpha0;
    const std::size_t m = params.driven_site - 1;
    double worst = 0.0;
    for (std::size_t i = 1; i <= probes; ++i) {
        const double t = t_max * static_cast<double>(i) / static_cast<double>(probes);
        const Complex x = small.propagate(a_small, t)[m];
        const Complex y = large.propagate(a_large, t)[m];
        worst = std::max(worst, std::abs(x - y));
    }
    return worst;
}

std::map<std::string, double> chain_metrics(const TimeSeries& series) {
    std::map<std::string, double> m;
    const auto& pe = series.column("P_e");
    const auto& norm = series.column("bloch_norm");
    const auto& exc = series.column("excitation");
    const auto& trans = series.column("transmitted");
    const auto& total = series.column("phonon_total");
    double max_pe = 0.0, norm_drift = 0.0, exc_drift = 0.0;
    double exc_min = exc.front(), exc_max = exc.front();
    for (std::size_t i = 0; i < pe.size(); ++i) {
        max_pe = std::max(max_pe, pe[i]);
        norm_drift = std::max(norm_drift, std::abs(norm[i] - 1.0));
        exc_drift = std::max(exc_drift, std::abs(exc[i] - exc.front()));
        exc_min = std::min(exc_min, exc[i]);
        exc_max = std::max(exc_max, exc[i]);
    }
    m["max_P_e"] = max_pe;
    m["bloch_norm_drift"] = norm_drift;
    m["excitation_drift"] = exc_drift;
    m["excitation_variation"] = exc_max - exc_min;
    m["transmitted_energy"] = trans.back();
    m["transmission"] = total.back() > 0.0 ? trans.back() / total.back() : 0.0;
    return m;
}

RunResult run_chain(const DriveConfig& drive, const ChainParams& params, double jt_max, std::size_t samples,
                    const IntegratorSettings& settings) {
    params.validate();
    if (samples < 2) throw InvalidParameter("samples", "need at least 2 samples");
    if (!(jt_max > 0.0)) throw InvalidParameter("jt_max", "must be positive");
    const double time_unit = params.hop > 0.0 ? 1.0 / params.hop : 1.0;
    const double t_max = jt_max * time_unit;

    RunResult r;
    r.driven_site = params.driven_site;
    const double contamination = reflection_contamination(params, t_max);
    if (contamination > 1e-6) {
        std::ostringstream os;
        os << "far-end reflection reaches the driven site before Jt = " << jt_max << " (|delta alpha_m| = "
           << contamination << "); use a longer chain";
        r.warnings.push_back(os.str());
    }

    FreeAmplitude reference;
    if (drive.tracks_reference()) reference = make_free_reference(params);
    const ChainSystem system(params, drive, reference);
    const std::vector<double> jt_grid = uniform_grid(0.0, jt_max, samples);
    std::vector<double> t_grid(jt_grid.size());
    for (std::size_t i = 0; i < jt_grid.size(); ++i) t_grid[i] = jt_grid[i] * time_unit;
    t_grid.back() = t_max;

    const auto y0 = initial_state(params).to_flat();
    const Rhs rhs = make_rhs(system);
    const JacobianFn jac = make_jacobian(system);
    const Solution sol = integrate(rhs, settings.method == Method::esdirk ? jac : JacobianFn{}, y0, {0.0, t_max},
                                   settings, t_grid);
    r.stats = sol.stats;

    const std::size_t n = params.n_ions;
    const std::size_t m = params.driven_site - 1;
    std::vector<double> pe, next_sq, norm, exc, trans, total;
    r.site_populations.reserve(sol.states.size());
    for (const auto& y : sol.states) {
        const ChainState st = ChainState::from_flat(y);
        std::vector<double> pops(n);
        double sum = 0.0, beyond = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            pops[k] = std::norm(st.amplitudes[k]);
            sum += pops[k];
            if (k > m) beyond += pops[k];
        }
        pe.push_back(excited_population(st));
        next_sq.push_back(m + 1 < n ? pops[m + 1] : 0.0);
        norm.push_back(bloch_norm(st));
        exc.push_back(sum + excited_population(st));
        trans.push_back(beyond);
        total.push_back(sum);
        r.site_populations.push_back(std::move(pops));
        r.site_amplitudes.push_back(st.amplitudes);
    }
    r.series = TimeSeries(jt_grid);
    r.series.add_column("P_e", std::move(pe));
    r.series.add_column("alpha_next_sq", std::move(next_sq));
    r.series.add_column("bloch_norm", std::move(norm));
    r.series.add_column("excitation", std::move(exc));
    r.series.add_column("transmitted", std::move(trans));
    r.series.add_column("phonon_total", std::move(total));
    r.metrics = chain_metrics(r.series);

    std::string drive_desc = "none";
    if (drive.jc_on) drive_desc = "jc";
    if (drive.carrier_on) {
        if (const auto* tc = std::get_if<TrackingCarrier>(&drive.carrier_mode))
            drive_desc += "+tracking(" + fmt(tc->phase) + ")";
        else
            drive_desc += "+constant(" + fmt(std::get<ConstantCarrier>(drive.carrier_mode).omega2) + ")";
    }
    r.provenance = {{"experiment", "chain"},
                    {"drive", drive_desc},
                    {"n_ions", std::to_string(params.n_ions)},
                    {"hop", fmt(params.hop)},
                    {"coupling", fmt(params.coupling)},
                    {"alpha0", fmt(params.alpha0)},
                    {"driven_site", std::to_string(params.driven_site)},
                    {"jt_max", fmt(jt_max)},
                    {"samples", std::to_string(samples)}};
    add_settings_provenance(r, settings);
    return r;
}

RunResult run_chain(const Scenario& scenario, const ChainParams& params, double jt_max, std::size_t samples,
                    const IntegratorSettings& settings) {
    try {
        RunResult r = run_chain(chain_drive(scenario), params, jt_max, samples, settings);
        r.provenance.insert(r.provenance.begin() + 1, {"scenario", scenario.key()});
        if (scenario.kind == ScenarioKind::custom) r.provenance.insert(r.provenance.begin() + 2, {"phase", fmt(scenario.phase)});
        return r;
    } catch (const IntegrationError& e) {
        throw IntegrationError("chain " + scenario.key() + ": " + e.what(), e.last_time());
    }
}

double transmission(const RunResult& result, std::size_t site_cut, double t) {
    const auto& times = result.series.times();
    if (times.empty() || result.site_populations.empty()) throw std::invalid_argument("transmission: empty series");
    if (t < times.front() || t > times.back()) throw std::out_of_range("transmission: t outside the sampled range");
    auto ratio = [&](std::size_t i) {
        const auto& pops = result.site_populations[i];
        double sum = 0.0, beyond = 0.0;
        for (std::size_t k = 0; k < pops.size(); ++k) {
            sum += pops[k];
            if (k + 1 > site_cut) beyond += pops[k];
        }
        return sum > 0.0 ? beyond / sum : 0.0;
    };
    const auto it = std::lower_bound(times.begin(), times.end(), t);
    const auto hi = static_cast<std::size_t>(it - times.begin());
    if (times[hi] == t || hi == 0) return ratio(hi);
    const std::size_t lo = hi - 1;
    const double w = (t - times[lo]) / (times[hi] - times[lo]);
    return (1.0 - w) * ratio(lo) + w * ratio(hi);
}

std::vector<double> default_phase_grid(std::size_t n) {
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = kTwoPi * static_cast<double>(i) / static_cast<double>(n);
    return g;
}

std::vector<double> default_ratio_grid(std::size_t n) {
    if (n < 2) return {1.0};
    std::vector<double> g(n);
    const double lo = std::log10(0.1), hi = std::log10(100.0);
    for (std::size_t i = 0; i < n; ++i)
        g[i] = std::pow(10.0, lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1));
    return g;
}

std::vector<PhaseRow> phase_sweep(const ChainParams& params, const std::vector<double>& phases, double jt_max,
                                  const SweepOptions& options) {
    if (phases.empty()) throw std::invalid_argument("phase_sweep: empty phase grid");
    std::vector<PhaseRow> rows(phases.size());
    parallel_for(phases.size(), options.workers, [&](std::size_t i) {
        rows[i].phase = phases[i];
        try {
            const RunResult r =
                run_chain(DriveConfig::tracking(phases[i]), params, jt_max, options.samples, options.settings);
            rows[i].max_pe = r.metrics.at("max_P_e");
            rows[i].transmission = r.metrics.at("transmission");
        } catch (const std::exception& e) {
            rows[i].error = e.what();
        }
    });
    std::stable_sort(rows.begin(), rows.end(), [](const PhaseRow& a, const PhaseRow& b) { return a.phase < b.phase; });
    return rows;
}

std::vector<BlockadeRow> blockade_sweep(const ChainParams& params, const std::vector<double>& ratios, double jt_max,
                                        const SweepOptions& options, const Scenario& scenario) {
    if (ratios.empty()) throw std::invalid_argument("blockade_sweep: empty ratio grid");
    std::vector<BlockadeRow> rows(ratios.size());
    parallel_for(ratios.size(), options.workers, [&](std::size_t i) {
        rows[i].ratio = ratios[i];
        try {
            ChainParams p = params;
            p.coupling = ratios[i] * params.hop;
            const RunResult r = run_chain(scenario, p, jt_max, options.samples, options.settings);
            rows[i].transmission = r.metrics.at("transmission");
            rows[i].max_pe = r.metrics.at("max_P_e");
        } catch (const std::exception& e) {
            rows[i].error = e.what();
        }
    });
    std::stable_sort(rows.begin(), rows.end(), [](const BlockadeRow& a, const BlockadeRow& b) { return a.ratio < b.ratio; });
    return rows;
}

QuantumGap single_ion_quantum_gap(const Scenario& scenario, Complex alpha, double g, double gt_max,
                                  std::size_t samples, std::size_t fock_dim) {
    QuantumGap gap;
    gap.scenario = scenario;
    const RunResult semi = run_single_ion(scenario, alpha, g, gt_max, samples);
    gap.semiclassical = semi.series.column("P_e");

    // The exact model needs the phonon state itself, not the frozen field.
    const double mag = std::abs(alpha);
    Complex fock_alpha = alpha;
    double fock_g = g;
    Complex omega2{};
    switch (scenario.kind) {
        case ScenarioKind::no_interaction: fock_g = 0.0; break;
        case ScenarioKind::carrier_only: fock_g = 0.0; omega2 = g * mag; break;
        case ScenarioKind::jc_only: break;
        case ScenarioKind::constructive: fock_alpha = mag; omega2 = g * mag; break;
        case ScenarioKind::destructive: fock_alpha = -mag; omega2 = g * mag; break;
        case ScenarioKind::custom: fock_alpha = mag; omega2 = g * mag * std::polar(1.0, scenario.phase); break;
    }
    const std::vector<double> grid = uniform_grid(0.0, gt_max / g, samples);
    IntegratorSettings s;
    s.rtol = 1e-10;
    s.atol = 1e-12;
    const TimeSeries exact = fock_single_ion(FockConfig{fock_dim, fock_alpha}, fock_g, omega2, {0.0, gt_max / g}, grid, s);
    gap.exact = exact.column("P_e");
    for (std::size_t i = 0; i < gap.exact.size(); ++i)
        gap.max_abs_gap = std::max(gap.max_abs_gap, std::abs(gap.exact[i] - gap.semiclassical[i]));
    return gap;
}

}  // namespace ionwave
