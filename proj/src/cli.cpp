#include "ionwave/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <thread>

namespace ionwave {

std::size_t workers_from_env() {
    const char* v = std::getenv("IONWAVE_WORKERS");
    if (!v || !*v) return 0;
    char* end = nullptr;
    const long n = std::strtol(v, &end, 10);
    if (*end != '\0' || n < 1) throw std::invalid_argument(std::string("IONWAVE_WORKERS must be a positive integer, got '") + v + "'");
    return static_cast<std::size_t>(n);
}

namespace {

void write_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    body(out);
    out.flush();
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

std::filesystem::path with_suffix(const std::filesystem::path& csv, const std::string& tail, const std::string& ext) {
    std::filesystem::path p = csv;
    p.replace_filename(csv.stem().string() + tail + ext);
    return p;
}

void print_stats(std::ostream& err, const std::string& what, const IntegrationStats& s) {
    err << "stats[" << what << "]: accepted=" << s.accepted << " rejected=" << s.rejected << " rhs=" << s.rhs_evals
        << " jacobians=" << s.jacobian_evals << " factorizations=" << s.factorizations
        << " newton_failures=" << s.newton_failures << "\n";
}

}  // namespace

Reproduction reproduce_fig1b(const std::filesystem::path& out_dir, bool provenance) {
    constexpr double g = 1.0, gt_max = 10.0, alpha = 1.0;
    constexpr std::size_t samples = 2001, fock_dim = 40;
    const std::vector<Scenario> order{{ScenarioKind::carrier_only},
                                      {ScenarioKind::jc_only},
                                      {ScenarioKind::constructive},
                                      {ScenarioKind::destructive}};
    const std::vector<std::string> tags{"carrier", "jc", "ci", "di"};

    std::vector<RunResult> runs;
    for (const auto& sc : order) runs.push_back(run_single_ion(sc, alpha, g, gt_max, samples));
    const QuantumGap jc_gap = single_ion_quantum_gap({ScenarioKind::jc_only}, alpha, g, gt_max, samples, fock_dim);

    Reproduction rep;
    std::vector<std::string> header{"t"};
    std::vector<std::vector<double>> cols{runs.front().series.times()};
    for (std::size_t i = 0; i < runs.size(); ++i) {
        header.push_back("P_e_" + tags[i]);
        cols.push_back(runs[i].series.column("P_e"));
        rep.report.emplace_back("max_P_e_" + tags[i], runs[i].metrics.at("max_P_e"));
    }
    header.push_back("P_e_jc_exact");
    cols.push_back(jc_gap.exact);
    rep.report.emplace_back("semiclassical_vs_exact_gap_jc", jc_gap.max_abs_gap);
    for (const auto kind : {ScenarioKind::constructive, ScenarioKind::destructive}) {
        const QuantumGap q = single_ion_quantum_gap({kind}, alpha, g, gt_max, samples, fock_dim);
        rep.report.emplace_back("semiclassical_vs_exact_gap_" + std::string(kind == ScenarioKind::constructive ? "ci" : "di"),
                                q.max_abs_gap);
    }

    std::vector<std::pair<std::string, std::string>> prov{{"figure", "fig1b"},
                                                          {"experiment", "single_ion"},
                                                          {"alpha", format_double(alpha)},
                                                          {"g", format_double(g)},
                                                          {"omega2", "g*|alpha|"},
                                                          {"gt_max", format_double(gt_max)},
                                                          {"samples", std::to_string(samples)},
                                                          {"method", to_string(IntegratorSettings{}.method)},
                                                          {"rtol", format_double(IntegratorSettings{}.rtol)},
                                                          {"atol", format_double(IntegratorSettings{}.atol)},
                                                          {"fock_dim", std::to_string(fock_dim)}};
    for (const auto& [k, v] : rep.report) prov.emplace_back(k, format_double(v));

    std::filesystem::create_directories(out_dir);
    rep.csv = out_dir / "fig1b.csv";
    rep.plot = out_dir / "fig1b.svg";
    write_file(rep.csv, [&](std::ostream& o) { write_csv(o, prov, header, cols, CsvOptions{provenance}); });

    Figure fig{"Single ion: excited-state population", {}};
    PlotPanel panel{"gt", "P_e", {}};
    for (std::size_t i = 0; i < runs.size(); ++i)
        panel.series.push_back(PlotSeries{order[i].label(), runs[i].series.times(), runs[i].series.column("P_e"),
                                          order[i].kind == ScenarioKind::destructive});
    fig.panels.push_back(std::move(panel));
    emit_plot(fig, rep.plot);
    return rep;
}

Reproduction reproduce_fig2c(const std::filesystem::path& out_dir, std::size_t workers, bool provenance) {
    constexpr double jt_max = 30.0;
    constexpr std::size_t samples = 2001;
    const ChainParams params;  // N = 100, g/J = 1, alpha_1 = 1, m = 50
    const std::vector<Scenario> order{{ScenarioKind::no_interaction},
                                      {ScenarioKind::jc_only},
                                      {ScenarioKind::constructive},
                                      {ScenarioKind::destructive}};
    const std::vector<std::string> tags{"noint", "jc", "ci", "di"};

    std::vector<RunResult> runs(order.size());
    std::vector<std::string> errors(order.size());
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (std::size_t w = 0; w < std::min(workers, order.size()); ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < order.size(); i = next++) {
                try {
                    runs[i] = run_chain(order[i], params, jt_max, samples);
                } catch (const std::exception& e) {
                    errors[i] = e.what();
                }
            }
        });
    for (auto& t : pool) t.join();
    for (std::size_t i = 0; i < errors.size(); ++i)
        if (!errors[i].empty()) throw std::runtime_error("fig2c " + tags[i] + ": " + errors[i]);

    Reproduction rep;
    std::vector<std::string> header{"t"};
    std::vector<std::vector<double>> cols{runs.front().series.times()};
    for (std::size_t i = 0; i < runs.size(); ++i) {
        header.push_back("P_e_" + tags[i]);
        cols.push_back(runs[i].series.column("P_e"));
    }
    for (std::size_t i = 0; i < runs.size(); ++i) {
        header.push_back("alpha_next_sq_" + tags[i]);
        cols.push_back(runs[i].series.column("alpha_next_sq"));
    }
    for (std::size_t i = 0; i < runs.size(); ++i) {
        rep.report.emplace_back("max_P_e_" + tags[i], runs[i].metrics.at("max_P_e"));
        rep.report.emplace_back("transmitted_energy_" + tags[i], runs[i].metrics.at("transmitted_energy"));
    }

    std::vector<std::pair<std::string, std::string>> prov{{"figure", "fig2c"},
                                                          {"experiment", "chain"},
                                                          {"n_ions", std::to_string(params.n_ions)},
                                                          {"hop", format_double(params.hop)},
                                                          {"coupling", format_double(params.coupling)},
                                                          {"alpha0", format_double(params.alpha0.real())},
                                                          {"driven_site", std::to_string(params.driven_site)},
                                                          {"jt_max", format_double(jt_max)},
                                                          {"samples", std::to_string(samples)},
                                                          {"method", to_string(IntegratorSettings{}.method)},
                                                          {"rtol", format_double(IntegratorSettings{}.rtol)},
                                                          {"atol", format_double(IntegratorSettings{}.atol)}};
    for (const auto& [k, v] : rep.report) prov.emplace_back(k, format_double(v));
    for (std::size_t i = 0; i < runs.size(); ++i)
        for (const auto& w : runs[i].warnings) prov.emplace_back("warning_" + tags[i], w);

    std::filesystem::create_directories(out_dir);
    rep.csv = out_dir / "fig2c.csv";
    rep.plot = out_dir / "fig2c.svg";
    write_file(rep.csv, [&](std::ostream& o) { write_csv(o, prov, header, cols, CsvOptions{provenance}); });

    const std::string m = std::to_string(params.driven_site), next_site = std::to_string(params.driven_site + 1);
    Figure fig{"Chain of " + std::to_string(params.n_ions) + " ions, g/J = 1", {}};
    PlotPanel pe{"Jt", "P_e at site " + m, {}};
    PlotPanel an{"Jt", "|alpha|^2 at site " + next_site, {}};
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const bool dashed = order[i].kind == ScenarioKind::jc_only || order[i].kind == ScenarioKind::destructive;
        pe.series.push_back(
            PlotSeries{order[i].label(), runs[i].series.times(), runs[i].series.column("P_e"), dashed});
        an.series.push_back(
            PlotSeries{order[i].label(), runs[i].series.times(), runs[i].series.column("alpha_next_sq"), dashed});
    }
    fig.panels.push_back(std::move(pe));
    fig.panels.push_back(std::move(an));
    emit_plot(fig, rep.plot);
    return rep;
}

namespace {

struct Flags {
    std::string config;
    std::size_t n_ions = 100;
    double hop = 1.0;
    double coupling = 1.0;
    std::string delta_phi = "pi";
    double alpha = 1.0;
    double alpha_imag = 0.0;
    std::size_t driven_site = 0;
    std::string scenario = "auto";
    double jt_max = 30.0;
    double gt_max = 10.0;
    std::size_t samples = 2001;
    std::size_t phase_points = 64;
    std::size_t ratio_points = 16;
    double ratio_min = 0.1;
    double ratio_max = 100.0;
    std::string method = "rk54";
    double rtol = 1e-9;
    double atol = 1e-11;
    std::size_t max_steps = 2'000'000;
    std::string output;
    bool plot = false;
    bool wide_csv = false;
    bool no_provenance = false;
    bool verbose = false;

    std::map<std::string, CLI::Option*> opts;
};

void add_run_options(CLI::App& sub, Flags& f, Experiment e) {
    auto& o = f.opts;
    o["config"] = sub.add_option("-c,--config", f.config, "YAML run configuration (flags override its values)");
    const bool chainish = e != Experiment::single_ion;
    if (chainish) {
        o["n_ions"] = sub.add_option("--n-ions", f.n_ions, "number of ions N")->capture_default_str();
        o["hop"] = sub.add_option("--hop", f.hop, "hopping rate J (sets the time unit)")->capture_default_str();
        o["driven_site"] = sub.add_option("--driven-site", f.driven_site, "driven ion m, 1-based (0 = floor((N+1)/2))")
                               ->capture_default_str();
        o["jt_max"] = sub.add_option("--jt-max", f.jt_max, "final dimensionless time Jt")->capture_default_str();
    } else {
        o["gt_max"] = sub.add_option("--gt-max", f.gt_max, "final dimensionless time gt")->capture_default_str();
    }
    if (e != Experiment::blockade_sweep)
        o["coupling"] = sub.add_option("-g,--coupling", f.coupling, "JC coupling g (g/J for chains with J = 1)")
                            ->capture_default_str();
    if (e == Experiment::single_ion || e == Experiment::chain) {
        o["delta_phi"] = sub.add_option("--delta-phi", f.delta_phi, "carrier phase, number or multiple of pi")
                             ->capture_default_str();
    }
    o["alpha"] = sub.add_option("--alpha", f.alpha, "coherent amplitude (real part)")->capture_default_str();
    o["alpha_imag"] = sub.add_option("--alpha-imag", f.alpha_imag, "coherent amplitude (imaginary part)")->capture_default_str();
    if (e != Experiment::phase_sweep)
        o["scenario"] = sub.add_option("--scenario", f.scenario,
                                       "auto (from delta-phi), no_interaction, carrier_only, jc_only, constructive, "
                                       "destructive")
                            ->capture_default_str();
    if (e == Experiment::phase_sweep)
        o["phase_points"] = sub.add_option("--phase-points", f.phase_points, "phases on [0, 2 pi)")->capture_default_str();
    if (e == Experiment::blockade_sweep) {
        o["ratio_points"] = sub.add_option("--ratio-points", f.ratio_points, "log-spaced g/J values")->capture_default_str();
        o["ratio_min"] = sub.add_option("--ratio-min", f.ratio_min, "smallest g/J")->capture_default_str();
        o["ratio_max"] = sub.add_option("--ratio-max", f.ratio_max, "largest g/J")->capture_default_str();
    }
    o["samples"] = sub.add_option("--samples", f.samples, "output samples per run")->capture_default_str();
    o["method"] = sub.add_option("--method", f.method, "integrator: rk54 or esdirk")->capture_default_str();
    o["rtol"] = sub.add_option("--rtol", f.rtol, "relative tolerance")->capture_default_str();
    o["atol"] = sub.add_option("--atol", f.atol, "absolute tolerance")->capture_default_str();
    o["max_steps"] = sub.add_option("--max-steps", f.max_steps, "step budget per run")->capture_default_str();
    o["output"] = sub.add_option("-o,--output", f.output, "CSV path (default <experiment>.csv)");
    o["emit_plot"] = sub.add_flag("--plot", f.plot, "also write an SVG next to the CSV");
    if (e == Experiment::chain) o["wide_csv"] = sub.add_flag("--wide-csv", f.wide_csv, "also write per-site |alpha_k|^2");
    o["provenance"] = sub.add_flag("--no-provenance", f.no_provenance, "omit the # parameter lines");
    sub.add_flag("-v,--verbose", f.verbose, "print integrator statistics");
}

bool given(const Flags& f, const std::string& key) {
    const auto it = f.opts.find(key);
    return it != f.opts.end() && it->second->count() > 0;
}

class UsageError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

RunConfig build_config(const Flags& f, Experiment e) {
    RunConfig c;
    if (given(f, "config")) {
        std::ifstream in(f.config, std::ios::binary);
        if (!in) throw UsageError("cannot read configuration file '" + f.config + "'");
        std::ostringstream buf;
        buf << in.rdbuf();
        try {
            apply_config(c, buf.str());
        } catch (const ConfigError& err) {
            throw UsageError(f.config + ": " + err.what());
        }
    }
    c.experiment = e;
    if (given(f, "n_ions")) c.n_ions = f.n_ions;
    if (given(f, "hop")) c.hop = f.hop;
    if (given(f, "coupling")) c.coupling = f.coupling;
    if (given(f, "delta_phi")) {
        try {
            c.delta_phi = parse_phase(f.delta_phi);
        } catch (const std::invalid_argument& err) {
            throw UsageError(std::string("--delta-phi: ") + err.what());
        }
    }
    if (given(f, "alpha")) c.alpha = f.alpha;
    if (given(f, "alpha_imag")) c.alpha_imag = f.alpha_imag;
    if (given(f, "driven_site")) c.driven_site = f.driven_site;
    if (given(f, "scenario")) {
        if (f.scenario == "auto") {
            c.scenario.reset();
        } else {
            const auto k = parse_scenario_name(f.scenario);
            if (!k || *k == ScenarioKind::custom) throw UsageError("--scenario: unknown scenario '" + f.scenario + "'");
            c.scenario = k;
        }
    }
    if (given(f, "jt_max")) c.jt_max = f.jt_max;
    if (given(f, "gt_max")) c.gt_max = f.gt_max;
    if (given(f, "samples")) c.samples = f.samples;
    if (given(f, "phase_points")) c.phase_points = f.phase_points;
    if (given(f, "ratio_points")) c.ratio_points = f.ratio_points;
    if (given(f, "ratio_min")) c.ratio_min = f.ratio_min;
    if (given(f, "ratio_max")) c.ratio_max = f.ratio_max;
    if (given(f, "method")) {
        const auto m = parse_method(f.method);
        if (!m) throw UsageError("--method must be rk54 or esdirk");
        c.method = *m;
    }
    if (given(f, "rtol")) c.rtol = f.rtol;
    if (given(f, "atol")) c.atol = f.atol;
    if (given(f, "max_steps")) c.max_steps = f.max_steps;
    if (given(f, "output")) c.output_path = f.output;
    if (given(f, "emit_plot")) c.emit_plot = f.plot;
    if (given(f, "wide_csv")) c.wide_csv = f.wide_csv;
    if (given(f, "provenance")) c.provenance = !f.no_provenance;
    try {
        c.validate();
    } catch (const InvalidParameter& err) {
        throw UsageError(std::string("invalid value: ") + err.what());
    }
    return c;
}

void run_single(const RunConfig& c, bool verbose, std::ostream& out, std::ostream& err) {
    const Scenario sc = c.resolved_scenario();
    const RunResult r = run_single_ion(sc, c.alpha0(), c.coupling, c.gt_max, c.samples, c.settings());
    if (verbose) print_stats(err, sc.key(), r.stats);
    const std::filesystem::path csv = c.resolved_output();
    write_file(csv, [&](std::ostream& o) { write_timeseries(r, o, CsvOptions{c.provenance}); });
    out << "wrote " << csv.string() << "\n";
    out << "max_P_e " << format_double(r.metrics.at("max_P_e")) << "\n";
    if (c.emit_plot) {
        const auto svg = with_suffix(csv, "", ".svg");
        emit_plot(Figure{"Single ion, " + sc.label(),
                         {PlotPanel{"gt", "P_e", {PlotSeries{sc.label(), r.series.times(), r.series.column("P_e")}}}}},
                  svg);
        out << "wrote " << svg.string() << "\n";
    }
}

void run_chain_cmd(const RunConfig& c, bool verbose, std::ostream& out, std::ostream& err) {
    const Scenario sc = c.resolved_scenario();
    const ChainParams p = c.chain_params();
    const RunResult r = run_chain(sc, p, c.jt_max, c.samples, c.settings());
    for (const auto& w : r.warnings) err << "warning: " << w << "\n";
    if (verbose) print_stats(err, sc.key(), r.stats);
    const std::filesystem::path csv = c.resolved_output();
    write_file(csv, [&](std::ostream& o) { write_timeseries(r, o, CsvOptions{c.provenance}); });
    out << "wrote " << csv.string() << "\n";
    if (c.wide_csv) {
        const auto wide = with_suffix(csv, "_sites", ".csv");
        write_file(wide, [&](std::ostream& o) { write_site_populations(r, o, CsvOptions{c.provenance}); });
        out << "wrote " << wide.string() << "\n";
    }
    for (const auto& [k, v] : r.metrics) out << k << " " << format_double(v) << "\n";
    if (c.emit_plot) {
        const auto svg = with_suffix(csv, "", ".svg");
        const std::string m = std::to_string(p.driven_site);
        Figure fig{"Chain of " + std::to_string(p.n_ions) + " ions, " + sc.label(), {}};
        fig.panels.push_back(PlotPanel{"Jt", "P_e at site " + m, {{sc.label(), r.series.times(), r.series.column("P_e")}}});
        if (p.driven_site < p.n_ions)
            fig.panels.push_back(PlotPanel{"Jt",
                                           "|alpha|^2 at site " + std::to_string(p.driven_site + 1),
                                           {{sc.label(), r.series.times(), r.series.column("alpha_next_sq")}}});
        emit_plot(fig, svg);
        out << "wrote " << svg.string() << "\n";
    }
}

std::vector<std::pair<std::string, std::string>> sweep_provenance(const RunConfig& c, const ChainParams& p,
                                                                  const std::string& kind) {
    return {{"experiment", kind},
            {"n_ions", std::to_string(p.n_ions)},
            {"hop", format_double(p.hop)},
            {"coupling", format_double(p.coupling)},
            {"alpha0", format_double(p.alpha0.real()) + (p.alpha0.imag() != 0.0 ? "+" + format_double(p.alpha0.imag()) + "i" : "")},
            {"driven_site", std::to_string(p.driven_site)},
            {"jt_max", format_double(c.jt_max)},
            {"samples", std::to_string(c.samples)},
            {"method", to_string(c.method)},
            {"rtol", format_double(c.rtol)},
            {"atol", format_double(c.atol)}};
}

void run_phase_sweep(const RunConfig& c, std::ostream& out, std::ostream& err) {
    const ChainParams p = c.chain_params();
    SweepOptions opt{c.samples, workers_from_env(), c.settings()};
    const auto rows = phase_sweep(p, default_phase_grid(c.phase_points), c.jt_max, opt);
    auto prov = sweep_provenance(c, p, "phase_sweep");
    std::vector<double> ph, pe, tr;
    std::size_t failed = 0;
    for (const auto& r : rows) {
        ph.push_back(r.phase);
        pe.push_back(r.error.empty() ? r.max_pe : std::nan(""));
        tr.push_back(r.error.empty() ? r.transmission : std::nan(""));
        if (!r.error.empty()) {
            ++failed;
            prov.emplace_back("error at delta_phi=" + format_double(r.phase), r.error);
            err << "error at delta_phi=" << format_double(r.phase) << ": " << r.error << "\n";
        }
    }
    const std::filesystem::path csv = c.resolved_output();
    write_file(csv, [&](std::ostream& o) {
        write_csv(o, prov, {"delta_phi", "max_P_e", "transmission"}, {ph, pe, tr}, CsvOptions{c.provenance});
    });
    out << "wrote " << csv.string() << " (" << rows.size() - failed << "/" << rows.size() << " points)\n";
    if (c.emit_plot) {
        const auto svg = with_suffix(csv, "", ".svg");
        emit_plot(Figure{"Interference versus carrier phase",
                         {PlotPanel{"delta phi", "max P_e", {{"max P_e", ph, pe}}},
                          PlotPanel{"delta phi", "transmission", {{"transmission", ph, tr}}}}},
                  svg);
        out << "wrote " << svg.string() << "\n";
    }
    if (failed == rows.size()) throw std::runtime_error("every sweep point failed");
}

void run_blockade_sweep(const RunConfig& c, std::ostream& out, std::ostream& err) {
    const ChainParams p = c.chain_params();
    SweepOptions opt{c.samples, workers_from_env(), c.settings()};
    std::vector<double> ratios(c.ratio_points);
    if (c.ratio_points == 1) {
        ratios[0] = c.ratio_min;
    } else {
        const double lo = std::log10(c.ratio_min), hi = std::log10(c.ratio_max);
        for (std::size_t i = 0; i < c.ratio_points; ++i)
            ratios[i] = std::pow(10.0, lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(c.ratio_points - 1));
    }
    const Scenario sc = c.scenario ? c.resolved_scenario() : Scenario{ScenarioKind::jc_only};
    const auto rows = blockade_sweep(p, ratios, c.jt_max, opt, sc);
    auto prov = sweep_provenance(c, p, "blockade_sweep");
    prov[3] = {"coupling", "swept"};
    prov.emplace_back("scenario", sc.key());
    std::vector<double> x, tr, pe;
    std::size_t failed = 0;
    for (const auto& r : rows) {
        x.push_back(r.ratio);
        tr.push_back(r.error.empty() ? r.transmission : std::nan(""));
        pe.push_back(r.error.empty() ? r.max_pe : std::nan(""));
        if (!r.error.empty()) {
            ++failed;
            prov.emplace_back("error at g_over_j=" + format_double(r.ratio), r.error);
            err << "error at g/J=" << format_double(r.ratio) << ": " << r.error << "\n";
        }
    }
    const std::filesystem::path csv = c.resolved_output();
    write_file(csv, [&](std::ostream& o) {
        write_csv(o, prov, {"g_over_j", "transmission", "max_P_e"}, {x, tr, pe}, CsvOptions{c.provenance});
    });
    out << "wrote " << csv.string() << " (" << rows.size() - failed << "/" << rows.size() << " points)\n";
    if (c.emit_plot) {
        std::vector<double> lx(x.size());
        std::transform(x.begin(), x.end(), lx.begin(), [](double v) { return std::log10(v); });
        const auto svg = with_suffix(csv, "", ".svg");
        emit_plot(Figure{"Transmission past the driven ion", {PlotPanel{"log10 g/J", "transmission", {{sc.label(), lx, tr}}}}},
                  svg);
        out << "wrote " << svg.string() << "\n";
    }
    if (failed == rows.size()) throw std::runtime_error("every sweep point failed");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Semiclassical trapped-ion chain simulator: interference between JC and carrier drives."};
    app.name("ionwave");
    app.require_subcommand(1);

    struct Sub {
        CLI::App* app;
        Experiment experiment;
        Flags flags;
    };
    std::vector<std::unique_ptr<Sub>> subs;
    auto add_sub = [&](const char* name, const char* help, Experiment e) {
        auto s = std::make_unique<Sub>();
        s->app = app.add_subcommand(name, help);
        s->experiment = e;
        add_run_options(*s->app, s->flags, e);
        subs.push_back(std::move(s));
    };
    add_sub("single-ion", "single driven ion with a frozen coherent field", Experiment::single_ion);
    add_sub("chain", "pulse propagating through an ion chain", Experiment::chain);
    add_sub("sweep-phase", "max P_e and transmission versus carrier phase", Experiment::phase_sweep);
    add_sub("sweep-blockade", "transmission versus g/J", Experiment::blockade_sweep);

    CLI::App* repro = app.add_subcommand("reproduce", "regenerate a figure (CSV + SVG) with pinned parameters");
    std::string figure;
    std::string out_dir = ".";
    bool repro_no_prov = false;
    repro->add_option("figure", figure, "fig1b or fig2c")->required()->check(CLI::IsMember({"fig1b", "fig2c"}));
    repro->add_option("-d,--out-dir", out_dir, "output directory")->capture_default_str();
    repro->add_flag("--no-provenance", repro_no_prov, "omit the # parameter lines");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        const auto chosen = app.get_subcommands();
        err << (chosen.empty() ? app.help() : chosen.front()->help());
        return 2;
    }

    try {
        if (repro->parsed()) {
            const Reproduction rep = figure == "fig1b" ? reproduce_fig1b(out_dir, !repro_no_prov)
                                                       : reproduce_fig2c(out_dir, workers_from_env(), !repro_no_prov);
            out << "wrote " << rep.csv.string() << "\n";
            out << "wrote " << rep.plot.string() << "\n";
            for (const auto& [k, v] : rep.report) out << k << " " << format_double(v) << "\n";
            return 0;
        }
        for (auto& s : subs) {
            if (!s->app->parsed()) continue;
            const RunConfig c = build_config(s->flags, s->experiment);
            switch (s->experiment) {
                case Experiment::single_ion: run_single(c, s->flags.verbose, out, err); break;
                case Experiment::chain: run_chain_cmd(c, s->flags.verbose, out, err); break;
                case Experiment::phase_sweep: run_phase_sweep(c, out, err); break;
                case Experiment::blockade_sweep: run_blockade_sweep(c, out, err); break;
            }
            return 0;
        }
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace ionwave
