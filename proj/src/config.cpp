#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <regex>
#include <sstream>

#include "ionwave/cli.hpp"

namespace ionwave {

ConfigError::ConfigError(const std::string& what, std::size_t line, std::size_t column)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what
                                  : what),
      line_(line),
      column_(column) {}

std::string to_string(Experiment e) {
    switch (e) {
        case Experiment::single_ion: return "single_ion";
        case Experiment::chain: return "chain";
        case Experiment::phase_sweep: return "phase_sweep";
        case Experiment::blockade_sweep: return "blockade_sweep";
    }
    return "?";
}

ChainParams RunConfig::chain_params() const {
    ChainParams p;
    p.n_ions = n_ions;
    p.hop = hop;
    p.coupling = coupling;
    p.phase = delta_phi;
    p.alpha0 = alpha0();
    p.driven_site = driven_site == 0 ? center_site(n_ions) : driven_site;
    return p;
}

IntegratorSettings RunConfig::settings() const {
    IntegratorSettings s;
    s.rtol = rtol;
    s.atol = atol;
    s.h_init = h_init;
    s.h_max = h_max;
    s.max_steps = max_steps;
    s.method = method;
    return s;
}

Scenario RunConfig::resolved_scenario() const {
    if (scenario && *scenario != ScenarioKind::custom) return Scenario{*scenario};
    const double two_pi = 2.0 * std::numbers::pi;
    double phase = std::fmod(delta_phi, two_pi);
    if (phase < 0.0) phase += two_pi;
    if (phase >= two_pi) phase = 0.0;
    if (!scenario) {
        if (phase == 0.0) return Scenario{ScenarioKind::constructive};
        if (std::abs(phase - std::numbers::pi) < 1e-15) return Scenario{ScenarioKind::destructive};
    }
    return Scenario::custom(phase);
}

std::string RunConfig::resolved_output() const {
    return output_path.empty() ? to_string(experiment) + ".csv" : output_path;
}

void RunConfig::validate() const {
    auto positive = [](const char* name, double v) {
        if (!(v > 0.0) || !std::isfinite(v)) throw InvalidParameter(name, "must be finite and > 0");
    };
    if (n_ions < 1) throw InvalidParameter("n_ions", "must be at least 1");
    if (driven_site > n_ions) throw InvalidParameter("driven_site", "must lie in [1, n_ions] (0 selects the centre)");
    if (!(hop >= 0.0) || !std::isfinite(hop)) throw InvalidParameter("hop", "must be finite and >= 0");
    if (!(coupling >= 0.0) || !std::isfinite(coupling)) throw InvalidParameter("coupling", "must be finite and >= 0");
    if (!std::isfinite(delta_phi)) throw InvalidParameter("delta_phi", "must be finite");
    if (!std::isfinite(alpha) || !std::isfinite(alpha_imag)) throw InvalidParameter("alpha", "must be finite");
    positive("jt_max", jt_max);
    positive("gt_max", gt_max);
    if (samples < 2) throw InvalidParameter("samples", "must be at least 2");
    if (phase_points < 1) throw InvalidParameter("phase_points", "must be at least 1");
    if (ratio_points < 1) throw InvalidParameter("ratio_points", "must be at least 1");
    positive("ratio_min", ratio_min);
    positive("ratio_max", ratio_max);
    if (ratio_max < ratio_min) throw InvalidParameter("ratio_max", "must be >= ratio_min");
    positive("rtol", rtol);
    positive("atol", atol);
    positive("h_init", h_init);
    positive("h_max", h_max);
    if (h_init > h_max) throw InvalidParameter("h_init", "must be <= h_max");
    if (max_steps < 1) throw InvalidParameter("max_steps", "must be at least 1");
    if (experiment == Experiment::single_ion && !(coupling > 0.0))
        throw InvalidParameter("coupling", "single-ion runs need coupling > 0");
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys{
        "experiment", "n_ions",  "hop",    "coupling", "delta_phi",    "alpha",        "alpha_imag",
        "driven_site", "scenario", "jt_max", "gt_max",   "samples",      "phase_points", "ratio_points",
        "ratio_min",  "ratio_max", "method", "rtol",     "atol",         "h_init",       "h_max",
        "max_steps",  "output",   "emit_plot", "wide_csv", "provenance"};
    return keys;
}

double parse_phase(std::string_view text) {
    static const std::regex pi_form(R"(^\s*([+-]?(?:\d+\.?\d*|\.\d+)?)\s*\*?\s*pi\s*(?:/\s*(\d+\.?\d*|\.\d+))?\s*$)");
    const std::string s(text);
    std::smatch m;
    if (std::regex_match(s, m, pi_form)) {
        double coef = 1.0;
        const std::string c = m[1].str();
        if (c == "-")
            coef = -1.0;
        else if (!c.empty() && c != "+")
            coef = std::stod(c);
        double den = 1.0;
        if (m[2].matched) den = std::stod(m[2].str());
        if (den == 0.0) throw std::invalid_argument("phase '" + s + "': division by zero");
        return coef * std::numbers::pi / den;
    }
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument("phase '" + s + "' is neither a number nor a multiple of pi");
    }
    if (s.find_first_not_of(" \t", used) != std::string::npos)
        throw std::invalid_argument("phase '" + s + "' is neither a number nor a multiple of pi");
    return v;
}

std::optional<ScenarioKind> parse_scenario_name(std::string_view text) {
    if (auto k = parse_scenario_kind(text)) return k;
    if (text == "none" || text == "no_int") return ScenarioKind::no_interaction;
    if (text == "carrier") return ScenarioKind::carrier_only;
    if (text == "jc") return ScenarioKind::jc_only;
    if (text == "ci") return ScenarioKind::constructive;
    if (text == "di") return ScenarioKind::destructive;
    return std::nullopt;
}

std::optional<Method> parse_method(std::string_view text) {
    if (text == "rk54" || text == "explicit_rk54" || text == "dopri5") return Method::explicit_rk54;
    if (text == "esdirk" || text == "esdirk54") return Method::esdirk;
    return std::nullopt;
}

namespace {

std::size_t edit_distance(std::string_view a, std::string_view b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

}  // namespace

std::string suggest(std::string_view word, const std::vector<std::string>& candidates) {
    std::string best;
    std::size_t best_d = 4;
    for (const auto& c : candidates) {
        const std::size_t d = edit_distance(word, c);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

namespace {

ConfigError error_at(const YAML::Node& node, const std::string& what) {
    const YAML::Mark mark = node.Mark();
    if (mark.is_null()) return ConfigError(what);
    return ConfigError(what, static_cast<std::size_t>(mark.line) + 1, static_cast<std::size_t>(mark.column) + 1);
}

std::string scalar(const YAML::Node& node, const std::string& key) {
    if (!node.IsScalar()) throw error_at(node, "'" + key + "' expects a scalar value");
    return node.Scalar();
}

double as_double(const YAML::Node& node, const std::string& key) {
    const std::string s = scalar(node, key);
    try {
        return node.as<double>();
    } catch (const YAML::Exception&) {
        throw error_at(node, "'" + key + "' expects a number, got '" + s + "'");
    }
}

std::size_t as_count(const YAML::Node& node, const std::string& key) {
    const std::string s = scalar(node, key);
    long long v = 0;
    try {
        v = node.as<long long>();
    } catch (const YAML::Exception&) {
        throw error_at(node, "'" + key + "' expects a non-negative integer, got '" + s + "'");
    }
    if (v < 0) throw error_at(node, "'" + key + "' expects a non-negative integer, got '" + s + "'");
    return static_cast<std::size_t>(v);
}

bool as_bool(const YAML::Node& node, const std::string& key) {
    const std::string s = scalar(node, key);
    try {
        return node.as<bool>();
    } catch (const YAML::Exception&) {
        throw error_at(node, "'" + key + "' expects true or false, got '" + s + "'");
    }
}

using Setter = std::function<void(RunConfig&, const YAML::Node&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table{
        {"experiment",
         [](RunConfig& c, const YAML::Node& n, const std::string& k) {
             const std::string s = scalar(n, k);
             if (s == "single_ion") c.experiment = Experiment::single_ion;
             else if (s == "chain") c.experiment = Experiment::chain;
             else if (s == "phase_sweep") c.experiment = Experiment::phase_sweep;
             else if (s == "blockade_sweep") c.experiment = Experiment::blockade_sweep;
             else throw error_at(n, "experiment must be single_ion, chain, phase_sweep or blockade_sweep, got '" + s + "'");
         }},
        {"n_ions", [](RunConfig& c, const YAML::Node& n, const std::string& k) { c.n_ions = as_count(n, k); }},
        {"hop", [](RunConfig& c, const YAML::Node& n, const std::string& k) { c.hop = as_double(n, k); }},
        {"coupling", [](RunConfig& c, const YAML::Node& n, const std::string& k) { c.coupling = as_double(n, k); }},
        {"delta_phi",
         [](RunConfig& c, const YAML::Node& n, const std::string& k) {
             try {
                 c.delta_phi = parse_phase(scalar(n, k));
             } catch (const std::invalid_argument& e) {
                 throw error_at(n, std::string("delta_phi: ") + e.what());
             }
         }},
        {"alpha", [](RunConfig& c, const YAML::Node& n, const std::string& k) { c.alpha = as_double(n, k); }},
        {"alpha_imag", [](RunConfig& c, const YAML::Node& n, const std::string& k) { c.alpha_imag = as_double(n, k); }},
        {"driven_site", [](RunConfig& c, const YAML::Node& n, const std::string& k) { c.driven_site = as_count(n, k); }},
        {"scenario",
         [](RunConfig& c, const YAML::Node& n, const std::string& k) {
             const std::string s = scalar(n, k);
             if (s == "auto") {
                 c.scenario.reset();
                 return;
             }
             const auto kind = parse_scenario_name(s);
             if (!kind)
                 throw error_at(n, "unknown scenario '" + s +
                                       "' (expected auto, no_interaction, carrier_only, jc_only, constructive, "
                                       "destructive or custom)");
             c.scenario = kind;
         }},
        {"jt_max", [](RunConfig& c, const YAML::Node& n, const std::string& k) { c.jt_max = as_double(n, k); }},
        {"gt_max", [](RunConfig& c, const YAML::Node& n, const std::string& k) { c.gt_max = as_double(n, k); }},
        {"samples", [](RunConfig& c, const YAML::Node& n, const std::string& k) { c.samples = as_count(n, k); }},
        {"phase_points", [](RunConfig& c, const YAML::Node& n, const std::string& k) { c.phase_points = as_count(n, k); }},
        {"ratio_points", [](RunConfig& c, const YAML::Node& n, const std::string& k) { c.ratio_points = as_count(n, k); }},
        {"ratio_min", [](RunConfig& c, const YAML::Node& n, const std::string& k) { c.ratio_min = as_double(n, k); }},
        {"ratio_max", [](RunConfig& c, const YAML::Node& n, const std::string& k) { c.ratio_max = as_double(n, k); }},
        {"method",
         [](RunConfig& c, const YAML::Node& n, const std::string& k) {
             const std::string s = scalar(n, k);
             const auto m = parse_method(s);
             if (!m) throw error_at(n, "method must be rk54 or esdirk, got '" + s + "'");
             c.method = *m;
         }},
        {"rtol", [](RunConfig& c, const YAML::Node& n, const std::string& k) { c.rtol = as_double(n, k); }},
        {"atol", [](RunConfig& c, const YAML::Node& n, const std::string& k) { c.atol = as_double(n, k); }},
        {"h_init", [](RunConfig& c, const YAML::Node& n, const std::string& k) { c.h_init = as_double(n, k); }},
        {"h_max", [](RunConfig& c, const YAML::Node& n, const std::string& k) { c.h_max = as_double(n, k); }},
        {"max_steps", [](RunConfig& c, const YAML::Node& n, const std::string& k) { c.max_steps = as_count(n, k); }},
        {"output", [](RunConfig& c, const YAML::Node& n, const std::string& k) { c.output_path = scalar(n, k); }},
        {"emit_plot", [](RunConfig& c, const YAML::Node& n, const std::string& k) { c.emit_plot = as_bool(n, k); }},
        {"wide_csv", [](RunConfig& c, const YAML::Node& n, const std::string& k) { c.wide_csv = as_bool(n, k); }},
        {"provenance", [](RunConfig& c, const YAML::Node& n, const std::string& k) { c.provenance = as_bool(n, k); }},
    };
    return table;
}

}  // namespace

void apply_config(RunConfig& config, std::string_view text) {
    YAML::Node root;
    try {
        root = YAML::Load(std::string(text));
    } catch (const YAML::ParserException& e) {
        throw ConfigError("syntax error: " + e.msg, static_cast<std::size_t>(e.mark.line) + 1,
                          static_cast<std::size_t>(e.mark.column) + 1);
    }
    if (root.IsNull()) return;
    if (!root.IsMap()) throw error_at(root, "configuration must be a mapping of key: value pairs");

    RunConfig next = config;
    std::map<std::string, YAML::Node> seen;
    for (const auto& entry : root) {
        const YAML::Node& key_node = entry.first;
        if (!key_node.IsScalar()) throw error_at(key_node, "keys must be plain scalars");
        const std::string key = key_node.Scalar();
        const auto& table = setters();
        const auto it = table.find(key);
        if (it == table.end()) {
            std::string msg = "unknown key '" + key + "'";
            const std::string hint = suggest(key, config_keys());
            if (!hint.empty()) msg += "; did you mean '" + hint + "'?";
            throw error_at(key_node, msg);
        }
        if (seen.count(key)) throw error_at(key_node, "duplicate key '" + key + "'");
        seen.emplace(key, key_node);
        it->second(next, entry.second, key);
    }
    try {
        next.validate();
    } catch (const InvalidParameter& e) {
        const auto it = seen.find(e.field());
        if (it != seen.end()) throw error_at(it->second, std::string("invalid value: ") + e.what());
        throw ConfigError(std::string("invalid value: ") + e.what());
    }
    config = std::move(next);
}

RunConfig parse_config(std::string_view text) {
    RunConfig c;
    apply_config(c, text);
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read configuration file '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_config(buf.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

}  // namespace ionwave
