#pragma once

// Command-line front end: run configuration, CSV and SVG writers, and the
// figure reproduction drivers.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ionwave/experiments.hpp"

namespace ionwave {

/// Bad configuration document. line/column are 1-based, 0 when unknown.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& what, std::size_t line = 0, std::size_t column = 0);
    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

enum class Experiment { single_ion, chain, phase_sweep, blockade_sweep };

std::string to_string(Experiment e);

struct RunConfig {
    Experiment experiment = Experiment::chain;
    std::size_t n_ions = 100;
    double hop = 1.0;
    double coupling = 1.0;  ///< g; with hop = 1 this is g/J
    double delta_phi = 3.141592653589793;
    double alpha = 1.0;
    double alpha_imag = 0.0;
    std::size_t driven_site = 0;  ///< 0 = centre of the chain
    std::optional<ScenarioKind> scenario;  ///< unset = derived from delta_phi
    double jt_max = 30.0;
    double gt_max = 10.0;
    std::size_t samples = 2001;
    std::size_t phase_points = 64;
    std::size_t ratio_points = 16;
    double ratio_min = 0.1;
    double ratio_max = 100.0;
    Method method = Method::explicit_rk54;
    double rtol = 1e-9;
    double atol = 1e-11;
    double h_init = 1e-3;
    double h_max = 1.0;
    std::size_t max_steps = 2'000'000;
    std::string output_path;  ///< empty = <experiment>.csv
    bool emit_plot = false;
    bool wide_csv = false;
    bool provenance = true;

    ChainParams chain_params() const;
    IntegratorSettings settings() const;
    Complex alpha0() const { return {alpha, alpha_imag}; }
    /// Explicit scenario if set, else constructive for 0, destructive for
    /// pi and custom otherwise.
    Scenario resolved_scenario() const;
    std::string resolved_output() const;

    /// Throws InvalidParameter naming the offending field.
    void validate() const;
};

/// Known configuration keys in documentation order.
const std::vector<std::string>& config_keys();

/// Parses a YAML mapping of the keys above. Empty documents give defaults.
RunConfig parse_config(std::string_view text);
/// Applies the document on top of an existing configuration.
void apply_config(RunConfig& config, std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

/// Accepts plain numbers and multiples of pi: "pi", "-pi", "2pi", "0.5*pi", "pi/2".
double parse_phase(std::string_view text);
std::optional<ScenarioKind> parse_scenario_name(std::string_view text);
std::optional<Method> parse_method(std::string_view text);

/// Closest candidate within edit distance 3, or empty.
std::string suggest(std::string_view word, const std::vector<std::string>& candidates);

/// Shortest-round-trip-safe rendering with 17 significant digits.
std::string format_double(double v);

struct CsvOptions {
    bool provenance = true;
};

/// Generic CSV writer. Returns the number of bytes written.
std::size_t write_csv(std::ostream& out, const std::vector<std::pair<std::string, std::string>>& provenance,
                      const std::vector<std::string>& header, const std::vector<std::vector<double>>& columns,
                      const CsvOptions& options = {});

/// Chain results: t,P_e,alpha_next_sq,bloch_norm,excitation. Single-ion
/// results: t,P_e.
std::size_t write_timeseries(const RunResult& result, std::ostream& out, const CsvOptions& options = {});

/// Companion wide CSV: t,site_1,...,site_N with |alpha_k|^2.
std::size_t write_site_populations(const RunResult& result, std::ostream& out, const CsvOptions& options = {});

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    bool dashed = false;
};

struct PlotPanel {
    std::string x_label;
    std::string y_label;
    std::vector<PlotSeries> series;
};

struct Figure {
    std::string title;
    std::vector<PlotPanel> panels;
};

/// Renders a self-contained SVG. Throws std::invalid_argument for empty
/// input (no file is created) and std::runtime_error when the file cannot
/// be written.
void emit_plot(const Figure& figure, const std::filesystem::path& path);
std::string render_svg(const Figure& figure);

/// Result of a figure reproduction.
struct Reproduction {
    std::filesystem::path csv;
    std::filesystem::path plot;
    std::vector<std::pair<std::string, double>> report;
};

Reproduction reproduce_fig1b(const std::filesystem::path& out_dir, bool provenance = true);
Reproduction reproduce_fig2c(const std::filesystem::path& out_dir, std::size_t workers = 0, bool provenance = true);

/// Worker count from IONWAVE_WORKERS, 0 when absent.
std::size_t workers_from_env();

/// Entry point shared by the executable and the tests.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ionwave
