#pragma once

// Scenario runners: the four single-ion interference cases, the driven
// chain, and the phase and coupling sweeps built on top of them.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ionwave/dynamics.hpp"
#include "ionwave/integrate.hpp"
#include "ionwave/model.hpp"

namespace ionwave {

enum class ScenarioKind { no_interaction, carrier_only, jc_only, constructive, destructive, custom };

struct Scenario {
    ScenarioKind kind = ScenarioKind::destructive;
    double phase = 0.0;  ///< only meaningful for custom, in [0, 2 pi)

    static Scenario custom(double phase);

    /// Figure label: "No int.", "Carrier", "JC", "CI", "DI" or "custom".
    std::string label() const;
    /// Stable identifier used in configs and CSV column names.
    std::string key() const;
};

std::optional<ScenarioKind> parse_scenario_kind(std::string_view key);

struct RunResult {
    TimeSeries series;
    std::map<std::string, double> metrics;
    std::vector<std::pair<std::string, std::string>> provenance;
    std::vector<std::string> warnings;
    IntegrationStats stats;
    /// |alpha_k|^2 per sample (chain runs only), row i aligned with series time i.
    std::vector<std::vector<double>> site_populations;
    /// alpha_k per sample (chain runs only).
    std::vector<std::vector<Complex>> site_amplitudes;
    std::size_t driven_site = 0;
};

/// Effective single-ion run with W = g * alpha_eff + omega2 per scenario and
/// |alpha| = omega2 / g balance. Times are gt over [0, gt_max].
/// Columns: P_e, bloch_norm.
RunResult run_single_ion(const Scenario& scenario, Complex alpha, double g, double gt_max, std::size_t samples,
                         const IntegratorSettings& settings = {});

/// Drive configuration that realises a scenario on a chain.
DriveConfig chain_drive(const Scenario& scenario);

/// Chain run over Jt in [0, jt_max]. Columns: P_e, alpha_next_sq,
/// bloch_norm, excitation, transmitted, phonon_total.
RunResult run_chain(const Scenario& scenario, const ChainParams& params, double jt_max, std::size_t samples,
                    const IntegratorSettings& settings = {});

/// Chain run with an explicit drive (sweeps use this for phases outside [0, 2 pi)).
RunResult run_chain(const DriveConfig& drive, const ChainParams& params, double jt_max, std::size_t samples,
                    const IntegratorSettings& settings = {});

/// Metrics derived purely from a chain series.
std::map<std::string, double> chain_metrics(const TimeSeries& series);

/// Fraction of phonon energy beyond site_cut (1-based) at time t, linearly
/// interpolated between samples.
double transmission(const RunResult& result, std::size_t site_cut, double t);

/// Largest |alpha_m(t) - alpha_m^(2N)(t)| for the laser-free chain, i.e.
/// how much the far-end reflection has reached the driven site by t_max.
double reflection_contamination(const ChainParams& params, double t_max, std::size_t probes = 64);

struct PhaseRow {
    double phase = 0.0;
    double max_pe = 0.0;
    double transmission = 0.0;
    std::string error;
};

struct BlockadeRow {
    double ratio = 0.0;
    double transmission = 0.0;
    double max_pe = 0.0;
    std::string error;
};

struct SweepOptions {
    std::size_t samples = 601;
    std::size_t workers = 0;  ///< 0 = one per available processor
    IntegratorSettings settings{};
};

/// n uniformly spaced phases on [0, 2 pi).
std::vector<double> default_phase_grid(std::size_t n = 64);
/// n log-spaced g/J ratios on [0.1, 100].
std::vector<double> default_ratio_grid(std::size_t n = 16);

std::vector<PhaseRow> phase_sweep(const ChainParams& params, const std::vector<double>& phases, double jt_max,
                                  const SweepOptions& options = {});

/// Transmission past the driven site at jt_max versus g/J.
std::vector<BlockadeRow> blockade_sweep(const ChainParams& params, const std::vector<double>& ratios, double jt_max,
                                        const SweepOptions& options = {},
                                        const Scenario& scenario = {ScenarioKind::jc_only});

struct QuantumGap {
    Scenario scenario;
    double max_abs_gap = 0.0;
    std::vector<double> semiclassical;
    std::vector<double> exact;
};

/// Effective-model versus truncated-Fock P_e for one single-ion scenario.
QuantumGap single_ion_quantum_gap(const Scenario& scenario, Complex alpha, double g, double gt_max,
                                  std::size_t samples, std::size_t fock_dim = 40);

}  // namespace ionwave
