#pragma once

// Domain types shared by every part of the simulator: chain parameters,
// the semiclassical state (phonon amplitudes plus the driven ion's Bloch
// vector), sampled time series, and unit conversion from lab presets.

#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ionwave {

using Complex = std::complex<double>;

/// Thrown when a parameter set violates one of its invariants. The message
/// names the offending field.
class InvalidParameter : public std::invalid_argument {
public:
    InvalidParameter(std::string field, const std::string& what)
        : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Laboratory numbers (angular frequencies). Only used to convert into the
/// dimensionless simulation units.
struct PhysicalPreset {
    double eta = 0.2;
    double rabi1 = 0.8e6 * 2.0 * std::numbers::pi;
    double rabi2_scale = 0.16e6 * 2.0 * std::numbers::pi;
    double hop = 3.0e3 * 2.0 * std::numbers::pi;

    void validate() const;
};

/// g = eta * rabi1.
double effective_coupling(const PhysicalPreset& preset);

/// Coherent amplitude magnitude that balances the carrier against the JC
/// drive of a single ion: |alpha| = rabi2_scale / (eta * rabi1).
double balance_amplitude(const PhysicalPreset& preset);

/// g / J for a preset, the ratio that sets the chain regime.
double coupling_ratio(const PhysicalPreset& preset);

/// Static description of a driven chain, in units where time is measured in
/// 1/J (or 1/g for single-ion runs). Sites are 1-based.
struct ChainParams {
    std::size_t n_ions = 100;
    double hop = 1.0;
    double coupling = 1.0;
    double phase = std::numbers::pi;
    Complex alpha0{1.0, 0.0};
    std::size_t driven_site = 50;

    /// Parameters for an n-ion chain with the driven site at the centre.
    static ChainParams centered(std::size_t n_ions);

    void validate() const;
};

/// floor((N + 1) / 2).
std::size_t center_site(std::size_t n_ions);

struct Bloch {
    double x = 0.0;
    double y = 0.0;
    double z = -1.0;

    friend bool operator==(const Bloch&, const Bloch&) = default;
};

/// Semiclassical state. Only the driven ion's spin is dynamical; every other
/// ion stays in its electronic ground state.
struct ChainState {
    std::vector<Complex> amplitudes;
    Bloch bloch;

    std::size_t n_ions() const noexcept { return amplitudes.size(); }

    /// Length of the flat real layout: [Re a1, Im a1, ..., Re aN, Im aN, sx, sy, sz].
    static std::size_t flat_size(std::size_t n_ions) noexcept { return 2 * n_ions + 3; }

    std::vector<double> to_flat() const;
    static ChainState from_flat(std::span<const double> flat);
};

ChainState initial_state(const ChainParams& params);

double excited_population(const Bloch& bloch) noexcept;
inline double excited_population(const ChainState& state) noexcept { return excited_population(state.bloch); }

/// sum_k |a_k|^2 + P_e. Conserved by the chain dynamics while the carrier is off.
double excitation_number(const ChainState& state) noexcept;

double bloch_norm(const Bloch& bloch) noexcept;
inline double bloch_norm(const ChainState& state) noexcept { return bloch_norm(state.bloch); }

/// Named observables sampled on a strictly increasing time grid.
class TimeSeries {
public:
    TimeSeries() = default;
    explicit TimeSeries(std::vector<double> times);

    const std::vector<double>& times() const noexcept { return times_; }
    std::size_t size() const noexcept { return times_.size(); }
    bool empty() const noexcept { return times_.empty(); }

    /// Appends a column; it must have one value per sample time.
    void add_column(std::string name, std::vector<double> values);

    bool has_column(std::string_view name) const noexcept;
    const std::vector<double>& column(std::string_view name) const;
    const std::vector<std::string>& names() const noexcept { return names_; }

private:
    std::vector<double> times_;
    std::vector<std::string> names_;
    std::vector<std::vector<double>> columns_;
};

}  // namespace ionwave
