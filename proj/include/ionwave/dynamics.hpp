#pragma once

// Semiclassical equations of motion for a hopping chain whose driven ion sees
// a Jaynes-Cummings coupling to its local phonon amplitude and a carrier
// drive. The spin obeys ds/dt = B x s with B = (Re W, -Im W, 0) where
// W = g * alpha_m + Omega2(t); the phonon at the driven site feels the
// back-action -i (g/2) s^-, s^- = (s_x - i s_y) / 2.

#include <functional>
#include <span>
#include <stdexcept>
#include <variant>

#include "ionwave/model.hpp"

namespace ionwave {

class ConfigurationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Laser-free amplitude at the driven site, alpha_m^free(t).
using FreeAmplitude = std::function<Complex(double)>;

struct ConstantCarrier {
    Complex omega2;
};

/// Omega2(t) = g * alpha_m^free(t) * exp(i * phase).
struct TrackingCarrier {
    double phase;
};

struct DriveConfig {
    bool jc_on = false;
    bool carrier_on = false;
    std::variant<ConstantCarrier, TrackingCarrier> carrier_mode = ConstantCarrier{};

    static DriveConfig none() { return {}; }
    static DriveConfig jc_only() { return {true, false, ConstantCarrier{}}; }
    static DriveConfig tracking(double phase) { return {true, true, TrackingCarrier{phase}}; }
    static DriveConfig constant(Complex omega2, bool jc_on = false) { return {jc_on, true, ConstantCarrier{omega2}}; }

    bool tracks_reference() const noexcept {
        return carrier_on && std::holds_alternative<TrackingCarrier>(carrier_mode);
    }
};

struct DriveSample {
    Complex omega2;
    Complex w_total;
};

/// Hopping only: da_k/dt = -i J (a_{k+1} + a_{k-1}), open ends, spin frozen.
ChainState free_rhs(const ChainState& state, const ChainParams& params);

/// Carrier Rabi frequency at time t (zero when the carrier is off).
Complex carrier_drive(double t, const DriveConfig& config, const ChainParams& params,
                      const FreeAmplitude& reference);

/// Carrier plus the JC field g * alpha_m seen by the driven spin.
DriveSample drive_sample(double t, Complex driven_amplitude, const DriveConfig& config,
                         const ChainParams& params, const FreeAmplitude& reference);

ChainState full_rhs(double t, const ChainState& state, const ChainParams& params,
                    const DriveConfig& config, const FreeAmplitude& reference);

/// Effective single-ion model: the phonon amplitude is frozen into
/// omega_tilde = g * alpha, so the spin precesses in W = omega_tilde + omega2.
Bloch single_ion_rhs(double t, const Bloch& bloch, Complex omega_tilde, Complex omega2);

/// Spin precession rate for a given total drive.
Bloch spin_rhs(const Bloch& s, Complex w) noexcept;

/// Flat-array form of full_rhs used by the integrators. Holds copies of
/// everything it needs and is safe to share between threads.
class ChainSystem {
public:
    ChainSystem(ChainParams params, DriveConfig config, FreeAmplitude reference = {});

    const ChainParams& params() const noexcept { return params_; }
    const DriveConfig& config() const noexcept { return config_; }
    const FreeAmplitude& reference() const noexcept { return reference_; }
    std::size_t dimension() const noexcept { return ChainState::flat_size(params_.n_ions); }

    void rhs(double t, std::span<const double> y, std::span<double> dy) const;
    DriveSample drive(double t, std::span<const double> y) const;

private:
    ChainParams params_;
    DriveConfig config_;
    FreeAmplitude reference_;
};

}  // namespace ionwave
