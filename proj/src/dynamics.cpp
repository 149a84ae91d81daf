#include "ionwave/dynamics.hpp"

#include <string>

namespace ionwave {

namespace {

constexpr Complex kI{0.0, 1.0};

void check_dimensions(const ChainState& state, const ChainParams& params) {
    if (state.amplitudes.size() != params.n_ions)
        throw std::invalid_argument("state has " + std::to_string(state.amplitudes.size()) +
                                    " amplitudes, params expect " + std::to_string(params.n_ions));
}

}  // namespace

ChainState free_rhs(const ChainState& state, const ChainParams& params) {
    check_dimensions(state, params);
    const auto& a = state.amplitudes;
    const std::size_t n = a.size();
    ChainState d;
    d.amplitudes.assign(n, Complex{});
    d.bloch = Bloch{0.0, 0.0, 0.0};
    for (std::size_t k = 0; k < n; ++k) {
        Complex nb{};
        if (k + 1 < n) nb += a[k + 1];
        if (k > 0) nb += a[k - 1];
        d.amplitudes[k] = -kI * params.hop * nb;
    }
    return d;
}

Complex carrier_drive(double t, const DriveConfig& config, const ChainParams& params,
                      const FreeAmplitude& reference) {
    if (!config.carrier_on) return {};
    if (const auto* c = std::get_if<ConstantCarrier>(&config.carrier_mode)) return c->omega2;
    const auto& tracking = std::get<TrackingCarrier>(config.carrier_mode);
    if (!reference) throw ConfigurationError("tracking carrier requires a free-propagation reference");
    return params.coupling * reference(t) * std::polar(1.0, tracking.phase);
}

DriveSample drive_sample(double t, Complex driven_amplitude, const DriveConfig& config,
                         const ChainParams& params, const FreeAmplitude& reference) {
    DriveSample s;
    s.omega2 = carrier_drive(t, config, params, reference);
    s.w_total = s.omega2;
    if (config.jc_on) s.w_total += params.coupling * driven_amplitude;
    return s;
}

Bloch spin_rhs(const Bloch& s, Complex w) noexcept {
    const double wr = w.real();
    const double wi = w.imag();
    return Bloch{-wi * s.z, -wr * s.z, wr * s.y + wi * s.x};
}

ChainState full_rhs(double t, const ChainState& state, const ChainParams& params,
                    const DriveConfig& config, const FreeAmplitude& reference) {
    ChainState d = free_rhs(state, params);
    const std::size_t m = params.driven_site - 1;
    const DriveSample drive = drive_sample(t, state.amplitudes[m], config, params, reference);
    if (config.jc_on) {
        const Complex s_minus = 0.5 * Complex{state.bloch.x, -state.bloch.y};
        d.amplitudes[m] += -kI * (0.5 * params.coupling) * s_minus;
    }
    d.bloch = spin_rhs(state.bloch, drive.w_total);
    return d;
}

Bloch single_ion_rhs(double /*t*/, const Bloch& bloch, Complex omega_tilde, Complex omega2) {
    return spin_rhs(bloch, omega_tilde + omega2);
}

ChainSystem::ChainSystem(ChainParams params, DriveConfig config, FreeAmplitude reference)
    : params_(params), config_(config), reference_(std::move(reference)) {
    params_.validate();
    if (config_.tracks_reference() && !reference_)
        throw ConfigurationError("tracking carrier requires a free-propagation reference");
}

DriveSample ChainSystem::drive(double t, std::span<const double> y) const {
    const std::size_t m = params_.driven_site - 1;
    return drive_sample(t, Complex{y[2 * m], y[2 * m + 1]}, config_, params_, reference_);
}

void ChainSystem::rhs(double t, std::span<const double> y, std::span<double> dy) const {
    const std::size_t n = params_.n_ions;
    if (y.size() != dimension() || dy.size() != dimension())
        throw std::invalid_argument("ChainSystem::rhs: state length does not match 2N + 3");
    const double hop = params_.hop;
    // d(Re a_k)/dt = J (Im a_{k+1} + Im a_{k-1}), d(Im a_k)/dt = -J (Re a_{k+1} + Re a_{k-1})
    for (std::size_t k = 0; k < n; ++k) {
        double re = 0.0, im = 0.0;
        if (k + 1 < n) {
            re += y[2 * k + 2];
            im += y[2 * k + 3];
        }
        if (k > 0) {
            re += y[2 * k - 2];
            im += y[2 * k - 1];
        }
        dy[2 * k] = hop * im;
        dy[2 * k + 1] = -hop * re;
    }
    const std::size_t s = 2 * n;
    const Bloch spin{y[s], y[s + 1], y[s + 2]};
    const std::size_t m = params_.driven_site - 1;
    if (config_.jc_on) {
        const double q = 0.25 * params_.coupling;
        dy[2 * m] -= q * spin.y;
        dy[2 * m + 1] -= q * spin.x;
    }
    const Bloch ds = spin_rhs(spin, drive(t, y).w_total);
    dy[s] = ds.x;
    dy[s + 1] = ds.y;
    dy[s + 2] = ds.z;
}

}  // namespace ionwave
