#include "ionwave/jacobian.hpp"

namespace ionwave {

void chain_jacobian(const ChainSystem& system, double t, std::span<const double> y, Eigen::MatrixXd& jac) {
    const ChainParams& p = system.params();
    const auto n = static_cast<Eigen::Index>(p.n_ions);
    const Eigen::Index dim = 2 * n + 3;
    if (static_cast<Eigen::Index>(y.size()) != dim)
        throw std::invalid_argument("chain_jacobian: state length does not match 2N + 3");
    jac.setZero(dim, dim);
    for (Eigen::Index k = 0; k < n; ++k) {
        for (Eigen::Index nb : {k - 1, k + 1}) {
            if (nb < 0 || nb >= n) continue;
            jac(2 * k, 2 * nb + 1) = p.hop;
            jac(2 * k + 1, 2 * nb) = -p.hop;
        }
    }
    const Eigen::Index s = 2 * n;
    const auto m = static_cast<Eigen::Index>(p.driven_site - 1);
    const double sx = y[static_cast<std::size_t>(s)];
    const double sy = y[static_cast<std::size_t>(s + 1)];
    const double sz = y[static_cast<std::size_t>(s + 2)];
    const Complex w = system.drive(t, y).w_total;

    // ds/dt = (-Im W s_z, -Re W s_z, Re W s_y + Im W s_x)
    jac(s, s + 2) = -w.imag();
    jac(s + 1, s + 2) = -w.real();
    jac(s + 2, s) = w.imag();
    jac(s + 2, s + 1) = w.real();
    if (system.config().jc_on) {
        const double g = p.coupling;
        jac(2 * m, s + 1) = -0.25 * g;
        jac(2 * m + 1, s) = -0.25 * g;
        jac(s, 2 * m + 1) = -g * sz;
        jac(s + 1, 2 * m) = -g * sz;
        jac(s + 2, 2 * m) = g * sy;
        jac(s + 2, 2 * m + 1) = g * sx;
    }
}

Eigen::MatrixXd chain_jacobian(double t, const ChainState& state, const ChainParams& params,
                               const DriveConfig& config, const FreeAmplitude& reference) {
    if (state.amplitudes.size() != params.n_ions)
        throw std::invalid_argument("chain_jacobian: state does not match params");
    const ChainSystem system(params, config, reference);
    const auto flat = state.to_flat();
    Eigen::MatrixXd jac;
    chain_jacobian(system, t, flat, jac);
    return jac;
}

Rhs make_rhs(const ChainSystem& system) {
    return [&system](double t, std::span<const double> y, std::span<double> dy) { system.rhs(t, y, dy); };
}

JacobianFn make_jacobian(const ChainSystem& system) {
    return [&system](double t, std::span<const double> y, Eigen::MatrixXd& jac) {
        chain_jacobian(system, t, y, jac);
    };
}

}  // namespace ionwave
