#pragma once

#include <Eigen/Dense>

#include "ionwave/dynamics.hpp"
#include "ionwave/integrate.hpp"

namespace ionwave {

/// Analytic Jacobian of the chain rhs in the flat coordinates
/// (2N amplitude components followed by s_x, s_y, s_z). The hopping part is
/// tridiagonal in site blocks; the drive couples the three spin rows and
/// columns to the two components of the driven site.
Eigen::MatrixXd chain_jacobian(double t, const ChainState& state, const ChainParams& params,
                               const DriveConfig& config, const FreeAmplitude& reference);

/// Same, writing into a pre-sized matrix from a flat state.
void chain_jacobian(const ChainSystem& system, double t, std::span<const double> y, Eigen::MatrixXd& jac);

/// Rhs / Jacobian callables bound to a chain system for use with integrate().
Rhs make_rhs(const ChainSystem& system);
JacobianFn make_jacobian(const ChainSystem& system);

}  // namespace ionwave
