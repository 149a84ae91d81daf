#pragma once

// Independent reference solutions: closed-form propagation of the laser-free
// chain, Bessel-function limits, the resonant two-level Rabi formula, and
// exact state-vector evolution in a truncated Fock space for a single ion or
// chains of up to three ions.

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "ionwave/dynamics.hpp"
#include "ionwave/integrate.hpp"
#include "ionwave/model.hpp"

namespace ionwave {

/// Normal modes of the open nearest-neighbour chain:
/// lambda_j = 2 J cos(j pi / (N + 1)), v_j(k) = sqrt(2 / (N + 1)) sin(j k pi / (N + 1)).
class EigenmodeBasis {
public:
    EigenmodeBasis(std::size_t n_ions, double hop);

    std::size_t n_ions() const noexcept { return n_; }
    const std::vector<double>& frequencies() const noexcept { return frequencies_; }
    /// mode_shapes()(j, k): mode j (0-based) evaluated at site k (0-based).
    const Eigen::MatrixXd& mode_shapes() const noexcept { return shapes_; }

    /// Exact laser-free evolution of an arbitrary amplitude vector.
    std::vector<Complex> propagate(std::span<const Complex> initial, double t) const;

    /// max |sum_k v_j(k) v_l(k) - delta_jl|.
    double orthonormality_error() const;

private:
    std::size_t n_;
    std::vector<double> frequencies_;
    Eigen::MatrixXd shapes_;
};

/// Laser-free amplitudes at time t starting from initial_state(params).
std::vector<Complex> eigenmode_propagate(const ChainParams& params, double t);

/// alpha_m^free(t) at the driven site, evaluated from precomputed mode
/// weights. The returned callable is immutable and thread-safe.
FreeAmplitude make_free_reference(const ChainParams& params);

/// |J_{k-1}(2 jt)|: the infinite-chain propagator from a single site.
double bessel_amplitude(int k, double jt);

/// |J_{k-1}(2 jt) + J_{k+1}(2 jt)| = k |J_k(2 jt)| / jt: the semi-infinite
/// chain launched from its edge site, which is what an open chain of
/// finite length follows until the far-end reflection arrives.
double open_chain_bessel_amplitude(int k, double jt);

/// Resonant two-level population from the ground state: sin^2(w t / 2).
double rabi_closed_form(double w, double t);

/// Probability mass of a coherent state beyond the first `dim` Fock levels.
double coherent_tail_mass(Complex alpha, std::size_t dim);

struct FockConfig {
    std::size_t dim = 32;
    Complex alpha{0.0, 0.0};
    double max_tail = 1e-10;

    void validate() const;
};

/// Exact single-ion dynamics under
/// H = (g/2)(a s+ + a^dag s-) + (1/2)(omega2 s+ + conj(omega2) s-)
/// in a dim-level Fock space times the qubit. Columns: P_e, norm, re_a, im_a.
TimeSeries fock_single_ion(const FockConfig& config, double g, Complex omega2, std::array<double, 2> t_span,
                           std::span<const double> samples, const IntegratorSettings& settings = {});

inline constexpr std::size_t kMaxFockDimension = std::size_t{1} << 14;

/// Exact quantum dynamics of the full chain Hamiltonian for n_ions <= 3.
/// Site 1 starts in |alpha0>, the rest in vacuum, the driven ion in |g>.
/// Columns: P_e, norm, and re_a<k>, im_a<k> for k = 1..N (mean <a_k>).
TimeSeries fock_tiny_chain(const ChainParams& params, std::size_t per_site_dim, const DriveConfig& config,
                           std::array<double, 2> t_span, std::span<const double> samples,
                           const IntegratorSettings& settings = {}, double max_tail = 1e-10);

}  // namespace ionwave
