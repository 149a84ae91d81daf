#pragma once

// Adaptive integrators for the chain and oracle systems: the Dormand-Prince
// 5(4) pair with its continuous extension, and Kvaerno's stiffly accurate
// seven-stage ESDIRK 5(4) pair with modified Newton stage solves.

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ionwave {

using Rhs = std::function<void(double, std::span<const double>, std::span<double>)>;
/// Fills the Jacobian of the rhs at (t, y). The matrix is pre-sized to n x n.
using JacobianFn = std::function<void(double, std::span<const double>, Eigen::MatrixXd&)>;

enum class Method { explicit_rk54, esdirk };

const char* to_string(Method m) noexcept;

struct IntegratorSettings {
    double rtol = 1e-9;
    double atol = 1e-11;
    double h_init = 1e-3;
    double h_min = 1e-12;
    double h_max = 1.0;
    std::size_t max_steps = 2'000'000;
    Method method = Method::explicit_rk54;

    void validate() const;
};

struct StepOutcome {
    bool accepted = false;
    double h_used = 0.0;
    double h_next = 0.0;
    double error_estimate = 0.0;
};

/// Called after every accepted or rejected adaptive step.
using StepObserver = std::function<void(double t, const StepOutcome&)>;

enum class StepStatus { ok, non_finite, newton_failed, singular };

struct StepResult {
    std::vector<double> y;
    /// High-order minus embedded solution.
    std::vector<double> error;
    StepStatus status = StepStatus::ok;
    std::size_t newton_iterations = 0;

    bool ok() const noexcept { return status == StepStatus::ok; }
};

struct IntegrationStats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t rhs_evals = 0;
    std::size_t jacobian_evals = 0;
    std::size_t factorizations = 0;
    std::size_t newton_failures = 0;
};

struct Solution {
    std::vector<double> times;
    std::vector<std::vector<double>> states;
    std::vector<double> final_state;
    double final_time = 0.0;
    IntegrationStats stats;
};

class IntegrationError : public std::runtime_error {
public:
    IntegrationError(const std::string& what, double last_time)
        : std::runtime_error(what), last_time_(last_time) {}
    /// Last time at which the state was valid.
    double last_time() const noexcept { return last_time_; }

private:
    double last_time_;
};

class NonFiniteState : public IntegrationError {
public:
    NonFiniteState(const std::string& what, double last_time, std::size_t component)
        : IntegrationError(what, last_time), component_(component) {}
    std::size_t component() const noexcept { return component_; }

private:
    std::size_t component_;
};

/// Weighted RMS norm with weights atol + rtol * max(|y0_i|, |y1_i|).
double weighted_rms_norm(std::span<const double> err, std::span<const double> y0,
                         std::span<const double> y1, double rtol, double atol);

/// One Dormand-Prince step. status is non_finite if any stage evaluation
/// produced a NaN or infinity.
StepResult rk54_step(const Rhs& rhs, double t, std::span<const double> y, double h);

/// One ESDIRK step with a Jacobian evaluated at (t, y). Stage equations are
/// solved with modified Newton to 1% of the weighted tolerance in settings.
StepResult esdirk_step(const Rhs& rhs, const JacobianFn& jacobian, double t, std::span<const double> y,
                       double h, const IntegratorSettings& settings = {});

/// Integrates from t_span[0] to t_span[1] and returns the state at each of
/// the strictly increasing sample_times. A null jacobian with the ESDIRK
/// method falls back to central finite differences.
Solution integrate(const Rhs& rhs, const JacobianFn& jacobian, std::span<const double> y0,
                   std::array<double, 2> t_span, const IntegratorSettings& settings,
                   std::span<const double> sample_times, const StepObserver& observer = {});

/// Uniform grid of `count` points over [t0, t1], inclusive.
std::vector<double> uniform_grid(double t0, double t1, std::size_t count);

namespace tableau {

/// Butcher coefficients of the ESDIRK 5(4) pair. Row 6 (c = 1) doubles as
/// the embedded fourth-order solution; row 7 is the fifth-order solution.
struct Esdirk {
    static constexpr std::size_t stages = 7;
    double a[stages][stages];
    double c[stages];
    double b[stages];
    double b_embedded[stages];
    double gamma;
};

const Esdirk& esdirk54();

struct OrderResiduals {
    double row_sum = 0.0;      ///< max |c_i - sum_j a_ij|
    double high_order = 0.0;   ///< max residual of the 17 order-5 conditions for b
    double embedded = 0.0;     ///< max residual of the 8 order-4 conditions for b_embedded
};

/// Evaluates the tableau consistency and order conditions numerically.
OrderResiduals check_esdirk54();

}  // namespace tableau

}  // namespace ionwave
