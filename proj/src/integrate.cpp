#include "ionwave/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace ionwave {

using Eigen::VectorXd;

const char* to_string(Method m) noexcept {
    switch (m) {
        case Method::explicit_rk54: return "rk54";
        case Method::esdirk: return "esdirk";
    }
    return "unknown";
}

void IntegratorSettings::validate() const {
    if (!(rtol > 0.0 && rtol < 1.0)) throw std::invalid_argument("rtol: must lie in (0, 1)");
    if (!(atol > 0.0)) throw std::invalid_argument("atol: must be positive");
    if (!(h_min > 0.0)) throw std::invalid_argument("h_min: must be positive");
    if (!(h_min <= h_init && h_init <= h_max)) throw std::invalid_argument("h_init: must satisfy h_min <= h_init <= h_max");
    if (max_steps == 0) throw std::invalid_argument("max_steps: must be positive");
}

double weighted_rms_norm(std::span<const double> err, std::span<const double> y0,
                         std::span<const double> y1, double rtol, double atol) {
    if (err.empty()) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < err.size(); ++i) {
        const double scale = atol + rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
        const double r = err[i] / scale;
        sum += r * r;
    }
    return std::sqrt(sum / static_cast<double>(err.size()));
}

std::vector<double> uniform_grid(double t0, double t1, std::size_t count) {
    if (count < 2) throw std::invalid_argument("uniform_grid: need at least two points");
    std::vector<double> g(count);
    const double span = t1 - t0;
    for (std::size_t i = 0; i < count; ++i)
        g[i] = t0 + span * static_cast<double>(i) / static_cast<double>(count - 1);
    g.back() = t1;
    return g;
}

namespace tableau {

const Esdirk& esdirk54() {
    // Kvaerno's L-stable, stiffly accurate ESDIRK 5(4) with gamma = 0.26.
    static const Esdirk t = [] {
        Esdirk e{};
        const double g = 0.26;
        e.gamma = g;
        const double a[7][7] = {
            {0.0, 0, 0, 0, 0, 0, 0},
            {0.26, g, 0, 0, 0, 0, 0},
            {0.13, 0.84033320996790809, g, 0, 0, 0, 0},
            {0.22371961478320505, 0.47675532319799699, -0.06470895363112615, g, 0, 0, 0},
            {0.16648564323248321, 0.10450018841591720, 0.03631482272098715, -0.13090704451073998, g, 0, 0},
            {0.13855640231268224, 0.0, -0.04245337201752043, 0.02446657898003141, 0.61943039072480676, g, 0},
            {0.13659751177640291, 0.0, -0.05496908796538376, -0.04118626728321046, 0.62993304899016403,
             0.06962479448202728, g},
        };
        const double c[7] = {0.0, 0.52, 1.230333209967908, 0.895765984350076, 0.436393609858648, 1.0, 1.0};
        for (std::size_t i = 0; i < 7; ++i) {
            e.c[i] = c[i];
            for (std::size_t j = 0; j < 7; ++j) e.a[i][j] = a[i][j];
            e.b[i] = a[6][i];
            e.b_embedded[i] = a[5][i];
        }
        return e;
    }();
    return t;
}

namespace {

using Mat = Eigen::Matrix<double, 7, 7>;
using Vec = Eigen::Matrix<double, 7, 1>;

double order_residual(const Vec& b, const Mat& A, const Vec& c, int order) {
    const Vec c2 = c.cwiseProduct(c);
    const Vec c3 = c2.cwiseProduct(c);
    const Vec Ac = A * c;
    const Vec Ac2 = A * c2;
    const Vec AAc = A * Ac;
    std::vector<double> r;
    r.push_back(b.sum() - 1.0);
    if (order >= 2) r.push_back(b.dot(c) - 1.0 / 2);
    if (order >= 3) {
        r.push_back(b.dot(c2) - 1.0 / 3);
        r.push_back(b.dot(Ac) - 1.0 / 6);
    }
    if (order >= 4) {
        r.push_back(b.dot(c3) - 1.0 / 4);
        r.push_back(b.dot(c.cwiseProduct(Ac)) - 1.0 / 8);
        r.push_back(b.dot(Ac2) - 1.0 / 12);
        r.push_back(b.dot(AAc) - 1.0 / 24);
    }
    if (order >= 5) {
        r.push_back(b.dot(c3.cwiseProduct(c)) - 1.0 / 5);
        r.push_back(b.dot(c2.cwiseProduct(Ac)) - 1.0 / 10);
        r.push_back(b.dot(c.cwiseProduct(Ac2)) - 1.0 / 15);
        r.push_back(b.dot(c.cwiseProduct(AAc)) - 1.0 / 30);
        r.push_back(b.dot(Ac.cwiseProduct(Ac)) - 1.0 / 20);
        r.push_back(b.dot(A * c3) - 1.0 / 20);
        r.push_back(b.dot(A * c.cwiseProduct(Ac)) - 1.0 / 40);
        r.push_back(b.dot(A * Ac2) - 1.0 / 60);
        r.push_back(b.dot(A * AAc) - 1.0 / 120);
    }
    double worst = 0.0;
    for (double x : r) worst = std::max(worst, std::abs(x));
    return worst;
}

}  // namespace

OrderResiduals check_esdirk54() {
    const Esdirk& t = esdirk54();
    Mat A;
    Vec c, b, bh;
    for (int i = 0; i < 7; ++i) {
        c(i) = t.c[i];
        b(i) = t.b[i];
        bh(i) = t.b_embedded[i];
        for (int j = 0; j < 7; ++j) A(i, j) = t.a[i][j];
    }
    OrderResiduals out;
    for (int i = 0; i < 7; ++i) out.row_sum = std::max(out.row_sum, std::abs(A.row(i).sum() - c(i)));
    out.high_order = order_residual(b, A, c, 5);
    out.embedded = order_residual(bh, A, c, 4);
    return out;
}

}  // namespace tableau

namespace {

std::span<const double> cspan(const VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
std::span<double> mspan(VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

bool all_finite(const VectorXd& v) { return v.allFinite(); }

std::size_t first_non_finite(const VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i)
        if (!std::isfinite(v[i])) return static_cast<std::size_t>(i);
    return static_cast<std::size_t>(v.size());
}

// Dormand-Prince 5(4) coefficients and the continuous extension of dopri5.
namespace dp {
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
}  // namespace dp

class Rk54Stepper {
public:
    static constexpr int error_order = 4;
    static constexpr bool lands_on_samples = false;

    Rk54Stepper(const Rhs& rhs, std::size_t n, IntegrationStats& stats) : rhs_(rhs), stats_(stats) {
        for (auto* v : {&k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_, &tmp_, &ynew_, &err_}) v->resize(static_cast<Eigen::Index>(n));
    }

    StepStatus attempt(double t, const VectorXd& y, double h) {
        using namespace dp;
        if (!k1_valid_) {
            eval(t, y, k1_);
            k1_valid_ = true;
        }
        tmp_ = y + h * a21 * k1_;
        eval(t + c2 * h, tmp_, k2_);
        tmp_ = y + h * (a31 * k1_ + a32 * k2_);
        eval(t + c3 * h, tmp_, k3_);
        tmp_ = y + h * (a41 * k1_ + a42 * k2_ + a43 * k3_);
        eval(t + c4 * h, tmp_, k4_);
        tmp_ = y + h * (a51 * k1_ + a52 * k2_ + a53 * k3_ + a54 * k4_);
        eval(t + c5 * h, tmp_, k5_);
        tmp_ = y + h * (a61 * k1_ + a62 * k2_ + a63 * k3_ + a64 * k4_ + a65 * k5_);
        eval(t + h, tmp_, k6_);
        // weights applied to differences from k1 so constant slopes stay exact
        ynew_ = y + h * (k1_ + a73 * (k3_ - k1_) + a74 * (k4_ - k1_) + a75 * (k5_ - k1_) + a76 * (k6_ - k1_));
        eval(t + h, ynew_, k7_);
        err_ = h * (e3 * (k3_ - k1_) + e4 * (k4_ - k1_) + e5 * (k5_ - k1_) + e6 * (k6_ - k1_) + e7 * (k7_ - k1_));
        if (!all_finite(ynew_) || !all_finite(err_) || !all_finite(k7_)) return StepStatus::non_finite;
        return StepStatus::ok;
    }

    std::size_t bad_component() const {
        for (const VectorXd* v : {&k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &ynew_, &k7_})
            if (!all_finite(*v)) return first_non_finite(*v);
        return first_non_finite(err_);
    }

    void accept(const VectorXd& y, double h) {
        using namespace dp;
        r1_ = y;
        r2_ = ynew_ - y;
        r3_ = h * k1_ - r2_;
        r4_ = r2_ - h * k7_ - r3_;
        r5_ = h * (d1 * k1_ + d3 * k3_ + d4 * k4_ + d5 * k5_ + d6 * k6_ + d7 * k7_);
        k1_.swap(k7_);  // first-same-as-last
    }

    void reject() {}

    /// Continuous extension over the last accepted step, theta in [0, 1].
    void dense(double theta, VectorXd& out) const {
        const double s = 1.0 - theta;
        out = r1_ + theta * (r2_ + s * (r3_ + theta * (r4_ + s * r5_)));
    }

    const VectorXd& ynew() const { return ynew_; }
    const VectorXd& err() const { return err_; }

private:
    void eval(double t, const VectorXd& y, VectorXd& out) {
        rhs_(t, cspan(y), mspan(out));
        ++stats_.rhs_evals;
    }

    const Rhs& rhs_;
    IntegrationStats& stats_;
    VectorXd k1_, k2_, k3_, k4_, k5_, k6_, k7_, tmp_, ynew_, err_;
    VectorXd r1_, r2_, r3_, r4_, r5_;
    bool k1_valid_ = false;
};

void finite_difference_jacobian(const Rhs& rhs, double t, std::span<const double> y, Eigen::MatrixXd& jac) {
    const std::size_t n = y.size();
    VectorXd yp = Eigen::Map<const VectorXd>(y.data(), static_cast<Eigen::Index>(n));
    VectorXd fp(static_cast<Eigen::Index>(n)), fm(static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < n; ++j) {
        const double orig = yp[static_cast<Eigen::Index>(j)];
        const double dh = 1e-6 * std::max(1.0, std::abs(orig));
        yp[static_cast<Eigen::Index>(j)] = orig + dh;
        rhs(t, cspan(yp), mspan(fp));
        yp[static_cast<Eigen::Index>(j)] = orig - dh;
        rhs(t, cspan(yp), mspan(fm));
        yp[static_cast<Eigen::Index>(j)] = orig;
        jac.col(static_cast<Eigen::Index>(j)) = (fp - fm) / (2.0 * dh);
    }
}

// Modified Newton ESDIRK stepper. The Jacobian is kept across steps and
// refreshed after a rejection or a slowly contracting Newton iteration; the
// iteration matrix I - h*gamma*J is refactored whenever h or J changes.
class EsdirkStepper {
public:
    static constexpr int error_order = 4;
    static constexpr bool lands_on_samples = true;
    static constexpr std::size_t max_newton = 10;
    static constexpr double newton_tol = 0.01;

    EsdirkStepper(const Rhs& rhs, const JacobianFn& jac, std::size_t n, const IntegratorSettings& settings,
                  IntegrationStats& stats)
        : rhs_(rhs), jac_(jac), n_(static_cast<Eigen::Index>(n)), settings_(settings), stats_(stats),
          jmat_(n_, n_) {
        for (auto& k : k_) k.resize(n_);
        for (auto* v : {&base_, &stage_, &stage6_, &f_, &g_, &delta_, &ynew_, &err_}) v->resize(n_);
    }

    StepStatus attempt(double t, const VectorXd& y, double h) {
        if (need_jacobian_) {
            refresh_jacobian(t, y);
            jac_at_start_ = true;
        }
        StepStatus st = try_step(t, y, h);
        if (st == StepStatus::newton_failed && !jac_at_start_) {
            // retry once with a Jacobian evaluated at the step start
            refresh_jacobian(t, y);
            jac_at_start_ = true;
            st = try_step(t, y, h);
        }
        if (st == StepStatus::newton_failed) ++stats_.newton_failures;
        return st;
    }

    void accept(const VectorXd&, double) {
        jac_at_start_ = false;
        if (slow_) need_jacobian_ = true;
    }

    void reject() { need_jacobian_ = true; }

    void dense(double, VectorXd&) const {}

    const VectorXd& ynew() const { return ynew_; }
    const VectorXd& err() const { return err_; }
    std::size_t newton_iterations() const { return iterations_; }
    std::size_t bad_component() const { return bad_; }

private:
    void refresh_jacobian(double t, const VectorXd& y) {
        if (jac_)
            jac_(t, cspan(y), jmat_);
        else
            finite_difference_jacobian(rhs_, t, cspan(y), jmat_);
        ++stats_.jacobian_evals;
        need_jacobian_ = false;
        factored_h_ = -1.0;
    }

    bool factor(double h) {
        if (h == factored_h_) return true;
        const double hg = h * tableau::esdirk54().gamma;
        Eigen::MatrixXd m = -hg * jmat_;
        m.diagonal().array() += 1.0;
        lu_.compute(m);
        ++stats_.factorizations;
        const auto diag = lu_.matrixLU().diagonal();
        for (Eigen::Index i = 0; i < diag.size(); ++i)
            if (diag[i] == 0.0 || !std::isfinite(diag[i])) {
                factored_h_ = -1.0;
                return false;
            }
        factored_h_ = h;
        return true;
    }

    void eval(double t, const VectorXd& y, VectorXd& out) {
        rhs_(t, cspan(y), mspan(out));
        ++stats_.rhs_evals;
    }

    StepStatus try_step(double t, const VectorXd& y, double h) {
        const auto& tab = tableau::esdirk54();
        const double hg = h * tab.gamma;
        slow_ = false;
        iterations_ = 0;
        if (!factor(h)) return StepStatus::singular;
        eval(t, y, k_[0]);
        if (!all_finite(k_[0])) {
            bad_ = first_non_finite(k_[0]);
            return StepStatus::non_finite;
        }
        for (std::size_t i = 1; i < tableau::Esdirk::stages; ++i) {
            base_ = y;
            for (std::size_t j = 0; j < i; ++j)
                if (tab.a[i][j] != 0.0) base_ += (h * tab.a[i][j]) * k_[j];
            stage_ = base_ + hg * k_[i - 1];
            const double ti = t + tab.c[i] * h;
            double prev = 0.0;
            bool converged = false;
            for (std::size_t it = 0; it < max_newton; ++it) {
                eval(ti, stage_, f_);
                g_ = stage_ - base_ - hg * f_;
                delta_ = lu_.solve(-g_);
                ++iterations_;
                if (!all_finite(delta_)) {
                    bad_ = first_non_finite(all_finite(f_) ? delta_ : f_);
                    return StepStatus::non_finite;
                }
                stage_ += delta_;
                const double norm = weighted_rms_norm(cspan(delta_), cspan(stage_), cspan(y), settings_.rtol,
                                                      settings_.atol);
                if (it > 0) {
                    const double rate = norm / prev;
                    if (rate >= 1.0) return StepStatus::newton_failed;
                    if (rate > 0.5) slow_ = true;
                }
                if (norm <= newton_tol) {
                    converged = true;
                    break;
                }
                prev = norm;
            }
            if (!converged) return StepStatus::newton_failed;
            k_[i] = (stage_ - base_) / hg;
            if (i == 5) stage6_ = stage_;
        }
        ynew_ = stage_;
        err_ = ynew_ - stage6_;
        return StepStatus::ok;
    }

    const Rhs& rhs_;
    const JacobianFn& jac_;
    Eigen::Index n_;
    const IntegratorSettings& settings_;
    IntegrationStats& stats_;
    Eigen::MatrixXd jmat_;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
    double factored_h_ = -1.0;
    bool need_jacobian_ = true;
    bool jac_at_start_ = false;
    bool slow_ = false;
    std::size_t iterations_ = 0;
    std::size_t bad_ = 0;
    std::array<VectorXd, 7> k_;
    VectorXd base_, stage_, stage6_, f_, g_, delta_, ynew_, err_;
};

void validate_samples(std::span<const double> samples, double t0, double t1) {
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i] < t0 || samples[i] > t1)
            throw std::invalid_argument("integrate: sample time outside the integration span");
        if (i > 0 && !(samples[i] > samples[i - 1]))
            throw std::invalid_argument("integrate: sample times must be strictly increasing");
    }
}

template <class Stepper>
void drive(Stepper& stepper, VectorXd y, double t0, double t1, const IntegratorSettings& s,
           std::span<const double> samples, const StepObserver& observer, Solution& out) {
    const double span = t1 - t0;
    std::size_t next = 0;
    auto record = [&](double t, const VectorXd& v) {
        out.times.push_back(t);
        out.states.emplace_back(v.data(), v.data() + v.size());
    };
    while (next < samples.size() && samples[next] == t0) {
        record(t0, y);
        ++next;
    }

    double t = t0;
    double h = std::min(s.h_init, s.h_max);
    double err_prev = 1e-4;
    bool last_rejected = false;
    std::size_t steps = 0;
    VectorXd interp(y.size());
    constexpr double k = Stepper::error_order + 1;
    constexpr double alpha = 0.7 / k, beta = 0.4 / k;

    while (t < t1) {
        if (++steps > s.max_steps) {
            std::ostringstream msg;
            msg << "maximum step count " << s.max_steps << " exceeded at t = " << t;
            throw IntegrationError(msg.str(), t);
        }
        double target = t1;
        if constexpr (Stepper::lands_on_samples)
            if (next < samples.size()) target = samples[next];
        bool landing = false;
        const double h_nominal = h;
        if (t + 1.05 * h >= target) {
            h = target - t;
            landing = true;
        }

        const StepStatus st = stepper.attempt(t, y, h);
        if (st == StepStatus::singular) throw IntegrationError("singular stage matrix", t);
        if (st != StepStatus::ok) {
            stepper.reject();
            ++out.stats.rejected;
            last_rejected = true;
            h *= 0.5;
            if (h < s.h_min) {
                if (st == StepStatus::non_finite) {
                    const std::size_t idx = stepper.bad_component();
                    std::ostringstream msg;
                    msg << "non-finite state component " << idx << " near t = " << t;
                    throw NonFiniteState(msg.str(), t, idx);
                }
                throw IntegrationError("Newton iteration failed below the minimum step size", t);
            }
            continue;
        }

        const double err = std::max(
            weighted_rms_norm(cspan(stepper.err()), cspan(y), cspan(stepper.ynew()), s.rtol, s.atol), 1e-10);
        if (err <= 1.0 || h <= s.h_min) {
            const double t_new = landing ? target : t + h;
            stepper.accept(y, h);
            ++out.stats.accepted;
            if constexpr (!Stepper::lands_on_samples) {
                while (next < samples.size() && samples[next] <= t_new) {
                    const double theta = (samples[next] - t) / h;
                    if (samples[next] == t_new)
                        record(samples[next], stepper.ynew());
                    else {
                        stepper.dense(theta, interp);
                        record(samples[next], interp);
                    }
                    ++next;
                }
            } else {
                while (next < samples.size() && samples[next] <= t_new) {
                    record(samples[next], stepper.ynew());
                    ++next;
                }
            }
            y = stepper.ynew();
            t = t_new;
            double fac = 0.9 * std::pow(err, -alpha) * std::pow(err_prev, beta);
            fac = std::clamp(fac, 0.2, 5.0);
            if (last_rejected) fac = std::min(fac, 1.0);
            // Keep h for small growth so the ESDIRK iteration matrix can be reused.
            if constexpr (Stepper::lands_on_samples)
                if (fac >= 1.0 && fac <= 1.2) fac = 1.0;
            if (observer) observer(t, StepOutcome{true, h, h * fac, err});
            h = landing ? std::max(h * fac, h_nominal) : h * fac;
            err_prev = err;
            last_rejected = false;
        } else {
            stepper.reject();
            ++out.stats.rejected;
            const double fac = std::clamp(0.9 * std::pow(err, -1.0 / k), 0.2, 1.0);
            if (observer) observer(t, StepOutcome{false, h, h * fac, err});
            h *= fac;
            last_rejected = true;
        }
        h = std::clamp(h, s.h_min, s.h_max);
        if (t < t1 && t1 - t < 1e-14 * std::max(1.0, std::abs(span))) t = t1;
    }
    if (next != samples.size()) throw IntegrationError("internal: not all samples produced", t);
    out.final_time = t;
    out.final_state.assign(y.data(), y.data() + y.size());
}

}  // namespace

StepResult rk54_step(const Rhs& rhs, double t, std::span<const double> y, double h) {
    IntegrationStats stats;
    Rk54Stepper stepper(rhs, y.size(), stats);
    const VectorXd y0 = Eigen::Map<const VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
    StepResult r;
    r.status = stepper.attempt(t, y0, h);
    r.y.assign(stepper.ynew().data(), stepper.ynew().data() + stepper.ynew().size());
    r.error.assign(stepper.err().data(), stepper.err().data() + stepper.err().size());
    return r;
}

StepResult esdirk_step(const Rhs& rhs, const JacobianFn& jacobian, double t, std::span<const double> y,
                       double h, const IntegratorSettings& settings) {
    IntegrationStats stats;
    EsdirkStepper stepper(rhs, jacobian, y.size(), settings, stats);
    const VectorXd y0 = Eigen::Map<const VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
    StepResult r;
    r.status = stepper.attempt(t, y0, h);
    r.newton_iterations = stepper.newton_iterations();
    r.y.assign(stepper.ynew().data(), stepper.ynew().data() + stepper.ynew().size());
    r.error.assign(stepper.err().data(), stepper.err().data() + stepper.err().size());
    return r;
}

Solution integrate(const Rhs& rhs, const JacobianFn& jacobian, std::span<const double> y0,
                   std::array<double, 2> t_span, const IntegratorSettings& settings,
                   std::span<const double> sample_times, const StepObserver& observer) {
    settings.validate();
    const auto [t0, t1] = t_span;
    if (!(t1 >= t0)) throw std::invalid_argument("integrate: t_span must be increasing");
    validate_samples(sample_times, t0, t1);
    const VectorXd y = Eigen::Map<const VectorXd>(y0.data(), static_cast<Eigen::Index>(y0.size()));
    if (!all_finite(y)) {
        const std::size_t idx = first_non_finite(y);
        throw NonFiniteState("non-finite initial state component " + std::to_string(idx), t0, idx);
    }

    Solution out;
    out.times.reserve(sample_times.size());
    out.states.reserve(sample_times.size());
    if (settings.method == Method::explicit_rk54) {
        Rk54Stepper stepper(rhs, y0.size(), out.stats);
        drive(stepper, y, t0, t1, settings, sample_times, observer, out);
    } else {
        static const bool tableau_ok = [] {
            const auto r = tableau::check_esdirk54();
            return r.row_sum < 1e-12 && r.high_order < 1e-12 && r.embedded < 1e-12;
        }();
        if (!tableau_ok) throw std::logic_error("ESDIRK tableau failed its order-condition self-test");
        EsdirkStepper stepper(rhs, jacobian, y0.size(), settings, out.stats);
        drive(stepper, y, t0, t1, settings, sample_times, observer, out);
    }
    return out;
}

}  // namespace ionwave
