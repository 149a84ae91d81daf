#include "ionwave/oracle.hpp"

#include <cmath>
#include <memory>
#include <numbers>
#include <string>

namespace ionwave {

EigenmodeBasis::EigenmodeBasis(std::size_t n_ions, double hop)
    : n_(n_ions), frequencies_(n_ions), shapes_(static_cast<Eigen::Index>(n_ions), static_cast<Eigen::Index>(n_ions)) {
    if (n_ions == 0) throw InvalidParameter("n_ions", "must be at least 1");
    const double np1 = static_cast<double>(n_ions + 1);
    const double norm = std::sqrt(2.0 / np1);
    for (std::size_t j = 1; j <= n_ions; ++j) {
        // the centre mode of an odd chain has cos(pi/2) = 0 exactly
        frequencies_[j - 1] = 2 * j == n_ions + 1 ? 0.0 : 2.0 * hop * std::cos(static_cast<double>(j) * std::numbers::pi / np1);
        for (std::size_t k = 1; k <= n_ions; ++k)
            shapes_(static_cast<Eigen::Index>(j - 1), static_cast<Eigen::Index>(k - 1)) =
                norm * std::sin(static_cast<double>(j * k) * std::numbers::pi / np1);
    }
}

std::vector<Complex> EigenmodeBasis::propagate(std::span<const Complex> initial, double t) const {
    if (initial.size() != n_) throw std::invalid_argument("EigenmodeBasis::propagate: wrong vector length");
    if (t == 0.0) return {initial.begin(), initial.end()};
    std::vector<Complex> coeff(n_);
    for (std::size_t j = 0; j < n_; ++j) {
        Complex c{};
        for (std::size_t k = 0; k < n_; ++k) c += shapes_(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) * initial[k];
        coeff[j] = c * std::polar(1.0, -frequencies_[j] * t);
    }
    std::vector<Complex> out(n_);
    for (std::size_t k = 0; k < n_; ++k) {
        Complex a{};
        for (std::size_t j = 0; j < n_; ++j) a += shapes_(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) * coeff[j];
        out[k] = a;
    }
    return out;
}

double EigenmodeBasis::orthonormality_error() const {
    const Eigen::MatrixXd gram = shapes_ * shapes_.transpose();
    return (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
}

std::vector<Complex> eigenmode_propagate(const ChainParams& params, double t) {
    const EigenmodeBasis basis(params.n_ions, params.hop);
    std::vector<Complex> init(params.n_ions, Complex{});
    init[0] = params.alpha0;
    return basis.propagate(init, t);
}

namespace {

struct ModeSum {
    std::vector<double> frequency;
    std::vector<Complex> weight;
    Complex at_zero;

    Complex operator()(double t) const {
        if (t == 0.0) return at_zero;
        Complex sum{};
        for (std::size_t j = 0; j < weight.size(); ++j) sum += weight[j] * std::polar(1.0, -frequency[j] * t);
        return sum;
    }
};

}  // namespace

FreeAmplitude make_free_reference(const ChainParams& params) {
    params.validate();
    const EigenmodeBasis basis(params.n_ions, params.hop);
    auto sum = std::make_shared<ModeSum>();
    const auto m = static_cast<Eigen::Index>(params.driven_site - 1);
    for (std::size_t j = 0; j < params.n_ions; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        const double w = basis.mode_shapes()(jj, m) * basis.mode_shapes()(jj, 0);
        if (w == 0.0) continue;
        sum->frequency.push_back(basis.frequencies()[j]);
        sum->weight.push_back(w * params.alpha0);
    }
    sum->at_zero = params.driven_site == 1 ? params.alpha0 : Complex{};
    return [sum](double t) { return (*sum)(t); };
}

double bessel_amplitude(int k, double jt) {
    if (k < 1) throw std::invalid_argument("bessel_amplitude: k must be >= 1");
    if (jt < 0.0) throw std::invalid_argument("bessel_amplitude: jt must be >= 0");
    return std::abs(std::cyl_bessel_j(static_cast<double>(k - 1), 2.0 * jt));
}

double open_chain_bessel_amplitude(int k, double jt) {
    if (k < 1) throw std::invalid_argument("open_chain_bessel_amplitude: k must be >= 1");
    if (jt < 0.0) throw std::invalid_argument("open_chain_bessel_amplitude: jt must be >= 0");
    const double x = 2.0 * jt;
    return std::abs(std::cyl_bessel_j(static_cast<double>(k - 1), x) + std::cyl_bessel_j(static_cast<double>(k + 1), x));
}

double rabi_closed_form(double w, double t) {
    const double s = std::sin(0.5 * w * t);
    return s * s;
}

double coherent_tail_mass(Complex alpha, std::size_t dim) {
    const double mean = std::norm(alpha);
    if (mean == 0.0) return dim == 0 ? 1.0 : 0.0;
    // Poisson(mean) tail summed directly; log-space keeps large |alpha| finite.
    double tail = 0.0;
    for (std::size_t n = dim;; ++n) {
        const double logp = -mean + static_cast<double>(n) * std::log(mean) - std::lgamma(static_cast<double>(n) + 1.0);
        const double p = std::exp(logp);
        tail += p;
        if (static_cast<double>(n) > mean && (p < 1e-300 || p < 1e-18 * tail)) break;
    }
    return tail;
}

void FockConfig::validate() const {
    if (dim < 2) throw InvalidParameter("dim", "Fock truncation must be at least 2");
    const double tail = coherent_tail_mass(alpha, dim);
    if (tail > max_tail)
        throw ConfigurationError("Fock truncation dim=" + std::to_string(dim) + " leaves coherent tail mass " +
                                 std::to_string(tail) + " above " + std::to_string(max_tail));
}

namespace {

struct Transition {
    std::size_t to;
    std::size_t from;
    double coeff;
};

// Basis index: spin (0 = ground, 1 = excited) + 2 * sum_k n_k d^(k-1).
class TinyChainModel {
public:
    TinyChainModel(const ChainParams& params, std::size_t d, const DriveConfig& config, FreeAmplitude reference)
        : params_(params), d_(d), config_(config), reference_(std::move(reference)) {
        n_states_ = 2;
        for (std::size_t k = 0; k < params.n_ions; ++k) n_states_ *= d;
        stride_.resize(params.n_ions);
        std::size_t s = 2;
        for (std::size_t k = 0; k < params.n_ions; ++k) {
            stride_[k] = s;
            s *= d;
        }
        build_static_terms();
    }

    std::size_t states() const noexcept { return n_states_; }

    std::size_t occupation(std::size_t idx, std::size_t site) const { return (idx / stride_[site]) % d_; }

    // dpsi/dt = -i H psi on interleaved (re, im) storage
    void rhs(double t, std::span<const double> y, std::span<double> dy) const {
        const std::size_t n = n_states_;
        std::vector<Complex> hpsi(n, Complex{});
        for (const auto& tr : terms_) hpsi[tr.to] += tr.coeff * Complex{y[2 * tr.from], y[2 * tr.from + 1]};
        const Complex omega2 = carrier_drive(t, config_, params_, reference_);
        if (omega2 != Complex{}) {
            for (std::size_t idx = 0; idx < n; idx += 2) {
                const Complex g{y[2 * idx], y[2 * idx + 1]};
                const Complex e{y[2 * idx + 2], y[2 * idx + 3]};
                hpsi[idx + 1] += 0.5 * omega2 * g;
                hpsi[idx] += 0.5 * std::conj(omega2) * e;
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            const Complex d = Complex{0.0, -1.0} * hpsi[i];
            dy[2 * i] = d.real();
            dy[2 * i + 1] = d.imag();
        }
    }

    std::vector<double> initial_state() const {
        std::vector<Complex> coh(d_);
        coh[0] = std::exp(-0.5 * std::norm(params_.alpha0));
        for (std::size_t n = 1; n < d_; ++n) coh[n] = coh[n - 1] * params_.alpha0 / std::sqrt(static_cast<double>(n));
        double norm = 0.0;
        for (const auto& c : coh) norm += std::norm(c);
        std::vector<double> y(2 * n_states_, 0.0);
        for (std::size_t n = 0; n < d_; ++n) {
            const Complex c = coh[n] / std::sqrt(norm);
            y[2 * (n * stride_[0])] = c.real();
            y[2 * (n * stride_[0]) + 1] = c.imag();
        }
        return y;
    }

    double excited_population(std::span<const double> y) const {
        double p = 0.0;
        for (std::size_t idx = 1; idx < n_states_; idx += 2) p += y[2 * idx] * y[2 * idx] + y[2 * idx + 1] * y[2 * idx + 1];
        return p;
    }

    double norm(std::span<const double> y) const {
        double p = 0.0;
        for (double v : y) p += v * v;
        return std::sqrt(p);
    }

    Complex mean_annihilation(std::span<const double> y, std::size_t site) const {
        Complex acc{};
        for (std::size_t idx = 0; idx < n_states_; ++idx) {
            const std::size_t nk = occupation(idx, site);
            if (nk == 0) continue;
            const std::size_t lower = idx - stride_[site];
            acc += std::conj(Complex{y[2 * lower], y[2 * lower + 1]}) * std::sqrt(static_cast<double>(nk)) *
                   Complex{y[2 * idx], y[2 * idx + 1]};
        }
        return acc;
    }

private:
    void build_static_terms() {
        const std::size_t n_ions = params_.n_ions;
        const std::size_t m = params_.driven_site - 1;
        const double g = params_.coupling;
        for (std::size_t idx = 0; idx < n_states_; ++idx) {
            // hopping J (a_k^dag a_{k+1} + a_{k+1}^dag a_k)
            for (std::size_t k = 0; k + 1 < n_ions; ++k) {
                const std::size_t nk = occupation(idx, k);
                const std::size_t nk1 = occupation(idx, k + 1);
                if (nk1 > 0 && nk + 1 < d_)
                    terms_.push_back({idx + stride_[k] - stride_[k + 1], idx,
                                      params_.hop * std::sqrt(static_cast<double>((nk + 1) * nk1))});
                if (nk > 0 && nk1 + 1 < d_)
                    terms_.push_back({idx - stride_[k] + stride_[k + 1], idx,
                                      params_.hop * std::sqrt(static_cast<double>(nk * (nk1 + 1)))});
            }
            if (!config_.jc_on || g == 0.0) continue;
            const std::size_t nm = occupation(idx, m);
            const bool excited = (idx % 2) == 1;
            // (g/2) a_m s+ : |n, g> -> sqrt(n) |n - 1, e>
            if (!excited && nm > 0)
                terms_.push_back({idx - stride_[m] + 1, idx, 0.5 * g * std::sqrt(static_cast<double>(nm))});
            // (g/2) a_m^dag s- : |n, e> -> sqrt(n + 1) |n + 1, g>
            if (excited && nm + 1 < d_)
                terms_.push_back({idx + stride_[m] - 1, idx, 0.5 * g * std::sqrt(static_cast<double>(nm + 1))});
        }
    }

    ChainParams params_;
    std::size_t d_;
    DriveConfig config_;
    FreeAmplitude reference_;
    std::size_t n_states_ = 0;
    std::vector<std::size_t> stride_;
    std::vector<Transition> terms_;
};

TimeSeries run_fock(const TinyChainModel& model, std::size_t n_ions, std::array<double, 2> t_span,
                    std::span<const double> samples, const IntegratorSettings& settings) {
    const auto y0 = model.initial_state();
    IntegratorSettings s = settings;
    s.method = Method::explicit_rk54;
    const Rhs rhs = [&model](double t, std::span<const double> y, std::span<double> dy) { model.rhs(t, y, dy); };
    const Solution sol = integrate(rhs, nullptr, y0, t_span, s, samples);

    TimeSeries ts(sol.times);
    std::vector<double> pe, norm;
    std::vector<std::vector<double>> re(n_ions), im(n_ions);
    for (const auto& y : sol.states) {
        pe.push_back(model.excited_population(y));
        norm.push_back(model.norm(y));
        for (std::size_t k = 0; k < n_ions; ++k) {
            const Complex a = model.mean_annihilation(y, k);
            re[k].push_back(a.real());
            im[k].push_back(a.imag());
        }
    }
    ts.add_column("P_e", std::move(pe));
    ts.add_column("norm", std::move(norm));
    if (n_ions == 1) {
        ts.add_column("re_a", re[0]);
        ts.add_column("im_a", im[0]);
    }
    for (std::size_t k = 0; k < n_ions; ++k) {
        ts.add_column("re_a" + std::to_string(k + 1), std::move(re[k]));
        ts.add_column("im_a" + std::to_string(k + 1), std::move(im[k]));
    }
    return ts;
}

}  // namespace

TimeSeries fock_single_ion(const FockConfig& config, double g, Complex omega2, std::array<double, 2> t_span,
                           std::span<const double> samples, const IntegratorSettings& settings) {
    config.validate();
    if (2 * config.dim > kMaxFockDimension) throw ConfigurationError("Fock dimension cap exceeded");
    ChainParams p = ChainParams::centered(1);
    p.coupling = g;
    p.hop = 0.0;
    p.alpha0 = config.alpha;
    const DriveConfig drive{true, omega2 != Complex{}, ConstantCarrier{omega2}};
    const TinyChainModel model(p, config.dim, drive, {});
    return run_fock(model, 1, t_span, samples, settings);
}

TimeSeries fock_tiny_chain(const ChainParams& params, std::size_t per_site_dim, const DriveConfig& config,
                           std::array<double, 2> t_span, std::span<const double> samples,
                           const IntegratorSettings& settings, double max_tail) {
    params.validate();
    if (params.n_ions > 3) throw ConfigurationError("fock_tiny_chain supports at most 3 ions");
    std::size_t total = 2;
    for (std::size_t k = 0; k < params.n_ions; ++k) {
        total *= per_site_dim;
        if (total > kMaxFockDimension)
            throw ConfigurationError("Fock dimension " + std::to_string(per_site_dim) + "^" +
                                     std::to_string(params.n_ions) + " x 2 exceeds the cap of 2^14");
    }
    FockConfig fc{per_site_dim, params.alpha0, max_tail};
    fc.validate();
    FreeAmplitude reference;
    if (config.tracks_reference()) reference = make_free_reference(params);
    const TinyChainModel model(params, per_site_dim, config, reference);
    return run_fock(model, params.n_ions, t_span, samples, settings);
}

}  // namespace ionwave
