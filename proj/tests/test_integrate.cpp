#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "ionwave/integrate.hpp"
#include "ionwave/jacobian.hpp"
#include "ionwave/oracle.hpp"

using namespace ionwave;

namespace {

Rhs linear(double lambda) {
    return [lambda](double, std::span<const double> y, std::span<double> dy) { dy[0] = lambda * y[0]; };
}

JacobianFn linear_jac(double lambda) {
    return [lambda](double, std::span<const double>, Eigen::MatrixXd& j) {
        j.resize(1, 1);
        j(0, 0) = lambda;
    };
}

// Global error at t = 1 of y' = -y with n fixed steps.
double fixed_step_error(Method m, int n) {
    const double h = 1.0 / n;
    std::vector<double> y{1.0};
    IntegratorSettings s;
    s.rtol = 1e-14;
    s.atol = 1e-16;
    for (int i = 0; i < n; ++i) {
        const StepResult r = m == Method::explicit_rk54 ? rk54_step(linear(-1.0), i * h, y, h)
                                                        : esdirk_step(linear(-1.0), linear_jac(-1.0), i * h, y, h, s);
        REQUIRE(r.ok());
        y = r.y;
    }
    return std::abs(y[0] - std::exp(-1.0));
}

}  // namespace

TEST_CASE("ESDIRK tableau satisfies its order conditions") {
    const auto res = tableau::check_esdirk54();
    CHECK(res.row_sum < 1e-14);
    CHECK(res.high_order < 1e-12);
    CHECK(res.embedded < 1e-12);
    const auto& tab = tableau::esdirk54();
    CHECK(tab.a[0][0] == 0.0);
    for (std::size_t i = 1; i < tab.stages; ++i) CHECK(tab.a[i][i] == tab.gamma);
    for (std::size_t j = 0; j < tab.stages; ++j) CHECK(tab.a[tab.stages - 1][j] == tab.b[j]);
}

TEST_CASE("rk54 single steps") {
    const Rhs zero = [](double, std::span<const double>, std::span<double> dy) { std::fill(dy.begin(), dy.end(), 0.0); };
    const Rhs one = [](double, std::span<const double>, std::span<double> dy) { dy[0] = 1.0; };
    std::vector<double> y{0.25, -3.0};
    for (double h : {1e-3, 0.5, 7.0}) {
        const StepResult r = rk54_step(zero, 0.0, y, h);
        CHECK(r.y == y);
        CHECK(r.error == std::vector<double>{0.0, 0.0});
    }
    const StepResult r = rk54_step(one, 0.0, std::vector<double>{0.0}, 0.5);
    CHECK(r.y[0] == 0.5);
    CHECK(std::abs(r.error[0]) < 1e-16);

    SUBCASE("quintic polynomial solutions are integrated exactly") {
        const Rhs poly = [](double t, std::span<const double>, std::span<double> dy) { dy[0] = 5 * std::pow(t, 4) - 2 * t; };
        const StepResult p = rk54_step(poly, 0.3, std::vector<double>{0.0}, 0.7);
        const double exact = (1.0 - 1.0) - (std::pow(0.3, 5) - 0.09);
        CHECK(p.y[0] == doctest::Approx(exact).epsilon(1e-13));
    }
    SUBCASE("non-finite rhs is reported") {
        const Rhs bad = [](double, std::span<const double>, std::span<double> dy) { dy[0] = std::numeric_limits<double>::quiet_NaN(); };
        CHECK(rk54_step(bad, 0.0, std::vector<double>{1.0}, 0.1).status == StepStatus::non_finite);
    }
}

TEST_CASE("exponential decay to t = 1") {
    for (Method m : {Method::explicit_rk54, Method::esdirk}) {
        IntegratorSettings s;
        s.method = m;
        const std::vector<double> at{1.0};
        const Solution sol = integrate(linear(-1.0), m == Method::esdirk ? linear_jac(-1.0) : JacobianFn{},
                                       std::vector<double>{1.0}, {0.0, 1.0}, s, at);
        CHECK(std::abs(sol.states[0][0] - std::exp(-1.0)) < 1e-8);
        CHECK(sol.final_time == 1.0);
    }
}

TEST_CASE("observed convergence order is five") {
    for (Method m : {Method::explicit_rk54, Method::esdirk}) {
        const std::string name = to_string(m);
        CAPTURE(name);
        const double e1 = fixed_step_error(m, 8), e2 = fixed_step_error(m, 16), e3 = fixed_step_error(m, 32);
        const double r1 = e1 / e2, r2 = e2 / e3;
        MESSAGE(name, " error ratios ", r1, " ", r2);
        CHECK(r2 == doctest::Approx(32.0).epsilon(0.2));
        CHECK(std::log2(r2) == doctest::Approx(5.0).epsilon(0.2));
    }
}

TEST_CASE("ESDIRK step") {
    IntegratorSettings s;
    SUBCASE("identity for a zero rhs") {
        const Rhs zero = [](double, std::span<const double>, std::span<double> dy) { std::fill(dy.begin(), dy.end(), 0.0); };
        const JacobianFn jz = [](double, std::span<const double> y, Eigen::MatrixXd& j) {
            j = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(y.size()), static_cast<Eigen::Index>(y.size()));
        };
        const std::vector<double> y{1.5, -2.0, 0.0};
        const StepResult r = esdirk_step(zero, jz, 0.0, y, 0.3, s);
        REQUIRE(r.ok());
        CHECK(r.y == y);
    }
    SUBCASE("stiff decay with lambda = -1e6 and h = 1 stays bounded and monotone") {
        std::vector<double> y{1.0};
        double prev = 1.0;
        for (int i = 0; i < 20; ++i) {
            const StepResult r = esdirk_step(linear(-1e6), linear_jac(-1e6), i, y, 1.0, s);
            REQUIRE(r.ok());
            CHECK(std::abs(r.y[0]) <= prev);
            CHECK(std::isfinite(r.y[0]));
            prev = std::abs(r.y[0]);
            y = r.y;
        }
        CHECK(prev < 1e-6);
    }
    SUBCASE("adaptive stiff run needs few steps") {
        IntegratorSettings st;
        st.method = Method::esdirk;
        st.h_max = 10.0;
        const Solution sol = integrate(linear(-1e6), linear_jac(-1e6), std::vector<double>{1.0}, {0.0, 10.0}, st,
                                       std::vector<double>{10.0});
        CHECK(std::abs(sol.states[0][0]) < 1e-10);
        CHECK(sol.stats.accepted < 2000);
    }
}

TEST_CASE("integrate sampling") {
    SUBCASE("zero rhs keeps every sample at y0") {
        const Rhs zero = [](double, std::span<const double>, std::span<double> dy) { std::fill(dy.begin(), dy.end(), 0.0); };
        const std::vector<double> y0{0.1, 0.2};
        const auto grid = uniform_grid(0.0, 5.0, 11);
        for (Method m : {Method::explicit_rk54, Method::esdirk}) {
            IntegratorSettings s;
            s.method = m;
            const Solution sol = integrate(zero, nullptr, y0, {0.0, 5.0}, s, grid);
            REQUIRE(sol.states.size() == grid.size());
            for (const auto& st : sol.states) CHECK(st == y0);
        }
    }
    SUBCASE("harmonic oscillator returns after one period") {
        const Rhs osc = [](double, std::span<const double> y, std::span<double> dy) {
            dy[0] = y[1];
            dy[1] = -y[0];
        };
        const JacobianFn jac = [](double, std::span<const double>, Eigen::MatrixXd& j) {
            j.resize(2, 2);
            j << 0, 1, -1, 0;
        };
        const double T = 2 * std::numbers::pi;
        for (Method m : {Method::explicit_rk54, Method::esdirk}) {
            IntegratorSettings s;
            s.method = m;
            const Solution sol = integrate(osc, jac, std::vector<double>{1.0, 0.0}, {0.0, T}, s, std::vector<double>{T});
            CHECK(std::abs(sol.states[0][0] - 1.0) < 1e-7);
            CHECK(std::abs(sol.states[0][1]) < 1e-7);
        }
    }
    SUBCASE("dense output between steps is accurate") {
        IntegratorSettings s;
        s.rtol = 1e-10;
        s.atol = 1e-12;
        const auto grid = uniform_grid(0.0, 3.0, 301);
        const Solution sol = integrate(linear(-1.0), nullptr, std::vector<double>{1.0}, {0.0, 3.0}, s, grid);
        CHECK(sol.stats.accepted < grid.size());
        double worst = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) worst = std::max(worst, std::abs(sol.states[i][0] - std::exp(-grid[i])));
        CHECK(worst < 1e-9);
    }
    SUBCASE("bad sample grids are rejected") {
        IntegratorSettings s;
        CHECK_THROWS_AS(integrate(linear(-1.0), nullptr, std::vector<double>{1.0}, {0.0, 1.0}, s, std::vector<double>{0.5, 0.5}),
                        std::invalid_argument);
        CHECK_THROWS_AS(integrate(linear(-1.0), nullptr, std::vector<double>{1.0}, {0.0, 1.0}, s, std::vector<double>{2.0}),
                        std::invalid_argument);
    }
}

TEST_CASE("integration failures carry context") {
    SUBCASE("step budget exhausted") {
        IntegratorSettings s;
        s.max_steps = 5;
        s.h_max = 1e-3;
        try {
            (void)integrate(linear(-1.0), nullptr, std::vector<double>{1.0}, {0.0, 1.0}, s, std::vector<double>{1.0});
            FAIL("expected an IntegrationError");
        } catch (const IntegrationError& e) {
            CHECK(e.last_time() > 0.0);
            CHECK(e.last_time() < 1.0);
        }
    }
    SUBCASE("blow-up names the component") {
        const Rhs bad = [](double t, std::span<const double> y, std::span<double> dy) {
            dy[0] = 0.0;
            dy[1] = t > 0.5 ? std::numeric_limits<double>::infinity() : y[1];
        };
        for (Method m : {Method::explicit_rk54, Method::esdirk}) {
            IntegratorSettings s;
            s.method = m;
            try {
                (void)integrate(bad, nullptr, std::vector<double>{1.0, 1.0}, {0.0, 1.0}, s, std::vector<double>{1.0});
                FAIL("expected a NonFiniteState");
            } catch (const NonFiniteState& e) {
                CHECK(e.component() == 1);
                CHECK(e.last_time() <= 0.5 + 1e-12);
            } catch (const IntegrationError& e) {
                FAIL(e.what());
            }
        }
    }
    SUBCASE("settings are validated") {
        IntegratorSettings s;
        s.rtol = 0.0;
        CHECK_THROWS(s.validate());
        s = IntegratorSettings{};
        s.h_init = 10.0;
        CHECK_THROWS(s.validate());
    }
}

TEST_CASE("free chain against the eigenmode oracle") {
    const ChainParams p;
    const ChainSystem sys(p, DriveConfig::none());
    const auto grid = uniform_grid(0.0, 20.0, 81);
    for (Method m : {Method::explicit_rk54, Method::esdirk}) {
        IntegratorSettings s;
        s.method = m;
        const Solution sol = integrate(make_rhs(sys), make_jacobian(sys), initial_state(p).to_flat(), {0.0, 20.0}, s, grid);
        double worst = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const auto exact = eigenmode_propagate(p, grid[i]);
            const ChainState st = ChainState::from_flat(sol.states[i]);
            for (std::size_t k = 0; k < p.n_ions; ++k) worst = std::max(worst, std::abs(st.amplitudes[k] - exact[k]));
        }
        const std::string name = to_string(m);
        CAPTURE(name);
        CHECK(worst < 1e-6);
    }
}

TEST_CASE("tighter tolerance never loses accuracy on the free chain") {
    const ChainParams p;
    const ChainSystem sys(p, DriveConfig::none());
    const auto exact = eigenmode_propagate(p, 20.0);
    double prev = INFINITY;
    for (double rtol : {1e-5, 1e-6, 1e-7, 1e-8, 1e-9, 1e-10}) {
        IntegratorSettings s;
        s.rtol = rtol;
        s.atol = rtol * 1e-2;
        const Solution sol = integrate(make_rhs(sys), nullptr, initial_state(p).to_flat(), {0.0, 20.0}, s, std::vector<double>{20.0});
        const ChainState st = ChainState::from_flat(sol.states[0]);
        double err = 0.0;
        for (std::size_t k = 0; k < p.n_ions; ++k) err = std::max(err, std::abs(st.amplitudes[k] - exact[k]));
        CAPTURE(rtol);
        CHECK(err <= prev);
        prev = err;
    }
}

TEST_CASE("integration is deterministic") {
    ChainParams p = ChainParams::centered(40);
    p.driven_site = 20;
    const FreeAmplitude ref = make_free_reference(p);
    const ChainSystem sys(p, DriveConfig::tracking(0.7), ref);
    const auto grid = uniform_grid(0.0, 15.0, 31);
    for (Method m : {Method::explicit_rk54, Method::esdirk}) {
        IntegratorSettings s;
        s.method = m;
        const Solution a = integrate(make_rhs(sys), make_jacobian(sys), initial_state(p).to_flat(), {0.0, 15.0}, s, grid);
        const Solution b = integrate(make_rhs(sys), make_jacobian(sys), initial_state(p).to_flat(), {0.0, 15.0}, s, grid);
        CHECK(a.states == b.states);
    }
}

TEST_CASE("analytic chain Jacobian") {
    std::mt19937 rng(42);
    std::normal_distribution<double> d;

    SUBCASE("without drive it is the hopping matrix") {
        ChainParams p = ChainParams::centered(5);
        p.coupling = 0.0;
        p.hop = 1.4;
        ChainState s = initial_state(p);
        const Eigen::MatrixXd j = chain_jacobian(0.0, s, p, DriveConfig::jc_only(), {});
        Eigen::MatrixXd expect = Eigen::MatrixXd::Zero(13, 13);
        for (int k = 0; k < 5; ++k)
            for (int n : {k - 1, k + 1}) {
                if (n < 0 || n >= 5) continue;
                // d Re a_k / dt = J Im a_n, d Im a_k / dt = -J Re a_n
                expect(2 * k, 2 * n + 1) = 1.4;
                expect(2 * k + 1, 2 * n) = -1.4;
            }
        CHECK((j - expect).cwiseAbs().maxCoeff() == 0.0);
    }

    SUBCASE("matches central differences on random states") {
        for (const DriveConfig& cfg : {DriveConfig::none(), DriveConfig::jc_only(), DriveConfig::tracking(0.0),
                                       DriveConfig::tracking(2.2), DriveConfig::constant(Complex(0.3, -0.8), true),
                                       DriveConfig::constant(Complex(1.0, 0.5), false)}) {
            ChainParams p = ChainParams::centered(12);
            p.coupling = 1.7;
            const FreeAmplitude ref = make_free_reference(p);
            const ChainSystem sys(p, cfg, ref);
            std::vector<double> y(sys.dimension());
            for (auto& v : y) v = d(rng);
            Eigen::MatrixXd ja(y.size(), y.size());
            chain_jacobian(sys, 3.3, y, ja);
            Eigen::MatrixXd jf(y.size(), y.size());
            std::vector<double> fp(y.size()), fm(y.size());
            const double h = 1e-6;
            for (std::size_t c = 0; c < y.size(); ++c) {
                auto yp = y, ym = y;
                yp[c] += h;
                ym[c] -= h;
                sys.rhs(3.3, yp, fp);
                sys.rhs(3.3, ym, fm);
                for (std::size_t r = 0; r < y.size(); ++r) jf(r, c) = (fp[r] - fm[r]) / (2 * h);
            }
            CHECK((ja - jf).cwiseAbs().maxCoeff() < 1e-6);
        }
    }

    SUBCASE("single ion without hopping is a 5x5 block") {
        ChainParams p = ChainParams::centered(1);
        p.hop = 0.0;
        p.coupling = 0.9;
        ChainState s{{Complex(0.4, -0.3)}, Bloch{0.6, 0.0, 0.8}};
        const Eigen::MatrixXd j = chain_jacobian(0.0, s, p, DriveConfig::jc_only(), {});
        CHECK(j.rows() == 5);
        CHECK(j.cols() == 5);
        CHECK(j.block(0, 0, 2, 2).cwiseAbs().maxCoeff() == 0.0);
        CHECK(j.cwiseAbs().maxCoeff() > 0.0);
    }
}
