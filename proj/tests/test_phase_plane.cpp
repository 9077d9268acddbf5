#include "doctest.h"

#include <cmath>
#include <random>

#include "s2cubic/errors.hpp"
#include "s2cubic/ode_core.hpp"
#include "s2cubic/phase_plane.hpp"

using namespace s2c;

TEST_CASE("vector field values")
{
    for (PhasePoint e : {PhasePoint{1, 0}, PhasePoint{-1, 0}, PhasePoint{0, 1}, PhasePoint{0, -0.5}}) {
        const auto f = sms_rhs(e);
        CHECK(f[0] == 0.0);
        CHECK(f[1] == 0.0);
    }
    const auto g = sms_rhs({2.0, -3.0});
    CHECK(g[0] == -6.0);
    CHECK(g[1] == 24.0);
    CHECK(g[1] == -2.0 * 2.0 * g[0]);
    const auto h = syst1_rhs({0.5, 0.0});
    CHECK(h[0] == 0.0);
    CHECK(std::abs(h[1] - 2.625) < 1e-15);
    CHECK_THROWS_AS(syst1_rhs({0.0, 0.3}), Error);
}

TEST_CASE("invariant parabola and symmetry")
{
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> U(-3.0, 3.0);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double q = U(rng);
        const auto f = sms_rhs({q, 1.0 - q * q});
        worst = std::max(worst, std::abs(f[1] + 2.0 * q * f[0]) / std::max(1.0, q * q * q * q));
        const double p = U(rng);
        if (std::abs(q) > 1e-3) {
            const auto a = syst1_rhs({q, p}), b = syst1_rhs({-q, p});
            CHECK(std::abs(a[1] + b[1]) < 1e-12 * std::max(1.0, std::abs(a[1])));
        }
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE("fixed points")
{
    const auto eq = sms_equilibria();
    REQUIRE(eq.size() == 4);
    const PhasePoint expect[] = {{-1, 0}, {0, -0.5}, {0, 1}, {1, 0}};
    for (int i = 0; i < 4; ++i) {
        CHECK(std::abs(eq[i].q - expect[i].q) < 1e-12);
        CHECK(std::abs(eq[i].p - expect[i].p) < 1e-12);
    }
    for (const auto& f : classify_fixed_points()) {
        const auto r = sms_rhs(f.location);
        CHECK(std::hypot(r[0], r[1]) <= 1e-12);
        CHECK((f.kind == FixedPointKind::saddle) == (f.eigenvalues[0] * f.eigenvalues[1] < 0));
        // eigen-pairs against the finite-difference Jacobian
        const double h = 1e-6;
        for (int k = 0; k < 2; ++k) {
            const auto& v = f.eigenvectors[k];
            CHECK(std::abs(std::hypot(v[0], v[1]) - 1.0) < 1e-14);
            const auto fp = sms_rhs({f.location.q + h * v[0], f.location.p + h * v[1]});
            const auto fm = sms_rhs({f.location.q - h * v[0], f.location.p - h * v[1]});
            for (int c = 0; c < 2; ++c) CHECK(std::abs((fp[c] - fm[c]) / (2 * h) - f.eigenvalues[k] * v[c]) < 1e-7);
        }
        auto has = [&](double a, double b) {
            return std::abs(f.eigenvalues[0] - a) + std::abs(f.eigenvalues[1] - b) < 1e-10 ||
                   std::abs(f.eigenvalues[0] - b) + std::abs(f.eigenvalues[1] - a) < 1e-10;
        };
        if (f.location.q == 1.0) CHECK(has(-2.0, -4.0));
        if (f.location.q == 0.0 && f.location.p == 1.0) CHECK(has(1.0, -3.0));
        if (f.location.q == 0.0 && f.location.p == -0.5) CHECK(has(-0.5, 3.0));
    }
}

TEST_CASE("separatrices")
{
    const auto fps = classify_fixed_points();
    const FixedPointInfo *upper = nullptr, *lower = nullptr;
    for (const auto& f : fps) {
        if (f.kind != FixedPointKind::saddle) continue;
        (f.location.p > 0 ? upper : lower) = &f;
    }
    REQUIRE(upper);
    REQUIRE(lower);
    const auto to_node = trace_separatrix(*upper, Branch::unstable_pos, 20.0);
    CHECK(std::hypot(to_node.points().back().q - 1.0, to_node.points().back().p) < 1e-6);

    const auto star = trace_separatrix(*lower, Branch::stable_pos, 50.0);
    CHECK(star.reached_q_max());
    for (const auto& pt : star.points())
        if (pt.q > 1e-3) CHECK(pt.p < 1.0 - pt.q * pt.q);
    CHECK_THROWS_AS(trace_separatrix(*lower, Branch::stable_neg, 50.0), Error);
    CHECK_THROWS_AS(estimate_T_from_separatrix(5.0), Error);
}

TEST_CASE("limits on exact orbits")
{
    std::vector<PhasePoint> gamma0;
    for (int i = 0; i <= 400; ++i) {
        const double q = 10.0 + 40.0 * i / 400;
        gamma0.push_back({q, 1.0 - q * q});
    }
    CHECK(std::abs(fit_h_limit(gamma0, 25.0, 50.0).value) < 1e-10);
    CHECK(std::abs(tau_from_orbit(gamma0).value) < 1e-10);

    const auto est = estimate_T_from_separatrix(100.0);
    CHECK(est.value > 0.5);
    CHECK(est.value < 0.6);
}

TEST_CASE("orbit of a small tau")
{
    IvpSpec spec;
    spec.tau = 0.05;
    spec.t_lo = -1.0;
    spec.t_hi = 1.0;
    const auto tr = integrate_ivp(spec);
    std::vector<PhasePoint> curve;
    for (int i = 0; i < 200; ++i) {
        const JetState j = tr.jet(1e-4 * std::pow(100.0, i / 199.0));
        const double q = j.x1 / j.x;
        curve.push_back({q, j.x2 / j.x - q * q});
    }
    CHECK(std::abs(tau_from_orbit(curve, 1e-3).value - 0.05) < 1e-3);
}
