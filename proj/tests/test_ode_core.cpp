#include "doctest.h"

#include <cmath>
#include <random>

#include "s2cubic/critical_tau.hpp"
#include "s2cubic/errors.hpp"
#include "s2cubic/ode_core.hpp"

using namespace s2c;

namespace {

struct Uniform {
    std::mt19937_64 rng;
    explicit Uniform(std::uint64_t seed) : rng(seed) {}
    double operator()(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); }
};

// the equation written out, independent of rhs_third_order
double equation_residual(double x, double x1, double x2, double x3)
{
    const double lhs = x1 * x3;
    const double rhs = x * x2 - 2 * x2 * x2 + x1 * x1 + x * x;
    return std::abs(lhs - rhs) / std::max({1.0, std::abs(lhs), x * x, x1 * x1, x2 * x2});
}

}  // namespace

TEST_CASE("exact solutions")
{
    Uniform u(11);
    double worst_eq = 0.0, worst_rhs = 0.0;
    for (int i = 0; i < 100; ++i) {
        const double t = u(-3.0, 3.0);
        const double e = std::exp(t), c = std::cosh(t), s = std::sinh(t);
        worst_eq = std::max({worst_eq, equation_residual(e, e, e, e), equation_residual(c, s, c, s),
                             equation_residual(s, c, s, c)});
        worst_rhs = std::max(worst_rhs, std::abs(rhs_third_order({t, e, e, e}) - e) / e);
        worst_rhs = std::max(worst_rhs, std::abs(rhs_third_order({t, s, c, s}) - c) / c);
        if (std::abs(s) > 1e-6) worst_rhs = std::max(worst_rhs, std::abs(rhs_third_order({t, c, s, c}) - s) / std::abs(s));
    }
    CHECK(worst_eq <= 1e-12);
    CHECK(worst_rhs <= 1e-12);
    CHECK(rhs_third_order({0.0, 1.0, 1.0, 1.0}) == 1.0);
    CHECK(std::abs(rhs_third_order({1.0, std::cosh(1.0), std::sinh(1.0), std::cosh(1.0)}) - std::sinh(1.0)) < 1e-15);
    CHECK(rhs_third_order({0.0, 0.0, 1.0, 0.0}) == 1.0);
    CHECK_THROWS_AS(rhs_third_order({0.0, 1.0, 0.0, 1.0}), Error);
}

TEST_CASE("scaling covariance")
{
    Uniform u(12);
    for (int i = 0; i < 50; ++i) {
        const JetState j{0.0, u(-2, 2), u(0.1, 2), u(-2, 2)};
        const double base = rhs_third_order(j);
        for (double a : {2.0, -3.0, 0.5}) {
            const JetState s{0.0, a * j.x, a * j.x1, a * j.x2};
            CHECK(std::abs(rhs_third_order(s) - a * base) <= 1e-13 * std::max(1.0, std::abs(a * base)));
        }
    }
}

TEST_CASE("fourth derivative against differences of the third")
{
    // along x = sinh: x'''' = sinh
    for (double t : {-1.0, 0.3, 2.0})
        CHECK(std::abs(fourth_derivative(std::sinh(t), std::cosh(t), std::sinh(t), std::cosh(t)) - std::sinh(t)) < 1e-12);
}

TEST_CASE("tau = 0 gives sinh")
{
    IvpSpec spec;
    spec.t_lo = -5;
    spec.t_hi = 5;
    const auto tr = integrate_ivp(spec);
    double err = 0;
    for (int i = 0; i <= 1000; ++i) {
        const double t = -5 + 10.0 * i / 1000;
        err = std::max(err, std::abs(tr.at(t).x - std::sinh(t)));
    }
    CHECK(err < 1e-8);
    CHECK(tr.termination().kind == TerminationKind::completed);
    for (std::size_t i = 1; i < tr.nodes().size(); ++i) CHECK(tr.nodes()[i].t > tr.nodes()[i - 1].t);
}

TEST_CASE("small tau stays positive, large tau stops")
{
    IvpSpec spec;
    spec.tau = 0.01;
    spec.t_lo = 0.0;
    spec.t_hi = 30.0;
    const auto tr = integrate_ivp(spec);
    CHECK(tr.termination().kind == TerminationKind::completed);
    for (const auto& n : tr.nodes()) CHECK(n.x1 > 0.0);

    spec.tau = find_T_bisection(1e-8).T + 0.05;
    spec.t_lo = -30.0;
    // beyond T the run ends with an event or stalls at a genuine singularity
    try {
        const auto bad = integrate_ivp(spec);
        CHECK(bad.termination().kind != TerminationKind::completed);
        CHECK(std::isfinite(bad.termination().t));
    } catch (const Error& e) {
        CHECK(e.code() == Errc::step_size_underflow);
        CHECK(std::isfinite(e.where()));
    }
}

TEST_CASE("log reduction")
{
    IvpSpec spec;
    spec.t_lo = -1.0;
    spec.t_hi = 4.0;
    const auto sinh_tr = integrate_ivp(spec);
    for (const auto& pt : log_reduction(sinh_tr, 0.1, 4.0)) CHECK(std::abs(pt.p + pt.q * pt.q - 1.0) < 1e-9);
    CHECK_THROWS_AS(log_reduction(sinh_tr, -1.0, 4.0), Error);

    const double c = std::cosh(0.5), s = std::sinh(0.5);
    const auto cosh_tr = integrate_from({0.5, c, s, c}, 0.5, 3.0, IvpSpec{});
    for (const auto& pt : log_reduction(cosh_tr)) {
        CHECK(std::abs(pt.p + pt.q * pt.q - 1.0) < 1e-9);
        CHECK(pt.q < 1.0);
    }
    const auto exp_tr = integrate_from({0.0, 1.0, 1.0, 1.0}, -2.0, 2.0, IvpSpec{});
    for (const auto& pt : log_reduction(exp_tr)) {
        CHECK(std::abs(pt.q - 1.0) < 1e-10);
        CHECK(std::abs(pt.p) < 1e-10);
    }
}

TEST_CASE("time translation and reflection")
{
    IvpSpec spec;
    spec.tau = 0.2;
    spec.t_lo = -4.0;
    spec.t_hi = 4.0;
    const auto tr = integrate_ivp(spec);
    const JetState mid = tr.jet(1.0);
    const auto tail = integrate_from(mid, 1.0, 4.0, spec);
    for (double t : {1.5, 2.5, 4.0}) CHECK(std::abs(tail.at(t).x - tr.at(t).x) < 1e-9 * std::max(1.0, std::abs(tr.at(t).x)));

    IvpSpec neg = spec;
    neg.tau = -0.2;
    const auto trn = integrate_ivp(neg);
    for (double t : {-3.0, -0.5, 0.7, 3.5}) CHECK(std::abs(tr.at(t).x + trn.at(-t).x) < 1e-9 * std::max(1.0, std::abs(tr.at(t).x)));
}

TEST_CASE("invalid settings")
{
    IvpSpec spec;
    spec.rel_tol = 0.0;
    CHECK_THROWS_AS(integrate_ivp(spec), Error);
    spec = IvpSpec{};
    spec.t_lo = 1.0;
    CHECK_THROWS_AS(integrate_ivp(spec), Error);
}
