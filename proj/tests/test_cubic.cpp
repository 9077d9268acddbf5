#include "doctest.h"

#include <cmath>
#include <memory>
#include <random>

#include "s2cubic/cubic.hpp"
#include "s2cubic/errors.hpp"

using namespace s2c;

namespace {

double T_fix()
{
    static const double T = find_T_bisection(1e-10).T;
    return T;
}

std::shared_ptr<const PsiProfile> psi_at(double tau)
{
    return std::make_shared<const PsiProfile>(build_psi(tau));
}

struct StateGen {
    std::mt19937_64 rng;
    explicit StateGen(unsigned seed) : rng(seed) {}
    double uni(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); }
    CotangentState operator()() { return {uni(0.0, 2.0 * M_PI), uni(-2.0, 2.0), uni(-1.0, 1.0), uni(-1.0, 1.0)}; }
};

}  // namespace

TEST_CASE("a1 at the round sphere")
{
    const auto A0 = HamiltonianModel::family_a(psi_at(0.0), 1.0);
    const auto a1 = a1_eval(A0, M_PI / 2, 0.0);
    CHECK(std::abs(a1 - std::complex<double>(3.0, -6.0)) < 1e-12);
    // f_py = 0 on phi in {0, pi}
    for (double y : {-1.5, 0.0, 0.8}) {
        CHECK(std::abs(a1_eval(A0, 0.0, y).imag()) < 1e-14);
        CHECK(std::abs(a1_eval(A0, M_PI, y).imag()) < 1e-14);
    }
}

TEST_CASE("a1 matches finite differences of f")
{
    const double T = T_fix();
    const auto p = psi_at(0.5 * T);
    const auto bb = b_bounds(*p);
    for (const auto& m : {HamiltonianModel::family_a(p, 1.0), HamiltonianModel::family_b(p, bb.b_lower + 1.0)}) {
        FunctionF fd(model_f_function(m, m.geodesic_energy()), 4e-3);
        double worst = 0.0;
        for (double y = -2.0; y <= 2.0; y += 0.5)
            for (double ph = 0.1; ph < 2.0 * M_PI; ph += 0.7) {
                const auto a = a1_eval(m, ph, y);
                worst = std::max(worst, std::abs(a - a1_eval(fd, ph, y)) / std::abs(a));
            }
        CHECK(worst <= 1e-7);
    }
}

TEST_CASE("a1 rejects a non-positive factor")
{
    const auto f = harmonic_f(1.0);
    CHECK_THROWS_AS(a1_eval(*f, 0.2, 0.3), Error);
}

TEST_CASE("cubic integral algebra")
{
    const auto p = psi_at(0.5 * T_fix());
    const auto m = HamiltonianModel::family_a(p, 1.0);
    const ModelF f(m, 1.0);
    const auto a1 = a1_eval(f, 0.4, 0.3);
    CHECK(std::abs(cubic_integral_eval(f, {0.4, 0.3, 1.0, 0.0}) - (1.0 + a1.real()) / 4.0) < 1e-13 * std::abs(a1));
    CHECK(cubic_integral_eval(f, {0.4, 0.3, 0.0, 0.0}) == 0.0);
    StateGen gen(11);
    for (int i = 0; i < 50; ++i) {
        const CotangentState s = gen();
        const double F = cubic_integral_eval(f, s);
        const double scale = std::abs(a1_eval(f, s.phi, s.y)) * std::pow(std::hypot(s.p_phi, s.p_y), 3) + 1e-300;
        CHECK(std::abs(cubic_integral_imag(f, s)) <= 1e-14 * scale);
        for (double k : {2.0, 10.0}) {
            const CotangentState sk{s.phi, s.y, k * s.p_phi, k * s.p_y};
            CHECK(std::abs(cubic_integral_eval(f, sk) - k * k * k * F) <= 1e-12 * k * k * k * scale);
        }
    }
}

TEST_CASE("Poisson bracket vanishes for the constructed families")
{
    const double T = T_fix();
    const auto p = psi_at(0.5 * T);
    const auto bb = b_bounds(*p);
    StateGen gen(3);
    for (const auto& m : {HamiltonianModel::family_a(p, 1.0), HamiltonianModel::family_b(p, bb.b_upper - 1.0)}) {
        for (FlowMode mode : {FlowMode::geodesic, FlowMode::conservative}) {
            const Flow fl = make_flow(m, mode);
            const Flow bad = with_integral(fl, [fl](const CotangentState& s) { return fl.F(s) + 0.01 * s.p_phi; });
            double good = 0.0, control = 0.0;
            for (int i = 0; i < 100; ++i) {
                const auto s = gen();
                good = std::max(good, bracket_residual(fl, s));
                control = std::max(control, bracket_residual(bad, s));
            }
            CHECK(good <= 1e-6);
            CHECK(control >= 1e-3);
        }
    }
}

TEST_CASE("rotational symmetry at tau = 0")
{
    const auto A0 = HamiltonianModel::family_a(psi_at(0.0), 1.0);
    const Flow fl = with_integral(geodesic_flow(A0), [](const CotangentState& s) { return s.p_phi; });
    StateGen gen(5);
    for (int i = 0; i < 20; ++i) CHECK(bracket_residual(fl, gen()) <= 1e-10);
}

TEST_CASE("conservation along trajectories")
{
    const double T = T_fix();
    const auto p = psi_at(0.8 * T);
    const auto bb = b_bounds(*p);
    StateGen gen(9);
    for (const auto& m : {HamiltonianModel::family_a(p, 1.0), HamiltonianModel::family_b(p, bb.b_lower + 1.0)}) {
        for (FlowMode mode : {FlowMode::geodesic, FlowMode::conservative}) {
            const Flow fl = make_flow(m, mode);
            for (int i = 0; i < 3; ++i) {
                const Drift d = conservation_drift(fl, gen(), 10.0);
                CHECK(d.F <= 1e-7);
                CHECK(d.H <= 1e-9);
            }
        }
    }
    const Flow nc = geodesic_flow(std::shared_ptr<const FField>(nonintegrable_control()));
    double worst = 0.0;
    for (int i = 0; i < 5; ++i) worst = std::max(worst, conservation_drift(nc, gen(), 10.0).F);
    CHECK(worst >= 1e-2);
}

TEST_CASE("great circles close with period 2 pi")
{
    const auto A0 = HamiltonianModel::family_a(psi_at(0.0), 1.0);
    const Flow fl = geodesic_flow(A0);
    for (double alpha : {0.0, 0.4, 1.1}) {
        // unit speed from the equator point (0, 0)
        const CotangentState s0{0.0, 0.0, std::cos(alpha), std::sin(alpha)};
        const auto smp = integrate_flow(fl, s0, 2.0 * M_PI);
        const auto& e = smp.back().s;
        const double dphi = std::remainder(e.phi, 2.0 * M_PI);
        CHECK(std::abs(smp.back().t - 2.0 * M_PI) < 1e-14);
        CHECK(std::abs(dphi) < 1e-5);
        CHECK(std::abs(e.y) < 1e-5);
        CHECK(std::abs(e.p_phi - s0.p_phi) < 1e-5);
        CHECK(std::abs(e.p_y - s0.p_y) < 1e-5);
    }
}

TEST_CASE("the determining equation")
{
    const double T = T_fix();
    const auto p = psi_at(0.5 * T);
    const auto bb = b_bounds(*p);
    for (const auto& m : {HamiltonianModel::family_a(p, 1.0), HamiltonianModel::family_b(p, bb.b_lower + 1.0),
                          HamiltonianModel::family_b(p, bb.b_upper - 1.0)}) {
        const ModelF f(m, m.geodesic_energy());
        double worst = 0.0;
        for (double y = -3.0; y <= 3.0; y += 0.25)
            for (double ph = 0.0; ph < 2.0 * M_PI; ph += 0.3) worst = std::max(worst, std::abs(eqpde_residual(f, ph, y)));
        CHECK(worst <= 1e-8);
    }
    // f = phi^2 y: left side 0, right side 8 phi
    CHECK(std::abs(eqpde_residual(*phi2y_control(), 0.7, 0.4)) > 1e-3);
    CHECK(eqpde_residual(*harmonic_f(0.7), 0.3, -0.2) == 0.0);
}

TEST_CASE("coefficient recurrence")
{
    const double T = T_fix();
    const auto p = psi_at(0.5 * T);
    const auto bb = b_bounds(*p);
    const auto m = HamiltonianModel::family_b(p, bb.b_lower + 1.0);
    auto f = std::make_shared<const ModelF>(m, m.geodesic_energy());
    auto theta = [f](double ph, double y) { return f->lambda(ph, y); };
    const auto b = cubic_coefficients(f);
    double worst = 0.0, endpoint = 0.0, control = 0.0;
    auto b_bad = b;
    b_bad[1] = [f](double ph, double y) { return a1_eval(*f, ph, y) + 0.01; };
    for (double y = -2.0; y <= 2.0; y += 0.5)
        for (double ph = 0.0; ph < 2.0 * M_PI; ph += 0.5) {
            const auto r = systpde_residuals(theta, b, ph, y);
            REQUIRE(r.size() == 5);
            for (double v : r) worst = std::max(worst, v);
            endpoint = std::max({endpoint, r[0], r[4]});
            for (double v : systpde_residuals(theta, b_bad, ph, y)) control = std::max(control, v);
        }
    CHECK(worst <= 1e-6);
    CHECK(endpoint <= 1e-8);
    CHECK(control >= 1e-3);

    const ComplexField one = [](double, double) { return std::complex<double>(1.0, 0.0); };
    const auto flat = systpde_residuals([](double, double) { return 2.0; }, {one, one}, 0.3, 0.1);
    REQUIRE(flat.size() == 3);
    for (double v : flat) CHECK(v == 0.0);
}

TEST_CASE("integral near the poles")
{
    const double T = T_fix();
    const auto p = psi_at(0.5 * T);
    const auto bb = b_bounds(*p);
    const auto pb = polar_integral_bound(HamiltonianModel::family_b(p, bb.b_lower + 1.0));
    MESSAGE(pb.note);
    CHECK(pb.bounded);
    const auto p0 = psi_at(0.0);
    CHECK(polar_integral_bound(HamiltonianModel::family_a(p0, 1.0)).bounded);
    const auto pc = std::make_shared<const PsiProfile>(build_critical_psi());
    const auto crit = polar_integral_bound(HamiltonianModel::family_a(pc, 1.0));
    MESSAGE(crit.note);
    CHECK_FALSE(crit.bounded);
}
