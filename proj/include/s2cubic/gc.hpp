#pragma once

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "s2cubic/dop853.hpp"
#include "s2cubic/jet.hpp"
#include "s2cubic/metric.hpp"

namespace s2c {

// ds^2 = A(theta) dtheta^2 + B(theta) dphi^2 with potential V(theta) cos(phi),
// each coefficient evaluated on a jet in theta.
struct RotSymMetricProfile {
    std::string name;
    std::function<Jet2(const Jet2&)> A;
    std::function<Jet2(const Jet2&)> B;
    std::function<Jet2(const Jet2&)> V;
};

// (du1^2 + du2^2 + 4 du3^2) / (4 u1^2 + 4 u2^2 + u3^2) - u1 on the unit sphere, u3 = cos(theta)
RotSymMetricProfile gc_profile();
// A = 1, B = sin^2, V = 0
RotSymMetricProfile round_sphere_profile();

// (A, B, cross term) of the ambient form pulled back through the embedding
// u = (sin cos, sin sin, cos) by central differences.
std::array<double, 3> gc_pullback_fd(double theta, double phi, double h = 1e-5);

// Conformal coordinate y with A dtheta^2 + B dphi^2 = B (dphi^2 + dy^2), y(pi/2) = 0.
class ConformalCoords : public RadialSource {
public:
    explicit ConformalCoords(RotSymMetricProfile profile, double y_max = 16.0);

    const RotSymMetricProfile& profile() const { return profile_; }
    // adaptive quadrature of sqrt(A/B) in log(theta) or log(pi - theta);
    // throws QuadratureFailure outside (0, pi)
    double y_of_theta(double theta) const;
    // theta with dtheta/dy and d2theta/dy2
    Jet2 theta_of_y(double y) const;
    double conformal_factor(double y) const;  // B(theta(y))
    double potential(double y) const;         // V(theta(y))

    // psi3 = -V B, kin = B: H = |p|^2 / (2 B) + V cos(phi)
    RadialJets radial(double y) const override;
    double y_lo() const override { return -y_max_; }
    double y_hi() const override { return y_max_; }

private:
    RotSymMetricProfile profile_;
    double y_max_;
    ode::DenseSolution<1> up_;
    ode::DenseSolution<1> down_;
};

// GC system as a conservative model with the conformal profile as radial source.
HamiltonianModel gc_model(double y_max = 16.0);

// Pair (Psi3, Psi4) of a rotational metric (Psi3 cos(phi) + Psi4)(dphi^2 + dy^2)
// with kinetic factor Psi4, over y in [y_lo, y_hi].
class RotationalProfile {
public:
    RotationalProfile(std::function<RadialJets(double)> f, double y_lo, double y_hi, std::string label = "");
    static RotationalProfile of(const HamiltonianModel& model, std::string label = "");

    RadialJets at(double y) const;
    double psi3(double y) const { return at(y).psi3.v; }
    double psi4(double y) const { return at(y).kin.v; }
    double y_lo() const { return y_lo_; }
    double y_hi() const { return y_hi_; }
    const std::string& label() const { return label_; }

private:
    std::function<RadialJets(double)> f_;
    double y_lo_, y_hi_;
    std::string label_;
};

// Polar chart change r~ = D r^{sign}, phi~ = sign phi: with y = log r,
// y~ = log D + sign y and Psi~(y~) = Psi(sign (y~ - log D)).
RotationalProfile lemma_L_transform(const RotationalProfile& p, double D, int sign);

struct SearchBox {
    double y_lo = -6.0;  // comparison window, coordinates of the first profile
    double y_hi = 6.0;
    double shift_lo = -4.0;
    double shift_hi = 4.0;
    int samples = 401;
    int shift_steps = 161;
    std::vector<int> signs{1, -1};
};

// Psi3_1(y) ~ C0 Psi3_2(sign y + y1), Psi4_1(y) ~ C3 Psi4_2(sign y + y1);
// residuals are sup-norms relative to sup |Psi_k| of the first profile on the window.
struct EquivalenceFit {
    double C0 = 0.0;
    double C3 = 0.0;
    double y1 = 0.0;
    int sign = 1;
    double residual_V = 0.0;
    double residual_K = 0.0;
    int points = 0;
    double residual() const { return residual_V > residual_K ? residual_V : residual_K; }
};

// Throws NoOverlap if the window misses either profile for every shift.
EquivalenceFit match_equivalence(const RotationalProfile& p1, const RotationalProfile& p2, const SearchBox& box = {});

// The same residuals at fixed gauge (sign, y1), with the sup-optimal C0 and C3.
EquivalenceFit equivalence_at(const RotationalProfile& p1, const RotationalProfile& p2, int sign, double y1,
                              const SearchBox& box = {});

// Smoothness at both ends of a rotational profile: with u = r^2 (r = e^y, or
// e^{-y} for the r~ chart) fits kin / u and (psi3 / kin) / r by polynomials in
// u on (0, u_top]. Limits are the constant terms of the fits.
PoleReport profile_pole_check(const RotationalProfile& p, double u_top = 2.5e-3, int degree = 8, int samples = 60);

struct StationaryPoint {
    double y0 = 0.0;
    double b = 0.0;  // psi(y0)^2
    std::string method;
};

// psi' = 0 point of the tau solution; NoStationaryPoint for globally increasing psi.
StationaryPoint gc_b_value(double tau);

}  // namespace s2c
