#pragma once

#include <array>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "s2cubic/critical_tau.hpp"
#include "s2cubic/jet.hpp"
#include "s2cubic/ode_core.hpp"

namespace s2c {

struct PsiJet {
    double y = 0.0;
    double psi = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
    double d3 = 0.0;
    double d4 = 0.0;
    Jet2 u;  // psi'' - psi and its y-derivatives
    Jet2 m;  // psi^2 - psi'^2 and its y-derivatives
};

// psi(y) on [y_lo, y_hi] with the s-chart profiles of both ends.
class PsiProfile {
public:
    PsiProfile(double tau, Trajectory traj, std::optional<GProfile> g_plus, std::optional<GProfile> g_minus);
    // profile of the tau = T solution
    PsiProfile(const CriticalSolution& cs, std::optional<GProfile> g_plus);

    double tau() const { return tau_; }
    double y_lo() const { return traj_.t_min(); }
    double y_hi() const { return traj_.t_max(); }
    const Trajectory& trajectory() const { return traj_; }
    const std::optional<GProfile>& g_plus() const { return g_plus_; }    // g_tau, y -> +inf
    const std::optional<GProfile>& g_minus() const { return g_minus_; }  // g_{-tau}, y -> -inf

    bool critical() const { return critical_; }
    // stationary point psi'(y0) = 0 and psi(y0)^2; critical profiles only
    double y0() const;
    double b0() const;

    PsiJet jet(double y) const;
    // (psi'^2 - psi^2 + b) / psi'^2 as a jet, finite at y0 when b = b0
    Jet2 n_over_d1sq(double y, double b) const;
    // psi' psi''' - psi psi'' + 2 psi''^2 - psi'^2 - psi^2 at the integrator nodes, relative to the term scale
    double max_ode_residual() const;
    std::vector<double> y_grid() const;

private:
    double tau_ = 0.0;
    Trajectory traj_;
    std::optional<GProfile> g_plus_;
    std::optional<GProfile> g_minus_;
    bool critical_ = false;
    double y0_ = 0.0;
    double b0_ = 0.0;
    std::vector<double> series_;
    double kappa_ = 1.0;
    double patch_radius_ = 0.0;
};

// Throws DegenerateDerivative if psi' vanishes inside the range.
PsiProfile build_psi(double tau, double y_lo = -12.0, double y_hi = 12.0);
PsiProfile build_critical_psi(double y_lo = -12.0, double y_hi = 12.0);

enum class Family { A, B, GC };

const char* family_name(Family f);
Family parse_family(const std::string& s);

struct HamiltonianSpec {
    Family family = Family::A;
    double tau = 0.0;
    double c = 1.0;  // family A energy constant
    double b = 0.0;  // family B
    double a = 1.0;  // family B scale: +1 above the band, -1 below
};

// b^* = min (psi^2 - psi'^2) = high-y limit, b_* = max = low-y limit;
// admissible b lies outside [b_upper, b_lower].
struct BBounds {
    double b_upper = 0.0;  // b^*
    double b_lower = 0.0;  // b_*
};

BBounds b_bounds(const PsiProfile& psi);
BBounds b_bounds(double tau);

struct PhiBounds {
    BBounds bounds;
    double M1 = 0.0, M2 = 0.0;    // max / min of -Phi on [0, 1]
    double Mt1 = 0.0, Mt2 = 0.0;  // max / min of Phi~ on [0, 1]
};

// Cross-check through quadrature of the pole functions.
PhiBounds b_bounds_via_phi(const PoleFunctions& pf, int panels = 64);
PhiBounds b_bounds_via_phi(double tau, int panels = 64);

// -Phi(u) and Phi~(s) at a point, for the identity checks
double minus_phi(const PoleFunctions& pf, double u, int panels = 64);
double phi_tilde(const PoleFunctions& pf, double s, int panels = 64);

// Radial data of a metric lambda = psi3(y) cos(phi) + E kin(y):
// kin is the conformal factor of the kinetic energy, psi3 the cos-coefficient.
struct RadialJets {
    Jet2 psi3;
    Jet2 kin;
};

class RadialSource {
public:
    virtual ~RadialSource() = default;
    virtual RadialJets radial(double y) const = 0;
    virtual double y_lo() const = 0;
    virtual double y_hi() const = 0;
};

struct CotangentState {
    double phi = 0.0;
    double y = 0.0;
    double p_phi = 0.0;
    double p_y = 0.0;
};

// lambda and its first and second partial derivatives in (phi, y)
struct LambdaJet {
    double v = 0.0;
    double dp = 0.0, dy = 0.0;
    double dpp = 0.0, dyy = 0.0, dpy = 0.0;
};

class HamiltonianModel {
public:
    static HamiltonianModel family_a(std::shared_ptr<const PsiProfile> psi, double c = 1.0);
    // `a` is chosen from the side of the band; inside the band a = 1 and admissible() is false.
    static HamiltonianModel family_b(std::shared_ptr<const PsiProfile> psi, double b);
    static HamiltonianModel family_b(std::shared_ptr<const PsiProfile> psi, double b, const BBounds& bounds);
    static HamiltonianModel from_source(Family family, std::shared_ptr<const RadialSource> src);

    const HamiltonianSpec& spec() const { return spec_; }
    const PsiProfile* psi() const { return psi_.get(); }
    std::shared_ptr<const PsiProfile> psi_shared() const { return psi_; }
    bool admissible() const { return admissible_; }
    const std::optional<BBounds>& bounds() const { return bounds_; }
    double y_lo() const;
    double y_hi() const;

    // energy constant of the geodesic metric: c (A), a (B), 1 (GC)
    double geodesic_energy() const;

    RadialJets radial(double y) const;
    double xi_second(double y) const;  // E kin(y)
    double kinetic_factor(double y) const;
    double conformal_factor(double phi, double y) const;  // geodesic lambda
    double lambda_at_energy(double phi, double y, double E) const;
    LambdaJet lambda_jet(double phi, double y, double E) const;
    double potential(double phi, double y) const;
    // H = 1/2 (p_phi^2 + p_y^2) / kin + U; throws DegenerateDenominator if not admissible
    double hamiltonian(const CotangentState& s) const;
    // gradient of H: (dH/dphi, dH/dy, dH/dp_phi, dH/dp_y)
    std::array<double, 4> hamiltonian_gradient(const CotangentState& s) const;

private:
    HamiltonianSpec spec_;
    std::shared_ptr<const PsiProfile> psi_;
    std::shared_ptr<const RadialSource> src_;
    std::optional<BBounds> bounds_;
    bool admissible_ = true;
};

double xi_second(const HamiltonianModel& model, double y);
double conformal_factor(const HamiltonianModel& model, double phi, double y);
double hamiltonian_eval(const HamiltonianModel& model, const CotangentState& s);

// xi'' psi'' + (xi'' psi')' - 2 a (psi'' - psi) for families A (a = 0) and B
double eq8_residual(const HamiltonianModel& model, double y);

// K = -(Laplacian log lambda) / (2 lambda) of the geodesic metric
double gaussian_curvature(const HamiltonianModel& model, double phi, double y);
double gaussian_curvature(const LambdaJet& l);
// the same by 4th-order central differences of an arbitrary factor
template <class F>
double gaussian_curvature_fd(F&& lambda, double phi, double y, double h = 1e-3);

enum class Chart { r, r_tilde };

const char* chart_name(Chart c);
Chart parse_chart(const std::string& s);

// Rotational metric near a pole in polar coordinates, built from the s-chart
// profiles.  With u = r^2 (chart r: r = e^y; chart r~: r = e^{-y}):
// kinetic metric kin = r^2 kinetic(u), geodesic lambda / r^2 = psi2(u) + psi1(u) r cos(phi),
// potential U = rho(u) r cos(phi).
class PolarMetric {
public:
    PolarMetric(HamiltonianSpec spec, Chart chart, GProfile g);

    Chart chart() const { return chart_; }
    const HamiltonianSpec& spec() const { return spec_; }
    double u_max() const { return g_.s_max(); }

    double kinetic(double u) const;
    double psi1(double u) const;
    double psi2(double u) const;
    double rho(double u) const;

    // y of the point with polar radius r
    double y_of_r(double r) const;
    double r_of_y(double y) const;
    // H through this chart, state given in (phi, y)
    double hamiltonian(const CotangentState& s) const;
    double conformal_factor(double phi, double y) const;

private:
    HamiltonianSpec spec_;
    Chart chart_;
    GProfile g_;
    double n_of(double u) const;
};

// g_{-tau} for chart r, g_tau for chart r~
PolarMetric polar_form(const HamiltonianModel& model, Chart chart, double u_max = 1.0);

struct PoleFit {
    Chart chart = Chart::r;
    bool ok = false;
    std::string failure;
    double residual = 0.0;           // max relative residual over the fitted functions
    double kinetic_limit = 0.0;      // value at r = 0
    double psi2_limit = 0.0;
    double psi1_limit = 0.0;         // psi1 * r itself tends to 0
    double rho_limit = 0.0;
};

struct PoleReport {
    PoleFit r;
    PoleFit r_tilde;
    bool ok() const { return r.ok && r_tilde.ok; }
};

// Fits kinetic, psi2, psi1, rho on u in (0, 0.1] by polynomials in u.
PoleReport pole_smoothness_check(const HamiltonianModel& model, int degree = 8, int samples = 60);

template <class F>
double gaussian_curvature_fd(F&& lambda, double phi, double y, double h)
{
    auto d2 = [&](double fm2, double fm1, double f0, double fp1, double fp2) {
        return (-fm2 + 16.0 * fm1 - 30.0 * f0 + 16.0 * fp1 - fp2) / (12.0 * h * h);
    };
    auto L = [&](double p, double q) { return std::log(lambda(p, q)); };
    const double l0 = lambda(phi, y);
    const double c = L(phi, y);
    const double lpp = d2(L(phi - 2 * h, y), L(phi - h, y), c, L(phi + h, y), L(phi + 2 * h, y));
    const double lyy = d2(L(phi, y - 2 * h), L(phi, y - h), c, L(phi, y + h), L(phi, y + 2 * h));
    return -(lpp + lyy) / (2.0 * l0);
}

}  // namespace s2c
