#pragma once

#include <vector>

#include "s2cubic/dop853.hpp"
#include "s2cubic/ode_core.hpp"

namespace s2c {

enum class ProbeKind { global_positive, derivative_zero, blowup };

struct ProbeOutcome {
    ProbeKind kind = ProbeKind::global_positive;
    double t = 0.0;  // event time for failures
};

const char* probe_name(ProbeKind kind);

// Integrates the IVP on [-t_max, t_max]; global_positive requires the
// reduced orbit to reach the 1e-6 disks around (1, 0) forward and (-1, 0)
// backward with x' > 0 throughout.
ProbeOutcome tau_probe(double tau, double t_max = 30.0);

enum class CriticalMethod { bisection, separatrix, stationary_series };

const char* critical_method_name(CriticalMethod m);

struct CriticalResult {
    double T = 0.0;
    CriticalMethod method = CriticalMethod::bisection;
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
    double bracket_width = 0.0;
    double fit_residual = 0.0;
    double error_estimate = 0.0;
};

CriticalResult find_T_bisection(double tol, double t_max = 30.0);
CriticalResult find_T_separatrix(double q_max = 100.0);

struct GValues {
    double g = 0.0;
    double g1 = 0.0;
    double g2 = 0.0;
};

// Solution of g''' = (3 g'' g' + 4 s g''^2) / (g - 2 s g') with g(1) = 0,
// g'(1) = -1/2, g''(1) = tau/4 on [0, s_max].
class GProfile {
public:
    GProfile() = default;
    GProfile(double tau, double s_max, ode::DenseSolution<3> dense);

    double tau() const { return tau_; }
    double s_max() const { return s_max_; }
    GValues at(double s) const;
    double g3(double s) const;
    const GValues& limit() const { return limit_; }
    // Quadratic extrapolation to s = 0 from s in {1e-2, 1e-3, 1e-4}.
    const GValues& richardson() const { return richardson_; }
    double extrapolation_residual() const { return extrapolation_residual_; }

    double zeta(double s) const;  // g - 2 s g'
    double m(double s) const;     // 4 g' (g - s g') = psi^2 - psi'^2 at y = -1/2 log s

    struct Sample {
        double s, g, g1, g2;
    };
    std::vector<Sample> samples() const;

private:
    double tau_ = 0.0;
    double s_max_ = 1.0;
    ode::DenseSolution<3> dense_;
    GValues limit_;
    GValues richardson_;
    double extrapolation_residual_ = 0.0;
};

// Throws SingularDenominator if g - 2 s g' vanishes on the way.
GProfile solve_g(double tau, double s_max = 1.0);

struct PoleValues {
    double xi = 0.0;
    double zeta = 0.0;
    double mu = 0.0;
    double nu = 0.0;
};

// x'(t) = e^{-t} xi(e^{2t}) = e^{t} zeta(e^{-2t});
// (x'' - x) x'^2 (t) = e^{t} mu(e^{2t}) = e^{-t} nu(e^{-2t}).
class PoleFunctions {
public:
    PoleFunctions(double tau, double s_max = 1.0);
    PoleFunctions(GProfile plus, GProfile minus);

    PoleValues at(double s) const;
    const GProfile& plus() const { return plus_; }
    const GProfile& minus() const { return minus_; }

private:
    GProfile plus_;   // g_tau
    GProfile minus_;  // g_{-tau}
};

PoleValues pole_functions(double tau, double s);

// The tau = T solution built from its stationary point.
struct CriticalSolution {
    std::vector<double> series;  // X(u) = sum c_k u^k, X(0) = -1
    double patch_radius = 0.25;
    double u1 = 0.0;       // zero of X
    double kappa = 0.0;    // X'(u1)
    double T_anchor = 0.0; // X''(u1) / X'(u1)
    double t0 = 0.0;       // stationary time, -u1
    double b = 0.0;        // x(t0)^2
    Trajectory trajectory; // x(t) = X(t + u1) / kappa on [-t_max, t_max]
};

std::vector<double> stationary_series(int order = 30);
CriticalSolution critical_solution(double t_max = 30.0);

// Number of sign changes of x' along the trajectory (nodes plus a fine scan).
int count_derivative_zeros(const Trajectory& traj, int scan_points = 20000);

}  // namespace s2c
