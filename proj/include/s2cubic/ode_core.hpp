#pragma once

#include <array>
#include <optional>
#include <vector>

#include "s2cubic/dop853.hpp"

namespace s2c {

// (t, x, x', x'') of x' x''' = x x'' - 2 x''^2 + x'^2 + x^2.
struct JetState {
    double t = 0.0;
    double x = 0.0;
    double x1 = 0.0;
    double x2 = 0.0;
};

// Jet plus x''' and the two subtraction-free channels u = x'' - x and
// m = x^2 - x'^2 that are integrated alongside the solution.
struct FullJet {
    double t = 0.0;
    double x = 0.0;
    double x1 = 0.0;
    double x2 = 0.0;
    double x3 = 0.0;
    double u = 0.0;
    double m = 0.0;
};

struct IvpSpec {
    double tau = 0.0;
    double t_lo = -10.0;
    double t_hi = 10.0;
    double rel_tol = 1e-12;
    double abs_tol = 1e-12;
    double max_step = 0.25;
    double eps_den = 1e-10;
    double zero_tol = 1e-6;
    double blowup = 1e12;

    void validate() const;
};

enum class TerminationKind { completed, derivative_zero, blowup };

struct Termination {
    TerminationKind kind = TerminationKind::completed;
    double t = 0.0;
};

const char* termination_name(TerminationKind kind);

// Polynomial expansion x(t) = scale * sum c_k (t - center)^k, valid for
// |t - center| <= radius.
struct SeriesPatch {
    double center = 0.0;
    double radius = 0.0;
    double scale = 1.0;
    std::vector<double> c;

    FullJet eval(double t) const;
};

class Trajectory {
public:
    using State = ode::Vec<5>;
    using Step = ode::DenseStep<5>;

    Trajectory() = default;

    const std::vector<JetState>& nodes() const { return nodes_; }
    const std::vector<Step>& segments() const { return segments_; }
    const Termination& termination() const { return termination_; }
    const std::optional<SeriesPatch>& patch() const { return patch_; }
    double t_min() const { return t_min_; }
    double t_max() const { return t_max_; }

    // Interpolated state; throws InvalidArgument outside [t_min, t_max].
    FullJet at(double t) const;
    JetState jet(double t) const;
    // x''' from differentiating the interpolant of x'' (not from the ODE).
    double x3_interpolated(double t) const;

    // Assembles a trajectory from integrator runs started at a common point.
    static Trajectory assemble(const JetState& start, const std::vector<Step>& backward,
                               const std::vector<Step>& forward, double t_min, double t_max,
                               Termination termination);

    // Mirror image t -> 2c - t with x, x'' even and x', x''' odd about c,
    // joined to this trajectory through a series patch.
    static Trajectory with_reflection(const Trajectory& right, const SeriesPatch& patch, double t_min);

private:
    std::vector<JetState> nodes_;
    std::vector<Step> segments_;
    std::vector<double> mirror_sign_;
    Termination termination_;
    std::optional<SeriesPatch> patch_;
    double t_min_ = 0.0;
    double t_max_ = 0.0;
    double mirror_center_ = 0.0;
    bool has_mirror_ = false;

    const Step& step_at(double t) const;
};

// x''' from the ODE. Throws SingularDerivative when |x1| <= eps_den.
double rhs_third_order(const JetState& s, double eps_den = 1e-10);

// x'''' from differentiating the ODE once.
double fourth_derivative(double x, double x1, double x2, double x3);

Trajectory integrate_ivp(const IvpSpec& spec);

// Integrates from an arbitrary jet over [t_lo, t_hi] (must contain start.t)
// using the tolerances of `settings` (its tau is ignored).
Trajectory integrate_from(const JetState& start, double t_lo, double t_hi, const IvpSpec& settings);

struct LogPoint {
    double t = 0.0;
    double q = 0.0;
    double p = 0.0;
};

// q = x'/x, p = q' at the nodes with t in [t_lo, t_hi].
std::vector<LogPoint> log_reduction(const Trajectory& traj, double t_lo, double t_hi);
std::vector<LogPoint> log_reduction(const Trajectory& traj);

}  // namespace s2c
