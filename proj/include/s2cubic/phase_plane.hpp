#pragma once

#include <array>
#include <vector>

#include "s2cubic/dop853.hpp"

namespace s2c {

struct PhasePoint {
    double q = 0.0;
    double p = 0.0;
};

enum class FixedPointKind { saddle, node };

struct FixedPointInfo {
    PhasePoint location;
    FixedPointKind kind = FixedPointKind::node;
    std::array<double, 2> eigenvalues{};
    // eigenvectors[i] belongs to eigenvalues[i]; unit length
    std::array<std::array<double, 2>, 2> eigenvectors{};
};

using Field2 = std::array<double, 2>;
using Matrix2 = std::array<std::array<double, 2>, 2>;

// q' = q p, p' = 1 + 2q^2 - 3q^4 + p - 7q^2 p - 2p^2
Field2 sms_rhs(const PhasePoint& pt);
// the same field divided by q in the p-component: q' = p, p' = (...)/q
Field2 syst1_rhs(const PhasePoint& pt, double eps_den = 1e-10);
Matrix2 sms_jacobian(const PhasePoint& pt);

// Equilibria from the q = 0 and p = 0 slices, sorted by (q, p).
std::vector<PhasePoint> sms_equilibria();
std::vector<FixedPointInfo> classify_fixed_points();

// Which invariant manifold of a saddle to follow, and on which side.
// "pos" selects the side where the eigenvector has positive q (or positive p
// when the eigenvector is vertical).
enum class Branch { unstable_pos, unstable_neg, stable_pos, stable_neg };

struct SeparatrixOptions {
    double delta = 1e-7;
    double rel_tol = 1e-12;
    double abs_tol = 1e-14;
    double t_limit = 200.0;
};

class Separatrix {
public:
    Separatrix() = default;
    Separatrix(std::vector<PhasePoint> points, ode::DenseSolution<2> dense, bool reached_q_max);

    const std::vector<PhasePoint>& points() const { return points_; }
    bool reached_q_max() const { return reached_q_max_; }
    double q_end() const { return points_.back().q; }

    // p on the curve at a given q; requires q monotone along the curve.
    double p_at(double q) const;
    std::vector<PhasePoint> sample_uniform_q(double q_lo, double q_hi, int n) const;

private:
    std::vector<PhasePoint> points_;
    ode::DenseSolution<2> dense_;
    bool reached_q_max_ = false;
    bool increasing_ = true;
};

Separatrix trace_separatrix(const FixedPointInfo& saddle, Branch branch, double q_max,
                            const SeparatrixOptions& opt = {});

struct LimitEstimate {
    double value = 0.0;
    double error_estimate = 0.0;
    double fit_residual = 0.0;
};

// Fits h(q) = -(p + q^2)/q = L + c1/q + c2/q^2 over curve points with
// q in [q_lo, q_hi]; returns L.
LimitEstimate fit_h_limit(const std::vector<PhasePoint>& curve, double q_lo, double q_hi,
                          double residual_tol = 1e-6);

// T from the separatrix entering the saddle (0, -1/2) along q > 0.
LimitEstimate estimate_T_from_separatrix(double q_max = 100.0, double window_lo = -1.0, double window_hi = -1.0,
                                         const SeparatrixOptions& opt = {});

// lim (q^2 + p)/q over the upper half of the curve's q-range.
LimitEstimate tau_from_orbit(const std::vector<PhasePoint>& curve, double residual_tol = 1e-6);

}  // namespace s2c
