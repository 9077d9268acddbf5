#include "s2cubic/phase_plane.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>

#include "s2cubic/errors.hpp"

namespace s2c {

Field2 sms_rhs(const PhasePoint& pt)
{
    const double q = pt.q, p = pt.p, q2 = q * q;
    return {q * p, 1.0 + 2.0 * q2 - 3.0 * q2 * q2 + p - 7.0 * q2 * p - 2.0 * p * p};
}

Field2 syst1_rhs(const PhasePoint& pt, double eps_den)
{
    if (!(std::abs(pt.q) > eps_den)) throw Error(Errc::singular_q, "|q| <= eps_den");
    const Field2 f = sms_rhs(pt);
    return {f[0] / pt.q, f[1] / pt.q};
}

Matrix2 sms_jacobian(const PhasePoint& pt)
{
    const double q = pt.q, p = pt.p;
    return {{{p, q}, {4.0 * q - 12.0 * q * q * q - 14.0 * q * p, 1.0 - 7.0 * q * q - 4.0 * p}}};
}

namespace {

// real roots of a x^2 + b x + c = 0
std::vector<double> quadratic_roots(double a, double b, double c)
{
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) return {};
    const double sq = std::sqrt(disc);
    const double qq = -0.5 * (b + (b >= 0.0 ? sq : -sq));
    std::vector<double> r{qq / a};
    if (qq != 0.0) r.push_back(c / qq);
    std::sort(r.begin(), r.end());
    return r;
}

}  // namespace

std::vector<PhasePoint> sms_equilibria()
{
    // q' = qp vanishes on q = 0 or p = 0.
    std::vector<PhasePoint> pts;
    for (double p : quadratic_roots(-2.0, 1.0, 1.0)) pts.push_back({0.0, p});
    for (double w : quadratic_roots(-3.0, 2.0, 1.0)) {
        if (w <= 0.0) continue;
        const double q = std::sqrt(w);
        pts.push_back({q, 0.0});
        pts.push_back({-q, 0.0});
    }
    std::sort(pts.begin(), pts.end(), [](const PhasePoint& a, const PhasePoint& b) {
        return a.q != b.q ? a.q < b.q : a.p < b.p;
    });
    return pts;
}

std::vector<FixedPointInfo> classify_fixed_points()
{
    std::vector<FixedPointInfo> out;
    for (const auto& pt : sms_equilibria()) {
        const Matrix2 J = sms_jacobian(pt);
        Eigen::Matrix2d m;
        m << J[0][0], J[0][1], J[1][0], J[1][1];
        Eigen::EigenSolver<Eigen::Matrix2d> es(m);
        FixedPointInfo info;
        info.location = pt;
        std::array<int, 2> order{0, 1};
        if (es.eigenvalues()[0].real() < es.eigenvalues()[1].real()) order = {1, 0};
        for (int i = 0; i < 2; ++i) {
            const int k = order[i];
            info.eigenvalues[i] = es.eigenvalues()[k].real();
            Eigen::Vector2d v = es.eigenvectors().col(k).real().normalized();
            const double lead = std::abs(v[0]) > 1e-14 ? v[0] : v[1];
            if (lead < 0.0) v = -v;
            info.eigenvectors[i] = {v[0], v[1]};
        }
        info.kind = info.eigenvalues[0] * info.eigenvalues[1] < 0.0 ? FixedPointKind::saddle : FixedPointKind::node;
        out.push_back(info);
    }
    return out;
}

Separatrix::Separatrix(std::vector<PhasePoint> points, ode::DenseSolution<2> dense, bool reached_q_max)
    : points_(std::move(points)), dense_(std::move(dense)), reached_q_max_(reached_q_max)
{
    increasing_ = points_.back().q >= points_.front().q;
}

double Separatrix::p_at(double q) const
{
    for (const auto& s : dense_.steps()) {
        const double qa = s.value(s.t_old)[0], qb = s.value(s.t_new)[0];
        if (q < std::min(qa, qb) || q > std::max(qa, qb)) continue;
        double a = s.t_old, b = s.t_new;
        const bool up = qb > qa;
        for (int it = 0; it < 200 && std::abs(b - a) > 1e-15 * std::max(1.0, std::abs(a)); ++it) {
            const double m = 0.5 * (a + b);
            if ((s.value(m)[0] < q) == up)
                a = m;
            else
                b = m;
        }
        return s.value(0.5 * (a + b))[1];
    }
    throw Error(Errc::invalid_argument, "q outside traced curve");
}

std::vector<PhasePoint> Separatrix::sample_uniform_q(double q_lo, double q_hi, int n) const
{
    std::vector<PhasePoint> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
        const double q = q_lo + (q_hi - q_lo) * i / (n - 1);
        out.push_back({q, p_at(q)});
    }
    return out;
}

Separatrix trace_separatrix(const FixedPointInfo& saddle, Branch branch, double q_max, const SeparatrixOptions& opt)
{
    if (saddle.kind != FixedPointKind::saddle) throw Error(Errc::invalid_argument, "not a saddle");
    if (!(q_max > 1.0)) throw Error(Errc::invalid_argument, "q_max must exceed 1");
    const bool unstable = branch == Branch::unstable_pos || branch == Branch::unstable_neg;
    const bool positive = branch == Branch::unstable_pos || branch == Branch::stable_pos;
    const int idx = unstable ? 0 : 1;  // eigenvalues sorted descending
    if ((unstable && saddle.eigenvalues[0] <= 0.0) || (!unstable && saddle.eigenvalues[1] >= 0.0))
        throw Error(Errc::invalid_argument, "saddle eigen-data inconsistent");
    const auto v = saddle.eigenvectors[idx];
    const double sgn = positive ? 1.0 : -1.0;
    const ode::Vec<2> seed{saddle.location.q + sgn * opt.delta * v[0], saddle.location.p + sgn * opt.delta * v[1]};
    if (seed[0] < 0.0) throw Error(Errc::manifold_escape, "branch starts in q < 0");

    const double t_end = unstable ? opt.t_limit : -opt.t_limit;
    const auto equilibria = sms_equilibria();
    std::optional<double> t_stop;
    bool reached = false;
    bool escaped = false;
    auto f = [](double, const ode::Vec<2>& y) { return sms_rhs(PhasePoint{y[0], y[1]}); };
    auto monitor = [&](const ode::DenseStep<2>& s) {
        const auto y = s.value(s.t_new);
        if (y[0] < 0.0) {
            escaped = true;
            return false;
        }
        if (y[0] >= q_max) {
            t_stop = ode::locate_crossing(s, [&](double, const ode::Vec<2>& z) { return z[0] - q_max; });
            reached = true;
            return false;
        }
        if (std::abs(y[1] + y[0] * y[0]) > 10.0 * y[0] + 10.0) return false;
        for (const auto& e : equilibria)
            if (std::hypot(y[0] - e.q, y[1] - e.p) < 1e-10) return false;
        return true;
    };
    ode::Dop853Options<2> o;
    o.rel_tol = opt.rel_tol;
    o.abs_tol.fill(opt.abs_tol);
    auto res = ode::dop853<2>(f, 0.0, seed, t_end, o, monitor);
    if (escaped) throw Error(Errc::manifold_escape, "traced curve entered q < 0");
    if (res.status == ode::Dop853Status::step_underflow && !reached)
        throw Error(Errc::step_size_underflow, "separatrix trace stalled");

    std::vector<PhasePoint> pts{{seed[0], seed[1]}};
    for (const auto& s : res.steps) {
        const double t = t_stop && s.contains(*t_stop) ? *t_stop : s.t_new;
        const auto y = s.value(t);
        pts.push_back({y[0], y[1]});
    }
    return Separatrix(std::move(pts), ode::DenseSolution<2>(res.steps), reached);
}

LimitEstimate fit_h_limit(const std::vector<PhasePoint>& curve, double q_lo, double q_hi, double residual_tol)
{
    auto fit = [](const std::vector<PhasePoint>& pts, double lo, double hi, double& residual) {
        std::vector<PhasePoint> sel;
        for (const auto& pt : pts)
            if (pt.q >= lo && pt.q <= hi && pt.q > 0.0) sel.push_back(pt);
        if (sel.size() < 4) throw Error(Errc::poor_convergence, "too few points in fit window");
        Eigen::MatrixXd A(sel.size(), 3);
        Eigen::VectorXd h(sel.size());
        for (std::size_t i = 0; i < sel.size(); ++i) {
            const double q = sel[i].q;
            A(i, 0) = 1.0;
            A(i, 1) = 1.0 / q;
            A(i, 2) = 1.0 / (q * q);
            h[i] = -(sel[i].p + q * q) / q;
        }
        const Eigen::Vector3d c = A.colPivHouseholderQr().solve(h);
        residual = (A * c - h).cwiseAbs().maxCoeff();
        return std::pair<double, std::size_t>(c[0], sel.size());
    };
    LimitEstimate est;
    const auto [value, count] = fit(curve, q_lo, q_hi, est.fit_residual);
    est.value = value;
    double r_half = 0.0;
    try {
        const auto half = fit(curve, 0.5 * (q_lo + q_hi), q_hi, r_half);
        est.error_estimate = std::abs(half.first - value);
    } catch (const Error&) {
        est.error_estimate = est.fit_residual;
    }
    if (est.fit_residual > residual_tol) throw Error(Errc::poor_convergence, "extrapolation residual above tolerance");
    (void)count;
    return est;
}

LimitEstimate estimate_T_from_separatrix(double q_max, double window_lo, double window_hi,
                                         const SeparatrixOptions& opt)
{
    if (!(q_max >= 20.0)) throw Error(Errc::poor_convergence, "q_max below 20 gives no usable asymptotic window");
    if (window_lo <= 0.0) window_lo = 0.5 * q_max;
    if (window_hi <= 0.0) window_hi = q_max;
    const auto fps = classify_fixed_points();
    const FixedPointInfo* saddle = nullptr;
    for (const auto& f : fps)
        if (f.kind == FixedPointKind::saddle && f.location.q == 0.0 && f.location.p < 0.0) saddle = &f;
    if (!saddle) throw Error(Errc::invalid_argument, "saddle (0,-1/2) not found");

    auto estimate = [&](const SeparatrixOptions& o) {
        const Separatrix sep = trace_separatrix(*saddle, Branch::stable_pos, q_max, o);
        if (!sep.reached_q_max()) throw Error(Errc::poor_convergence, "separatrix did not reach q_max");
        return fit_h_limit(sep.sample_uniform_q(window_lo, window_hi, 400), window_lo, window_hi);
    };
    LimitEstimate est = estimate(opt);
    SeparatrixOptions half = opt;
    half.delta *= 0.5;
    const LimitEstimate est_half = estimate(half);
    est.error_estimate = std::max(est.error_estimate, std::abs(est_half.value - est.value));
    return est;
}

LimitEstimate tau_from_orbit(const std::vector<PhasePoint>& curve, double residual_tol)
{
    if (curve.empty()) throw Error(Errc::poor_convergence, "empty curve");
    double q_top = 0.0;
    for (const auto& pt : curve) q_top = std::max(q_top, pt.q);
    LimitEstimate est = fit_h_limit(curve, 0.5 * q_top, q_top, residual_tol);
    est.value = -est.value;
    return est;
}

}  // namespace s2c
