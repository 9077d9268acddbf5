#include "s2cubic/critical_tau.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

#include "s2cubic/errors.hpp"
#include "s2cubic/phase_plane.hpp"

namespace s2c {

const char* probe_name(ProbeKind kind)
{
    switch (kind) {
    case ProbeKind::global_positive: return "global_positive";
    case ProbeKind::derivative_zero: return "derivative_zero";
    case ProbeKind::blowup: return "blowup";
    }
    return "unknown";
}

const char* critical_method_name(CriticalMethod m)
{
    switch (m) {
    case CriticalMethod::bisection: return "bisection";
    case CriticalMethod::separatrix: return "separatrix";
    case CriticalMethod::stationary_series: return "stationary_series";
    }
    return "unknown";
}

ProbeOutcome tau_probe(double tau, double t_max)
{
    if (!std::isfinite(tau)) throw Error(Errc::invalid_argument, "tau must be finite");
    if (!(t_max >= 30.0)) throw Error(Errc::invalid_argument, "t_max must be at least 30");
    IvpSpec spec;
    spec.tau = tau;
    spec.t_lo = -t_max;
    spec.t_hi = t_max;
    Trajectory tr;
    try {
        tr = integrate_ivp(spec);
    } catch (const Error& e) {
        if (e.code() != Errc::step_size_underflow) throw;
        return ProbeOutcome{ProbeKind::blowup, e.where()};
    }
    const Termination& term = tr.termination();
    if (term.kind == TerminationKind::derivative_zero) return ProbeOutcome{ProbeKind::derivative_zero, term.t};
    if (term.kind == TerminationKind::blowup) return ProbeOutcome{ProbeKind::blowup, term.t};

    auto near_node = [&](double t, double q_node) {
        const FullJet j = tr.at(t);
        if (j.x == 0.0) return false;
        const double q = j.x1 / j.x;
        const double p = j.x2 / j.x - q * q;
        return std::hypot(q - q_node, p) < 1e-6;
    };
    if (near_node(tr.t_max(), 1.0) && near_node(tr.t_min(), -1.0)) return ProbeOutcome{ProbeKind::global_positive, 0.0};
    std::ostringstream os;
    os.precision(17);
    os << "tau=" << tau << ": no event and reduced orbit not at the nodes by |t|=" << t_max;
    throw Error(Errc::inconclusive, os.str());
}

CriticalResult find_T_bisection(double tol, double t_max)
{
    if (!(tol >= 1e-10)) throw Error(Errc::invalid_argument, "tol must be at least 1e-10");
    auto ok = [&](double tau) { return tau_probe(tau, t_max).kind == ProbeKind::global_positive; };
    double lo = 0.0;
    if (!ok(lo)) throw Error(Errc::bracket_failure, "tau=0 is not global_positive");
    std::optional<double> hi;
    for (double cand : {1.0, 2.0, 4.0, 8.0, 16.0}) {
        if (!ok(cand)) {
            hi = cand;
            break;
        }
        lo = cand;
    }
    if (!hi) throw Error(Errc::bracket_failure, "no failing tau in [0, 16]");
    double h = *hi;
    while (h - lo > tol) {
        const double mid = 0.5 * (lo + h);
        if (ok(mid))
            lo = mid;
        else
            h = mid;
    }
    CriticalResult r;
    r.T = 0.5 * (lo + h);
    r.method = CriticalMethod::bisection;
    r.bracket_lo = lo;
    r.bracket_hi = h;
    r.bracket_width = h - lo;
    r.error_estimate = 0.5 * (h - lo);
    return r;
}

CriticalResult find_T_separatrix(double q_max)
{
    const LimitEstimate est = estimate_T_from_separatrix(q_max);
    CriticalResult r;
    r.T = est.value;
    r.method = CriticalMethod::separatrix;
    r.fit_residual = est.fit_residual;
    r.error_estimate = est.error_estimate;
    if (!(r.T > 0.0)) throw Error(Errc::poor_convergence, "separatrix limit is not positive");
    return r;
}

namespace {

using GState = ode::Vec<3>;

double g_denominator(double s, const GState& y) { return y[0] - 2.0 * s * y[1]; }

GState g_rhs(double s, const GState& y)
{
    const double den = g_denominator(s, y);
    if (den == 0.0) throw Error(Errc::singular_denominator, "g - 2 s g' = 0", s);
    return GState{y[1], y[2], (3.0 * y[2] * y[1] + 4.0 * s * y[2] * y[2]) / den};
}

std::vector<ode::DenseStep<3>> g_run(double tau, double s_end)
{
    const GState y0{0.0, -0.5, 0.25 * tau};
    ode::Dop853Options<3> opt;
    opt.rel_tol = 1e-13;
    opt.abs_tol.fill(1e-15);
    opt.max_step = 0.05;
    std::optional<double> zero;
    auto monitor = [&](const ode::DenseStep<3>& st) {
        constexpr int samples = 8;
        double prev = g_denominator(st.t_old, st.value(st.t_old));
        for (int j = 1; j <= samples; ++j) {
            const double s = st.t_old + (st.t_new - st.t_old) * j / samples;
            const double d = g_denominator(s, st.value(s));
            if ((d > 0.0) != (prev > 0.0)) {
                zero = ode::locate_crossing(st, [](double ss, const GState& y) { return g_denominator(ss, y); });
                return false;
            }
            prev = d;
        }
        return true;
    };
    auto f = [](double s, const GState& y) { return g_rhs(s, y); };
    auto res = ode::dop853<3>(f, 1.0, y0, s_end, opt, monitor);
    std::ostringstream os;
    os.precision(17);
    if (zero) {
        os << "g - 2 s g' vanishes at s=" << *zero << " (tau=" << tau << ")";
        throw Error(Errc::singular_denominator, os.str(), *zero);
    }
    if (res.status != ode::Dop853Status::completed) {
        os << "g-equation stalled at s=" << res.t_end << " (tau=" << tau << ")";
        throw Error(Errc::singular_denominator, os.str(), res.t_end);
    }
    return res.steps;
}

GValues to_values(const GState& y) { return GValues{y[0], y[1], y[2]}; }

}  // namespace

GProfile::GProfile(double tau, double s_max, ode::DenseSolution<3> dense)
    : tau_(tau), s_max_(s_max), dense_(std::move(dense))
{
    limit_ = at(0.0);
    const double xs[3] = {1e-2, 1e-3, 1e-4};
    GState ys[3];
    for (int i = 0; i < 3; ++i) ys[i] = dense_.value(xs[i]);
    // Neville to s = 0 with a quadratic through the three samples
    for (int c = 0; c < 3; ++c) {
        double p[3] = {ys[0][c], ys[1][c], ys[2][c]};
        for (int k = 1; k < 3; ++k)
            for (int i = 0; i + k < 3; ++i)
                p[i] = ((0.0 - xs[i + k]) * p[i] + (xs[i] - 0.0) * p[i + 1]) / (xs[i] - xs[i + k]);
        (c == 0 ? richardson_.g : c == 1 ? richardson_.g1 : richardson_.g2) = p[0];
    }
    extrapolation_residual_ = std::max({std::abs(richardson_.g - limit_.g), std::abs(richardson_.g1 - limit_.g1),
                                        std::abs(richardson_.g2 - limit_.g2)});
}

GValues GProfile::at(double s) const
{
    if (s < 0.0 || s > s_max_ * (1.0 + 1e-14)) {
        std::ostringstream os;
        os << "s=" << s << " outside [0, " << s_max_ << "]";
        throw Error(Errc::invalid_argument, os.str());
    }
    return to_values(dense_.value(s));
}

double GProfile::g3(double s) const
{
    const GValues v = at(s);
    return g_rhs(s, GState{v.g, v.g1, v.g2})[2];
}

double GProfile::zeta(double s) const
{
    const GValues v = at(s);
    return v.g - 2.0 * s * v.g1;
}

double GProfile::m(double s) const
{
    const GValues v = at(s);
    return 4.0 * v.g1 * (v.g - s * v.g1);
}

std::vector<GProfile::Sample> GProfile::samples() const
{
    std::vector<double> ss;
    for (const auto& st : dense_.steps()) {
        ss.push_back(st.lo());
        ss.push_back(st.hi());
    }
    std::sort(ss.begin(), ss.end());
    ss.erase(std::unique(ss.begin(), ss.end()), ss.end());
    std::vector<Sample> out;
    out.reserve(ss.size());
    for (double s : ss) {
        const GValues v = to_values(dense_.value(s));
        out.push_back(Sample{s, v.g, v.g1, v.g2});
    }
    return out;
}

GProfile solve_g(double tau, double s_max)
{
    if (!std::isfinite(tau)) throw Error(Errc::invalid_argument, "tau must be finite");
    if (!(s_max >= 1.0) || !std::isfinite(s_max)) throw Error(Errc::invalid_argument, "s_max must be finite and >= 1");
    ode::DenseSolution<3> dense(g_run(tau, 0.0));
    if (s_max > 1.0) dense.append(g_run(tau, s_max));
    return GProfile(tau, s_max, std::move(dense));
}

PoleFunctions::PoleFunctions(double tau, double s_max) : plus_(solve_g(tau, s_max)), minus_(solve_g(-tau, s_max)) {}

PoleFunctions::PoleFunctions(GProfile plus, GProfile minus) : plus_(std::move(plus)), minus_(std::move(minus))
{
    if (plus_.tau() != -minus_.tau()) throw Error(Errc::invalid_argument, "profiles must be at tau and -tau");
}

PoleValues PoleFunctions::at(double s) const
{
    const GValues p = plus_.at(s), q = minus_.at(s);
    PoleValues v;
    v.zeta = p.g - 2.0 * s * p.g1;
    v.nu = 4.0 * p.g2 * v.zeta * v.zeta;
    v.xi = q.g - 2.0 * s * q.g1;
    v.mu = -4.0 * q.g2 * v.xi * v.xi;
    return v;
}

PoleValues pole_functions(double tau, double s)
{
    if (!(s >= 0.0)) throw Error(Errc::invalid_argument, "s must be non-negative");
    return PoleFunctions(tau, std::max(1.0, s)).at(s);
}

namespace {

// coefficients of a*b truncated to degree n
std::vector<double> poly_mul(const std::vector<double>& a, const std::vector<double>& b, std::size_t n)
{
    std::vector<double> r(n + 1, 0.0);
    for (std::size_t i = 0; i < a.size() && i <= n; ++i)
        for (std::size_t j = 0; j < b.size() && i + j <= n; ++j) r[i + j] += a[i] * b[j];
    return r;
}

std::vector<double> poly_diff(const std::vector<double>& a)
{
    std::vector<double> r(a.size() > 1 ? a.size() - 1 : 1, 0.0);
    for (std::size_t k = 1; k < a.size(); ++k) r[k - 1] = static_cast<double>(k) * a[k];
    return r;
}

// coefficient of u^n in X'X''' - X X'' + 2 X''^2 - X'^2 - X^2
double ode_residual_coeff(const std::vector<double>& c, std::size_t n)
{
    const auto d1 = poly_diff(c), d2 = poly_diff(d1), d3 = poly_diff(d2);
    const auto a = poly_mul(d1, d3, n), b = poly_mul(c, d2, n), e = poly_mul(d2, d2, n), f = poly_mul(d1, d1, n),
               g = poly_mul(c, c, n);
    return a[n] - b[n] + 2.0 * e[n] - f[n] - g[n];
}

}  // namespace

std::vector<double> stationary_series(int order)
{
    if (order < 2) throw Error(Errc::invalid_argument, "order must be at least 2");
    std::vector<double> c{-1.0, 0.0, 0.25};
    for (int k = 3; k <= order; ++k) {
        c.push_back(0.0);
        const double r = ode_residual_coeff(c, static_cast<std::size_t>(k - 2));
        const double kk = k;
        c.back() = -r / (kk * (kk - 1.0) * (kk + 4.0) / 2.0);
    }
    return c;
}

CriticalSolution critical_solution(double t_max)
{
    if (!(t_max >= 5.0)) throw Error(Errc::invalid_argument, "t_max must be at least 5");
    CriticalSolution cs;
    cs.series = stationary_series(30);
    SeriesPatch unit{0.0, cs.patch_radius, 1.0, cs.series};
    const double r = cs.patch_radius;
    const FullJet e = unit.eval(r);

    IvpSpec settings;
    const Trajectory probe = integrate_from(JetState{r, e.x, e.x1, e.x2}, r, r + 6.0, settings);
    double a = r, b = probe.t_max();
    if (!(probe.at(b).x > 0.0)) throw Error(Errc::no_stationary_point, "X has no zero in the probe window");
    for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
        const double mid = 0.5 * (a + b);
        if (probe.at(mid).x < 0.0)
            a = mid;
        else
            b = mid;
    }
    // take the endpoint with the smaller |X|
    cs.u1 = std::abs(probe.at(a).x) < std::abs(probe.at(b).x) ? a : b;
    const FullJet z = probe.at(cs.u1);
    cs.kappa = z.x1;
    cs.T_anchor = z.x2 / z.x1;
    cs.t0 = -cs.u1;
    cs.b = 1.0 / (cs.kappa * cs.kappa);

    SeriesPatch patch{cs.t0, r, 1.0 / cs.kappa, cs.series};
    const FullJet s = patch.eval(cs.t0 + r);
    const Trajectory right = integrate_from(JetState{cs.t0 + r, s.x, s.x1, s.x2}, cs.t0 + r, t_max, settings);
    cs.trajectory = Trajectory::with_reflection(right, patch, -t_max);
    return cs;
}

int count_derivative_zeros(const Trajectory& traj, int scan_points)
{
    if (scan_points < 2) throw Error(Errc::invalid_argument, "scan_points must be at least 2");
    std::vector<double> ts;
    for (const auto& n : traj.nodes()) ts.push_back(n.t);
    const double lo = traj.t_min(), hi = traj.t_max();
    for (int i = 0; i < scan_points; ++i) ts.push_back(lo + (hi - lo) * i / (scan_points - 1));
    std::sort(ts.begin(), ts.end());
    int count = 0;
    std::optional<bool> prev;
    for (double t : ts) {
        if (t < lo || t > hi) continue;
        const bool pos = traj.at(t).x1 > 0.0;
        if (prev && *prev != pos) ++count;
        prev = pos;
    }
    return count;
}

}  // namespace s2c
