#include "s2cubic/gc.hpp"

#include <algorithm>
#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <sstream>

#include "s2cubic/critical_tau.hpp"
#include "s2cubic/errors.hpp"

namespace s2c {

RotSymMetricProfile gc_profile()
{
    RotSymMetricProfile p;
    p.name = "goryachev-chaplygin";
    p.A = [](const Jet2& t) {
        const Jet2 s = sin(t), c = cos(t);
        return (1.0 + 3.0 * s * s) / (4.0 - 3.0 * c * c);
    };
    p.B = [](const Jet2& t) {
        const Jet2 s = sin(t), c = cos(t);
        return s * s / (4.0 - 3.0 * c * c);
    };
    p.V = [](const Jet2& t) { return -sin(t); };
    return p;
}

RotSymMetricProfile round_sphere_profile()
{
    RotSymMetricProfile p;
    p.name = "round";
    p.A = [](const Jet2&) { return Jet2(1.0); };
    p.B = [](const Jet2& t) {
        const Jet2 s = sin(t);
        return s * s;
    };
    p.V = [](const Jet2&) { return Jet2(0.0); };
    return p;
}

std::array<double, 3> gc_pullback_fd(double theta, double phi, double h)
{
    auto emb = [](double t, double p) {
        return std::array<double, 3>{std::sin(t) * std::cos(p), std::sin(t) * std::sin(p), std::cos(t)};
    };
    auto diff = [&](bool wrt_theta) {
        std::array<double, 3> d{};
        const double w[4] = {1.0 / 12.0, -8.0 / 12.0, 8.0 / 12.0, -1.0 / 12.0};
        const int off[4] = {-2, -1, 1, 2};
        for (int k = 0; k < 4; ++k) {
            const auto u = wrt_theta ? emb(theta + off[k] * h, phi) : emb(theta, phi + off[k] * h);
            for (int i = 0; i < 3; ++i) d[i] += w[k] * u[i] / h;
        }
        return d;
    };
    const auto u = emb(theta, phi);
    const auto dt = diff(true), dp = diff(false);
    const double den = 4.0 * u[0] * u[0] + 4.0 * u[1] * u[1] + u[2] * u[2];
    auto q = [](const std::array<double, 3>& a, const std::array<double, 3>& b) {
        return a[0] * b[0] + a[1] * b[1] + 4.0 * a[2] * b[2];
    };
    return {q(dt, dt) / den, q(dp, dp) / den, q(dt, dp) / den};
}

namespace {

// sqrt(B/A) as a jet in theta: dtheta/dy and its theta-derivatives
Jet2 speed(const RotSymMetricProfile& p, double theta)
{
    const Jet2 t(theta, 1.0, 0.0);
    return sqrt(p.B(t) / p.A(t));
}

ode::DenseSolution<1> theta_run(const RotSymMetricProfile& p, double y_end)
{
    ode::Dop853Options<1> o;
    o.rel_tol = 1e-14;
    o.abs_tol.fill(1e-300);
    o.max_step = 0.25;
    auto rhs = [&p](double, const ode::Vec<1>& v) { return ode::Vec<1>{speed(p, v[0]).v}; };
    auto res = ode::dop853<1>(rhs, 0.0, ode::Vec<1>{M_PI / 2}, y_end, o);
    if (res.status != ode::Dop853Status::completed) {
        std::ostringstream os;
        os << "theta(y) stalled at y=" << res.t_end;
        throw Error(Errc::step_size_underflow, os.str(), res.t_end);
    }
    return ode::DenseSolution<1>(std::move(res.steps));
}

}  // namespace

ConformalCoords::ConformalCoords(RotSymMetricProfile profile, double y_max) : profile_(std::move(profile)), y_max_(y_max)
{
    if (!(y_max > 0.0)) throw Error(Errc::invalid_argument, "y_max must be positive");
    for (double th : {0.1, 0.7, M_PI / 2, 2.5}) {
        const Jet2 t(th);
        if (!(profile_.A(t).v > 0.0) || !(profile_.B(t).v > 0.0))
            throw Error(Errc::degenerate_metric, "profile needs A, B > 0 inside (0, pi)");
    }
    up_ = theta_run(profile_, y_max_);
    down_ = theta_run(profile_, -y_max_);
}

double ConformalCoords::y_of_theta(double theta) const
{
    if (!(theta > 0.0 && theta < M_PI)) {
        std::ostringstream os;
        os << "theta=" << theta << " is not inside (0, pi)";
        throw Error(Errc::quadrature_failure, os.str(), theta);
    }
    if (theta == M_PI / 2) return 0.0;
    using boost::math::quadrature::gauss_kronrod;
    // integrand sqrt(A/B) ~ 1/distance to the pole; with t = pole distance e^s it is bounded
    const bool north = theta < M_PI / 2;
    auto g = [&](double s) {
        const double e = std::exp(s);
        const double th = north ? e : M_PI - e;
        const Jet2 t(th);
        return std::sqrt(profile_.A(t).v / profile_.B(t).v) * e;
    };
    const double lo = std::log(north ? theta : M_PI - theta);
    double err = 0.0;
    const double I = gauss_kronrod<double, 31>::integrate(g, lo, std::log(M_PI / 2), 10, 1e-13, &err);
    if (!std::isfinite(I) || err > 1e-10 * std::max(1.0, std::abs(I))) {
        std::ostringstream os;
        os << "y(theta) quadrature error " << err << " at theta=" << theta;
        throw Error(Errc::quadrature_failure, os.str(), theta);
    }
    return north ? -I : I;
}

Jet2 ConformalCoords::theta_of_y(double y) const
{
    if (!(std::abs(y) <= y_max_)) {
        std::ostringstream os;
        os << "y=" << y << " outside [" << -y_max_ << ", " << y_max_ << "]";
        throw Error(Errc::invalid_argument, os.str(), y);
    }
    const double th = (y >= 0.0 ? up_ : down_).value(y)[0];
    const Jet2 h = speed(profile_, th);
    return Jet2(th, h.v, h.d1 * h.v);
}

double ConformalCoords::conformal_factor(double y) const { return profile_.B(theta_of_y(y)).v; }

double ConformalCoords::potential(double y) const { return profile_.V(theta_of_y(y)).v; }

RadialJets ConformalCoords::radial(double y) const
{
    const Jet2 th = theta_of_y(y);
    const Jet2 B = profile_.B(th);
    return RadialJets{-1.0 * (profile_.V(th) * B), B};
}

HamiltonianModel gc_model(double y_max)
{
    return HamiltonianModel::from_source(Family::GC, std::make_shared<ConformalCoords>(gc_profile(), y_max));
}

RotationalProfile::RotationalProfile(std::function<RadialJets(double)> f, double y_lo, double y_hi, std::string label)
    : f_(std::move(f)), y_lo_(y_lo), y_hi_(y_hi), label_(std::move(label))
{
    if (!(y_lo < y_hi)) throw Error(Errc::invalid_argument, "empty profile range");
}

RotationalProfile RotationalProfile::of(const HamiltonianModel& model, std::string label)
{
    return RotationalProfile([model](double y) { return model.radial(y); }, model.y_lo(), model.y_hi(), std::move(label));
}

RadialJets RotationalProfile::at(double y) const
{
    if (y < y_lo_ || y > y_hi_) {
        std::ostringstream os;
        os << "y=" << y << " outside [" << y_lo_ << ", " << y_hi_ << "]";
        throw Error(Errc::invalid_argument, os.str(), y);
    }
    return f_(y);
}

RotationalProfile lemma_L_transform(const RotationalProfile& p, double D, int sign)
{
    if (!(D > 0.0)) throw Error(Errc::invalid_argument, "D must be positive");
    if (sign != 1 && sign != -1) throw Error(Errc::invalid_argument, "sign must be +1 or -1");
    const double L = std::log(D);
    const double lo = sign == 1 ? p.y_lo() + L : L - p.y_hi();
    const double hi = sign == 1 ? p.y_hi() + L : L - p.y_lo();
    return RotationalProfile(
        [p, L, sign](double y) {
            RadialJets r = p.at(sign * (y - L));
            if (sign == -1) {
                r.psi3.d1 = -r.psi3.d1;
                r.kin.d1 = -r.kin.d1;
            }
            return r;
        },
        lo, hi, p.label());
}

namespace {

double sup_misfit(const std::vector<double>& a, const std::vector<double>& b, double C)
{
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - C * b[k]));
    return m;
}

// min over C of max |a - C b|; convex in C
double sup_fit(const std::vector<double>& a, const std::vector<double>& b, double& C)
{
    double ab = 0.0, bb = 0.0, bmax = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        ab += a[k] * b[k];
        bb += b[k] * b[k];
        bmax = std::max(bmax, std::abs(b[k]));
    }
    if (bb == 0.0) {
        C = 1.0;
        return sup_misfit(a, b, C);
    }
    const double c_ls = ab / bb;
    const double g_ls = sup_misfit(a, b, c_ls);
    // any C with smaller misfit lies within 2 g_ls / max|b| of c_ls
    double lo = c_ls - 2.0 * g_ls / bmax, hi = c_ls + 2.0 * g_ls / bmax;
    const double r = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - r * (hi - lo), x2 = lo + r * (hi - lo);
    double f1 = sup_misfit(a, b, x1), f2 = sup_misfit(a, b, x2);
    double best_c = c_ls, best = g_ls;
    for (int it = 0; it < 200 && hi - lo > 1e-16 * std::max(1.0, std::abs(c_ls)); ++it) {
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = sup_misfit(a, b, x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = sup_misfit(a, b, x2);
        }
        if (f1 < best) best = f1, best_c = x1;
        if (f2 < best) best = f2, best_c = x2;
    }
    C = best_c;
    return best;
}

struct Window {
    std::vector<double> y, a3, a4;
    double s3 = 1.0, s4 = 1.0;
};

Window make_window(const RotationalProfile& p1, const SearchBox& box)
{
    const double lo = std::max(box.y_lo, p1.y_lo()), hi = std::min(box.y_hi, p1.y_hi());
    if (!(lo < hi) || box.samples < 2) throw Error(Errc::no_overlap, "comparison window misses the first profile");
    Window w;
    double m3 = 0.0, m4 = 0.0;
    for (int k = 0; k < box.samples; ++k) {
        const double y = lo + (hi - lo) * k / (box.samples - 1);
        const RadialJets r = p1.at(y);
        w.y.push_back(y);
        w.a3.push_back(r.psi3.v);
        w.a4.push_back(r.kin.v);
        m3 = std::max(m3, std::abs(r.psi3.v));
        m4 = std::max(m4, std::abs(r.kin.v));
    }
    w.s3 = m3 > 0.0 ? m3 : 1.0;
    w.s4 = m4 > 0.0 ? m4 : 1.0;
    return w;
}

// nullopt-like: points = 0 when the shifted window leaves the second profile
EquivalenceFit fit_at(const Window& w, const RotationalProfile& p2, int sign, double y1)
{
    EquivalenceFit f;
    f.sign = sign;
    f.y1 = y1;
    const double lo = sign * w.y.front() + y1, hi = sign * w.y.back() + y1;
    if (std::min(lo, hi) < p2.y_lo() || std::max(lo, hi) > p2.y_hi()) {
        f.residual_V = f.residual_K = std::numeric_limits<double>::infinity();
        return f;
    }
    std::vector<double> b3(w.y.size()), b4(w.y.size());
    for (std::size_t k = 0; k < w.y.size(); ++k) {
        const RadialJets r = p2.at(sign * w.y[k] + y1);
        b3[k] = r.psi3.v;
        b4[k] = r.kin.v;
    }
    f.residual_V = sup_fit(w.a3, b3, f.C0) / w.s3;
    f.residual_K = sup_fit(w.a4, b4, f.C3) / w.s4;
    f.points = static_cast<int>(w.y.size());
    return f;
}

}  // namespace

EquivalenceFit equivalence_at(const RotationalProfile& p1, const RotationalProfile& p2, int sign, double y1,
                              const SearchBox& box)
{
    const Window w = make_window(p1, box);
    EquivalenceFit f = fit_at(w, p2, sign, y1);
    if (f.points == 0) throw Error(Errc::no_overlap, "shifted window leaves the second profile");
    return f;
}

EquivalenceFit match_equivalence(const RotationalProfile& p1, const RotationalProfile& p2, const SearchBox& box)
{
    if (box.shift_steps < 2 || !(box.shift_lo < box.shift_hi))
        throw Error(Errc::invalid_argument, "shift range needs at least two steps");
    const Window w = make_window(p1, box);
    EquivalenceFit best;
    best.residual_V = best.residual_K = std::numeric_limits<double>::infinity();
    auto better = [](const EquivalenceFit& a, const EquivalenceFit& b) { return a.residual() < b.residual(); };
    const double step = (box.shift_hi - box.shift_lo) / (box.shift_steps - 1);
    for (int sign : box.signs) {
        EquivalenceFit coarse;
        coarse.residual_V = coarse.residual_K = std::numeric_limits<double>::infinity();
        for (int i = 0; i < box.shift_steps; ++i) {
            const double y1 = box.shift_lo + (box.shift_hi - box.shift_lo) * i / (box.shift_steps - 1);
            const EquivalenceFit f = fit_at(w, p2, sign, y1);
            if (better(f, coarse)) coarse = f;
        }
        if (coarse.points == 0) continue;
        // golden section on the joint sup residual around the coarse optimum
        double lo = std::max(box.shift_lo, coarse.y1 - step), hi = std::min(box.shift_hi, coarse.y1 + step);
        const double r = 0.5 * (std::sqrt(5.0) - 1.0);
        double x1 = hi - r * (hi - lo), x2 = lo + r * (hi - lo);
        EquivalenceFit f1 = fit_at(w, p2, sign, x1), f2 = fit_at(w, p2, sign, x2);
        EquivalenceFit local = coarse;
        for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(coarse.y1)); ++it) {
            if (f1.residual() <= f2.residual()) {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - r * (hi - lo);
                f1 = fit_at(w, p2, sign, x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + r * (hi - lo);
                f2 = fit_at(w, p2, sign, x2);
            }
            if (better(f1, local)) local = f1;
            if (better(f2, local)) local = f2;
        }
        if (better(local, best)) best = local;
    }
    if (best.points == 0) throw Error(Errc::no_overlap, "no shift keeps the window inside the second profile");
    return best;
}

PoleReport profile_pole_check(const RotationalProfile& p, double u_top, int degree, int samples)
{
    if (degree < 1 || samples <= degree || !(u_top > 0.0))
        throw Error(Errc::invalid_argument, "need samples > degree >= 1 and u_top > 0");
    auto fit_chart = [&](Chart chart) {
        PoleFit fit;
        fit.chart = chart;
        const double sgn = chart == Chart::r ? 1.0 : -1.0;
        Eigen::MatrixXd A(samples, degree + 1);
        Eigen::VectorXd kin(samples), pot(samples);
        try {
            for (int i = 0; i < samples; ++i) {
                const double u = u_top * (i + 1) / samples;
                const double y = sgn * 0.5 * std::log(u);
                const RadialJets r = p.at(y);
                kin[i] = r.kin.v / u;
                pot[i] = r.psi3.v / r.kin.v / std::sqrt(u);
                double pw = 1.0;
                for (int k = 0; k <= degree; ++k, pw *= u / u_top) A(i, k) = pw;
            }
            if (!kin.allFinite() || !pot.allFinite()) throw Error(Errc::degenerate_metric, "non-finite pole data");
            const auto qr = A.colPivHouseholderQr();
            double worst = 0.0;
            auto fit_one = [&](const Eigen::VectorXd& v) {
                const Eigen::VectorXd c = qr.solve(v);
                const double scale = std::max(v.cwiseAbs().maxCoeff(), 1e-300);
                worst = std::max(worst, (A * c - v).cwiseAbs().maxCoeff() / scale);
                return c[0];
            };
            fit.kinetic_limit = fit_one(kin);
            fit.rho_limit = fit_one(pot);
            fit.residual = worst;
            fit.ok = fit.kinetic_limit > 0.0 && worst <= 1e-6;
            if (!fit.ok) fit.failure = fit.kinetic_limit > 0.0 ? "polynomial fit residual above 1e-6" : "kinetic limit not positive";
        } catch (const Error& e) {
            fit.failure = e.what();
            fit.residual = std::numeric_limits<double>::infinity();
        }
        return fit;
    };
    PoleReport rep;
    rep.r = fit_chart(Chart::r);
    rep.r_tilde = fit_chart(Chart::r_tilde);
    return rep;
}

StationaryPoint gc_b_value(double tau)
{
    static const CriticalSolution cs = critical_solution(30.0);
    if (std::abs(tau - cs.T_anchor) <= 1e-8) {
        const FullJet j = cs.trajectory.at(cs.t0);
        return StationaryPoint{cs.t0, j.x * j.x, "stationary_series"};
    }
    const ProbeOutcome pr = tau_probe(tau);
    if (pr.kind == ProbeKind::global_positive) {
        std::ostringstream os;
        os << "psi' > 0 on the whole line at tau=" << tau;
        throw Error(Errc::no_stationary_point, os.str());
    }
    IvpSpec sp;
    sp.tau = tau;
    sp.t_lo = -30.0;
    sp.t_hi = 30.0;
    try {
        const Trajectory tr = integrate_ivp(sp);
        if (tr.termination().kind == TerminationKind::derivative_zero) {
            const double y0 = tr.termination().t;
            const double x = tr.at(std::clamp(y0, tr.t_min(), tr.t_max())).x;
            return StationaryPoint{y0, x * x, "ivp_event"};
        }
    } catch (const Error&) {
    }
    std::ostringstream os;
    os << "no clean x'=0 event at tau=" << tau << " (" << probe_name(pr.kind) << " at t=" << pr.t << ")";
    throw Error(Errc::no_stationary_point, os.str(), pr.t);
}

}  // namespace s2c
