#include "s2cubic/metric.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <limits>
#include <sstream>

#include "s2cubic/errors.hpp"

namespace s2c {

namespace {

// value, first and second derivative of sum c_k v^k
Jet2 poly_jet(const std::vector<double>& c, double v)
{
    double p = 0.0, p1 = 0.0, p2 = 0.0;
    for (std::size_t k = c.size(); k-- > 0;) {
        const double kk = static_cast<double>(k);
        p = p * v + c[k];
        if (k >= 1) p1 = p1 * v + kk * c[k];
        if (k >= 2) p2 = p2 * v + kk * (kk - 1.0) * c[k];
    }
    return {p, p1, p2};
}

std::vector<double> poly_product(const std::vector<double>& a, const std::vector<double>& b)
{
    std::vector<double> r(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
    return r;
}

std::vector<double> poly_derivative(const std::vector<double>& a)
{
    std::vector<double> r(a.size() > 1 ? a.size() - 1 : 1, 0.0);
    for (std::size_t k = 1; k < a.size(); ++k) r[k - 1] = static_cast<double>(k) * a[k];
    return r;
}

}  // namespace

PsiProfile::PsiProfile(double tau, Trajectory traj, std::optional<GProfile> g_plus, std::optional<GProfile> g_minus)
    : tau_(tau), traj_(std::move(traj)), g_plus_(std::move(g_plus)), g_minus_(std::move(g_minus))
{
}

PsiProfile::PsiProfile(const CriticalSolution& cs, std::optional<GProfile> g_plus)
    : tau_(cs.T_anchor), traj_(cs.trajectory), g_plus_(std::move(g_plus)), critical_(true), y0_(cs.t0), b0_(cs.b),
      series_(cs.series), kappa_(cs.kappa), patch_radius_(cs.patch_radius)
{
}

double PsiProfile::y0() const
{
    if (!critical_) throw Error(Errc::no_stationary_point, "psi' has no zero for tau below T");
    return y0_;
}

double PsiProfile::b0() const
{
    if (!critical_) throw Error(Errc::no_stationary_point, "psi' has no zero for tau below T");
    return b0_;
}

PsiJet PsiProfile::jet(double y) const
{
    const FullJet j = traj_.at(y);
    PsiJet p;
    p.y = y;
    p.psi = j.x;
    p.d1 = j.x1;
    p.d2 = j.x2;
    p.d3 = j.x3;
    p.d4 = fourth_derivative(j.x, j.x1, j.x2, j.x3);
    double du, ddu;
    if (std::abs(j.x1) > 1e-3 * (1.0 + std::abs(j.x))) {
        // u' = -u r with r = (3x + 2u)/x'; keeps relative accuracy where u is tiny
        const double r = (3.0 * j.x + 2.0 * j.u) / j.x1;
        du = -j.u * r;
        const double r1 = (3.0 * j.x1 + 2.0 * du) / j.x1 - (3.0 * j.x + 2.0 * j.u) * j.x2 / (j.x1 * j.x1);
        ddu = j.u * (r * r - r1);
    } else {
        du = j.x3 - j.x1;
        ddu = p.d4 - j.x2;
    }
    p.u = Jet2(j.u, du, ddu);
    p.m = Jet2(j.m, -2.0 * j.x1 * j.u, -2.0 * j.x2 * j.u - 2.0 * j.x1 * du);
    return p;
}

Jet2 PsiProfile::n_over_d1sq(double y, double b) const
{
    if (critical_ && std::abs(y - y0_) <= patch_radius_ && std::abs(b - b0_) <= 1e-12 * std::max(1.0, std::abs(b0_))) {
        // (1 - X^2 + X'^2) / X'^2 with both numerator and denominator divided by v^2
        const auto X1 = poly_derivative(series_);
        std::vector<double> num = poly_product(X1, X1);
        const auto XX = poly_product(series_, series_);
        num.resize(std::max(num.size(), XX.size()), 0.0);
        for (std::size_t k = 0; k < XX.size(); ++k) num[k] -= XX[k];
        num[0] += 1.0;
        std::vector<double> den = poly_product(X1, X1);
        const std::vector<double> num2(num.begin() + 2, num.end());
        const std::vector<double> den2(den.begin() + 2, den.end());
        const double v = y - y0_;
        return poly_jet(num2, v) / poly_jet(den2, v);
    }
    const PsiJet p = jet(y);
    if (!(std::abs(p.d1) > 1e-12)) {
        std::ostringstream os;
        os << "psi'(" << y << ") = " << p.d1;
        throw Error(Errc::degenerate_derivative, os.str());
    }
    const Jet2 d1(p.d1, p.d2, p.d3);
    return (b - p.m) / (d1 * d1);
}

double PsiProfile::max_ode_residual() const
{
    double worst = 0.0;
    for (const auto& n : traj_.nodes()) {
        if (traj_.patch() && std::abs(n.t - traj_.patch()->center) <= traj_.patch()->radius) continue;
        const double x3 = traj_.x3_interpolated(n.t);
        const double x = n.x, x1 = n.x1, x2 = n.x2;
        const double res = x1 * x3 - x * x2 + 2.0 * x2 * x2 - x1 * x1 - x * x;
        const double scale = std::abs(x1 * x3) + std::abs(x * x2) + 2.0 * x2 * x2 + x1 * x1 + x * x;
        worst = std::max(worst, std::abs(res) / scale);
    }
    return worst;
}

std::vector<double> PsiProfile::y_grid() const
{
    std::vector<double> ys;
    for (const auto& n : traj_.nodes()) ys.push_back(n.t);
    return ys;
}

namespace {

std::optional<GProfile> try_solve_g(double tau)
{
    try {
        return solve_g(tau);
    } catch (const Error& e) {
        if (e.code() != Errc::singular_denominator) throw;
        return std::nullopt;
    }
}

}  // namespace

PsiProfile build_psi(double tau, double y_lo, double y_hi)
{
    IvpSpec spec;
    spec.tau = tau;
    spec.t_lo = y_lo;
    spec.t_hi = y_hi;
    Trajectory tr = integrate_ivp(spec);
    if (tr.termination().kind != TerminationKind::completed) {
        std::ostringstream os;
        os.precision(17);
        os << "psi for tau=" << tau << " stops with " << termination_name(tr.termination().kind)
           << " at y=" << tr.termination().t;
        throw Error(Errc::degenerate_derivative, os.str(), tr.termination().t);
    }
    return PsiProfile(tau, std::move(tr), try_solve_g(tau), try_solve_g(-tau));
}

PsiProfile build_critical_psi(double y_lo, double y_hi)
{
    const double t_max = std::max({-y_lo, y_hi, 5.0});
    const CriticalSolution cs = critical_solution(t_max);
    return PsiProfile(cs, try_solve_g(cs.T_anchor));
}

const char* family_name(Family f)
{
    switch (f) {
    case Family::A: return "A";
    case Family::B: return "B";
    case Family::GC: return "GC";
    }
    return "?";
}

Family parse_family(const std::string& s)
{
    if (s == "A") return Family::A;
    if (s == "B") return Family::B;
    if (s == "GC") return Family::GC;
    throw Error(Errc::invalid_argument, "family must be A, B or GC, got '" + s + "'");
}

BBounds b_bounds(const PsiProfile& psi)
{
    if (psi.critical()) throw Error(Errc::invalid_argument, "b bounds are defined for tau below T");
    if (!psi.g_plus() || !psi.g_minus()) throw Error(Errc::invalid_argument, "profile lacks s-chart data at an end");
    const double lo = psi.y_lo(), hi = psi.y_hi();
    std::vector<double> ys = psi.y_grid();
    constexpr int n = 2001;
    for (int i = 0; i < n; ++i) ys.push_back(lo + (hi - lo) * i / (n - 1));
    double mn = std::numeric_limits<double>::infinity(), mx = -mn;
    for (double y : ys) {
        if (y < lo || y > hi) continue;
        const double m = psi.jet(y).m.v;
        mn = std::min(mn, m);
        mx = std::max(mx, m);
    }
    const double lim_hi = psi.g_plus()->m(0.0);
    const double lim_lo = psi.g_minus()->m(0.0);
    // the tail of m approaches its limit like e^{-2|y|}, so the last unit step bounds the gap
    auto check = [&](double end, double inner, double limit, const char* side) {
        const double me = psi.jet(end).m.v, mi = psi.jet(inner).m.v;
        if (std::abs(limit - me) > 2.0 * std::abs(me - mi) + 1e-9) {
            std::ostringstream os;
            os.precision(17);
            os << side << " limit " << limit << " inconsistent with grid trend (" << mi << ", " << me << ")";
            throw Error(Errc::unbounded_diagnostic, os.str());
        }
    };
    check(hi, hi - 1.0, lim_hi, "high-y");
    check(lo, lo + 1.0, lim_lo, "low-y");
    BBounds b;
    b.b_upper = std::min({mn, lim_hi, lim_lo});
    b.b_lower = std::max({mx, lim_hi, lim_lo});
    return b;
}

BBounds b_bounds(double tau) { return b_bounds(build_psi(tau)); }

namespace {

// integrand of Phi (pole r) and Phi~ (pole r~)
double phi_integrand(const PoleFunctions& pf, double s) { return -4.0 * pf.minus().at(s).g2 * pf.minus().zeta(s); }
double phi_tilde_integrand(const PoleFunctions& pf, double s) { return 4.0 * pf.plus().at(s).g2 * pf.plus().zeta(s); }

template <class F>
double composite(F&& f, double a, double b, int panels)
{
    using boost::math::quadrature::gauss;
    double sum = 0.0;
    for (int k = 0; k < panels; ++k) {
        const double lo = a + (b - a) * k / panels, hi = a + (b - a) * (k + 1) / panels;
        sum += gauss<double, 10>::integrate(f, lo, hi);
    }
    return sum;
}

}  // namespace

double minus_phi(const PoleFunctions& pf, double u, int panels)
{
    if (!(u >= 0.0 && u <= 1.0)) throw Error(Errc::invalid_argument, "u must lie in [0, 1]");
    return composite([&](double s) { return phi_integrand(pf, s); }, u, 1.0, panels);
}

double phi_tilde(const PoleFunctions& pf, double s, int panels)
{
    if (!(s >= 0.0 && s <= 1.0)) throw Error(Errc::invalid_argument, "s must lie in [0, 1]");
    return -composite([&](double v) { return phi_tilde_integrand(pf, v); }, s, 1.0, panels);
}

PhiBounds b_bounds_via_phi(const PoleFunctions& pf, int panels)
{
    if (panels < 1) throw Error(Errc::invalid_argument, "panels must be positive");
    using boost::math::quadrature::gauss;
    PhiBounds r;
    double mphi = 0.0, phit = 0.0;  // values at s = 1
    r.M1 = r.M2 = 0.0;
    r.Mt1 = r.Mt2 = 0.0;
    for (int k = panels; k-- > 0;) {
        const double lo = static_cast<double>(k) / panels, hi = static_cast<double>(k + 1) / panels;
        mphi += gauss<double, 10>::integrate([&](double s) { return phi_integrand(pf, s); }, lo, hi);
        phit -= gauss<double, 10>::integrate([&](double s) { return phi_tilde_integrand(pf, s); }, lo, hi);
        r.M1 = std::max(r.M1, mphi);
        r.M2 = std::min(r.M2, mphi);
        r.Mt1 = std::max(r.Mt1, phit);
        r.Mt2 = std::min(r.Mt2, phit);
    }
    r.bounds.b_lower = std::max(r.M1, r.Mt1) - 1.0;
    r.bounds.b_upper = std::min(r.M2, r.Mt2) - 1.0;
    return r;
}

PhiBounds b_bounds_via_phi(double tau, int panels) { return b_bounds_via_phi(PoleFunctions(tau), panels); }

HamiltonianModel HamiltonianModel::family_a(std::shared_ptr<const PsiProfile> psi, double c)
{
    if (!psi) throw Error(Errc::invalid_argument, "null profile");
    if (!std::isfinite(c)) throw Error(Errc::invalid_argument, "c must be finite");
    HamiltonianModel m;
    m.spec_.family = Family::A;
    m.spec_.tau = psi->tau();
    m.spec_.c = c;
    m.admissible_ = !psi->critical() && c > 0.0;
    m.psi_ = std::move(psi);
    return m;
}

HamiltonianModel HamiltonianModel::family_b(std::shared_ptr<const PsiProfile> psi, double b)
{
    if (!psi) throw Error(Errc::invalid_argument, "null profile");
    if (psi->critical()) {
        HamiltonianModel m;
        m.spec_.family = Family::B;
        m.spec_.tau = psi->tau();
        m.spec_.b = b;
        m.spec_.a = 1.0;
        m.admissible_ = std::abs(b - psi->b0()) <= 1e-12 * std::max(1.0, std::abs(psi->b0()));
        m.psi_ = std::move(psi);
        return m;
    }
    const BBounds bounds = b_bounds(*psi);
    return family_b(std::move(psi), b, bounds);
}

HamiltonianModel HamiltonianModel::family_b(std::shared_ptr<const PsiProfile> psi, double b, const BBounds& bounds)
{
    if (!psi) throw Error(Errc::invalid_argument, "null profile");
    if (!std::isfinite(b)) throw Error(Errc::invalid_argument, "b must be finite");
    HamiltonianModel m;
    m.spec_.family = Family::B;
    m.spec_.tau = psi->tau();
    m.spec_.b = b;
    m.bounds_ = bounds;
    if (b > bounds.b_lower) {
        m.spec_.a = 1.0;
        m.admissible_ = true;
    } else if (b < bounds.b_upper) {
        m.spec_.a = -1.0;
        m.admissible_ = true;
    } else {
        m.spec_.a = 1.0;
        m.admissible_ = false;
    }
    m.psi_ = std::move(psi);
    return m;
}

HamiltonianModel HamiltonianModel::from_source(Family family, std::shared_ptr<const RadialSource> src)
{
    if (!src) throw Error(Errc::invalid_argument, "null radial source");
    HamiltonianModel m;
    m.spec_.family = family;
    m.src_ = std::move(src);
    return m;
}

double HamiltonianModel::y_lo() const { return src_ ? src_->y_lo() : psi_->y_lo(); }
double HamiltonianModel::y_hi() const { return src_ ? src_->y_hi() : psi_->y_hi(); }

double HamiltonianModel::geodesic_energy() const
{
    switch (spec_.family) {
    case Family::A: return spec_.c;
    case Family::B: return spec_.a;
    case Family::GC: return 1.0;
    }
    return 1.0;
}

RadialJets HamiltonianModel::radial(double y) const
{
    if (src_) return src_->radial(y);
    RadialJets r;
    if (spec_.family == Family::A) {
        const PsiJet p = psi_->jet(y);
        if (!(std::abs(p.d1) > 1e-10)) {
            std::ostringstream os;
            os << "family A needs psi' != 0; psi'(" << y << ") = " << p.d1;
            throw Error(Errc::degenerate_derivative, os.str());
        }
        const Jet2 d1(p.d1, p.d2, p.d3);
        r.psi3 = p.u;
        r.kin = 1.0 / (d1 * d1);
        return r;
    }
    r.psi3 = psi_->jet(y).u;
    r.kin = psi_->n_over_d1sq(y, spec_.b);
    return r;
}

double HamiltonianModel::xi_second(double y) const { return geodesic_energy() * radial(y).kin.v; }

double HamiltonianModel::kinetic_factor(double y) const { return radial(y).kin.v; }

double HamiltonianModel::conformal_factor(double phi, double y) const
{
    return lambda_at_energy(phi, y, geodesic_energy());
}

double HamiltonianModel::lambda_at_energy(double phi, double y, double E) const
{
    const RadialJets r = radial(y);
    return r.psi3.v * std::cos(phi) + E * r.kin.v;
}

LambdaJet HamiltonianModel::lambda_jet(double phi, double y, double E) const
{
    const RadialJets r = radial(y);
    const double c = std::cos(phi), s = std::sin(phi);
    LambdaJet l;
    l.v = r.psi3.v * c + E * r.kin.v;
    l.dp = -r.psi3.v * s;
    l.dy = r.psi3.d1 * c + E * r.kin.d1;
    l.dpp = -r.psi3.v * c;
    l.dyy = r.psi3.d2 * c + E * r.kin.d2;
    l.dpy = -r.psi3.d1 * s;
    return l;
}

double HamiltonianModel::potential(double phi, double y) const
{
    const RadialJets r = radial(y);
    return -r.psi3.v * std::cos(phi) / r.kin.v;
}

double HamiltonianModel::hamiltonian(const CotangentState& s) const
{
    if (!admissible_) throw Error(Errc::degenerate_denominator, "b lies in the forbidden band");
    const RadialJets r = radial(s.y);
    return 0.5 * (s.p_phi * s.p_phi + s.p_y * s.p_y) / r.kin.v - r.psi3.v * std::cos(s.phi) / r.kin.v;
}

std::array<double, 4> HamiltonianModel::hamiltonian_gradient(const CotangentState& s) const
{
    if (!admissible_) throw Error(Errc::degenerate_denominator, "b lies in the forbidden band");
    const RadialJets r = radial(s.y);
    const double k = r.kin.v, k1 = r.kin.d1;
    const double c = std::cos(s.phi), sn = std::sin(s.phi);
    const double p2 = s.p_phi * s.p_phi + s.p_y * s.p_y;
    return {r.psi3.v * sn / k, -0.5 * p2 * k1 / (k * k) - (r.psi3.d1 * k - r.psi3.v * k1) * c / (k * k),
            s.p_phi / k, s.p_y / k};
}

double xi_second(const HamiltonianModel& model, double y) { return model.xi_second(y); }

double conformal_factor(const HamiltonianModel& model, double phi, double y)
{
    return model.conformal_factor(phi, y);
}

double hamiltonian_eval(const HamiltonianModel& model, const CotangentState& s) { return model.hamiltonian(s); }

double eq8_residual(const HamiltonianModel& model, double y)
{
    const PsiProfile* psi = model.psi();
    if (!psi) throw Error(Errc::invalid_argument, "eq8 residual needs a psi profile");
    const RadialJets r = model.radial(y);
    const double E = model.geodesic_energy();
    const double a = model.spec().family == Family::B ? E : 0.0;
    const PsiJet p = psi->jet(y);
    const Jet2 xi2 = E * r.kin;
    return xi2.v * p.d2 + (xi2.d1 * p.d1 + xi2.v * p.d2) - 2.0 * a * p.u.v;
}

double gaussian_curvature(const LambdaJet& l)
{
    if (!(l.v > 0.0)) throw Error(Errc::non_positive_lambda, "lambda <= 0");
    const double lap_log = (l.dpp + l.dyy) / l.v - (l.dp * l.dp + l.dy * l.dy) / (l.v * l.v);
    return -lap_log / (2.0 * l.v);
}

double gaussian_curvature(const HamiltonianModel& model, double phi, double y)
{
    return gaussian_curvature(model.lambda_jet(phi, y, model.geodesic_energy()));
}

const char* chart_name(Chart c) { return c == Chart::r ? "r" : "r_tilde"; }

Chart parse_chart(const std::string& s)
{
    if (s == "r") return Chart::r;
    if (s == "r_tilde" || s == "rt") return Chart::r_tilde;
    throw Error(Errc::chart_mismatch, "unknown chart '" + s + "'");
}

PolarMetric::PolarMetric(HamiltonianSpec spec, Chart chart, GProfile g)
    : spec_(spec), chart_(chart), g_(std::move(g))
{
    if (spec_.family == Family::GC) throw Error(Errc::invalid_argument, "polar g-route covers families A and B");
}

double PolarMetric::n_of(double u) const { return spec_.family == Family::B ? spec_.b - g_.m(u) : 1.0; }

double PolarMetric::kinetic(double u) const
{
    const double z = g_.zeta(u);
    return n_of(u) / (z * z);
}

double PolarMetric::psi2(double u) const
{
    const double E = spec_.family == Family::A ? spec_.c : spec_.a;
    return E * kinetic(u);
}

double PolarMetric::psi1(double u) const
{
    // (psi'' - psi) psi'^2 is e^{y} mu(u) in chart r and e^{-y} nu(u) in chart r~
    const double sign = chart_ == Chart::r ? -1.0 : 1.0;
    return sign * 4.0 * g_.at(u).g2;
}

double PolarMetric::rho(double u) const
{
    const double z = g_.zeta(u);
    return -psi1(u) * z * z / n_of(u);
}

double PolarMetric::r_of_y(double y) const { return chart_ == Chart::r ? std::exp(y) : std::exp(-y); }
double PolarMetric::y_of_r(double r) const { return chart_ == Chart::r ? std::log(r) : -std::log(r); }

double PolarMetric::hamiltonian(const CotangentState& s) const
{
    const double r = r_of_y(s.y);
    const double u = r * r;
    const double kin = u * kinetic(u);
    return 0.5 * (s.p_phi * s.p_phi + s.p_y * s.p_y) / kin + rho(u) * r * std::cos(s.phi);
}

double PolarMetric::conformal_factor(double phi, double y) const
{
    const double r = r_of_y(y);
    const double u = r * r;
    return u * (psi2(u) + psi1(u) * r * std::cos(phi));
}

PolarMetric polar_form(const HamiltonianModel& model, Chart chart, double u_max)
{
    const PsiProfile* psi = model.psi();
    if (!psi || model.spec().family == Family::GC)
        throw Error(Errc::invalid_argument, "polar form is built for families A and B");
    const double tau = psi->tau();
    const std::optional<GProfile>& stored = chart == Chart::r ? psi->g_minus() : psi->g_plus();
    if (stored && u_max == stored->s_max()) return PolarMetric(model.spec(), chart, *stored);
    return PolarMetric(model.spec(), chart, solve_g(chart == Chart::r ? -tau : tau, u_max));
}

namespace {

PoleFit fit_chart(const HamiltonianModel& model, Chart chart, int degree, int samples)
{
    PoleFit fit;
    fit.chart = chart;
    try {
        const PolarMetric pm = polar_form(model, chart);
        constexpr double u_top = 0.1;
        Eigen::MatrixXd A(samples, degree + 1);
        std::vector<double> us(samples);
        for (int i = 0; i < samples; ++i) {
            us[i] = u_top * (i + 1) / samples;
            const double t = us[i] / u_top;
            double pw = 1.0;
            for (int k = 0; k <= degree; ++k, pw *= t) A(i, k) = pw;
        }
        const auto qr = A.colPivHouseholderQr();
        double worst = 0.0;
        auto fit_one = [&](auto&& f) {
            Eigen::VectorXd v(samples);
            for (int i = 0; i < samples; ++i) v[i] = f(us[i]);
            if (!v.allFinite()) throw Error(Errc::degenerate_metric, "non-finite pole data");
            const Eigen::VectorXd c = qr.solve(v);
            const double scale = std::max(v.cwiseAbs().maxCoeff(), 1e-300);
            worst = std::max(worst, (A * c - v).cwiseAbs().maxCoeff() / scale);
        };
        fit_one([&](double u) { return pm.kinetic(u); });
        fit_one([&](double u) { return pm.psi2(u); });
        fit_one([&](double u) { return pm.psi1(u); });
        fit_one([&](double u) { return pm.rho(u); });
        fit.residual = worst;
        fit.kinetic_limit = pm.kinetic(0.0);
        fit.psi2_limit = pm.psi2(0.0);
        fit.psi1_limit = pm.psi1(0.0);
        fit.rho_limit = pm.rho(0.0);
        const bool finite = std::isfinite(fit.kinetic_limit) && std::isfinite(fit.psi2_limit) &&
                            std::isfinite(fit.psi1_limit) && std::isfinite(fit.rho_limit);
        fit.ok = finite && worst <= 1e-6;
        if (!finite) fit.failure = "non-finite limit at the pole";
        else if (!fit.ok) fit.failure = "polynomial fit residual above 1e-6";
    } catch (const Error& e) {
        fit.ok = false;
        fit.failure = e.what();
        fit.residual = std::numeric_limits<double>::infinity();
    }
    return fit;
}

}  // namespace

PoleReport pole_smoothness_check(const HamiltonianModel& model, int degree, int samples)
{
    if (degree < 1 || samples <= degree) throw Error(Errc::invalid_argument, "need samples > degree >= 1");
    PoleReport rep;
    rep.r = fit_chart(model, Chart::r, degree, samples);
    rep.r_tilde = fit_chart(model, Chart::r_tilde, degree, samples);
    return rep;
}

}  // namespace s2c
