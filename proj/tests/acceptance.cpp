// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "s2cubic/cli.hpp"
#include "s2cubic/critical_tau.hpp"
#include "s2cubic/cubic.hpp"
#include "s2cubic/errors.hpp"
#include "s2cubic/gc.hpp"
#include "s2cubic/io.hpp"
#include "s2cubic/kernels.hpp"
#include "s2cubic/ode_core.hpp"
#include "s2cubic/phase_plane.hpp"

using namespace s2c;
namespace fs = std::filesystem;

namespace {

// a criterion collects named measurements against thresholds
class Check {
public:
    void at_most(const std::string& name, double v, double tol) { add(name, v, "<=", tol, v <= tol); }
    void at_least(const std::string& name, double v, double tol) { add(name, v, ">=", tol, v >= tol); }
    void truth(const std::string& name, bool ok) { add(name, ok ? 1.0 : 0.0, "==", 1.0, ok); }
    bool ok() const { return ok_; }
    std::string summary() const { return detail_.str(); }

private:
    void add(const std::string& name, double v, const char* rel, double tol, bool pass)
    {
        if (!pass) ok_ = false;
        if (detail_.tellp() > 0) detail_ << "; ";
        detail_ << name << "=" << io::fmt(v) << (pass ? "" : " FAILS ") << (pass ? "" : rel)
                << (pass ? "" : io::fmt(tol));
    }
    bool ok_ = true;
    std::ostringstream detail_;
};

const std::string kOut = "acceptance_out";

double fixture_T()
{
    static const double T = find_T_bisection(1e-10).T;
    return T;
}

std::shared_ptr<const PsiProfile> psi_at(double tau)
{
    return std::make_shared<const PsiProfile>(build_psi(tau));
}

double eq_residual(double x, double x1, double x2, double x3)
{
    const double lhs = x1 * x3;
    const double rhs = x * x2 - 2 * x2 * x2 + x1 * x1 + x * x;
    return std::abs(lhs - rhs) / std::max({1.0, std::abs(lhs), x * x, x1 * x1, x2 * x2});
}

void exact_solutions(Check& c)
{
    double worst[3] = {0.0, 0.0, 0.0};
    for (int i = 0; i < 100; ++i) {
        const double t = -3.0 + 6.0 * i / 99.0;
        const double e = std::exp(t), ch = std::cosh(t), sh = std::sinh(t);
        worst[0] = std::max({worst[0], eq_residual(e, e, e, e), std::abs(rhs_third_order({t, e, e, e}) - e) / e});
        worst[1] = std::max(worst[1], eq_residual(ch, sh, ch, sh));
        if (std::abs(sh) > 1e-6)
            worst[1] = std::max(worst[1], std::abs(rhs_third_order({t, ch, sh, ch}) - sh) / std::abs(sh));
        worst[2] = std::max({worst[2], eq_residual(sh, ch, sh, ch), std::abs(rhs_third_order({t, sh, ch, sh}) - ch) / ch});
    }
    c.at_most("exp", worst[0], 1e-12);
    c.at_most("cosh", worst[1], 1e-12);
    c.at_most("sinh", worst[2], 1e-12);
}

void phase_portrait(Check& c)
{
    const auto eq = sms_equilibria();
    c.truth("four_equilibria", eq.size() == 4);
    const PhasePoint expect[] = {{-1, 0}, {0, -0.5}, {0, 1}, {1, 0}};
    double loc = 0.0;
    for (std::size_t i = 0; i < std::min<std::size_t>(4, eq.size()); ++i) {
        loc = std::max({loc, std::abs(eq[i].q - expect[i].q), std::abs(eq[i].p - expect[i].p)});
        const auto f = sms_rhs(eq[i]);
        loc = std::max({loc, std::abs(f[0]), std::abs(f[1])});
    }
    c.at_most("equilibrium_error", loc, 1e-12);
    double eig = 1e300;
    for (const auto& fp : classify_fixed_points()) {
        if (std::abs(fp.location.q - 1.0) > 1e-9 || std::abs(fp.location.p) > 1e-9) continue;
        auto ev = fp.eigenvalues;
        std::sort(ev.begin(), ev.end());
        eig = std::max(std::abs(ev[0] + 4.0), std::abs(ev[1] + 2.0));
    }
    c.at_most("eigenvalues_at_(1,0)", eig, 1e-10);
    double par = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double q = -3.0 + 6.0 * i / 999.0;
        const auto f = sms_rhs({q, 1.0 - q * q});
        par = std::max(par, std::abs(f[1] + 2.0 * q * f[0]) / std::max(1.0, q * q * q * q));
    }
    c.at_most("parabola_residual", par, 1e-12);
}

void critical_constant(Check& c)
{
    const double T = fixture_T();
    const auto sep = find_T_separatrix(100.0);
    c.at_most("|T_bisection-T_separatrix|", std::abs(T - sep.T), 1e-4);
    std::vector<double> taus(50);
    for (int i = 0; i < 50; ++i) taus[i] = 2.0 * T * i / 49.0;
    const auto outs = probe_sweep(taus, 30.0, Exec::parallel);
    int wrong = 0;
    for (int i = 0; i < 50; ++i)
        if ((outs[i].kind == ProbeKind::global_positive) != (taus[i] < T)) ++wrong;
    c.at_most("dichotomy_violations", wrong, 0.0);
    const auto cs = critical_solution(30.0);
    c.at_most("|T-T_stationary|", std::abs(cs.T_anchor - T), 1e-4);
    c.truth("one_derivative_zero", count_derivative_zeros(cs.trajectory) == 1);
}

void tau_zero(Check& c)
{
    IvpSpec spec;
    spec.tau = 0.0;
    spec.t_lo = -5.0;
    spec.t_hi = 5.0;
    const Trajectory tr = integrate_ivp(spec);
    double err = 0.0;
    for (int i = 0; i <= 1000; ++i) {
        const double t = -5.0 + 10.0 * i / 1000.0;
        err = std::max(err, std::abs(tr.jet(t).x - std::sinh(t)));
    }
    c.at_most("sinh_error", err, 1e-8);
    const auto A = HamiltonianModel::family_a(psi_at(0.0), 1.0);
    const auto K = curvature_grid(A, Grid2{}, Exec::parallel);
    double dk = 0.0;
    for (double k : K) dk = std::max(dk, std::abs(k - 1.0));
    c.at_most("|K-1|_200x200", dk, 1e-6);
    const auto bb = b_bounds(0.0);
    c.at_most("|b_bounds+1|", std::max(std::abs(bb.b_upper + 1.0), std::abs(bb.b_lower + 1.0)), 1e-8);
}

struct Case {
    std::string label;
    HamiltonianModel model;
};

// family A and both admissible B sides at 0.2, 0.5, 0.8 T
const std::vector<Case>& cases()
{
    static const std::vector<Case> cs = [] {
        std::vector<Case> out;
        for (double frac : {0.2, 0.5, 0.8}) {
            const auto p = psi_at(frac * fixture_T());
            const auto bb = b_bounds(*p);
            const std::string t = io::fmt(frac) + "T";
            out.push_back({"A@" + t, HamiltonianModel::family_a(p, 1.0)});
            out.push_back({"B(b_*+1)@" + t, HamiltonianModel::family_b(p, bb.b_lower + 1.0)});
            out.push_back({"B(b^*-1)@" + t, HamiltonianModel::family_b(p, bb.b_upper - 1.0)});
        }
        return out;
    }();
    return cs;
}

void integrability(Check& c)
{
    const auto states = random_states(1, 100);
    const auto starts = random_states(2, 20);
    double bracket = 0.0, drift = 0.0, control = 1e300;
    std::string weakest;
    for (const auto& cs : cases()) {
        for (FlowMode mode : {FlowMode::geodesic, FlowMode::conservative}) {
            const Flow fl = make_flow(cs.model, mode);
            for (double r : bracket_batch(fl, states, Exec::parallel)) bracket = std::max(bracket, r);
            for (const Drift& d : drift_batch(fl, starts, 10.0, Exec::parallel)) drift = std::max(drift, d.F);
            const Flow bad = with_integral(fl, [fl](const CotangentState& s) { return fl.F(s) + 0.01 * s.p_y * s.p_y * s.p_y; });
            double worst_bad = 0.0;
            for (double r : bracket_batch(bad, states, Exec::parallel)) worst_bad = std::max(worst_bad, r);
            if (worst_bad < control) weakest = cs.label + "/" + flow_mode_name(mode);
            control = std::min(control, worst_bad);
        }
    }
    c.at_most("bracket", bracket, 1e-6);
    c.at_most("F_drift", drift, 1e-7);
    c.at_least("perturbed_F_bracket[" + weakest + "]", control, 1e-3);
    const Flow nc = geodesic_flow(std::shared_ptr<const FField>(nonintegrable_control()));
    double nc_drift = 0.0, nc_bracket = 0.0;
    for (const Drift& d : drift_batch(nc, starts, 10.0, Exec::parallel)) nc_drift = std::max(nc_drift, d.F);
    for (double r : bracket_batch(nc, states, Exec::parallel)) nc_bracket = std::max(nc_bracket, r);
    c.at_least("nonintegrable_drift", nc_drift, 1e-3);
    c.at_least("nonintegrable_bracket", nc_bracket, 1e-3);
}

void pde_criterion(Check& c)
{
    double eq = 0.0, sys = 0.0, endpoint = 0.0;
    for (const auto& cs : cases()) {
        auto f = std::make_shared<const ModelF>(cs.model, cs.model.geodesic_energy());
        for (double y = -3.0; y <= 3.0; y += 0.25)
            for (double ph = 0.0; ph < 2.0 * M_PI; ph += 0.3) eq = std::max(eq, std::abs(eqpde_residual(*f, ph, y)));
        auto theta = [f](double ph, double y) { return f->lambda(ph, y); };
        const auto b = cubic_coefficients(f);
        for (double y = -2.0; y <= 2.0; y += 0.5)
            for (double ph = 0.0; ph < 2.0 * M_PI; ph += 0.5) {
                const auto r = systpde_residuals(theta, b, ph, y);
                for (double v : r) sys = std::max(sys, v);
                endpoint = std::max({endpoint, r.front(), r.back()});
            }
    }
    c.at_most("eqpde", eq, 1e-8);
    c.at_most("systpde", sys, 1e-6);
    c.at_most("endpoint", endpoint, 1e-8);
}

void admissibility(Check& c)
{
    double agree = 0.0, pole = 0.0, lam_min = 1e300;
    bool both_signs = true, poles_ok = true;
    for (double frac : {0.2, 0.5, 0.8}) {
        const double tau = frac * fixture_T();
        const auto p = psi_at(tau);
        const auto bb = b_bounds(*p);
        const auto pb = b_bounds_via_phi(tau);
        agree = std::max({agree, std::abs(bb.b_upper - pb.bounds.b_upper), std::abs(bb.b_lower - pb.bounds.b_lower)});
        const auto inside = HamiltonianModel::family_b(p, 0.5 * (bb.b_upper + bb.b_lower));
        const Range in = lambda_range(inside, inside.geodesic_energy(), Grid2{}, Exec::parallel);
        both_signs = both_signs && in.min < 0.0 && in.max > 0.0;
        for (double b : {bb.b_lower + 1.0, bb.b_upper - 1.0}) {
            const auto m = HamiltonianModel::family_b(p, b);
            lam_min = std::min(lam_min, lambda_range(m, m.geodesic_energy(), Grid2{}, Exec::parallel).min);
            const PoleReport pr = pole_smoothness_check(m);
            poles_ok = poles_ok && pr.ok();
            pole = std::max({pole, pr.r.residual, pr.r_tilde.residual});
        }
    }
    c.truth("inside_band_both_signs", both_signs);
    c.at_least("admissible_lambda_min", lam_min, 1e-300);
    c.truth("pole_fits_ok", poles_ok);
    c.at_most("pole_residual", pole, 1e-6);
    c.at_most("b_bound_methods", agree, 1e-4);
}

void gc_reproduction(Check& c)
{
    const auto prof = gc_profile();
    double pull = 0.0;
    for (int i = 1; i < 40; ++i) {
        const double th = M_PI * i / 40.0;
        for (double ph : {0.0, 1.3, 4.0}) {
            const auto fd = gc_pullback_fd(th, ph);
            pull = std::max({pull, std::abs(fd[0] - prof.A(Jet2(th)).v), std::abs(fd[1] - prof.B(Jet2(th)).v),
                             std::abs(fd[2])});
        }
    }
    c.at_most("pullback", pull, 1e-9);

    const double T = fixture_T();
    const StationaryPoint sp = gc_b_value(T);
    auto pc = std::make_shared<const PsiProfile>(build_critical_psi());
    const RotationalProfile gc = RotationalProfile::of(gc_model(), "gc");
    const RotationalProfile fb = RotationalProfile::of(HamiltonianModel::family_b(pc, sp.b), "B");
    c.at_most("gc_vs_B", match_equivalence(gc, fb).residual(), 1e-3);
    const auto self = match_equivalence(fb, fb);
    c.at_most("self_(C0,C3,y1)", std::max({std::abs(self.C0 - 1.0), std::abs(self.C3 - 1.0), std::abs(self.y1)}), 1e-12);
    c.at_most("self_residual", self.residual(), 1e-12);

    const auto p3 = psi_at(0.3 * T), p6 = psi_at(0.6 * T);
    const double b = std::max(b_bounds(*p3).b_lower, b_bounds(*p6).b_lower) + 1.0;
    const RotationalProfile b6 = RotationalProfile::of(HamiltonianModel::family_b(p6, b));
    const double cross = match_equivalence(RotationalProfile::of(HamiltonianModel::family_b(p3, b)), b6).residual();
    const double gc6 = match_equivalence(gc, b6).residual();
    c.at_least("cross_tau_0.3T_vs_0.6T", cross, 1e-3);
    c.at_least("gc_vs_0.6T", gc6, 1e-3);
}

// every file of both directories, compared byte for byte
bool same_tree(const fs::path& a, const fs::path& b, int& files)
{
    files = 0;
    std::vector<std::string> na, nb;
    for (const auto& e : fs::directory_iterator(a)) na.push_back(e.path().filename().string());
    for (const auto& e : fs::directory_iterator(b)) nb.push_back(e.path().filename().string());
    std::sort(na.begin(), na.end());
    std::sort(nb.begin(), nb.end());
    if (na != nb) return false;
    for (const auto& n : na) {
        if (io::read_text(a / n) != io::read_text(b / n)) return false;
        ++files;
    }
    return true;
}

void determinism(Check& c)
{
    std::ostringstream sink;
    auto run = [&](std::vector<std::string> args) { return cli::run(args, sink, sink); };
    c.truth("find_T", run({"find-T", "--out", kOut + "/fixture"}) == 0);
    const std::string fx = kOut + "/fixture/fixture_T.json";
    const std::vector<std::vector<std::string>> configs = {{"--family", "A", "--tau", "0.5T"},
                                                           {"--family", "B", "--tau", "0.2T"},
                                                           {"--family", "GC"}};
    for (std::size_t k = 0; k < configs.size(); ++k) {
        std::vector<int> codes;
        for (int rep = 0; rep < 2; ++rep) {
            std::vector<std::string> args = {"verify", "--fixture", fx, "--out",
                                             kOut + "/verify" + std::to_string(k) + "_" + std::to_string(rep)};
            args.insert(args.end(), configs[k].begin(), configs[k].end());
            codes.push_back(run(args));
        }
        int files = 0;
        const bool same = same_tree(kOut + "/verify" + std::to_string(k) + "_0", kOut + "/verify" + std::to_string(k) + "_1", files);
        const std::string name = configs[k][1] + (configs[k].size() > 2 ? "@" + configs[k][3] : "");
        c.truth(name + "_identical(" + std::to_string(files) + "_files)", same && files > 0);
        c.truth(name + "_exit_codes_equal", codes[0] == codes[1]);
    }
}

struct Criterion {
    int id;
    std::string name;
    double limit_s;
    std::function<void(Check&)> body;
};

}  // namespace

int main()
{
    const std::vector<Criterion> all = {
        {1, "exact solutions", 1.0, exact_solutions},
        {2, "phase portrait", 1.0, phase_portrait},
        {3, "critical constant", 120.0, critical_constant},
        {4, "tau = 0 degeneration", 1e300, tau_zero},
        {5, "integrability", 600.0, integrability},
        {6, "determining equations", 1e300, pde_criterion},
        {7, "admissibility on the sphere", 1e300, admissibility},
        {8, "gc reproduction", 1e300, gc_reproduction},
        {9, "determinism", 1e300, determinism},
    };
    int failed = 0;
    for (const auto& cr : all) {
        Check c;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            cr.body(c);
        } catch (const std::exception& e) {
            c.truth(std::string("no_exception(") + e.what() + ")", false);
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (cr.limit_s < 1e300) c.at_most("runtime_s", secs, cr.limit_s);
        if (!c.ok()) ++failed;
        std::printf("[%s] %d %s (%.2fs): %s\n", c.ok() ? "PASS" : "FAIL", cr.id, cr.name.c_str(), secs,
                    c.summary().c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(all.size()) - failed, all.size());
    return failed == 0 ? 0 : 1;
}
