#include "s2cubic/cli.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <memory>
#include <optional>

#include "CLI11.hpp"
#include "s2cubic/critical_tau.hpp"
#include "s2cubic/cubic.hpp"
#include "s2cubic/errors.hpp"
#include "s2cubic/gc.hpp"
#include "s2cubic/io.hpp"
#include "s2cubic/kernels.hpp"
#include "s2cubic/metric.hpp"
#include "s2cubic/phase_plane.hpp"

namespace s2c::cli {

namespace fs = std::filesystem;
using io::Csv;
using io::fmt;
using io::Json;

namespace {

constexpr double kBracketTol = 1e-6;
constexpr double kDriftTol = 1e-7;
constexpr double kPoleTol = 1e-6;
constexpr double kEqpdeTol = 1e-8;
constexpr double kMethodAgree = 1e-4;
constexpr double kMatchTol = 1e-3;
constexpr double kDefaultTol = 1e-10;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Common {
    std::string out = ".";
    std::string fixture;
    int workers = 0;
};

void add_common(CLI::App* sub, Common& c, bool with_fixture = true)
{
    sub->add_option("--out", c.out, "output directory")->capture_default_str();
    if (with_fixture)
        sub->add_option("--fixture", c.fixture,
                        "fixture JSON from find-T; without it T is recomputed with the default settings");
    sub->add_option("--workers", c.workers, "OpenMP threads; 1 runs the serial reference, 0 uses the default")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
}

Exec exec_of(const Common& c)
{
    if (c.workers == 1) return Exec::serial;
    if (c.workers > 1) omp_set_num_threads(c.workers);
    return Exec::parallel;
}

io::Fixture compute_fixture(double tol, double q_max)
{
    io::Fixture fx;
    const CriticalResult bis = find_T_bisection(tol, fx.t_max);
    fx.T = bis.T;
    fx.method = critical_method_name(bis.method);
    fx.tolerance = tol;
    fx.bracket_lo = bis.bracket_lo;
    fx.bracket_hi = bis.bracket_hi;
    fx.q_max = q_max;
    fx.separatrix_T = find_T_separatrix(q_max).T;
    return fx;
}

io::Fixture load_fixture(const Common& c)
{
    if (c.fixture.empty()) return compute_fixture(kDefaultTol, 100.0);
    io::Fixture fx = io::read_fixture(c.fixture);
    if (!(fx.bracket_lo <= fx.T && fx.T <= fx.bracket_hi))
        throw Error(Errc::io_error, "fixture T lies outside its stored bracket");
    return fx;
}

Json fixture_ref(const io::Fixture& fx) { return Json{{"hash", fx.hash()}, {"T", fx.T}, {"method", fx.method}}; }

// "0.35", "0.5T", "0.5*T" or "T"
double parse_tau(const std::string& text, double T)
{
    std::string s = text;
    s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char ch) { return std::isspace(ch); }), s.end());
    double factor = 1.0;
    if (!s.empty() && s.back() == 'T') {
        factor = T;
        s.pop_back();
        if (!s.empty() && s.back() == '*') s.pop_back();
        if (s.empty()) s = "1";
    }
    double v = 0.0;
    std::size_t used = 0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw UsageError("cannot parse tau '" + text + "'");
    }
    if (used != s.size()) throw UsageError("cannot parse tau '" + text + "'");
    v *= factor;
    if (!std::isfinite(v) || v < 0.0) throw UsageError("tau must be finite and non-negative, got '" + text + "'");
    return v;
}

fs::path prepare_out(const Common& c)
{
    const fs::path dir(c.out);
    io::ensure_writable_dir(dir);
    return dir;
}

Json range_json(const Range& r) { return Json{{"min", r.min}, {"max", r.max}}; }

Json pole_fit_json(const PoleFit& f)
{
    return Json{{"chart", chart_name(f.chart)},
                {"ok", f.ok},
                {"residual", f.residual},
                {"failure", f.failure},
                {"kinetic_limit", f.kinetic_limit},
                {"psi2_limit", f.psi2_limit},
                {"psi1_limit", f.psi1_limit},
                {"rho_limit", f.rho_limit}};
}

Json check_json(double value, double threshold)
{
    return Json{{"value", value}, {"threshold", threshold}, {"pass", value <= threshold}};
}

// ---------------------------------------------------------------- models

struct ModelArgs {
    std::string family = "A";
    std::string tau = "0.5T";
    std::optional<double> b;
    double c = 1.0;
};

void add_model_options(CLI::App* sub, ModelArgs& m)
{
    sub->add_option("--family", m.family, "A, B or GC")->check(CLI::IsMember({"A", "B", "GC"}))->capture_default_str();
    sub->add_option("--tau", m.tau, "tau as a number or a multiple of T such as 0.5T")->capture_default_str();
    sub->add_option("--b", m.b, "family B constant; default b_* + 1");
    sub->add_option("--c", m.c, "family A energy constant")->check(CLI::PositiveNumber)->capture_default_str();
}

struct Built {
    HamiltonianModel model;
    Json spec;
};

Built build_model(const ModelArgs& m, const io::Fixture& fx)
{
    const Family fam = parse_family(m.family);
    if (fam == Family::GC) {
        Built out{gc_model(), Json{{"family", "GC"}}};
        return out;
    }
    const double tau = parse_tau(m.tau, fx.T);
    auto psi = std::make_shared<const PsiProfile>(build_psi(tau));
    Json spec{{"family", family_name(fam)}, {"tau", tau}, {"tau_over_T", tau / fx.T}};
    if (fam == Family::A) {
        spec["c"] = m.c;
        return Built{HamiltonianModel::family_a(psi, m.c), spec};
    }
    const BBounds bb = b_bounds(*psi);
    const double b = m.b ? *m.b : bb.b_lower + 1.0;
    auto model = HamiltonianModel::family_b(psi, b, bb);
    spec["b"] = b;
    spec["a"] = model.spec().a;
    spec["b_upper"] = bb.b_upper;
    spec["b_lower"] = bb.b_lower;
    return Built{model, spec};
}

// ---------------------------------------------------------------- find-T

struct FindTArgs {
    Common common;
    double tol = kDefaultTol;
    double q_max = 100.0;
};

int cmd_find_T(const FindTArgs& a, std::ostream& out)
{
    if (!(a.tol > 0.0)) throw UsageError("--tol must be positive");
    const fs::path dir = prepare_out(a.common);
    const io::Fixture fx = compute_fixture(a.tol, a.q_max);
    const CriticalResult sep = find_T_separatrix(a.q_max);
    const double diff = std::abs(fx.T - sep.T);
    const double allowed = std::max(kMethodAgree, a.tol);
    const bool agree = diff <= allowed;

    std::vector<double> taus(50);
    for (int i = 0; i < 50; ++i) taus[i] = 2.0 * fx.T * i / 49.0;
    const auto probes = probe_sweep(taus, fx.t_max, exec_of(a.common));
    Csv csv({"tau", "tau_over_T", "outcome", "event_t"});
    bool dichotomy = true;
    for (std::size_t i = 0; i < taus.size(); ++i) {
        const bool positive = probes[i].kind == ProbeKind::global_positive;
        if (positive != (taus[i] < fx.T)) dichotomy = false;
        csv.row_text({fmt(taus[i]), fmt(taus[i] / fx.T), probe_name(probes[i].kind),
                      positive ? "" : fmt(probes[i].t)});
    }

    const fs::path fixture_path = a.common.fixture.empty() ? dir / "fixture_T.json" : fs::path(a.common.fixture);
    io::write_fixture(fixture_path, fx);
    Json rep{{"command", "find-T"},
             {"bisection", {{"T", fx.T}, {"tolerance", a.tol}, {"bracket_lo", fx.bracket_lo}, {"bracket_hi", fx.bracket_hi}}},
             {"separatrix", {{"T", sep.T}, {"q_max", a.q_max}, {"error_estimate", sep.error_estimate}, {"fit_residual", sep.fit_residual}}},
             {"difference", diff},
             {"threshold", allowed},
             {"probe_dichotomy", dichotomy},
             {"pass", agree && dichotomy},
             {"fixture", fixture_ref(fx)}};
    io::write_json(dir / "find_T.json", rep);
    io::write_text(dir / "probe_sweep.csv", csv.text());

    out << std::setprecision(17);
    out << "method      T                      error\n";
    out << "bisection   " << std::left << std::setw(22) << fx.T << " " << (fx.bracket_hi - fx.bracket_lo) << "\n";
    out << "separatrix  " << std::setw(22) << sep.T << " " << sep.error_estimate << "\n";
    out << std::setprecision(3) << "|dT| = " << diff << "  threshold " << allowed << "  " << (agree ? "agree" : "DISAGREE")
        << "\nprobe dichotomy on 50 points in [0, 2T]: " << (dichotomy ? "holds" : "VIOLATED") << "\n";
    out << "fixture " << fixture_path.string() << " hash " << fx.hash() << "\n";
    return agree && dichotomy ? Exit::ok : Exit::failed;
}

// ---------------------------------------------------------------- phase-portrait

struct PortraitArgs {
    Common common;
    double q_max = 20.0;
    std::string branch = "all";
};

std::vector<PhasePoint> mirrored(std::vector<PhasePoint> pts)
{
    for (auto& pt : pts) pt.q = -pt.q;
    return pts;
}

// orbit through `seed` for |t| <= t_span, stopped when it leaves the plotting box
std::vector<std::array<double, 3>> sample_orbit(PhasePoint seed, double t_span, double box)
{
    auto f = [](double, const ode::Vec<2>& y) { return sms_rhs(PhasePoint{y[0], y[1]}); };
    std::vector<std::array<double, 3>> pts;
    for (double dir : {-1.0, 1.0}) {
        std::vector<std::array<double, 3>> half;
        auto monitor = [&](const ode::DenseStep<2>& s) {
            const auto y = s.value(s.t_new);
            half.push_back({s.t_new, y[0], y[1]});
            return std::abs(y[0]) < box && std::abs(y[1]) < box;
        };
        ode::Dop853Options<2> o;
        o.max_step = 0.05;
        ode::dop853<2>(f, 0.0, ode::Vec<2>{seed.q, seed.p}, dir * t_span, o, monitor);
        if (dir < 0) {
            std::reverse(half.begin(), half.end());
            pts = half;
            pts.push_back({0.0, seed.q, seed.p});
        } else {
            pts.insert(pts.end(), half.begin(), half.end());
        }
    }
    return pts;
}

int cmd_phase_portrait(const PortraitArgs& a, std::ostream& out)
{
    if (!(a.q_max > 1.0)) throw UsageError("--qmax must exceed 1");
    const fs::path dir = prepare_out(a.common);
    const auto fps = classify_fixed_points();
    Csv table({"q", "p", "kind", "lambda1", "lambda2", "v1_q", "v1_p", "v2_q", "v2_p"});
    Json jfp = Json::array();
    for (const auto& f : fps) {
        const std::string kind = f.kind == FixedPointKind::saddle ? "saddle" : "node";
        table.row_text({fmt(f.location.q), fmt(f.location.p), kind, fmt(f.eigenvalues[0]), fmt(f.eigenvalues[1]),
                        fmt(f.eigenvectors[0][0]), fmt(f.eigenvectors[0][1]), fmt(f.eigenvectors[1][0]),
                        fmt(f.eigenvectors[1][1])});
        jfp.push_back({{"q", f.location.q},
                       {"p", f.location.p},
                       {"kind", kind},
                       {"eigenvalues", f.eigenvalues},
                       {"eigenvectors", f.eigenvectors}});
    }

    // the manifold of each saddle that crosses q = 0; the q < 0 half is the mirror image
    Json seps = Json::array();
    int saddle_index = 0;
    for (const auto& f : fps) {
        if (f.kind != FixedPointKind::saddle) continue;
        ++saddle_index;
        const bool vertical_unstable = std::abs(f.eigenvectors[0][0]) < 1e-12;
        const Branch br = vertical_unstable ? Branch::stable_pos : Branch::unstable_pos;
        const std::string kind = vertical_unstable ? "stable" : "unstable";
        const Separatrix sep = trace_separatrix(f, br, a.q_max);
        for (const std::string side : {"pos", "neg"}) {
            if (a.branch != "all" && a.branch != side) continue;
            const auto pts = side == "pos" ? sep.points() : mirrored(sep.points());
            Csv csv({"q", "p"});
            for (const auto& pt : pts) csv.row({pt.q, pt.p});
            const std::string name = "separatrix_s" + std::to_string(saddle_index) + "_" + kind + "_" + side + ".csv";
            io::write_text(dir / name, csv.text());
            seps.push_back({{"file", name},
                            {"saddle", {f.location.q, f.location.p}},
                            {"manifold", kind},
                            {"side", side},
                            {"points", pts.size()},
                            {"reached_q_max", sep.reached_q_max()},
                            {"end", {pts.back().q, pts.back().p}}});
        }
    }

    Csv orbits({"orbit", "t", "q", "p"});
    int k = 0;
    for (double p0 : {-3.0, -1.5, -0.25, 0.5, 2.0}) {
        for (const auto& r : sample_orbit(PhasePoint{0.5, p0}, 20.0, 50.0)) orbits.row({double(k), r[0], r[1], r[2]});
        ++k;
    }

    Json rep{{"command", "phase-portrait"}, {"fixed_points", jfp}, {"separatrices", seps}, {"q_max", a.q_max}};
    try {
        const auto est = estimate_T_from_separatrix(a.q_max);
        rep["T_estimate"] = {{"value", est.value}, {"error_estimate", est.error_estimate}, {"fit_residual", est.fit_residual}};
    } catch (const Error& e) {
        rep["T_estimate"] = {{"failure", e.what()}};
    }
    io::write_text(dir / "fixed_points.csv", table.text());
    io::write_json(dir / "fixed_points.json", rep);
    io::write_text(dir / "orbits.csv", orbits.text());
    out << "fixed points: " << fps.size() << ", separatrix files: " << seps.size() << "\n";
    if (rep["T_estimate"].contains("value"))
        out << std::setprecision(15) << "T from separatrix (q_max " << a.q_max << "): " << rep["T_estimate"]["value"].get<double>()
            << "\n";
    return Exit::ok;
}

// ---------------------------------------------------------------- solve-psi

struct PsiArgs {
    Common common;
    std::string tau = "0.5T";
};

int cmd_solve_psi(const PsiArgs& a, std::ostream& out)
{
    const fs::path dir = prepare_out(a.common);
    const io::Fixture fx = load_fixture(a.common);
    const double tau = parse_tau(a.tau, fx.T);
    const PsiProfile psi = build_psi(tau);

    Csv traj({"t", "x", "x1", "x2"});
    for (const auto& n : psi.trajectory().nodes()) traj.row({n.t, n.x, n.x1, n.x2});
    Csv prof({"y", "psi", "psi1", "psi2"});
    for (int i = 0; i <= 480; ++i) {
        const double y = psi.y_lo() + (psi.y_hi() - psi.y_lo()) * i / 480.0;
        const PsiJet j = psi.jet(y);
        prof.row({y, j.psi, j.d1, j.d2});
    }
    auto g_csv = [](const std::optional<GProfile>& g) {
        Csv c({"s", "g", "g1", "g2"});
        if (g)
            for (const auto& s : g->samples()) c.row({s.s, s.g, s.g1, s.g2});
        return c;
    };
    const BBounds bb = b_bounds(psi);
    const PhiBounds pb = b_bounds_via_phi(tau);
    Json rep{{"command", "solve-psi"},
             {"tau", tau},
             {"tau_over_T", tau / fx.T},
             {"y_lo", psi.y_lo()},
             {"y_hi", psi.y_hi()},
             {"nodes", psi.trajectory().nodes().size()},
             {"termination", termination_name(psi.trajectory().termination().kind)},
             {"max_ode_residual", psi.max_ode_residual()},
             {"b_bounds", {{"b_upper", bb.b_upper}, {"b_lower", bb.b_lower}}},
             {"b_bounds_phi", {{"b_upper", pb.bounds.b_upper}, {"b_lower", pb.bounds.b_lower}}},
             {"fixture", fixture_ref(fx)}};
    io::write_text(dir / "trajectory.csv", traj.text());
    io::write_text(dir / "psi_profile.csv", prof.text());
    io::write_text(dir / "g_plus.csv", g_csv(psi.g_plus()).text());
    io::write_text(dir / "g_minus.csv", g_csv(psi.g_minus()).text());
    io::write_json(dir / "psi_manifest.json", rep);
    out << std::setprecision(17) << "tau " << tau << ": b^* = " << bb.b_upper << ", b_* = " << bb.b_lower << "\n";
    return Exit::ok;
}

// ---------------------------------------------------------------- build-metric

struct MetricArgs {
    Common common;
    ModelArgs model;
};

int cmd_build_metric(const MetricArgs& a, std::ostream& out)
{
    const fs::path dir = prepare_out(a.common);
    const io::Fixture fx = load_fixture(a.common);
    const Built bm = build_model(a.model, fx);
    const HamiltonianModel& m = bm.model;
    const Exec ex = exec_of(a.common);
    const Grid2 grid;

    Json rep{{"command", "build-metric"}, {"spec", bm.spec}, {"fixture", fixture_ref(fx)}};
    rep["chart"] = {{"y_lo", m.y_lo()}, {"y_hi", m.y_hi()}, {"grid", {{"n_phi", grid.n_phi}, {"n_y", grid.n_y}, {"y_lo", grid.y_lo}, {"y_hi", grid.y_hi}}}};
    rep["admissible"] = m.admissible();
    bool ok = m.admissible();
    if (m.spec().family != Family::GC) {
        const Range lam = lambda_range(m, m.geodesic_energy(), grid, ex);
        rep["lambda_range"] = range_json(lam);
        ok = ok && lam.min > 0.0;
        if (ok) {
            const auto K = curvature_grid(m, grid, ex);
            rep["curvature_range"] = range_json(Range{*std::min_element(K.begin(), K.end()), *std::max_element(K.begin(), K.end())});
            const PoleReport pr = pole_smoothness_check(m);
            rep["poles"] = {pole_fit_json(pr.r), pole_fit_json(pr.r_tilde)};
        }
    } else {
        const PoleReport pr = profile_pole_check(RotationalProfile::of(m));
        rep["poles"] = {pole_fit_json(pr.r), pole_fit_json(pr.r_tilde)};
    }
    Csv csv({"y", "psi3", "kin"});
    const double lo = std::max(m.y_lo(), -12.0), hi = std::min(m.y_hi(), 12.0);
    for (int i = 0; i <= 480; ++i) {
        const double y = lo + (hi - lo) * i / 480.0;
        const RadialJets r = m.radial(y);
        csv.row({y, r.psi3.v, r.kin.v});
    }
    io::write_json(dir / "metric.json", rep);
    io::write_text(dir / "metric_profile.csv", csv.text());
    out << "metric " << bm.spec.dump() << (ok ? " admissible\n" : " NOT admissible\n");
    return ok ? Exit::ok : Exit::failed;
}

// ---------------------------------------------------------------- gc-match

struct GcMatch {
    Json report;
    Csv profiles{{"y", "psi3_gc", "psi3_b_mapped", "psi4_gc", "psi4_b_mapped"}};
    bool pass = false;
};

GcMatch gc_match(const io::Fixture& fx)
{
    GcMatch g;
    const StationaryPoint sp = gc_b_value(fx.T);
    auto pc = std::make_shared<const PsiProfile>(build_critical_psi());
    const RotationalProfile gc = RotationalProfile::of(gc_model(), "gc");
    const RotationalProfile fb = RotationalProfile::of(HamiltonianModel::family_b(pc, sp.b), "B");
    const SearchBox box;
    const EquivalenceFit fit = match_equivalence(gc, fb, box);
    const EquivalenceFit self = match_equivalence(fb, fb, box);
    for (int i = 0; i < box.samples; ++i) {
        const double y = box.y_lo + (box.y_hi - box.y_lo) * i / (box.samples - 1);
        const double y2 = fit.sign * y + fit.y1;
        g.profiles.row({y, gc.psi3(y), fit.C0 * fb.psi3(y2), gc.psi4(y), fit.C3 * fb.psi4(y2)});
    }
    auto fit_json = [](const EquivalenceFit& f) {
        return Json{{"C0", f.C0},
                    {"C3", f.C3},
                    {"y1", f.y1},
                    {"sign", f.sign},
                    {"residual_V", f.residual_V},
                    {"residual_K", f.residual_K},
                    {"residual", f.residual()},
                    {"points", f.points}};
    };
    g.pass = fit.residual() <= kMatchTol;
    g.report = {{"fit", fit_json(fit)},
                {"gauge", {{"sign", fit.sign}, {"y1", fit.y1}, {"D", std::exp(fit.y1)}}},
                {"stationary_point", {{"y0", sp.y0}, {"b", sp.b}, {"method", sp.method}}},
                {"self_match", fit_json(self)},
                {"window", {box.y_lo, box.y_hi}},
                {"threshold", kMatchTol},
                {"pass", g.pass},
                {"fixture", fixture_ref(fx)}};
    return g;
}

struct GcArgs {
    Common common;
};

int cmd_gc_match(const GcArgs& a, std::ostream& out)
{
    const fs::path dir = prepare_out(a.common);
    const io::Fixture fx = load_fixture(a.common);
    GcMatch g = gc_match(fx);
    g.report["command"] = "gc-match";
    io::write_json(dir / "gc_match.json", g.report);
    io::write_text(dir / "gc_matched_profiles.csv", g.profiles.text());
    out << std::setprecision(12) << "C0 " << g.report["fit"]["C0"].get<double>() << " C3 "
        << g.report["fit"]["C3"].get<double>() << " y1 " << g.report["fit"]["y1"].get<double>() << " residual "
        << g.report["fit"]["residual"].get<double>() << (g.pass ? " pass\n" : " FAIL\n");
    return g.pass ? Exit::ok : Exit::failed;
}

// ---------------------------------------------------------------- verify

struct VerifyArgs {
    Common common;
    ModelArgs model;
    int seeds = 100;
    int trajectories = 20;
    double horizon = 10.0;
    std::uint64_t seed = 1;
};

double max_of(const std::vector<double>& v) { return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end()); }

// bracket, drift and eqpde of a family A/B model; the first trajectory of each mode goes to flow_<mode>.csv
Json integral_checks(const HamiltonianModel& m, const VerifyArgs& a, Exec ex, const fs::path& dir, bool& pass)
{
    const auto states = random_states(a.seed, a.seeds);
    const std::vector<CotangentState> starts(states.begin(), states.begin() + std::min<int>(a.trajectories, a.seeds));
    Json modes = Json::object();
    for (FlowMode mode : {FlowMode::geodesic, FlowMode::conservative}) {
        const Flow fl = make_flow(m, mode);
        const double br = max_of(bracket_batch(fl, states, ex));
        double dF = 0.0, dH = 0.0;
        for (const Drift& d : drift_batch(fl, starts, a.horizon, ex)) {
            dF = std::max(dF, d.F);
            dH = std::max(dH, d.H);
        }
        if (!states.empty()) {
            Csv csv({"t", "phi", "y", "p_phi", "p_y", "H", "F"});
            for (const auto& s : integrate_flow(fl, states.front(), a.horizon))
                csv.row({s.t, s.s.phi, s.s.y, s.s.p_phi, s.s.p_y, s.H, s.F});
            io::write_text(dir / ("flow_" + std::string(flow_mode_name(mode)) + ".csv"), csv.text());
        }
        modes[flow_mode_name(mode)] = {{"bracket", check_json(br, kBracketTol)},
                                       {"drift_F", check_json(dF, kDriftTol)},
                                       {"drift_H", check_json(dH, kDriftTol)}};
        pass = pass && br <= kBracketTol && dF <= kDriftTol && dH <= kDriftTol;
    }
    const ModelF f(m, m.geodesic_energy());
    double eq = 0.0;
    for (double y = -3.0; y <= 3.0; y += 0.25)
        for (double ph = 0.0; ph < 2.0 * M_PI; ph += 0.3) eq = std::max(eq, std::abs(eqpde_residual(f, ph, y)));
    pass = pass && eq <= kEqpdeTol;
    return Json{{"states", states.size()}, {"trajectories", starts.size()}, {"horizon", a.horizon},
                {"seed", a.seed}, {"modes", modes}, {"eqpde", check_json(eq, kEqpdeTol)}};
}

int cmd_verify_impl(const VerifyArgs& a, std::ostream& out)
{
    if (a.seeds < 1 || a.trajectories < 0) throw UsageError("--seeds must be positive and --trajectories non-negative");
    if (!(a.horizon > 0.0)) throw UsageError("--horizon must be positive");
    const fs::path dir = prepare_out(a.common);
    const io::Fixture fx = load_fixture(a.common);
    const Exec ex = exec_of(a.common);
    Json rep{{"command", "verify"},
             {"fixture", fixture_ref(fx)},
             {"thresholds", {{"bracket", kBracketTol}, {"drift", kDriftTol}, {"pole", kPoleTol}, {"eqpde", kEqpdeTol}, {"gc_match", kMatchTol}}}};
    bool pass = true;

    if (parse_family(a.model.family) == Family::GC) {
        const HamiltonianModel g = gc_model();
        rep["spec"] = {{"family", "GC"}};
        const PoleReport pr = profile_pole_check(RotationalProfile::of(g));
        rep["poles"] = {pole_fit_json(pr.r), pole_fit_json(pr.r_tilde)};
        pass = pass && pr.ok();
        const auto states = random_states(a.seed, std::min(a.seeds, std::max(a.trajectories, 1)));
        const Flow fl = with_integral(conservative_flow(g), [](const CotangentState&) { return 0.0; });
        double dH = 0.0;
        for (const Drift& d : drift_batch(fl, states, a.horizon, ex)) dH = std::max(dH, d.H);
        rep["energy_drift"] = check_json(dH, kDriftTol);
        pass = pass && dH <= kDriftTol;
        GcMatch gm = gc_match(fx);
        rep["gc_match"] = gm.report;
        pass = pass && gm.pass;
        io::write_text(dir / "gc_matched_profiles.csv", gm.profiles.text());
        // the cubic integral reaches the gc system through the equivalence with critical family B
        auto pc = std::make_shared<const PsiProfile>(build_critical_psi());
        const auto fb = HamiltonianModel::family_b(pc, gm.report["stationary_point"]["b"].get<double>());
        rep["matched_family_b"] = integral_checks(fb, a, ex, dir, pass);
    } else {
        const Built bm = build_model(a.model, fx);
        const HamiltonianModel& m = bm.model;
        rep["spec"] = bm.spec;
        const Range lam = lambda_range(m, m.geodesic_energy(), Grid2{}, ex);
        const bool adm = m.admissible() && lam.min > 0.0;
        rep["admissibility"] = {{"admissible", adm}, {"lambda_range", range_json(lam)}};
        if (!adm) {
            rep["admissibility"]["failure"] = "degenerate_metric: conformal factor is not positive on the scan grid";
            pass = false;
        } else {
            rep["integral"] = integral_checks(m, a, ex, dir, pass);
            const PoleReport pr = pole_smoothness_check(m);
            rep["poles"] = {pole_fit_json(pr.r), pole_fit_json(pr.r_tilde)};
            pass = pass && pr.ok();
        }
    }
    rep["pass"] = pass;
    io::write_json(dir / "verify.json", rep);
    out << "verify " << rep["spec"].dump() << ": " << (pass ? "pass" : "FAIL") << "\n";
    return pass ? Exit::ok : Exit::failed;
}

// ---------------------------------------------------------------- sweep

struct SweepArgs {
    Common common;
    std::vector<std::string> taus;
    std::vector<double> bs;
    double horizon = 10.0;
    std::uint64_t seed = 1;
};

struct SweepRow {
    double tau = 0.0;
    double b_upper = NAN, b_lower = NAN, b_upper_phi = NAN, b_lower_phi = NAN;
    double K_min = NAN, K_max = NAN, drift_max = NAN;
    std::string status = "ok";
    std::vector<std::array<double, 4>> b_rows;  // b, admissible, lambda min, lambda max
};

SweepRow sweep_row(double tau, const SweepArgs& a)
{
    SweepRow r;
    r.tau = tau;
    try {
        auto psi = std::make_shared<const PsiProfile>(build_psi(tau));
        const BBounds bb = b_bounds(*psi);
        r.b_upper = bb.b_upper;
        r.b_lower = bb.b_lower;
        const PhiBounds pb = b_bounds_via_phi(tau);
        r.b_upper_phi = pb.bounds.b_upper;
        r.b_lower_phi = pb.bounds.b_lower;
        const Grid2 grid;
        const auto K = curvature_grid(HamiltonianModel::family_a(psi, 1.0), grid, Exec::serial);
        r.K_min = *std::min_element(K.begin(), K.end());
        r.K_max = *std::max_element(K.begin(), K.end());
        const Flow fl = conservative_flow(HamiltonianModel::family_b(psi, bb.b_lower + 1.0, bb));
        r.drift_max = 0.0;
        for (const auto& s : random_states(a.seed, 3)) r.drift_max = std::max(r.drift_max, conservation_drift(fl, s, a.horizon).F);
        for (double b : a.bs) {
            const auto m = HamiltonianModel::family_b(psi, b, bb);
            const Range lam = lambda_range(m, m.geodesic_energy(), Grid2{0.0, 2.0 * M_PI, -6.0, 6.0, 60, 60}, Exec::serial);
            r.b_rows.push_back({b, m.admissible() && lam.min > 0.0 ? 1.0 : 0.0, lam.min, lam.max});
        }
        if (std::max(std::abs(r.b_upper - r.b_upper_phi), std::abs(r.b_lower - r.b_lower_phi)) > kMethodAgree)
            r.status = "bound_methods_disagree";
        else if (r.drift_max > kDriftTol)
            r.status = "drift_above_threshold";
    } catch (const Error& e) {
        r.status = errc_name(e.code());
    }
    return r;
}

int cmd_sweep(const SweepArgs& a, std::ostream& out)
{
    if (std::all_of(a.taus.begin(), a.taus.end(), [](const std::string& t) { return t.empty(); }))
        throw UsageError("the tau grid is empty");
    if (!(a.horizon > 0.0)) throw UsageError("--horizon must be positive");
    const fs::path dir = prepare_out(a.common);
    const io::Fixture fx = load_fixture(a.common);
    std::vector<double> taus;
    for (const auto& t : a.taus)
        if (!t.empty()) taus.push_back(parse_tau(t, fx.T));

    const int n = static_cast<int>(taus.size());
    std::vector<SweepRow> rows(n);
    if (exec_of(a.common) == Exec::parallel) {
#pragma omp parallel for schedule(dynamic)
        for (int i = 0; i < n; ++i) rows[i] = sweep_row(taus[i], a);
    } else {
        for (int i = 0; i < n; ++i) rows[i] = sweep_row(taus[i], a);
    }

    Csv csv({"tau", "tau_over_T", "b_upper", "b_lower", "b_upper_phi", "b_lower_phi", "K_min", "K_max", "drift_max", "status"});
    Csv bcsv({"tau", "b", "admissible", "lambda_min", "lambda_max"});
    int flagged = 0;
    for (const auto& r : rows) {
        csv.row_text({fmt(r.tau), fmt(r.tau / fx.T), fmt(r.b_upper), fmt(r.b_lower), fmt(r.b_upper_phi), fmt(r.b_lower_phi),
                      fmt(r.K_min), fmt(r.K_max), fmt(r.drift_max), r.status});
        for (const auto& b : r.b_rows) bcsv.row({r.tau, b[0], b[1], b[2], b[3]});
        if (r.status != "ok") ++flagged;
    }
    io::write_text(dir / "sweep.csv", csv.text());
    if (!a.bs.empty()) io::write_text(dir / "sweep_b.csv", bcsv.text());
    io::write_json(dir / "sweep.json", Json{{"command", "sweep"}, {"rows", rows.size()}, {"flagged", flagged},
                                            {"horizon", a.horizon}, {"seed", a.seed}, {"fixture", fixture_ref(fx)}});
    out << rows.size() << " rows, " << flagged << " flagged\n";
    return flagged ? Exit::failed : Exit::ok;
}

const char* kFindTHelp =
    "Writes the fixture (default <out>/fixture_T.json), find_T.json and\n"
    "probe_sweep.csv: tau,tau_over_T,outcome,event_t (50 points in [0, 2T]).\n"
    "Fails when the two methods differ by more than max(1e-4, tol).";
const char* kPortraitHelp =
    "fixed_points.csv: q,p,kind,lambda1,lambda2,v1_q,v1_p,v2_q,v2_p\n"
    "separatrix_s<k>_<stable|unstable>_<pos|neg>.csv: q,p\n"
    "orbits.csv: orbit,t,q,p\n"
    "fixed_points.json: fixed points, separatrix index and the T estimate.";
const char* kPsiHelp =
    "trajectory.csv: t,x,x1,x2 at the integrator nodes\n"
    "psi_profile.csv: y,psi,psi1,psi2 on a uniform grid\n"
    "g_plus.csv, g_minus.csv: s,g,g1,g2\n"
    "psi_manifest.json: range, termination, residual, b bounds.";
const char* kMetricHelp =
    "metric_profile.csv: y,psi3,kin with lambda = psi3 cos(phi) + E kin\n"
    "metric.json: spec, chart limits, lambda and curvature ranges, pole fits.";
const char* kVerifyHelp =
    "verify.json: bracket (<= 1e-6), drift (<= 1e-7), pole fits (<= 1e-6),\n"
    "eqpde (<= 1e-8); family GC adds the gc match (<= 1e-3).\n"
    "flow_<geodesic|conservative>.csv: t,phi,y,p_phi,p_y,H,F\n"
    "gc_matched_profiles.csv (GC): y,psi3_gc,psi3_b_mapped,psi4_gc,psi4_b_mapped";
const char* kSweepHelp =
    "sweep.csv: tau,tau_over_T,b_upper,b_lower,b_upper_phi,b_lower_phi,K_min,K_max,drift_max,status\n"
    "sweep_b.csv (with --b): tau,b,admissible,lambda_min,lambda_max\n"
    "K is the curvature of family A (c = 1); drift is family B at b_* + 1.";
const char* kGcHelp =
    "gc_match.json: fit, residuals, gauge, stationary point, fixture hash\n"
    "gc_matched_profiles.csv: y,psi3_gc,psi3_b_mapped,psi4_gc,psi4_b_mapped";

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Cubic integrals of conservative systems on the sphere"};
    app.require_subcommand(1);

    FindTArgs ft;
    auto* s_ft = app.add_subcommand("find-T", "critical constant by bisection and separatrix");
    add_common(s_ft, ft.common);
    s_ft->add_option("--tol", ft.tol, "bisection tolerance")->capture_default_str();
    s_ft->add_option("--qmax", ft.q_max, "separatrix length")->capture_default_str();
    s_ft->footer(kFindTHelp);

    PortraitArgs pp;
    auto* s_pp = app.add_subcommand("phase-portrait", "equilibria, separatrices and sample orbits");
    add_common(s_pp, pp.common, false);
    s_pp->add_option("--qmax", pp.q_max, "separatrix length")->capture_default_str();
    s_pp->add_option("--branch", pp.branch, "all, pos (q > 0) or neg (mirror)")
        ->check(CLI::IsMember({"all", "pos", "neg"}))
        ->capture_default_str();
    s_pp->footer(kPortraitHelp);

    PsiArgs ps;
    auto* s_ps = app.add_subcommand("solve-psi", "psi profile for one tau");
    add_common(s_ps, ps.common);
    s_ps->add_option("--tau", ps.tau, "tau as a number or a multiple of T such as 0.5T")->capture_default_str();
    s_ps->footer(kPsiHelp);

    MetricArgs bm;
    auto* s_bm = app.add_subcommand("build-metric", "metric data for a family");
    add_common(s_bm, bm.common);
    add_model_options(s_bm, bm.model);
    s_bm->footer(kMetricHelp);

    VerifyArgs vf;
    auto* s_vf = app.add_subcommand("verify", "integrability checks against thresholds");
    add_common(s_vf, vf.common);
    add_model_options(s_vf, vf.model);
    s_vf->add_option("--seeds", vf.seeds, "random states for the bracket")->capture_default_str();
    s_vf->add_option("--trajectories", vf.trajectories, "trajectories for the drift")->capture_default_str();
    s_vf->add_option("--horizon", vf.horizon, "trajectory length")->capture_default_str();
    s_vf->add_option("--seed", vf.seed, "random seed")->capture_default_str();
    s_vf->footer(kVerifyHelp);

    SweepArgs sw;
    auto* s_sw = app.add_subcommand("sweep", "b bounds, curvature and drift over a tau grid");
    add_common(s_sw, sw.common);
    s_sw->add_option("--tau", sw.taus, "comma-separated tau grid, e.g. 0.1T,0.2T")->delimiter(',')->required();
    s_sw->add_option("--b", sw.bs, "comma-separated b grid for family B")->delimiter(',');
    s_sw->add_option("--horizon", sw.horizon, "trajectory length")->capture_default_str();
    s_sw->add_option("--seed", sw.seed, "random seed")->capture_default_str();
    s_sw->footer(kSweepHelp);

    GcArgs gm;
    auto* s_gm = app.add_subcommand("gc-match", "match the gc system against critical family B");
    add_common(s_gm, gm.common);
    s_gm->footer(kGcHelp);

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? Exit::ok : Exit::usage;
    }

    try {
        if (*s_ft) return cmd_find_T(ft, out);
        if (*s_pp) return cmd_phase_portrait(pp, out);
        if (*s_ps) return cmd_solve_psi(ps, out);
        if (*s_bm) return cmd_build_metric(bm, out);
        if (*s_vf) return cmd_verify_impl(vf, out);
        if (*s_sw) return cmd_sweep(sw, out);
        if (*s_gm) return cmd_gc_match(gm, out);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return Exit::usage;
    } catch (const Error& e) {
        err << e.what() << "\n";
        return e.code() == Errc::io_error || e.code() == Errc::invalid_argument ? Exit::usage : Exit::failed;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return Exit::usage;
    }
    return Exit::usage;
}

}  // namespace s2c::cli
