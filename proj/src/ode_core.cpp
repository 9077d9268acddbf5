#include "s2cubic/ode_core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace s2c {

namespace {

using State = ode::Vec<5>;

State full_rhs(const State& y, double eps_den)
{
    const double x = y[0], x1 = y[1], x2 = y[2], u = y[3];
    const double x3 = rhs_third_order(JetState{0.0, x, x1, x2}, eps_den);
    return State{x1, x2, x3, -u * (3.0 * x + 2.0 * u) / x1, -2.0 * x1 * u};
}

State initial_state(const JetState& s)
{
    return State{s.x, s.x1, s.x2, s.x2 - s.x, s.x * s.x - s.x1 * s.x1};
}

ode::Dop853Options<5> options_from(const IvpSpec& spec)
{
    ode::Dop853Options<5> opt;
    opt.rel_tol = spec.rel_tol;
    opt.abs_tol.fill(spec.abs_tol);
    opt.abs_tol[3] = 1e-300;
    opt.max_step = spec.max_step;
    return opt;
}

struct Run {
    std::vector<ode::DenseStep<5>> steps;
    Termination termination;
    double t_end = 0.0;
};

// First time inside `step` where |x1| <= zero_tol, if any.
std::optional<double> derivative_zero_in(const ode::DenseStep<5>& step, double zero_tol)
{
    constexpr int samples = 16;
    const double ta = step.t_old, tb = step.t_new;
    double prev_t = ta;
    double prev_x1 = step.value(ta)[1];
    for (int j = 1; j <= samples; ++j) {
        const double t = ta + (tb - ta) * j / samples;
        const double x1 = step.value(t)[1];
        if (std::abs(x1) <= zero_tol || (x1 > 0.0) != (prev_x1 > 0.0)) {
            double a = prev_t, b = t;
            if (std::abs(x1) > zero_tol) {
                // sign change with both samples above tolerance: find the zero first
                double lo = prev_t, hi = t;
                const bool pos = prev_x1 > 0.0;
                for (int it = 0; it < 200 && std::abs(hi - lo) > 1e-15; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    if ((step.value(mid)[1] > 0.0) == pos)
                        lo = mid;
                    else
                        hi = mid;
                }
                b = hi;
            }
            for (int it = 0; it < 200 && std::abs(b - a) > 1e-12; ++it) {
                const double mid = 0.5 * (a + b);
                if (std::abs(step.value(mid)[1]) <= zero_tol)
                    b = mid;
                else
                    a = mid;
            }
            return b;
        }
        prev_t = t;
        prev_x1 = x1;
    }
    return std::nullopt;
}

Run run_direction(const JetState& start, double t_end, const IvpSpec& spec)
{
    Run run;
    run.t_end = t_end;
    if (t_end == start.t) return run;
    const double eps_den = spec.eps_den;
    auto f = [eps_den](double, const State& y) { return full_rhs(y, eps_den); };
    std::optional<Termination> event;
    auto monitor = [&](const ode::DenseStep<5>& step) {
        if (auto tz = derivative_zero_in(step, spec.zero_tol)) {
            event = Termination{TerminationKind::derivative_zero, *tz};
            return false;
        }
        const State ye = step.value(step.t_new);
        // growth is measured against the e^{|t|} envelope of global solutions
        auto over = [&](double t, const State& y) {
            return std::max(std::abs(y[0]), std::abs(y[2])) * std::exp(-std::abs(t - start.t)) - spec.blowup;
        };
        if (over(step.t_new, ye) > 0.0) {
            event = Termination{TerminationKind::blowup, ode::locate_crossing(step, over)};
            return false;
        }
        return true;
    };
    auto res = ode::dop853<5>(f, start.t, initial_state(start), t_end, options_from(spec), monitor);
    run.steps = std::move(res.steps);
    if (event) {
        run.termination = *event;
        run.t_end = event->t;
    } else if (res.status == ode::Dop853Status::step_underflow ||
               res.status == ode::Dop853Status::max_steps) {
        std::ostringstream os;
        os.precision(17);
        os << "integration stalled at t=" << res.t_end << " (last reliable time)";
        if (!res.last_failure.empty()) os << "; " << res.last_failure;
        throw Error(Errc::step_size_underflow, os.str(), res.t_end);
    }
    return run;
}

}  // namespace

const char* termination_name(TerminationKind kind)
{
    switch (kind) {
    case TerminationKind::completed: return "completed";
    case TerminationKind::derivative_zero: return "derivative_zero";
    case TerminationKind::blowup: return "blowup";
    }
    return "unknown";
}

void IvpSpec::validate() const
{
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) throw Error(Errc::invalid_argument, "tolerances must be positive");
    if (!(max_step > 0.0)) throw Error(Errc::invalid_argument, "max_step must be positive");
    if (!(t_lo <= 0.0 && 0.0 <= t_hi)) throw Error(Errc::invalid_argument, "t_span must contain 0");
    if (!std::isfinite(tau)) throw Error(Errc::invalid_argument, "tau must be finite");
}

double rhs_third_order(const JetState& s, double eps_den)
{
    if (!(std::abs(s.x1) > eps_den)) throw Error(Errc::singular_derivative, "|x1| <= eps_den");
    return (s.x * s.x2 - 2.0 * s.x2 * s.x2 + s.x1 * s.x1 + s.x * s.x) / s.x1;
}

double fourth_derivative(double x, double x1, double x2, double x3)
{
    const double dn = x1 * x2 + x * x3 - 4.0 * x2 * x3 + 2.0 * x1 * x2 + 2.0 * x * x1;
    return (dn - x3 * x2) / x1;
}

FullJet SeriesPatch::eval(double t) const
{
    const double v = t - center;
    double X = 0.0, X1 = 0.0, X2 = 0.0, X3 = 0.0;
    for (std::size_t k = c.size(); k-- > 0;) {
        const double kk = static_cast<double>(k);
        X = X * v + c[k];
        if (k >= 1) X1 = X1 * v + kk * c[k];
        if (k >= 2) X2 = X2 * v + kk * (kk - 1.0) * c[k];
        if (k >= 3) X3 = X3 * v + kk * (kk - 1.0) * (kk - 2.0) * c[k];
    }
    FullJet j;
    j.t = t;
    j.x = scale * X;
    j.x1 = scale * X1;
    j.x2 = scale * X2;
    j.x3 = scale * X3;
    j.u = j.x2 - j.x;
    j.m = j.x * j.x - j.x1 * j.x1;
    return j;
}

const Trajectory::Step& Trajectory::step_at(double t) const
{
    auto it = std::upper_bound(segments_.begin(), segments_.end(), t,
                               [](double v, const Step& s) { return v < s.hi(); });
    if (it == segments_.end()) --it;
    return *it;
}

FullJet Trajectory::at(double t) const
{
    const double slack = 1e-12 * std::max(1.0, std::abs(t));
    if (t < t_min_ - slack || t > t_max_ + slack) {
        std::ostringstream os;
        os << "t=" << t << " outside trajectory [" << t_min_ << ", " << t_max_ << "]";
        throw Error(Errc::invalid_argument, os.str());
    }
    if (patch_ && std::abs(t - patch_->center) <= patch_->radius) return patch_->eval(t);
    double sign = 1.0;
    double tt = t;
    if (has_mirror_ && t < mirror_center_) {
        tt = 2.0 * mirror_center_ - t;
        sign = -1.0;
    }
    if (segments_.empty()) throw Error(Errc::invalid_argument, "empty trajectory");
    const State y = step_at(tt).value(tt);
    FullJet j;
    j.t = t;
    j.x = y[0];
    j.x1 = sign * y[1];
    j.x2 = y[2];
    j.x3 = sign * rhs_third_order(JetState{tt, y[0], y[1], y[2]}, 0.0);
    j.u = y[3];
    j.m = y[4];
    return j;
}

JetState Trajectory::jet(double t) const
{
    const FullJet j = at(t);
    return JetState{t, j.x, j.x1, j.x2};
}

double Trajectory::x3_interpolated(double t) const
{
    if (patch_ && std::abs(t - patch_->center) <= patch_->radius) return patch_->eval(t).x3;
    double sign = 1.0;
    double tt = t;
    if (has_mirror_ && t < mirror_center_) {
        tt = 2.0 * mirror_center_ - t;
        sign = -1.0;
    }
    return sign * step_at(tt).derivative(tt)[2];
}

Trajectory Trajectory::assemble(const JetState& start, const std::vector<Step>& backward,
                                const std::vector<Step>& forward, double t_min, double t_max,
                                Termination termination)
{
    Trajectory tr;
    tr.termination_ = termination;
    tr.t_min_ = t_min;
    tr.t_max_ = t_max;
    for (auto it = backward.rbegin(); it != backward.rend(); ++it) tr.segments_.push_back(*it);
    tr.segments_.insert(tr.segments_.end(), forward.begin(), forward.end());

    auto node_of = [](double t, const State& y) { return JetState{t, y[0], y[1], y[2]}; };
    for (auto it = backward.rbegin(); it != backward.rend(); ++it) {
        const double t = std::max(it->t_new, t_min);
        tr.nodes_.push_back(node_of(t, it->value(t)));
    }
    tr.nodes_.push_back(start);
    for (const auto& s : forward) {
        const double t = std::min(s.t_new, t_max);
        tr.nodes_.push_back(node_of(t, s.value(t)));
    }
    // drop duplicates created by clamping at event times
    std::vector<JetState> clean;
    for (const auto& n : tr.nodes_)
        if (clean.empty() || n.t > clean.back().t) clean.push_back(n);
    tr.nodes_ = std::move(clean);
    return tr;
}

Trajectory Trajectory::with_reflection(const Trajectory& right, const SeriesPatch& patch, double t_min)
{
    Trajectory tr = right;
    tr.patch_ = patch;
    tr.has_mirror_ = true;
    tr.mirror_center_ = patch.center;
    const double t_floor = 2.0 * patch.center - right.t_max_;
    tr.t_min_ = std::max(t_min, t_floor);

    std::vector<JetState> nodes;
    for (auto it = right.nodes_.rbegin(); it != right.nodes_.rend(); ++it) {
        const double t = 2.0 * patch.center - it->t;
        if (t < tr.t_min_ || t >= patch.center - patch.radius) continue;
        nodes.push_back(JetState{t, it->x, -it->x1, it->x2});
    }
    constexpr int patch_nodes = 8;
    for (int j = -patch_nodes; j < patch_nodes; ++j) {
        const double t = patch.center + patch.radius * j / patch_nodes;
        const FullJet fj = patch.eval(t);
        nodes.push_back(JetState{t, fj.x, fj.x1, fj.x2});
    }
    for (const auto& n : right.nodes_)
        if (n.t >= patch.center + patch.radius) nodes.push_back(n);
    tr.nodes_.clear();
    for (const auto& n : nodes)
        if (tr.nodes_.empty() || n.t > tr.nodes_.back().t) tr.nodes_.push_back(n);
    return tr;
}

Trajectory integrate_from(const JetState& start, double t_lo, double t_hi, const IvpSpec& settings)
{
    if (!(t_lo <= start.t && start.t <= t_hi)) throw Error(Errc::invalid_argument, "span must contain start time");
    if (!(settings.rel_tol > 0.0) || !(settings.abs_tol > 0.0))
        throw Error(Errc::invalid_argument, "tolerances must be positive");
    rhs_third_order(start, settings.eps_den);
    Run back = run_direction(start, t_lo, settings);
    Run fwd = run_direction(start, t_hi, settings);
    Termination term;
    if (back.termination.kind != TerminationKind::completed) term = back.termination;
    if (fwd.termination.kind != TerminationKind::completed &&
        (term.kind == TerminationKind::completed ||
         std::abs(fwd.termination.t - start.t) < std::abs(term.t - start.t)))
        term = fwd.termination;
    return Trajectory::assemble(start, back.steps, fwd.steps, back.t_end, fwd.t_end, term);
}

Trajectory integrate_ivp(const IvpSpec& spec)
{
    spec.validate();
    return integrate_from(JetState{0.0, 0.0, 1.0, spec.tau}, spec.t_lo, spec.t_hi, spec);
}

std::vector<LogPoint> log_reduction(const Trajectory& traj, double t_lo, double t_hi)
{
    std::vector<LogPoint> out;
    for (const auto& n : traj.nodes()) {
        if (n.t < t_lo || n.t > t_hi) continue;
        if (!(n.x > 0.0)) {
            std::ostringstream os;
            os << "x=" << n.x << " at t=" << n.t;
            throw Error(Errc::non_positive_x, os.str());
        }
        const double q = n.x1 / n.x;
        out.push_back(LogPoint{n.t, q, n.x2 / n.x - q * q});
    }
    return out;
}

std::vector<LogPoint> log_reduction(const Trajectory& traj)
{
    return log_reduction(traj, traj.t_min(), traj.t_max());
}

}  // namespace s2c
