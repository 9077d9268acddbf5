#include "s2cubic/cubic.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <sstream>

#include "s2cubic/dop853.hpp"
#include "s2cubic/errors.hpp"

namespace s2c {

using cplx = std::complex<double>;

LambdaJet FField::lambda_jet(double phi, double y) const
{
    const FSecond s = second(phi, y);
    const FThird t = third(phi, y);
    LambdaJet l;
    l.v = s.fpp + s.fyy;
    l.dp = t.fppp + t.fpyy;
    l.dy = t.fppy + t.fyyy;
    return l;
}

double FField::lambda(double phi, double y) const
{
    const FSecond s = second(phi, y);
    return s.fpp + s.fyy;
}

ModelF::ModelF(const HamiltonianModel& model, double E) : model_(&model), E_(E)
{
    if (!model.psi() || model.spec().family == Family::GC)
        throw Error(Errc::invalid_argument, "f is constructed for families A and B");
    a_ = model.spec().family == Family::B ? E : 0.0;
}

FSecond ModelF::second(double phi, double y) const
{
    const PsiJet p = model_->psi()->jet(y);
    const double xi2 = E_ * model_->radial(y).kin.v;
    const double c = std::cos(phi), s = std::sin(phi);
    return FSecond{-p.psi * c + 2.0 * a_, p.d2 * c + xi2 - 2.0 * a_, -p.d1 * s};
}

FThird ModelF::third(double phi, double y) const
{
    const PsiJet p = model_->psi()->jet(y);
    const double xi3 = E_ * model_->radial(y).kin.d1;
    const double c = std::cos(phi), s = std::sin(phi);
    return FThird{p.psi * s, -p.d1 * c, -p.d2 * s, p.d3 * c + xi3};
}

LambdaJet ModelF::lambda_jet(double phi, double y) const { return model_->lambda_jet(phi, y, E_); }

double ModelF::lambda(double phi, double y) const { return model_->lambda_at_energy(phi, y, E_); }

AnalyticF::AnalyticF(std::function<FSecond(double, double)> second, std::function<FThird(double, double)> third)
    : second_(std::move(second)), third_(std::move(third))
{
}

FunctionF::FunctionF(std::function<double(double, double)> f, double h) : f_(std::move(f)), h_(h)
{
    if (!(h > 0.0)) throw Error(Errc::invalid_argument, "step must be positive");
}

namespace {

constexpr double w1[5] = {1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0};
constexpr double w2[5] = {-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0};
constexpr double w3[7] = {1.0 / 8.0, -1.0, 13.0 / 8.0, 0.0, -13.0 / 8.0, 1.0, -1.0 / 8.0};

}  // namespace

FSecond FunctionF::second(double phi, double y) const
{
    const double h = h_;
    FSecond r;
    for (int i = 0; i < 5; ++i) {
        r.fpp += w2[i] * f_(phi + (i - 2) * h, y);
        r.fyy += w2[i] * f_(phi, y + (i - 2) * h);
        for (int j = 0; j < 5; ++j)
            if (w1[i] != 0.0 && w1[j] != 0.0) r.fpy += w1[i] * w1[j] * f_(phi + (i - 2) * h, y + (j - 2) * h);
    }
    r.fpp /= h * h;
    r.fyy /= h * h;
    r.fpy /= h * h;
    return r;
}

FThird FunctionF::third(double phi, double y) const
{
    const double h = std::max(h_, 1e-2);
    FThird r;
    for (int i = 0; i < 7; ++i) {
        if (w3[i] == 0.0) continue;
        r.fppp += w3[i] * f_(phi + (i - 3) * h, y);
        r.fyyy += w3[i] * f_(phi, y + (i - 3) * h);
    }
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) {
            if (w1[j] == 0.0) continue;
            r.fppy += w2[i] * w1[j] * f_(phi + (i - 2) * h, y + (j - 2) * h);
            r.fpyy += w1[j] * w2[i] * f_(phi + (j - 2) * h, y + (i - 2) * h);
        }
    const double h3 = h * h * h;
    r.fppp /= h3;
    r.fyyy /= h3;
    r.fppy /= h3;
    r.fpyy /= h3;
    return r;
}

std::function<double(double, double)> model_f_function(const HamiltonianModel& model, double E)
{
    if (!model.psi() || model.spec().family == Family::GC)
        throw Error(Errc::invalid_argument, "f is constructed for families A and B");
    const double a = model.spec().family == Family::B ? E : 0.0;
    return [model, E, a](double phi, double y) {
        using boost::math::quadrature::gauss;
        // xi(y) = int_0^y (y - t) xi''(t) dt
        const int panels = std::max(4, static_cast<int>(std::ceil(std::abs(y) * 8.0)));
        double xi = 0.0;
        for (int k = 0; k < panels; ++k) {
            const double lo = y * k / panels, hi = y * (k + 1) / panels;
            xi += gauss<double, 20>::integrate([&](double t) { return (y - t) * E * model.radial(t).kin.v; }, lo, hi);
        }
        return model.psi()->jet(y).psi * std::cos(phi) + xi + a * (phi * phi - y * y);
    };
}

std::shared_ptr<FField> nonintegrable_control()
{
    return std::make_shared<AnalyticF>(
        [](double p, double y) {
            const double c = std::cos(p), s = std::sin(p), c2 = std::cos(2 * y), s2 = std::sin(2 * y);
            return FSecond{2.0 + c * c2 / 5.0, 4.0 * c * c2 / 5.0, -2.0 * s * s2 / 5.0};
        },
        [](double p, double y) {
            const double c = std::cos(p), s = std::sin(p), c2 = std::cos(2 * y), s2 = std::sin(2 * y);
            return FThird{-s * c2 / 5.0, -2.0 * c * s2 / 5.0, -4.0 * s * c2 / 5.0, -8.0 * c * s2 / 5.0};
        });
}

std::shared_ptr<FField> phi2y_control()
{
    return std::make_shared<AnalyticF>([](double p, double y) { return FSecond{2.0 * y, 0.0, 2.0 * p}; },
                                       [](double, double) { return FThird{0.0, 2.0, 0.0, 0.0}; });
}

std::shared_ptr<FField> harmonic_f(double a)
{
    return std::make_shared<AnalyticF>([a](double, double) { return FSecond{2.0 * a, -2.0 * a, 0.0}; },
                                       [](double, double) { return FThird{}; });
}

cplx a1_eval(const FField& f, double phi, double y)
{
    const FSecond s = f.second(phi, y);
    const double lambda = f.lambda(phi, y);
    if (!(lambda > 0.0)) {
        std::ostringstream os;
        os << "lambda=" << lambda << " at (" << phi << ", " << y << ")";
        throw Error(Errc::degenerate_metric, os.str());
    }
    return cplx(-3.0 * (s.fpp - s.fyy), 6.0 * s.fpy) / lambda;
}

cplx a1_eval(const HamiltonianModel& model, double phi, double y)
{
    return a1_eval(ModelF(model, model.geodesic_energy()), phi, y);
}

namespace {

cplx pz_of(const CotangentState& s) { return cplx(0.5 * s.p_phi, -0.5 * s.p_y); }

}  // namespace

double cubic_integral_eval(const FField& f, const CotangentState& s)
{
    const cplx a1 = a1_eval(f, s.phi, s.y);
    const cplx pz = pz_of(s);
    return 2.0 * std::real(pz * pz * pz + a1 * pz * pz * std::conj(pz));
}

double cubic_integral_eval(const HamiltonianModel& model, const CotangentState& s)
{
    return cubic_integral_eval(ModelF(model, model.geodesic_energy()), s);
}

double cubic_integral_imag(const FField& f, const CotangentState& s)
{
    const cplx a1 = a1_eval(f, s.phi, s.y);
    const cplx pz = pz_of(s), pb = std::conj(pz);
    return std::imag(pz * pz * pz + a1 * pz * pz * pb + std::conj(a1) * pz * pb * pb + pb * pb * pb);
}

const char* flow_mode_name(FlowMode m) { return m == FlowMode::geodesic ? "geodesic" : "conservative"; }

FlowMode parse_flow_mode(const std::string& s)
{
    if (s == "geodesic") return FlowMode::geodesic;
    if (s == "conservative") return FlowMode::conservative;
    throw Error(Errc::invalid_argument, "mode must be geodesic or conservative");
}

Flow geodesic_flow(std::shared_ptr<const FField> f)
{
    Flow fl;
    fl.H = [f](const CotangentState& s) {
        const double l = f->lambda(s.phi, s.y);
        if (!(l > 0.0)) throw Error(Errc::degenerate_metric, "lambda <= 0 on the flow");
        return 0.5 * (s.p_phi * s.p_phi + s.p_y * s.p_y) / l;
    };
    fl.grad_H = [f](const CotangentState& s) {
        const LambdaJet l = f->lambda_jet(s.phi, s.y);
        if (!(l.v > 0.0)) throw Error(Errc::degenerate_metric, "lambda <= 0 on the flow");
        const double k = 0.5 * (s.p_phi * s.p_phi + s.p_y * s.p_y) / (l.v * l.v);
        return std::array<double, 4>{-k * l.dp, -k * l.dy, s.p_phi / l.v, s.p_y / l.v};
    };
    fl.F = [f](const CotangentState& s) { return cubic_integral_eval(*f, s); };
    return fl;
}

namespace {

// f-field that owns its model
struct OwnedModelF : FField {
    std::shared_ptr<const HamiltonianModel> model;
    ModelF inner;
    OwnedModelF(std::shared_ptr<const HamiltonianModel> m, double E) : model(std::move(m)), inner(*model, E) {}
    FSecond second(double p, double y) const override { return inner.second(p, y); }
    FThird third(double p, double y) const override { return inner.third(p, y); }
    LambdaJet lambda_jet(double p, double y) const override { return inner.lambda_jet(p, y); }
    double lambda(double p, double y) const override { return inner.lambda(p, y); }
};

}  // namespace

Flow geodesic_flow(const HamiltonianModel& model)
{
    auto m = std::make_shared<const HamiltonianModel>(model);
    return geodesic_flow(std::make_shared<OwnedModelF>(m, model.geodesic_energy()));
}

Flow conservative_flow(const HamiltonianModel& model)
{
    if (!model.admissible()) throw Error(Errc::degenerate_denominator, "model is not admissible");
    auto m = std::make_shared<HamiltonianModel>(model);
    Flow fl;
    fl.H = [m](const CotangentState& s) { return m->hamiltonian(s); };
    fl.grad_H = [m](const CotangentState& s) { return m->hamiltonian_gradient(s); };
    if (model.psi() && model.spec().family != Family::GC)
        fl.F = [m](const CotangentState& s) { return cubic_integral_eval(ModelF(*m, m->hamiltonian(s)), s); };
    return fl;
}

Flow make_flow(const HamiltonianModel& model, FlowMode mode)
{
    return mode == FlowMode::geodesic ? geodesic_flow(model) : conservative_flow(model);
}

Flow with_integral(Flow flow, std::function<double(const CotangentState&)> F)
{
    flow.F = std::move(F);
    return flow;
}

namespace {

CotangentState shifted(CotangentState s, int i, double d)
{
    switch (i) {
    case 0: s.phi += d; break;
    case 1: s.y += d; break;
    case 2: s.p_phi += d; break;
    default: s.p_y += d; break;
    }
    return s;
}

double coord(const CotangentState& s, int i)
{
    switch (i) {
    case 0: return s.phi;
    case 1: return s.y;
    case 2: return s.p_phi;
    default: return s.p_y;
    }
}

}  // namespace

double bracket_residual(const Flow& flow, const CotangentState& s, double h_fd)
{
    if (!flow.F) throw Error(Errc::invalid_argument, "flow has no integral");
    double gF[4], gH[4];
    for (int i = 0; i < 4; ++i) {
        const double h = h_fd * std::max(1.0, std::abs(coord(s, i)));
        const CotangentState sp = shifted(s, i, h), sm = shifted(s, i, -h);
        gF[i] = (flow.F(sp) - flow.F(sm)) / (2.0 * h);
        gH[i] = (flow.H(sp) - flow.H(sm)) / (2.0 * h);
    }
    const double br = gF[0] * gH[2] - gF[2] * gH[0] + gF[1] * gH[3] - gF[3] * gH[1];
    double nF = 0.0, nH = 0.0;
    for (int i = 0; i < 4; ++i) {
        nF += gF[i] * gF[i];
        nH += gH[i] * gH[i];
    }
    const double norm = std::sqrt(nF * nH);
    return norm > 0.0 ? std::abs(br) / norm : std::abs(br);
}

std::vector<FlowSample> integrate_flow(const Flow& flow, const CotangentState& s0, double horizon,
                                       const FlowOptions& opt)
{
    if (!(horizon > 0.0)) throw Error(Errc::invalid_argument, "horizon must be positive");
    using V = ode::Vec<4>;
    auto to_state = [](const V& v) { return CotangentState{v[0], v[1], v[2], v[3]}; };
    auto rhs = [&](double, const V& v) {
        const auto g = flow.grad_H(to_state(v));
        return V{g[2], g[3], -g[0], -g[1]};
    };
    auto sample = [&](double t, const V& v) {
        FlowSample fs;
        fs.t = t;
        fs.s = to_state(v);
        fs.H = flow.H(fs.s);
        fs.F = flow.F ? flow.F(fs.s) : 0.0;
        fs.s.phi = std::fmod(fs.s.phi, 2.0 * M_PI);
        if (fs.s.phi < 0.0) fs.s.phi += 2.0 * M_PI;
        return fs;
    };
    ode::Dop853Options<4> o;
    o.rel_tol = opt.rel_tol;
    o.abs_tol.fill(opt.abs_tol);
    const V y0{s0.phi, s0.y, s0.p_phi, s0.p_y};
    auto res = ode::dop853<4>(rhs, 0.0, y0, horizon, o);
    if (res.status != ode::Dop853Status::completed) {
        std::ostringstream os;
        os << "flow integration stalled at t=" << res.t_end;
        if (!res.last_failure.empty()) os << "; " << res.last_failure;
        throw Error(Errc::step_size_underflow, os.str(), res.t_end);
    }
    std::vector<FlowSample> out{sample(0.0, y0)};
    for (const auto& st : res.steps) {
        for (int j = 1; j <= opt.dense_per_step; ++j) {
            const double t = st.t_old + (st.t_new - st.t_old) * j / (opt.dense_per_step + 1);
            out.push_back(sample(t, st.value(t)));
        }
        out.push_back(sample(st.t_new, st.value(st.t_new)));
    }
    return out;
}

Drift conservation_drift(const Flow& flow, const CotangentState& s0, double horizon, const FlowOptions& opt)
{
    if (!flow.F) throw Error(Errc::invalid_argument, "flow has no integral");
    const auto samples = integrate_flow(flow, s0, horizon, opt);
    Drift d;
    d.samples = samples.size();
    const double F0 = samples.front().F, H0 = samples.front().H;
    for (const auto& s : samples) {
        d.F = std::max(d.F, std::abs(s.F - F0) / std::max(1.0, std::abs(F0)));
        d.H = std::max(d.H, std::abs(s.H - H0) / std::max(std::abs(H0), 1e-300));
    }
    return d;
}

double eqpde_residual(const FField& f, double phi, double y)
{
    const FSecond s = f.second(phi, y);
    const FThird t = f.third(phi, y);
    const LambdaJet l = f.lambda_jet(phi, y);
    const double lambda = l.v, lp = l.dp, ly = l.dy;
    const double lhs = (t.fppp - t.fpyy) * lambda + (s.fpp - s.fyy) * lp;
    const double rhs = 2.0 * (t.fpyy * lambda + s.fpy * ly);
    return lhs - rhs;
}

std::vector<double> systpde_residuals(const std::function<double(double, double)>& theta,
                                      const std::vector<ComplexField>& b, double phi, double y, double h)
{
    if (b.size() < 2) throw Error(Errc::invalid_argument, "need at least b0 and b1");
    const int n = static_cast<int>(b.size()) - 1;
    auto dphi = [&](auto&& g) {
        return (g(phi - 2 * h, y) - 8.0 * g(phi - h, y) + 8.0 * g(phi + h, y) - g(phi + 2 * h, y)) / (12.0 * h);
    };
    auto dy = [&](auto&& g) {
        return (g(phi, y - 2 * h) - 8.0 * g(phi, y - h) + 8.0 * g(phi, y + h) - g(phi, y + 2 * h)) / (12.0 * h);
    };
    const cplx I(0.0, 1.0);
    auto dw = [&](auto&& g) { return 0.5 * (cplx(dphi(g)) - I * cplx(dy(g))); };
    auto dwb = [&](auto&& g) { return 0.5 * (cplx(dphi(g)) + I * cplx(dy(g))); };
    const double th = theta(phi, y);
    const cplx th_w = dw(theta), th_wb = dwb(theta);
    std::vector<cplx> bv(n + 1), bw(n + 1), bwb(n + 1);
    for (int k = 0; k <= n; ++k) {
        bv[k] = b[k](phi, y);
        bw[k] = dw(b[k]);
        bwb[k] = dwb(b[k]);
    }
    std::vector<double> rows;
    for (int k = 0; k <= n + 1; ++k) {
        cplx r = 0.0;
        if (k >= 1) r += th * bw[k - 1] + static_cast<double>(n - k + 1) * bv[k - 1] * th_w;
        if (k <= n) r += th * bwb[k] + static_cast<double>(k) * bv[k] * th_wb;
        rows.push_back(std::abs(r));
    }
    return rows;
}

std::vector<ComplexField> cubic_coefficients(std::shared_ptr<const FField> f)
{
    ComplexField one = [](double, double) { return cplx(1.0, 0.0); };
    ComplexField a1 = [f](double p, double y) { return a1_eval(*f, p, y); };
    ComplexField a1b = [f](double p, double y) { return std::conj(a1_eval(*f, p, y)); };
    return {one, a1, a1b, one};
}

PolarBound polar_integral_bound(const HamiltonianModel& model)
{
    PolarBound pb;
    for (Chart c : {Chart::r, Chart::r_tilde}) {
        try {
            polar_form(model, c);
        } catch (const Error& e) {
            pb.bounded = false;
            pb.note = std::string("chart ") + chart_name(c) + ": " + e.what();
            return pb;
        }
    }
    const ModelF f(model, model.geodesic_energy());
    const double y_end = std::min(-model.y_lo(), model.y_hi()) - 1.0;
    std::vector<double> tails;
    try {
        for (int side = 0; side < 2; ++side) {
            for (double d = 0.5; d <= y_end + 1e-12; d += 0.5) {
                const double y = side == 0 ? -d : d;
                double worst = 0.0;
                for (int k = 0; k < 16; ++k) {
                    const double phi = 2.0 * M_PI * k / 16;
                    worst = std::max(worst, std::abs(a1_eval(f, phi, y)) * std::exp(-3.0 * d));
                }
                pb.radii.push_back(std::exp(-d));
                pb.values.push_back(worst);
                pb.sup = std::max(pb.sup, worst);
            }
            // relative change over the last unit of log-radius
            const std::size_t nv = pb.values.size();
            tails.push_back(std::abs(pb.values[nv - 1] - pb.values[nv - 3]) / std::max(pb.values[nv - 1], 1e-300));
        }
    } catch (const Error& e) {
        pb.bounded = false;
        pb.note = e.what();
        return pb;
    }
    pb.bounded = std::isfinite(pb.sup) && tails[0] < 1e-3 && tails[1] < 1e-3;
    std::ostringstream os;
    os << "tail variation " << tails[0] << " (r), " << tails[1] << " (r~)";
    pb.note = os.str();
    return pb;
}

}  // namespace s2c
