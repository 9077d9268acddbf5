#pragma once

#include <array>
#include <complex>
#include <functional>
#include <memory>
#include <vector>

#include "s2cubic/metric.hpp"

namespace s2c {

struct FSecond {
    double fpp = 0.0, fyy = 0.0, fpy = 0.0;
};

struct FThird {
    double fppp = 0.0, fppy = 0.0, fpyy = 0.0, fyyy = 0.0;
};

// Second and third derivatives of a function f(phi, y) whose Laplacian is the
// geodesic conformal factor lambda = f_pp + f_yy.
class FField {
public:
    virtual ~FField() = default;
    virtual FSecond second(double phi, double y) const = 0;
    virtual FThird third(double phi, double y) const = 0;
    // lambda with first derivatives (second derivatives left zero unless overridden)
    virtual LambdaJet lambda_jet(double phi, double y) const;
    virtual double lambda(double phi, double y) const;
};

// f = psi cos(phi) + xi(y) + a (phi^2 - y^2) of a family A/B model at energy E:
// xi'' = E kin, a = E for family B and 0 for family A.
class ModelF : public FField {
public:
    ModelF(const HamiltonianModel& model, double E);
    FSecond second(double phi, double y) const override;
    FThird third(double phi, double y) const override;
    LambdaJet lambda_jet(double phi, double y) const override;
    double lambda(double phi, double y) const override;
    double energy() const { return E_; }
    double harmonic_coefficient() const { return a_; }

private:
    const HamiltonianModel* model_;
    double E_;
    double a_;
};

// Closed-form derivatives supplied by the caller.
class AnalyticF : public FField {
public:
    AnalyticF(std::function<FSecond(double, double)> second, std::function<FThird(double, double)> third);
    FSecond second(double phi, double y) const override { return second_(phi, y); }
    FThird third(double phi, double y) const override { return third_(phi, y); }

private:
    std::function<FSecond(double, double)> second_;
    std::function<FThird(double, double)> third_;
};

// Derivatives of a plain function by 4th-order central differences.
class FunctionF : public FField {
public:
    explicit FunctionF(std::function<double(double, double)> f, double h = 1e-3);
    FSecond second(double phi, double y) const override;
    FThird third(double phi, double y) const override;

private:
    std::function<double(double, double)> f_;
    double h_;
};

// f of a family model evaluated pointwise, xi by quadrature of xi'' from y = 0;
// an independent route to the derivatives used by ModelF.
std::function<double(double, double)> model_f_function(const HamiltonianModel& model, double E);

// control f = phi^2 - cos(phi) cos(2y) / 5 with lambda = 2 + cos(phi) cos(2y)
std::shared_ptr<FField> nonintegrable_control();
// control f = phi^2 y
std::shared_ptr<FField> phi2y_control();
// f = a (phi^2 - y^2)
std::shared_ptr<FField> harmonic_f(double a);

std::complex<double> a1_eval(const FField& f, double phi, double y);
std::complex<double> a1_eval(const HamiltonianModel& model, double phi, double y);

// F = 2 Re[p_z^3 + a1 p_z^2 conj(p_z)], p_z = (p_phi - i p_y)/2
double cubic_integral_eval(const FField& f, const CotangentState& s);
double cubic_integral_eval(const HamiltonianModel& model, const CotangentState& s);
// imaginary part of p_z^3 + a1 p_z^2 conj(p_z) + conj(a1) p_z conj(p_z)^2 + conj(p_z)^3
double cubic_integral_imag(const FField& f, const CotangentState& s);

// A Hamiltonian with a candidate first integral.
struct Flow {
    std::function<double(const CotangentState&)> H;
    // (dH/dphi, dH/dy, dH/dp_phi, dH/dp_y)
    std::function<std::array<double, 4>(const CotangentState&)> grad_H;
    std::function<double(const CotangentState&)> F;
};

enum class FlowMode { geodesic, conservative };

const char* flow_mode_name(FlowMode m);
FlowMode parse_flow_mode(const std::string& s);

// H = |p|^2 / (2 lambda) with lambda = f_pp + f_yy, F from the same f.
Flow geodesic_flow(std::shared_ptr<const FField> f);
// geodesic flow of a family model at its own energy constant
Flow geodesic_flow(const HamiltonianModel& model);
// H = K + U of the model; F is the geodesic integral of the Jacobi metric at E = H(state).
Flow conservative_flow(const HamiltonianModel& model);
Flow make_flow(const HamiltonianModel& model, FlowMode mode);
// same H, F replaced
Flow with_integral(Flow flow, std::function<double(const CotangentState&)> F);

// |{F, H}| / (|grad F| |grad H|) with central differences, step h_fd relative to the state scale.
double bracket_residual(const Flow& flow, const CotangentState& s, double h_fd = 6.0554544523933395e-06);

struct FlowSample {
    double t = 0.0;
    CotangentState s;
    double H = 0.0;
    double F = 0.0;
};

struct FlowOptions {
    double rel_tol = 1e-12;
    double abs_tol = 1e-12;
    int dense_per_step = 2;  // extra interior samples per step
};

std::vector<FlowSample> integrate_flow(const Flow& flow, const CotangentState& s0, double horizon,
                                       const FlowOptions& opt = {});

struct Drift {
    double F = 0.0;  // max |F(t) - F(0)| / max(1, |F(0)|)
    double H = 0.0;  // max |H(t) - H(0)| / |H(0)|
    std::size_t samples = 0;
};

Drift conservation_drift(const Flow& flow, const CotangentState& s0, double horizon, const FlowOptions& opt = {});

// d/dphi((f_pp - f_yy) lambda) - 2 d/dy(f_py lambda)
double eqpde_residual(const FField& f, double phi, double y);

// Coefficient recurrence of a degree-n integral in a conformal chart w = phi + i y:
// row k = theta d_w b_{k-1} + (n-k+1) b_{k-1} d_w theta + theta d_wbar b_k + k b_k d_wbar theta.
using ComplexField = std::function<std::complex<double>(double, double)>;
std::vector<double> systpde_residuals(const std::function<double(double, double)>& theta,
                                      const std::vector<ComplexField>& b, double phi, double y, double h = 1e-3);
// b = (1, a1, conj a1, 1) of an f-field
std::vector<ComplexField> cubic_coefficients(std::shared_ptr<const FField> f);

struct PolarBound {
    bool bounded = false;
    std::string note;
    double sup = 0.0;
    std::vector<double> radii;
    std::vector<double> values;  // max over rays of |a1| |w|^3 at each radius, chart r then chart r~
};

PolarBound polar_integral_bound(const HamiltonianModel& model);

}  // namespace s2c
