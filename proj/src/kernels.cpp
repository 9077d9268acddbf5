#include "s2cubic/kernels.hpp"

#include <algorithm>
#include <exception>
#include <random>

#include "s2cubic/errors.hpp"

namespace s2c {

const char* exec_name(Exec e) { return e == Exec::serial ? "serial" : "parallel"; }

namespace {

// runs body(i) for i in [0, n); the lowest-index exception is rethrown
template <class Body>
void for_each_index(int n, Exec exec, Body&& body)
{
    std::vector<std::exception_ptr> errs(static_cast<std::size_t>(n));
    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic)
        for (int i = 0; i < n; ++i) {
            try {
                body(i);
            } catch (...) {
                errs[i] = std::current_exception();
            }
        }
    } else {
        for (int i = 0; i < n; ++i) {
            try {
                body(i);
            } catch (...) {
                errs[i] = std::current_exception();
            }
        }
    }
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
}

void check_grid(const Grid2& g)
{
    if (g.n_phi < 1 || g.n_y < 1) throw Error(Errc::invalid_argument, "grid needs at least one point per axis");
}

}  // namespace

Range lambda_range(const HamiltonianModel& model, double E, const Grid2& grid, Exec exec)
{
    check_grid(grid);
    std::vector<Range> rows(grid.n_phi);
    for_each_index(grid.n_phi, exec, [&](int i) {
        Range r{1e300, -1e300};
        for (int j = 0; j < grid.n_y; ++j) {
            const double l = model.lambda_at_energy(grid.phi(i), grid.y(j), E);
            r.min = std::min(r.min, l);
            r.max = std::max(r.max, l);
        }
        rows[i] = r;
    });
    Range out{1e300, -1e300};
    for (const auto& r : rows) {
        out.min = std::min(out.min, r.min);
        out.max = std::max(out.max, r.max);
    }
    return out;
}

std::vector<double> curvature_grid(const HamiltonianModel& model, const Grid2& grid, Exec exec)
{
    check_grid(grid);
    std::vector<double> K(static_cast<std::size_t>(grid.n_phi) * grid.n_y);
    for_each_index(grid.n_phi, exec, [&](int i) {
        for (int j = 0; j < grid.n_y; ++j) K[static_cast<std::size_t>(i) * grid.n_y + j] = gaussian_curvature(model, grid.phi(i), grid.y(j));
    });
    return K;
}

std::vector<ProbeOutcome> probe_sweep(const std::vector<double>& taus, double t_max, Exec exec)
{
    std::vector<ProbeOutcome> out(taus.size());
    for_each_index(static_cast<int>(taus.size()), exec, [&](int i) { out[i] = tau_probe(taus[i], t_max); });
    return out;
}

std::vector<double> bracket_batch(const Flow& flow, const std::vector<CotangentState>& states, Exec exec)
{
    std::vector<double> out(states.size());
    for_each_index(static_cast<int>(states.size()), exec, [&](int i) { out[i] = bracket_residual(flow, states[i]); });
    return out;
}

std::vector<Drift> drift_batch(const Flow& flow, const std::vector<CotangentState>& states, double horizon, Exec exec,
                               const FlowOptions& opt)
{
    std::vector<Drift> out(states.size());
    for_each_index(static_cast<int>(states.size()), exec,
                   [&](int i) { out[i] = conservation_drift(flow, states[i], horizon, opt); });
    return out;
}

std::vector<CotangentState> random_states(std::uint64_t seed, int n, const StateBox& box)
{
    if (n < 0) throw Error(Errc::invalid_argument, "negative state count");
    // uniform doubles from the top 53 bits of each draw
    std::mt19937_64 rng(seed);
    auto uni = [&](double a, double b) { return a + (b - a) * static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    std::vector<CotangentState> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
        CotangentState s;
        s.phi = uni(0.0, 2.0 * M_PI);
        s.y = uni(box.y_lo, box.y_hi);
        s.p_phi = uni(-box.p_max, box.p_max);
        s.p_y = uni(-box.p_max, box.p_max);
        out.push_back(s);
    }
    return out;
}

}  // namespace s2c
