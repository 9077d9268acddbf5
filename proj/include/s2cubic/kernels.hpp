#pragma once

#include <cstdint>
#include <vector>

#include "s2cubic/critical_tau.hpp"
#include "s2cubic/cubic.hpp"
#include "s2cubic/metric.hpp"

namespace s2c {

// Batch evaluators with a serial reference and an OpenMP version; both give
// identical results (each item is computed independently, reductions are
// done in index order).
enum class Exec { serial, parallel };

const char* exec_name(Exec e);

struct Grid2 {
    double phi_lo = 0.0, phi_hi = 2.0 * M_PI;
    double y_lo = -6.0, y_hi = 6.0;
    int n_phi = 200, n_y = 200;

    double phi(int i) const { return phi_lo + (phi_hi - phi_lo) * i / n_phi; }  // periodic, end excluded
    double y(int j) const { return n_y > 1 ? y_lo + (y_hi - y_lo) * j / (n_y - 1) : y_lo; }
};

struct Range {
    double min = 0.0;
    double max = 0.0;
};

// lambda at energy E over the grid
Range lambda_range(const HamiltonianModel& model, double E, const Grid2& grid, Exec exec);
// geodesic Gaussian curvature, row-major (phi outer)
std::vector<double> curvature_grid(const HamiltonianModel& model, const Grid2& grid, Exec exec);

std::vector<ProbeOutcome> probe_sweep(const std::vector<double>& taus, double t_max, Exec exec);

std::vector<double> bracket_batch(const Flow& flow, const std::vector<CotangentState>& states, Exec exec);
std::vector<Drift> drift_batch(const Flow& flow, const std::vector<CotangentState>& states, double horizon, Exec exec,
                               const FlowOptions& opt = {});

struct StateBox {
    double y_lo = -2.0, y_hi = 2.0;
    double p_max = 1.0;
};

// phi uniform in [0, 2 pi), y uniform in the box, momenta uniform in [-p_max, p_max]
std::vector<CotangentState> random_states(std::uint64_t seed, int n, const StateBox& box = {});

}  // namespace s2c
