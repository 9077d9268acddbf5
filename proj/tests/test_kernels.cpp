#include "doctest.h"

#include <cmath>
#include <memory>

#include "s2cubic/errors.hpp"
#include "s2cubic/kernels.hpp"

using namespace s2c;

TEST_CASE("serial and parallel kernels agree bit for bit")
{
    const auto p = std::make_shared<const PsiProfile>(build_psi(0.3));
    const auto m = HamiltonianModel::family_a(p, 1.0);
    Grid2 g;
    g.n_phi = 40;
    g.n_y = 30;
    const Range a = lambda_range(m, 1.0, g, Exec::serial), b = lambda_range(m, 1.0, g, Exec::parallel);
    CHECK(a.min == b.min);
    CHECK(a.max == b.max);
    CHECK(curvature_grid(m, g, Exec::serial) == curvature_grid(m, g, Exec::parallel));

    const auto states = random_states(42, 12);
    const Flow fl = geodesic_flow(m);
    CHECK(bracket_batch(fl, states, Exec::serial) == bracket_batch(fl, states, Exec::parallel));
    const auto ds = drift_batch(fl, {states.begin(), states.begin() + 3}, 2.0, Exec::serial);
    const auto dp = drift_batch(fl, {states.begin(), states.begin() + 3}, 2.0, Exec::parallel);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        CHECK(ds[i].F == dp[i].F);
        CHECK(ds[i].H == dp[i].H);
    }
    const std::vector<double> taus{0.0, 0.3, 2.0};
    const auto ps = probe_sweep(taus, 30.0, Exec::serial), pp = probe_sweep(taus, 30.0, Exec::parallel);
    for (std::size_t i = 0; i < taus.size(); ++i) {
        CHECK(ps[i].kind == pp[i].kind);
        CHECK(ps[i].t == pp[i].t);
    }
    CHECK(ps[0].kind == ProbeKind::global_positive);
    CHECK(ps[2].kind != ProbeKind::global_positive);
}

TEST_CASE("random states are reproducible and inside the box")
{
    StateBox box;
    box.y_lo = -1.0;
    box.y_hi = 0.5;
    box.p_max = 2.0;
    const auto a = random_states(7, 500, box), b = random_states(7, 500, box);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].phi == b[i].phi);
        CHECK(a[i].p_y == b[i].p_y);
        CHECK(a[i].phi >= 0.0);
        CHECK(a[i].phi < 2.0 * M_PI);
        CHECK(a[i].y >= -1.0);
        CHECK(a[i].y < 0.5);
        CHECK(std::abs(a[i].p_phi) <= 2.0);
    }
    CHECK(random_states(8, 1, box)[0].phi != a[0].phi);
}

TEST_CASE("batch errors surface after the loop")
{
    const auto f = harmonic_f(1.0);
    const Flow fl = geodesic_flow(std::shared_ptr<const FField>(f));
    CHECK_THROWS_AS(bracket_batch(fl, random_states(1, 4), Exec::parallel), Error);
}
