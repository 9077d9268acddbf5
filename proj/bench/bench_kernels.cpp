#include <benchmark/benchmark.h>

#include <memory>

#include "s2cubic/kernels.hpp"

using namespace s2c;

namespace {

const HamiltonianModel& model()
{
    static const auto p = std::make_shared<const PsiProfile>(build_psi(0.3));
    static const HamiltonianModel m = HamiltonianModel::family_a(p, 1.0);
    return m;
}

Exec exec_of(const benchmark::State& st) { return st.range(0) == 0 ? Exec::serial : Exec::parallel; }

void BM_lambda_range(benchmark::State& st)
{
    Grid2 g;
    for (auto _ : st) benchmark::DoNotOptimize(lambda_range(model(), 1.0, g, exec_of(st)));
    st.SetLabel(exec_name(exec_of(st)));
}

void BM_curvature_grid(benchmark::State& st)
{
    Grid2 g;
    g.n_phi = 64;
    g.n_y = 64;
    for (auto _ : st) benchmark::DoNotOptimize(curvature_grid(model(), g, exec_of(st)));
    st.SetLabel(exec_name(exec_of(st)));
}

void BM_bracket_batch(benchmark::State& st)
{
    const Flow fl = geodesic_flow(model());
    const auto states = random_states(1, 100);
    for (auto _ : st) benchmark::DoNotOptimize(bracket_batch(fl, states, exec_of(st)));
    st.SetLabel(exec_name(exec_of(st)));
}

void BM_drift_batch(benchmark::State& st)
{
    const Flow fl = geodesic_flow(model());
    const auto states = random_states(2, 8);
    for (auto _ : st) benchmark::DoNotOptimize(drift_batch(fl, states, 10.0, exec_of(st)));
    st.SetLabel(exec_name(exec_of(st)));
}

void BM_probe_sweep(benchmark::State& st)
{
    std::vector<double> taus;
    for (int i = 0; i < 8; ++i) taus.push_back(0.1 * i);
    for (auto _ : st) benchmark::DoNotOptimize(probe_sweep(taus, 30.0, exec_of(st)));
    st.SetLabel(exec_name(exec_of(st)));
}

}  // namespace

BENCHMARK(BM_lambda_range)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_curvature_grid)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_bracket_batch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_drift_batch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_probe_sweep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
