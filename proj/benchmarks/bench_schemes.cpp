#include "porobiot/schemes.hpp"

#include <benchmark/benchmark.h>

using namespace porobiot;

// One L-scheme iteration with factorizations already cached.
static void BM_Iteration(benchmark::State& st)
{
    const int n = static_cast<int>(st.range(0));
    const auto kind = st.range(1) == 0 ? SchemeKind::Splitting : SchemeKind::Monolithic;
    const auto mat = unit_material(LawCase::T1C1);
    const auto prob = manufactured_problem(mat);
    auto mesh = std::make_shared<const Mesh>(generate_rect_mesh({0, 0}, {1, 1}, n, n));
    auto disc = std::make_shared<const Discretization>(discretize(mesh, mat, prob));
    SchemeConfig cfg;
    cfg.kind = kind;
    const auto L = preset_l(LPreset::Practical, kind, mat, mat.constants);
    cfg.L1 = L.L1;
    cfg.L2 = L.L2;
    const SchemeSolver solver(disc, mat, cfg, 0.25);
    const auto prev = initial_state(*disc, prob);
    const auto data = solver.prepare(prob, prev, 0.25);
    for (auto _ : st) benchmark::DoNotOptimize(solver.iterate(data, prev));
    st.SetLabel(to_string(kind));
}
BENCHMARK(BM_Iteration)->ArgsProduct({{8, 16, 32, 64}, {0, 1}})->Unit(benchmark::kMillisecond);

// A full backward Euler step, including solver setup.
static void BM_TimeStep(benchmark::State& st)
{
    const int n = static_cast<int>(st.range(0));
    const auto kind = st.range(1) == 0 ? SchemeKind::Splitting : SchemeKind::Monolithic;
    const auto mat = unit_material(LawCase::T1C1);
    const auto prob = manufactured_problem(mat);
    auto mesh = std::make_shared<const Mesh>(generate_rect_mesh({0, 0}, {1, 1}, n, n));
    SchemeConfig cfg;
    cfg.kind = kind;
    const auto L = preset_l(LPreset::Practical, kind, mat, mat.constants);
    cfg.L1 = L.L1;
    cfg.L2 = L.L2;
    int iters = 0;
    for (auto _ : st) {
        const auto r = time_march(prob, mesh, mat, cfg, 0.25, 1);
        iters = r.traces[0].iterations;
    }
    st.counters["iters"] = iters;
    st.SetLabel(to_string(kind));
}
BENCHMARK(BM_TimeStep)->ArgsProduct({{8, 16, 32}, {0, 1}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
