#include "porobiot/linalg.hpp"
#include "porobiot/schemes.hpp"

#include <benchmark/benchmark.h>

using namespace porobiot;

namespace {

struct Monolithic {
    std::shared_ptr<const Discretization> disc;
    std::unique_ptr<SchemeSolver> solver;
    Vector rhs;
};

Monolithic monolithic(int n)
{
    Monolithic m;
    const auto mat = unit_material();
    const auto prob = manufactured_problem(mat);
    auto mesh = std::make_shared<const Mesh>(generate_rect_mesh({0, 0}, {1, 1}, n, n));
    m.disc = std::make_shared<const Discretization>(discretize(mesh, mat, prob));
    SchemeConfig cfg;
    cfg.kind = SchemeKind::Monolithic;
    cfg.L1 = 0.5;
    cfg.L2 = 1.0;
    m.solver = std::make_unique<SchemeSolver>(m.disc, mat, cfg, 0.25);
    const auto seed = initial_state(*m.disc, prob);
    m.rhs = m.solver->monolithic_rhs(m.solver->prepare(prob, seed, 0.25), seed);
    return m;
}

} // namespace

static void BM_Factorize(benchmark::State& st)
{
    const auto m = monolithic(static_cast<int>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(Factorization(m.solver->monolithic_matrix()));
    st.counters["dofs"] = static_cast<double>(m.rhs.size());
}
BENCHMARK(BM_Factorize)->RangeMultiplier(2)->Range(8, 64)->Unit(benchmark::kMillisecond);

static void BM_BackSolve(benchmark::State& st)
{
    const auto m = monolithic(static_cast<int>(st.range(0)));
    const Factorization f(m.solver->monolithic_matrix());
    for (auto _ : st) benchmark::DoNotOptimize(f.solve(m.rhs));
    st.counters["dofs"] = static_cast<double>(m.rhs.size());
}
BENCHMARK(BM_BackSolve)->RangeMultiplier(2)->Range(8, 64)->Unit(benchmark::kMillisecond);

static void BM_PreconditionedGmres(benchmark::State& st)
{
    const auto m = monolithic(static_cast<int>(st.range(0)));
    const auto pc = m.solver->make_preconditioner();
    int iters = 0;
    for (auto _ : st) {
        const auto r = gmres(m.solver->monolithic_matrix(), m.rhs, pc.as_operator(), {50, 1e-8, 500});
        iters = r.second.iterations;
        benchmark::DoNotOptimize(r.first);
    }
    st.counters["iters"] = iters;
}
BENCHMARK(BM_PreconditionedGmres)->RangeMultiplier(2)->Range(8, 64)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
