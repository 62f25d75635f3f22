#include "porobiot/assembly.hpp"
#include "porobiot/physics.hpp"

#include <benchmark/benchmark.h>

using namespace porobiot;

static void BM_Mesh(benchmark::State& st)
{
    const int n = static_cast<int>(st.range(0));
    for (auto _ : st) benchmark::DoNotOptimize(generate_rect_mesh({0, 0}, {1, 1}, n, n));
    st.SetComplexityN(2 * n * n);
}
BENCHMARK(BM_Mesh)->RangeMultiplier(2)->Range(8, 128)->Complexity();

static void BM_Discretize(benchmark::State& st)
{
    const int n = static_cast<int>(st.range(0));
    auto mesh = std::make_shared<const Mesh>(generate_rect_mesh({0, 0}, {1, 1}, n, n));
    const auto mat = unit_material();
    const auto prob = manufactured_problem(mat);
    for (auto _ : st) benchmark::DoNotOptimize(discretize(mesh, mat, prob));
    st.SetComplexityN(2 * n * n);
}
BENCHMARK(BM_Discretize)->RangeMultiplier(2)->Range(8, 128)->Complexity()->Unit(benchmark::kMillisecond);

// Non-linear right-hand side terms for the cube-root law.
static void BM_NonlinearTerms(benchmark::State& st)
{
    const int n = static_cast<int>(st.range(0));
    auto mesh = std::make_shared<const Mesh>(generate_rect_mesh({0, 0}, {1, 1}, n, n));
    const auto mat = unit_material(LawCase::T1C3);
    const auto prob = manufactured_problem(mat);
    const auto disc = discretize(mesh, mat, prob);
    const Vector u = Vector::Constant(disc.ops.A_e.rows(), 0.01);
    const Vector p = Vector::LinSpaced(disc.ops.M_p.rows(), -1.0, 1.0);
    for (auto _ : st) benchmark::DoNotOptimize(assemble_nonlinear_rhs(u, p, disc.ops, mat));
    st.SetComplexityN(2 * n * n);
}
BENCHMARK(BM_NonlinearTerms)->RangeMultiplier(2)->Range(8, 64)->Complexity()->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
