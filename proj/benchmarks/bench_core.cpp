#include "hadamard/assembly.hpp"
#include "hadamard/eigensolver.hpp"
#include "hadamard/random_fields.hpp"
#include "hadamard/variation.hpp"

#include <benchmark/benchmark.h>

#include <numbers>

using namespace hadamard;

namespace {

Problem square_problem(int n)
{
    const double pi = std::numbers::pi;
    auto mesh = std::make_shared<const Mesh>(make_rectangle(0.0, pi, 0.0, pi, n, GridPattern::CrissCross));
    return laplace_problem(mesh, BoundaryCondition::Dirichlet);
}

void BM_Assemble(benchmark::State& state)
{
    const Problem p = square_problem(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(assemble(p));
    }
    state.SetItemsProcessed(state.iterations() * p.mesh->num_cells());
}
BENCHMARK(BM_Assemble)->Arg(32)->Arg(64)->Arg(128);

void BM_Solve(benchmark::State& state)
{
    const OperatorPair op = assemble(square_problem(static_cast<int>(state.range(0))));
    for (auto _ : state) {
        benchmark::DoNotOptimize(solve_eigen(op, 8));
    }
}
BENCHMARK(BM_Solve)->Arg(16)->Arg(48)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_HadamardSlopes(benchmark::State& state)
{
    const Problem p = square_problem(static_cast<int>(state.range(0)));
    const Spectrum sp = solve_eigen(assemble(p), 6);
    const Cluster cl = cluster_near(sp, 5.0);
    auto rng = substream(1, 0);
    VariationSpec v;
    v.family = TensorFamily::metric_itself();
    v.H = random_metric_variation(*p.mesh, p.metric, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(hadamard_slopes(p, sp, cl, v));
    }
}
BENCHMARK(BM_HadamardSlopes)->Arg(32)->Arg(64)->Unit(benchmark::kMicrosecond);

} // namespace

BENCHMARK_MAIN();
