#include <benchmark/benchmark.h>

#include "driftlab/model.hpp"
#include "driftlab/spectral.hpp"

using namespace driftlab;

static void BM_BuildOperator1d(benchmark::State& state) {
  const DriftModel pw = make_power_law(1, 4.0);
  const Grid g(6.0, static_cast<int>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(build_operator(pw, 1.0, g).adjoint_residual);
}
BENCHMARK(BM_BuildOperator1d)->Arg(2001)->Arg(4001)->Unit(benchmark::kMillisecond);

static void BM_Poincare1d(benchmark::State& state) {
  const DriftModel pw = make_power_law(1, 4.0);
  const GridOperator op = build_operator(pw, 1.0, Grid(6.0, 2001));
  for (auto _ : state) benchmark::DoNotOptimize(poincare_constant(op));
}
BENCHMARK(BM_Poincare1d)->Unit(benchmark::kMillisecond);

static void BM_Poincare2d(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const DriftModel pw = make_power_law(2, 4.0);
  const GridOperator op = build_operator(pw, 1.0, Grid(5.0, n, 5.0, n));
  for (auto _ : state) benchmark::DoNotOptimize(poincare_constant(op));
}
BENCHMARK(BM_Poincare2d)->Arg(101)->Arg(201)->Unit(benchmark::kMillisecond);

static void BM_SemigroupEvolve(benchmark::State& state) {
  const GridOperator op = build_operator(make_ou(1), 1.0, Grid(8.0, 2001));
  Eigen::VectorXd f(op.grid.n[0]);
  for (int i = 0; i < op.grid.n[0]; ++i) f[i] = op.grid.coord(0, i);
  for (auto _ : state)
    benchmark::DoNotOptimize(semigroup_evolve(op, f, 1.0, 0.01).sum());
}
BENCHMARK(BM_SemigroupEvolve)->Unit(benchmark::kMillisecond);
