#include <benchmark/benchmark.h>

#include "driftlab/constants.hpp"

using namespace driftlab;

static void BM_BuildWeight(benchmark::State& state) {
  for (auto _ : state) {
    WeightFunction w(1.0, 0.5, 1.0, static_cast<int>(state.range(0)));
    benchmark::DoNotOptimize(w.kappa_inf());
  }
}
BENCHMARK(BM_BuildWeight)->Arg(1)->Arg(2)->Arg(3);

static void BM_KappaEval(benchmark::State& state) {
  const WeightFunction w(1.0, 0.5, 1.0, 1);
  double r = 0.0;
  for (auto _ : state) {
    r += 1e-3;
    if (r > w.support_r2()) r = 0.0;
    benchmark::DoNotOptimize(w.kappa_r(r));
  }
}
BENCHMARK(BM_KappaEval);

static void BM_GradKappaEval(benchmark::State& state) {
  const WeightFunction w(1.0, 0.5, 1.0, 1);
  Vec x = Vec::Constant(1, 0.3);
  for (auto _ : state) {
    x[0] += 1e-3;
    if (x[0] * x[0] > w.support_r2()) x[0] = 0.0;
    benchmark::DoNotOptimize(w.grad_kappa(x));
  }
}
BENCHMARK(BM_GradKappaEval);

static void BM_BallSup(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  for (auto _ : state) {
    const BallSup s = ball_sup(
        [](const Vec& x) { return -x.squaredNorm() + x.sum(); }, d, 2.0);
    benchmark::DoNotOptimize(s.value);
  }
}
BENCHMARK(BM_BallSup)->Arg(1)->Arg(2)->Arg(3);
