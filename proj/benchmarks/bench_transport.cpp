#include <benchmark/benchmark.h>

#include "driftlab/rng.hpp"
#include "driftlab/transport.hpp"

using namespace driftlab;

namespace {

EmpiricalMeasure cloud(int n, int d, double shift, std::uint64_t seed) {
  CounterRng rng(seed, 0);
  Eigen::MatrixXd pts(n, d);
  std::vector<double> z(static_cast<std::size_t>(d));
  for (int i = 0; i < n; ++i) {
    rng.fill_normals(static_cast<std::uint64_t>(i), z);
    for (int j = 0; j < d; ++j) pts(i, j) = shift + z[static_cast<std::size_t>(j)];
  }
  return EmpiricalMeasure(std::move(pts));
}

}  // namespace

static void BM_W2_1d(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const EmpiricalMeasure X = cloud(n, 1, 0.0, 1), Y = cloud(n, 1, 1.0, 2);
  for (auto _ : state) benchmark::DoNotOptimize(w_alpha_1d(X, Y).cost);
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_W2_1d)->Arg(1024)->Arg(16384);

static void BM_W2_Assignment(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const EmpiricalMeasure X = cloud(n, 2, 0.0, 3), Y = cloud(n, 2, 1.0, 4);
  for (auto _ : state) benchmark::DoNotOptimize(w2_assignment(X, Y).cost);
}
BENCHMARK(BM_W2_Assignment)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);

static void BM_Sinkhorn(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const EmpiricalMeasure X = cloud(n, 2, 0.0, 5), Y = cloud(n, 2, 1.0, 6);
  SinkhornOptions opt;
  opt.epsilon = 0.1;
  for (auto _ : state) benchmark::DoNotOptimize(w2_entropic(X, Y, 2.0, opt).cost);
}
BENCHMARK(BM_Sinkhorn)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
