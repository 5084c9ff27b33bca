#include <benchmark/benchmark.h>

#include "driftlab/model.hpp"
#include "driftlab/simulate.hpp"

using namespace driftlab;

static void BM_EulerMaruyama(benchmark::State& state) {
  const DriftModel pw = make_power_law(1, 4.0);
  SimConfig cfg;
  cfg.T = 10.0;
  cfg.dt = 1e-3;
  cfg.t_max = 1.0;
  cfg.output_times = {1.0};
  std::uint64_t traj = 0;
  for (auto _ : state)
    benchmark::DoNotOptimize(
        euler_maruyama(pw, Vec::Constant(1, 0.1), cfg, traj++).states.back());
  state.SetItemsProcessed(state.iterations() * 1000);  // steps
}
BENCHMARK(BM_EulerMaruyama);

static void BM_SynchronousCoupling(benchmark::State& state) {
  const DriftModel pw = make_power_law(1, 4.0);
  SimConfig cfg;
  cfg.T = 65.0;
  cfg.dt = 1e-3;
  cfg.t_max = 1.0;
  cfg.n_traj = 64;
  cfg.output_times = {1.0};
  for (auto _ : state) {
    const CouplingStats st = synchronous_coupling(
        pw,
        [](std::uint64_t) {
          return std::pair{Vec::Constant(1, 0.0), Vec::Constant(1, 2.0)};
        },
        cfg);
    benchmark::DoNotOptimize(st.dist.back());
  }
  state.SetItemsProcessed(state.iterations() * cfg.n_traj * 1000);
}
BENCHMARK(BM_SynchronousCoupling)->Unit(benchmark::kMillisecond);

static void BM_ParticleStep(benchmark::State& state) {
  const int N = static_cast<int>(state.range(0));
  InteractionSpec inter;
  inter.H_diff_1d = [](double u) { return -0.1 * std::tanh(u); };
  inter.antisymmetric = true;
  SimConfig cfg;
  cfg.T = 9.0;
  cfg.dt = 2e-3;
  cfg.t_max = 0.1;  // 50 steps per call
  cfg.output_times = {0.1};
  Mat x0 = Mat::Zero(N, 1);
  for (int i = 0; i < N; ++i) x0(i, 0) = -2.0 + 4.0 * i / (N - 1);
  auto F = [](const Vec& x) { return Vec(-x.array().pow(3).matrix()); };
  for (auto _ : state) {
    const ParticlePath p = particle_system(F, 1, inter, N, x0, cfg);
    benchmark::DoNotOptimize(p.states.back()(0, 0));
  }
  state.SetItemsProcessed(state.iterations() * 50 * N * (N - 1) / 2);  // pair evals
}
BENCHMARK(BM_ParticleStep)->Arg(64)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);
