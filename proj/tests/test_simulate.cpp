#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "driftlab/model.hpp"
#include "driftlab/rng.hpp"
#include "driftlab/simulate.hpp"

using namespace driftlab;

namespace {
Vec v1(double x) { return Vec::Constant(1, x); }

SimConfig base_config(double T, double dt, double t_max, int n_traj,
                      std::uint64_t seed) {
  SimConfig c;
  c.T = T;
  c.dt = dt;
  c.t_max = t_max;
  c.n_traj = n_traj;
  c.seed = seed;
  return c;
}
}  // namespace

TEST_CASE("euler_maruyama: zero-noise OU is the exact recursion") {
  SimConfig c = base_config(0.0, 0.01, 1.0, 1, 3);
  c.output_times = {0.0, 0.5, 1.0};
  const Path p = euler_maruyama(make_ou(1), v1(1.0), c);
  CHECK(p.states[0][0] == 1.0);
  CHECK(p.states[1][0] == doctest::Approx(std::pow(0.99, 50)).epsilon(1e-12));
  CHECK(p.states[2][0] == doctest::Approx(std::pow(0.99, 100)).epsilon(1e-12));
}

TEST_CASE("euler_maruyama: Brownian variance grows like t") {
  DriftModel flat;
  flat.name = "flat";
  flat.dim = 1;
  flat.drift = [](const Vec& x) { return Vec(Vec::Zero(x.size())); };
  SimConfig c = base_config(0.5, 0.01, 1.0, 10000, 11);
  c.output_times = {1.0};
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < c.n_traj; ++i) {
    const double x = euler_maruyama(flat, v1(0.0), c, i).states.back()[0];
    s += x;
    s2 += x * x;
  }
  const double var = s2 / c.n_traj - (s / c.n_traj) * (s / c.n_traj);
  // Var X_t = 2 T t = 1; 3 sigma on the variance estimate ~ 3 sqrt(2/n)
  CHECK(std::abs(var - 1.0) < 3.0 * std::sqrt(2.0 / c.n_traj));
}

TEST_CASE("euler_maruyama: bit-identical across runs, abort on divergence") {
  SimConfig c = base_config(1.0, 1e-3, 0.25, 1, 77);
  c.output_times = {0.25};
  const Path a = euler_maruyama(make_ou(1), v1(0.3), c, 5);
  const Path b = euler_maruyama(make_ou(1), v1(0.3), c, 5);
  CHECK(a.states.back()[0] == b.states.back()[0]);

  DriftModel exploding;
  exploding.name = "exploding";
  exploding.dim = 1;
  exploding.drift = [](const Vec& x) { return Vec(x * 1e9); };
  CHECK_THROWS_AS((void)euler_maruyama(exploding, v1(1.0), c), SimulationError);
}

TEST_CASE("euler_maruyama: weak order 1 slope on the OU second moment") {
  // exact discrete recursion as oracle removes MC noise entirely
  auto discrete_m2 = [](double dt, int n, double T) {
    double m2 = 4.0;  // x0 = 2
    for (int k = 0; k < n; ++k) m2 = (1 - dt) * (1 - dt) * m2 + 2 * T * dt;
    return m2;
  };
  const double exact = 4.0 * std::exp(-2.0) + 1.0 * (1.0 - std::exp(-2.0));
  std::vector<double> dts = {0.05, 0.025, 0.0125}, errs;
  for (double dt : dts)
    errs.push_back(std::abs(discrete_m2(dt, static_cast<int>(1.0 / dt), 1.0) - exact));
  const double slope01 = std::log2(errs[0] / errs[1]);
  const double slope12 = std::log2(errs[1] / errs[2]);
  CHECK(slope01 > 0.7);
  CHECK(slope01 < 1.3);
  CHECK(slope12 > 0.7);
  CHECK(slope12 < 1.3);

  // and the sampled scheme matches its own exact recursion in distribution
  SimConfig c = base_config(1.0, 0.05, 1.0, 20000, 13);
  c.output_times = {1.0};
  double s2 = 0.0;
  for (int i = 0; i < c.n_traj; ++i) {
    const double x = euler_maruyama(make_ou(1), v1(2.0), c, i).states.back()[0];
    s2 += x * x;
  }
  const double target = discrete_m2(0.05, 20, 1.0);
  CHECK(std::abs(s2 / c.n_traj - target) <
        3.0 * std::sqrt(2.0) * target / std::sqrt(c.n_traj));
}

TEST_CASE("synchronous coupling: OU difference is exactly deterministic") {
  SimConfig c = base_config(1.0, 0.01, 1.0, 64, 5);
  c.output_times = {0.0, 0.25, 0.5, 1.0};
  const CouplingStats st = synchronous_coupling(
      make_ou(1), [](std::uint64_t) { return std::pair{v1(0.0), v1(2.0)}; }, c);
  for (std::size_t k = 0; k < st.times.size(); ++k) {
    const double expect = 2.0 * std::pow(0.99, st.times[k] / 0.01);
    CHECK(st.dist[k] == doctest::Approx(expect).epsilon(1e-11));
    CHECK(st.pow_moment.stderr_[k] < 1e-11);  // noise cancels pathwise
  }
}

TEST_CASE("synchronous coupling: worker count does not change estimates") {
  SimConfig c = base_config(2.0, 0.01, 0.5, 128, 17);
  c.output_times = {0.5};
  auto init = [](std::uint64_t i) {
    return std::pair{v1(-1.0 + 0.01 * static_cast<double>(i % 7)), v1(1.0)};
  };
  const DriftModel pw = make_power_law(1, 4.0);
  c.workers = 1;
  const double a = synchronous_coupling(pw, init, c).pow_moment.mean[0];
  c.workers = 4;
  const double b = synchronous_coupling(pw, init, c).pow_moment.mean[0];
  CHECK(a == b);
}

TEST_CASE("submartingale check: OU with trivial weight passes exactly") {
  SimConfig c = base_config(1.0, 0.01, 2.0, 256, 23);
  c.output_times = {0.0, 0.5, 1.0, 1.5, 2.0};
  const WeightFunction w = build_weight(0, 1, 0, 1);  // kappa == 0
  const SubmartingaleReport rep = submartingale_check(
      make_ou(1), w, [](std::uint64_t) { return std::pair{v1(0.0), v1(2.0)}; }, c,
      2.0, 1.0);
  CHECK(rep.pass);  // e^{2t} E|X-Y|^2 decays like (e^{dt}(1-dt))^{2t/dt}
}

TEST_CASE("submartingale check: deep double well at tiny T fails loudly") {
  // wells at +-1, barrier 1/4, T = 0.05: no well hopping on this horizon while
  // e^{2 lambda t} grows, so the discounted weighted distance must increase
  const DriftModel dw = make_double_well(1);
  const auto [K, R, cc] = *dw.assumption;
  const WeightFunction w = build_weight(K, cc, R, 1);
  SimConfig c = base_config(0.05, 1e-3, 3.0, 512, 29);
  c.output_times = {0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
  const SubmartingaleReport rep = submartingale_check(
      dw, w, [](std::uint64_t) { return std::pair{v1(-1.0), v1(1.0)}; }, c, 2.0,
      cc / 4.0);
  CHECK_FALSE(rep.pass);
  CHECK(rep.first_violation > 0);
}

TEST_CASE("perturbed coupling: identical drifts collapse to zero distance") {
  const DriftModel pw = make_power_law(1, 4.0);
  SimConfig c = base_config(35.0, 1e-2, 1.0, 128, 31);
  c.output_times = {0.0, 0.5, 1.0};
  const PerturbedReport rep = perturbed_coupling(
      pw, pw, [](std::uint64_t i) { return v1(0.01 * static_cast<double>(i % 5)); },
      c);
  CHECK(rep.all_below);
  for (double wv : rep.w_empirical) CHECK(wv == doctest::Approx(0.0));
}

TEST_CASE("particle system: no interaction decouples (KS test at 1%)") {
  const DriftModel ou = make_ou(1);
  SimConfig c = base_config(1.0, 0.01, 1.0, 1, 37);
  c.output_times = {1.0};
  const int N = 4000;
  InteractionSpec inter;  // H absent
  Mat x0 = Mat::Zero(N, 1);
  const ParticlePath pp =
      particle_system([&](const Vec& x) { return ou.drift(x); }, 1, inter, N, x0, c);

  // reference: independent single trajectories with the same marginal law
  std::vector<double> ref(N);
  SimConfig c2 = c;
  c2.seed = 4242;
  for (int i = 0; i < N; ++i)
    ref[static_cast<std::size_t>(i)] =
        euler_maruyama(ou, v1(0.0), c2, static_cast<std::uint64_t>(i)).states.back()[0];
  std::vector<double> got(N);
  for (int i = 0; i < N; ++i) got[static_cast<std::size_t>(i)] = pp.states.back()(i, 0);
  std::sort(ref.begin(), ref.end());
  std::sort(got.begin(), got.end());
  // two-sample KS
  double ks = 0.0;
  std::size_t i = 0, j = 0;
  while (i < ref.size() && j < got.size()) {
    if (ref[i] <= got[j]) ++i;
    else ++j;
    ks = std::max(ks,
                  std::abs(static_cast<double>(i) / N - static_cast<double>(j) / N));
  }
  const double crit = 1.628 * std::sqrt(2.0 / N);  // alpha = 1%
  CHECK(ks < crit);
}

TEST_CASE("particle system: N=2 linear interaction matches the hand recursion") {
  InteractionSpec inter;
  inter.H = [](const Vec& x, const Vec& y) { return Vec(-(x - y)); };
  SimConfig c = base_config(0.0, 0.01, 1.0, 1, 41);  // T = 0: deterministic
  c.output_times = {1.0};
  Mat x0(2, 1);
  x0 << 1.0, -1.0;
  const ParticlePath pp =
      particle_system([](const Vec& x) { return Vec(-x); }, 1, inter, 2, x0, c);
  double a = 1.0, b = -1.0;
  for (int k = 0; k < 100; ++k) {
    const double ga = -a - (a - b) / 2.0, gb = -b - (b - a) / 2.0;
    a += 0.01 * ga;
    b += 0.01 * gb;
  }
  CHECK(pp.states.back()(0, 0) == doctest::Approx(a).epsilon(1e-12));
  CHECK(pp.states.back()(1, 0) == doctest::Approx(b).epsilon(1e-12));
}

TEST_CASE("particle system: permutation equivariance via substreams") {
  InteractionSpec inter;
  inter.H_diff_1d = [](double u) { return -std::tanh(u); };
  inter.antisymmetric = true;
  SimConfig c = base_config(0.7, 0.01, 0.3, 1, 53);
  c.output_times = {0.3};
  const int N = 5;
  Mat x0(N, 1);
  x0 << -2, -1, 0, 1, 2;
  auto F = [](const Vec& x) { return Vec(-x); };
  const ParticlePath base = particle_system(F, 1, inter, N, x0, c);

  const std::vector<int> perm = {3, 0, 4, 1, 2};
  Mat px0(N, 1);
  for (int i = 0; i < N; ++i) px0(i, 0) = x0(perm[static_cast<std::size_t>(i)], 0);
  const ParticlePath permuted = particle_system(
      F, 1, inter, N, px0, c, [&](int i) {
        return static_cast<std::uint64_t>(perm[static_cast<std::size_t>(i)]);
      });
  for (int i = 0; i < N; ++i)
    CHECK(permuted.states.back()(i, 0) ==
          doctest::Approx(base.states.back()(perm[static_cast<std::size_t>(i)], 0))
              .epsilon(1e-13));
}

TEST_CASE("particle system: fast 1d kernel agrees with the generic path") {
  InteractionSpec fast;
  fast.H_diff_1d = [](double u) { return -0.3 * std::tanh(u); };
  fast.antisymmetric = true;
  InteractionSpec slow;
  slow.H = [](const Vec& x, const Vec& y) {
    return Vec(Vec::Constant(1, -0.3 * std::tanh(x[0] - y[0])));
  };
  SimConfig c = base_config(0.5, 0.01, 0.5, 1, 59);
  c.output_times = {0.5};
  Mat x0(8, 1);
  x0 << -3, -2, -1, -0.5, 0.5, 1, 2, 3;
  auto F = [](const Vec& x) { return Vec(-x); };
  const ParticlePath a = particle_system(F, 1, fast, 8, x0, c);
  const ParticlePath b = particle_system(F, 1, slow, 8, x0, c);
  for (int i = 0; i < 8; ++i)
    CHECK(a.states.back()(i, 0) ==
          doctest::Approx(b.states.back()(i, 0)).epsilon(1e-12));
}

TEST_CASE("moment tracker: OU stationary second moment is T") {
  const DriftModel ou = make_ou(1);
  SimConfig c = base_config(1.0, 0.005, 6.0, 4000, 61);
  c.output_times = {6.0};
  std::vector<Path> paths(static_cast<std::size_t>(c.n_traj));
  for (int i = 0; i < c.n_traj; ++i)
    paths[static_cast<std::size_t>(i)] =
        euler_maruyama(ou, v1(0.0), c, static_cast<std::uint64_t>(i));
  const MomentSeries ms = moment_tracker(paths);
  CHECK(std::abs(ms.m2.back() - 1.0) < 3.0 * ms.m2_se.back() + 0.01);
}

TEST_CASE("moment tracker: pure Brownian slope 2Td") {
  DriftModel flat;
  flat.name = "flat";
  flat.dim = 1;
  flat.drift = [](const Vec& x) { return Vec(Vec::Zero(x.size())); };
  SimConfig c = base_config(0.75, 0.01, 2.0, 4000, 67);
  c.output_times = {1.0, 2.0};
  std::vector<Path> paths(static_cast<std::size_t>(c.n_traj));
  for (int i = 0; i < c.n_traj; ++i)
    paths[static_cast<std::size_t>(i)] =
        euler_maruyama(flat, v1(0.0), c, static_cast<std::uint64_t>(i));
  const MomentSeries ms = moment_tracker(paths);
  const double slope = ms.m2[1] - ms.m2[0];
  CHECK(std::abs(slope - 2.0 * 0.75) <
        3.0 * std::hypot(ms.m2_se[0], ms.m2_se[1]) + 0.02);
}

TEST_CASE("output grid validation") {
  SimConfig c = base_config(1.0, 0.1, 1.0, 1, 1);
  c.output_times = {0.05};
  CHECK_THROWS_AS((void)c.output_steps(), std::invalid_argument);
  c.output_times = {2.0};
  CHECK_THROWS_AS((void)c.output_steps(), std::invalid_argument);
  c.output_times.clear();
  c.dt = -1;
  CHECK_THROWS_AS((void)c.output_steps(), std::invalid_argument);
}
