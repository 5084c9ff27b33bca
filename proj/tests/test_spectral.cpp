#include <doctest.h>

#include <cmath>

#include "driftlab/model.hpp"
#include "driftlab/rng.hpp"
#include "driftlab/spectral.hpp"

using namespace driftlab;

TEST_CASE("grid validation") {
  CHECK_THROWS_AS((void)Grid(8.0, 2000), std::invalid_argument);  // even
  CHECK_THROWS_AS((void)Grid(-1.0, 201), std::invalid_argument);
  const Grid g(4.0, 5);
  CHECK(g.h(0) == doctest::Approx(2.0));
  CHECK(g.coord(0, 2) == doctest::Approx(0.0));
}

TEST_CASE("build_operator 1d: OU stationary density is the exact gaussian") {
  const GridOperator op = build_operator(make_ou(1), 1.0, Grid(8.0, 2001));
  double worst = 0.0;
  for (int i = 0; i < 2001; ++i) {
    const double x = op.grid.coord(0, i);
    const double phi = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
    worst = std::max(worst, std::abs(op.mu[i] - phi));
  }
  CHECK(worst < 1e-4);
  // conservation and stationarity structure
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(2001);
  CHECK((op.L * ones).lpNorm<Eigen::Infinity>() < 1e-10 * op.T /
                                                      (op.grid.h(0) * op.grid.h(0)));
  CHECK(op.adjoint_residual < 1e-8);
}

TEST_CASE("build_operator 2d: skew drift keeps the gaussian invariant") {
  const GridOperator op =
      build_operator(make_skew_gradient(2, 1.0), 1.0, Grid(6.0, 161, 6.0, 161));
  CHECK(op.adjoint_residual < 1e-8 * op.T / (op.grid.h(0) * op.grid.h(0)));
  double worst = 0.0;
  for (int idx = 0; idx < op.grid.size(); ++idx) {
    const Vec x = op.grid.point(idx);
    const double phi = std::exp(-0.5 * x.squaredNorm()) / (2.0 * M_PI);
    worst = std::max(worst, std::abs(op.mu[idx] - phi));
  }
  CHECK(worst < 2e-3);
  CHECK(op.mu.minCoeff() > 0.0);
}

TEST_CASE("poincare constant: OU scaling C_P = T") {
  for (double T : {1.0, 4.0}) {
    const Grid g(8.0 * std::sqrt(T), 2001);
    const double cp = poincare_constant(build_operator(make_ou(1), T, g));
    CHECK(std::abs(cp - T) / T < 0.01);
  }
}

TEST_CASE("poincare refinement diagnostics on OU") {
  const PoincareReport rep =
      poincare_with_refinement(make_ou(1), 1.0, Grid(8.0, 401));
  CHECK(rep.C_P == doctest::Approx(1.0).epsilon(0.01));
  CHECK(rep.richardson_slope > 1.7);
  CHECK(rep.richardson_slope < 2.3);
}

TEST_CASE("poincare: beta potential stays under the paper bound, truncation stable") {
  const DriftModel pw = make_power_law(1, 4.0);
  const double cp6 = poincare_constant(build_operator(pw, 1.0, Grid(6.0, 1001)));
  const double cp12 = poincare_constant(build_operator(pw, 1.0, Grid(12.0, 2001)));
  CHECK(cp6 <= 24.0 * std::sqrt(33.0));
  CHECK(std::abs(cp6 - cp12) / cp12 < 0.005);
}

TEST_CASE("semigroup evolution on OU") {
  const GridOperator op = build_operator(make_ou(1), 1.0, Grid(8.0, 1601));
  const int n = op.grid.n[0];

  SUBCASE("constants are preserved exactly") {
    const Eigen::VectorXd u = semigroup_evolve(op, Eigen::VectorXd::Ones(n), 1.0);
    CHECK((u.array() - 1.0).abs().maxCoeff() < 1e-10);
  }
  SUBCASE("P_t x = e^{-t} x inside the bulk") {
    Eigen::VectorXd f(n);
    for (int i = 0; i < n; ++i) f[i] = op.grid.coord(0, i);
    for (double t : {0.5, 1.0}) {
      const Eigen::VectorXd u = semigroup_evolve(op, f, t, 0.002);
      double worst = 0.0;
      for (int i = 0; i < n; ++i) {
        const double x = op.grid.coord(0, i);
        if (std::abs(x) <= 4.0)
          worst = std::max(worst, std::abs(u[i] - std::exp(-t) * x));
      }
      CHECK(worst < 1e-3);
    }
  }
  SUBCASE("variance decay at rate 2T/C_P for a random observable") {
    CounterRng rng(3, 0);
    Eigen::VectorXd f(n);
    for (int i = 0; i < n; ++i) {
      const double x = op.grid.coord(0, i);
      f[i] = std::sin(1.3 * x) + 0.2 * rng.normal(static_cast<std::uint64_t>(i), 0) *
                                     std::exp(-0.1 * x * x);
    }
    const Eigen::VectorXd B = op.W.cwiseProduct(op.mu);
    auto var = [&](const Eigen::VectorXd& u) {
      const double mean = B.dot(u);
      return B.dot((u.array() - mean).square().matrix());
    };
    const double v0 = var(f);
    for (double t : {0.25, 0.5, 1.0}) {
      const Eigen::VectorXd u = semigroup_evolve(op, f, t, 0.002);
      CHECK(var(u) <= std::exp(-2.0 * t * op.T / 1.0) * v0 * (1.0 + 1e-3) + 1e-12);
    }
  }
}

TEST_CASE("gradient contraction check on OU is an equality up to h^2") {
  const GridOperator op = build_operator(make_ou(1), 1.0, Grid(8.0, 1601));
  const int n = op.grid.n[0];
  Eigen::VectorXd f(n);
  for (int i = 0; i < n; ++i) f[i] = op.grid.coord(0, i);
  const GradientContractionReport rep =
      gradient_contraction_check(op, 1.0, 1.0, {f}, {0.0, 0.3, 1.0});
  CHECK(rep.pass);
  CHECK(rep.max_violation <= rep.tol);
}

TEST_CASE("kl_tv_check on OU against the analytic gaussian flow") {
  const GridOperator op = build_operator(make_ou(1), 1.0, Grid(8.0, 1601));
  const int n = op.grid.n[0];
  Eigen::VectorXd nu0(n);
  for (int i = 0; i < n; ++i) {
    const double x = op.grid.coord(0, i);
    nu0[i] = std::exp(-0.5 * (x - 2.0) * (x - 2.0));
  }
  nu0 /= op.W.dot(nu0);
  // constants from the paper machinery for OU: K=0, lambda=c/4, M=1
  const KlTvReport rep =
      kl_tv_check(op, nu0, 0.0, 0.25, 1.0, {0.1, 0.5, 1.0, 2.0}, 1e-6, 0.002);
  CHECK(rep.pass);
  CHECK(rep.w2_init == doctest::Approx(2.0).epsilon(1e-3));
  // analytic: nu_t = N(2 e^{-t}, 1), KL = 2 e^{-2t}
  for (const KlTvEntry& e : rep.entries) {
    CHECK(e.kl == doctest::Approx(2.0 * std::exp(-2.0 * e.t)).epsilon(0.02));
    CHECK(e.pinsker_ok);
    CHECK(e.regularization_ok);
  }
}

TEST_CASE("kl_tv_check rejects non-positive initial densities") {
  const GridOperator op = build_operator(make_ou(1), 1.0, Grid(6.0, 201));
  Eigen::VectorXd nu0 = Eigen::VectorXd::Zero(201);
  CHECK_THROWS_AS((void)kl_tv_check(op, nu0, 0.0, 0.25, 1.0, {0.5}),
                  std::invalid_argument);
}

TEST_CASE("grid_w2_1d identical and shifted densities") {
  const GridOperator op = build_operator(make_ou(1), 1.0, Grid(8.0, 801));
  CHECK(grid_w2_1d(op, op.mu, op.mu) == doctest::Approx(0.0));
  const int n = op.grid.n[0];
  Eigen::VectorXd q(n);
  for (int i = 0; i < n; ++i) {
    const double x = op.grid.coord(0, i);
    q[i] = std::exp(-0.5 * (x - 1.0) * (x - 1.0));
  }
  q /= op.W.dot(q);
  CHECK(grid_w2_1d(op, op.mu, q) == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("dimension mismatch is rejected") {
  CHECK_THROWS_AS((void)build_operator(make_ou(2), 1.0, Grid(8.0, 201)),
                  std::invalid_argument);
}

TEST_CASE("stationarity residual across the 1d zoo") {
  for (const DriftModel& m :
       {make_ou(1), make_power_law(1, 4.0), make_double_well(1),
        make_exponential_tail(1), make_perturbed(make_power_law(1, 4.0), 0.5)}) {
    const GridOperator op = build_operator(m, 2.0, Grid(8.0, 801));
    CHECK(op.adjoint_residual <= 1e-8);
    CHECK(op.mu.minCoeff() > 0.0);
  }
}

TEST_CASE("kl_tv_check is identically zero at the stationary start") {
  const GridOperator op = build_operator(make_ou(1), 1.0, Grid(8.0, 801));
  const KlTvReport rep = kl_tv_check(op, op.mu, 0.0, 0.25, 1.0, {0.5, 1.0});
  CHECK(rep.pass);
  CHECK(rep.w2_init == doctest::Approx(0.0));
  for (const KlTvEntry& e : rep.entries) {
    CHECK(e.tv < 1e-9);
    CHECK(e.kl < 1e-9);
  }
}
