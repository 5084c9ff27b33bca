#include <doctest.h>

#include <cmath>
#include <functional>

#include "driftlab/constants.hpp"
#include "driftlab/model.hpp"
#include "driftlab/rng.hpp"

using namespace driftlab;

TEST_CASE("r_star hand values") {
  CHECK(r_star(0, 1, 1, 2) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(r_star(1, 1, 1, 1) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(r_star(3, 2, 0, 5) == 0.0);
  CHECK_THROWS_AS((void)r_star(0, 0, 1, 1), std::invalid_argument);
}

TEST_CASE("r_star monotonicity in (K, c, R)") {
  CounterRng rng(99, 0);
  for (int i = 0; i < 50; ++i) {
    const double K = 2.0 * rng.uniform(i, 0);
    const double c = 0.1 + rng.uniform(i, 1);
    const double R = 0.1 + 2.0 * rng.uniform(i, 2);
    const int d = 1 + static_cast<int>(3.0 * rng.uniform(i, 3));
    CHECK(r_star(K + 0.1, c, R, d) > r_star(K, c, R, d));
    CHECK(r_star(K, c + 0.1, R, d) < r_star(K, c, R, d));
    CHECK(r_star(K, c, 2 * R, d) == doctest::Approx(2 * r_star(K, c, R, d)));
  }
}

TEST_CASE("weight function: K=0 c=1 R=1 d=1 hand values") {
  const WeightFunction w = build_weight(0, 1, 1, 1);
  CHECK(w.k_star() == doctest::Approx(0.125));
  CHECK(w.r_star() == doctest::Approx(2.0));
  // g' = -2 K_*/d = -1/4 on [0, R^2]
  CHECK(w.g_prime(0.0) == doctest::Approx(-0.25));
  CHECK(w.g_prime(0.5) == doctest::Approx(-0.25));
  CHECK(w.g_prime(1.0) == doctest::Approx(-0.25));
  // g'(R_*^2) = 0 up to the band
  CHECK(std::abs(w.g_prime(4.0)) < 5e-3);
  CHECK(w.g_prime(4.5) == 0.0);
  // closed form on the shell up to the O(eps) band deficit:
  // g'(r) = (c/4d)(1 - R_*^d r^(-d/2))
  CHECK(w.g_prime(2.0) ==
        doctest::Approx(0.25 * (1.0 - 2.0 / std::sqrt(2.0))).epsilon(5e-3));
  // paper bound, and the exact unsmoothed value 1/2
  CHECK(w.kappa_inf() <= 2 * w.k_star() * w.r_star2() / 1);
  CHECK(w.kappa_inf() == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("weight function: defining inequality holds with no band slack") {
  // lap kappa <= envelope(x) - c/2 with envelope = -K inside R, c outside
  for (const auto& [K, c, R, d] :
       {std::tuple{0.0, 1.0, 1.0, 1}, {1.0, 1.0, 1.0, 2}, {0.5, 2.0, 1.5, 3},
        {2.0, 0.25, 0.7, 1}, {0.0, 1.0 / 6.0, 1.0, 1}}) {
    const WeightFunction w = build_weight(K, c, R, d);
    const double lim2 = w.support_r2() * 1.3 + 1.0;
    for (int i = 0; i <= 3000; ++i) {
      const double r = lim2 * i / 3000.0;
      const double envelope = r < R * R ? -K : c;
      CHECK(4.0 * w.h_eps(r) <= envelope - c / 2.0 + 1e-12);
    }
    CHECK(w.kappa_inf() <= 2 * w.k_star() * w.r_star2() / d);
    // kappa >= 0, compact support a few bands past R_*^2 (the fall band is
    // placed by root finding; its shift scales with the radial weight ratio)
    CHECK(w.kappa_r(w.support_r2() + 1e-9) == 0.0);
    CHECK(w.kappa_r(0.0) == doctest::Approx(w.kappa_inf()));
    const double weight_ratio =
        std::pow(R * R / w.r_star2(), 0.5 * d - 1.0);
    CHECK(w.support_r2() <= w.r_star2() + 4.0 * w.eps() * std::max(1.0, weight_ratio));
  }
}

namespace {
// adaptive Simpson to absolute tolerance 1e-10
double simpson_rec(const std::function<double(double)>& f, double a, double b,
                   double fa, double fm, double fb, double whole, double tol,
                   int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return simpson_rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
         simpson_rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}
double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double tol = 1e-10) {
  const double m = 0.5 * (a + b), fa = f(a), fm = f(m), fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_rec(f, a, b, fa, fm, fb, whole, tol, 48);
}
}  // namespace

TEST_CASE("weight function: g from g' matches adaptive quadrature oracle") {
  const WeightFunction w = build_weight(1.0, 0.5, 1.2, 2);
  auto gp = [&](double s) { return w.g_prime(s); };
  for (double r : {0.5, 1.44, 2.0, 5.0, w.support_r2() * 0.999}) {
    const double oracle = adaptive_simpson(gp, 0.0, r);
    CHECK(w.g(r) == doctest::Approx(oracle).epsilon(1e-8));
  }
}

TEST_CASE("weight function: trivial and error cases") {
  const WeightFunction w0 = build_weight(1.0, 2.0, 0.0, 2);
  CHECK(w0.trivial());
  CHECK(w0.kappa_r(3.0) == 0.0);
  CHECK(w0.kappa_inf() == 0.0);
  CHECK_THROWS_AS((void)build_weight(0, 1, 1, 1, /*eps=*/2.0),
                  std::invalid_argument);  // band does not fit
  CHECK_THROWS_AS((void)build_weight(0, -1, 1, 1), std::invalid_argument);
}

TEST_CASE("t0_threshold: beta potential specialization") {
  // K=0, R=1, c=1/6, alpha=2: T(1) = 1/3 + 32 = 97/3, below (r^beta/d)(1+2^(beta/d+1))
  const DriftModel pw = make_power_law(1, 4.0, 1.0);
  const T0Result t0 = t0_threshold(pw, 2.0);
  CHECK(t0.t0 == doctest::Approx(97.0 / 3.0).epsilon(1e-6));
  CHECK(t0.t0 <= 33.0);
  CHECK(t0.sup_minus_xb == doctest::Approx(16.0).epsilon(1e-6));
  CHECK(t0.t0_safe == doctest::Approx(1.05 * 97.0 / 3.0));
}

TEST_CASE("t0_threshold: R=0 gives 0") {
  const T0Result t0 = t0_threshold(make_ou(2), 2.0);
  CHECK(t0.t0 == doctest::Approx(0.0));
}

TEST_CASE("contraction_constants hand values") {
  const ContractionConstants cc = contraction_constants(0, 1, 1, 1, 10.0, 2.0);
  CHECK(cc.M == doctest::Approx(std::sqrt(1.2)).epsilon(1e-12));
  CHECK(cc.lambda == doctest::Approx(0.25));
  // T -> infinity: M -> 1
  CHECK(contraction_constants(0, 1, 1, 1, 1e12, 2.0).M == doctest::Approx(1.0));
  // R = 0: M = 1164
  CHECK(contraction_constants(2, 1, 0, 3, 1.0, 2.0).M == doctest::Approx(1.0));
  // M^alpha - 1 scales like 1/T
  const double q1 = std::pow(contraction_constants(1, 1, 1, 2, 5.0, 3.0).M, 3.0) - 1.0;
  const double q2 = std::pow(contraction_constants(1, 1, 1, 2, 10.0, 3.0).M, 3.0) - 1.0;
  CHECK(q1 == doctest::Approx(2.0 * q2).epsilon(1e-10));
}

TEST_CASE("poincare_from_contraction") {
  CHECK(poincare_from_contraction(1, 1, 1) == doctest::Approx(1.0));
  CHECK(poincare_from_contraction(std::sqrt(1.2), 0.25, 10.0) ==
        doctest::Approx(48.0).epsilon(1e-12));
  CHECK(poincare_from_contraction(std::sqrt(1.2), 0.25, 10.0, true) ==
        doctest::Approx(40.0).epsilon(1e-12));
}

TEST_CASE("cp_beta_bound hand values") {
  CHECK(cp_beta_bound(4, 1).bound ==
        doctest::Approx(24.0 * std::sqrt(33.0)).epsilon(1e-12));
  const CpBetaBound b2 = cp_beta_bound(4, 2);
  CHECK(b2.bound == doctest::Approx(72.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(b2.has_window);
  CHECK(b2.window_lo == doctest::Approx(0.35355339059327373).epsilon(1e-12));
  CHECK(b2.window_hi == doctest::Approx(2.1213203435596424).epsilon(1e-12));
  CHECK_THROWS_AS((void)cp_beta_bound(2.0, 1), std::invalid_argument);
}

TEST_CASE("holley_stroock hand values") {
  CHECK(holley_stroock_bound(0, 1, 1, 1) ==
        doctest::Approx(2.0 * std::exp(1.0)).epsilon(1e-12));
  CHECK(holley_stroock_bound(2, 1, 0, 3) == doctest::Approx(6.0));
  // exponent vanishes as T grows
  const double big = holley_stroock_bound(0, 1, 1, 1e8);
  CHECK(big / (2e8) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("j_t hand values and branch logic") {
  // K=1, t=1, second branch inactive (threshold ln(11)/2 > 1 at lambda=0.1)
  CHECK(j_t(1.0, 0.1, 1.0, 1.0) ==
        doctest::Approx(1.0 / (1.0 - std::exp(-2.0))).epsilon(1e-12));
  // K=1, lambda=0.25, M=1.1, t=10: second branch wins
  CHECK(j_t(1.0, 0.25, 1.1, 10.0) ==
        doctest::Approx(1.21 * 1.25 * std::pow(5.0, 0.25) * std::exp(-5.0))
            .epsilon(1e-9));
  // K=0 limits: min(1/(2t), M^2 lambda e^(1-2 lambda t)) once t >= 1/(2 lambda)
  CHECK(j_t(0.0, 0.7, 1.0, 1.0) ==
        doctest::Approx(std::min(0.5, 0.7 * std::exp(1.0 - 1.4))).epsilon(1e-12));
  // below the K=0 threshold only the first expression applies
  CHECK(j_t(0.0, 0.25, 1.0, 1.0) == doctest::Approx(0.5));
  CHECK_THROWS_AS((void)j_t(1.0, 0.25, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("j_t equals the pointwise min of the valid expressions") {
  const double K = 0.8, lam = 0.3, M = 1.05;
  const double thr = std::log1p(K / lam) / (2 * K);
  for (double t : {0.1, 0.5, thr + 1e-6, 2.0, 5.0}) {
    const double first = K / (1.0 - std::exp(-2 * K * t));
    const double second =
        M * M * (K + lam) * std::pow(1 + K / lam, lam / K) * std::exp(-2 * lam * t);
    const double expect = t >= thr ? std::min(first, second) : first;
    CHECK(j_t(K, lam, M, t) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("particle_constants") {
  SUBCASE("degenerate bad region") {
    ParticleParams p;
    p.C_F = 0;
    p.C_G = 0;
    p.a = 0;
    p.c = 1;
    p.R = 0;
    p.M_G = 0;
    p.d = 1;
    const ContractionConstants cc = particle_constants(p, 1.0, 0.0);
    CHECK(cc.T0 == doctest::Approx(0.0));
    CHECK(cc.M == doctest::Approx(1.0));
    CHECK(cc.lambda == doctest::Approx(0.25));
  }
  SUBCASE("hand values") {
    ParticleParams p;
    p.C_F = 1;
    p.C_G = 0;
    p.a = 0;
    p.c = 1;
    p.R = 1;
    p.M_G = 0;
    p.d = 1;
    // R_* = (2+2)^(1/2) = 2, K_* = 1.5
    const ContractionConstants cc = particle_constants(p, 100.0, 5.0);
    CHECK(cc.M == doctest::Approx(std::sqrt(1.0 + 2.0 * 1.5 * 4.0 / 100.0)));
    CHECK(cc.lambda == doctest::Approx(1.0 / 4.48).epsilon(1e-12));
    CHECK(cc.T0 == doctest::Approx(1.5 * (4.0 + 10.0)).epsilon(1e-12));
  }
  SUBCASE("a >= c throws") {
    ParticleParams p;
    p.a = 1.0;
    p.c = 1.0;
    CHECK_THROWS_AS((void)particle_constants(p, 1.0, 0.0), std::invalid_argument);
  }
}

TEST_CASE("ball_sup finds boundary maxima") {
  // sup of x^4 over |x| <= 2 in 1d
  const BallSup s =
      ball_sup([](const Vec& x) { return std::pow(x[0], 4.0); }, 1, 2.0);
  CHECK(s.value == doctest::Approx(16.0).epsilon(1e-9));
  // interior maximum in 2d: -(x-0.5)^2 - y^2
  const BallSup s2 = ball_sup(
      [](const Vec& x) {
        return -(x[0] - 0.5) * (x[0] - 0.5) - x[1] * x[1];
      },
      2, 2.0);
  CHECK(s2.value == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("bakry-emery weight check") {
  SUBCASE("ou with trivial weight passes at any T") {
    const DriftModel ou = make_ou(1);
    const WeightFunction w = build_weight(0, 1, 0, 1);
    const auto grid = axis_grid(1, -6, 6, 501);
    const BakryEmeryReport rep = verify_bakry_emery_weight(ou, w, 2.0, grid);
    CHECK(rep.pass);
    CHECK(rep.T_tilde0 == doctest::Approx(0.0));
    CHECK(rep.min_margin == doctest::Approx(0.75 * 2.0).epsilon(1e-6));
  }
  SUBCASE("beta potential passes at T = 2 T_tilde0, fails far below it") {
    const DriftModel pw = make_power_law(1, 4.0, 1.0);
    const WeightFunction w = build_weight(0, 1.0 / 6.0, 1.0, 1);
    const auto grid = axis_grid(1, -6, 6, 2001);
    BakryEmeryReport probe = verify_bakry_emery_weight(pw, w, 1.0, grid);
    const double T_hi = 2.0 * probe.T_tilde0;
    const BakryEmeryReport ok = verify_bakry_emery_weight(pw, w, T_hi, grid);
    CHECK(ok.pass);
    CHECK(ok.min_margin >= -1e-9);
    const BakryEmeryReport bad =
        verify_bakry_emery_weight(pw, w, probe.T_tilde0 / 100.0, grid);
    CHECK_FALSE(bad.pass);
  }
  SUBCASE("empty grid throws") {
    const DriftModel ou = make_ou(1);
    const WeightFunction w = build_weight(0, 1, 0, 1);
    CHECK_THROWS_AS(
        (void)verify_bakry_emery_weight(ou, w, 1.0, std::vector<Vec>{}),
        std::invalid_argument);
  }
}
