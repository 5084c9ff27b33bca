#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "driftlab/rng.hpp"
#include "driftlab/transport.hpp"

using namespace driftlab;

namespace {

EmpiricalMeasure cloud1d(std::initializer_list<double> xs) {
  return EmpiricalMeasure::from_samples(std::vector<double>(xs));
}

EmpiricalMeasure gaussian_cloud(int n, int d, double mean, double sd,
                                std::uint64_t seed) {
  CounterRng rng(seed, 0);
  Eigen::MatrixXd pts(n, d);
  std::vector<double> z(static_cast<std::size_t>(d));
  for (int i = 0; i < n; ++i) {
    rng.fill_normals(static_cast<std::uint64_t>(i), z);
    for (int j = 0; j < d; ++j) pts(i, j) = mean + sd * z[static_cast<std::size_t>(j)];
  }
  return EmpiricalMeasure(std::move(pts));
}

// brute force over all permutations (n <= 8)
double brute_force_w(const EmpiricalMeasure& X, const EmpiricalMeasure& Y,
                     double alpha) {
  const int n = static_cast<int>(X.size());
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (int i = 0; i < n; ++i)
      c += std::pow((X.points.row(i) - Y.points.row(perm[static_cast<std::size_t>(i)])).norm(), alpha);
    best = std::min(best, c);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return std::pow(best / n, 1.0 / alpha);
}

}  // namespace

TEST_CASE("w_alpha_1d hand values") {
  CHECK(w_alpha_1d(cloud1d({0, 2}), cloud1d({1, 3})).cost == doctest::Approx(1.0));
  // brute force over all 6 pairings confirms the sorted cost sqrt((1+4+1)/3)
  const EmpiricalMeasure X = cloud1d({0, 0, 4}), Y = cloud1d({1, 2, 3});
  CHECK(w_alpha_1d(X, Y).cost == doctest::Approx(std::sqrt(2.0)));
  CHECK(w_alpha_1d(X, Y).cost == doctest::Approx(brute_force_w(X, Y, 2.0)));
  CHECK(w_alpha_1d(X, X).cost == doctest::Approx(0.0));
}

TEST_CASE("w_alpha_1d with general weights matches atom splitting") {
  // {0 w 1/2, 2 w 1/2} vs {0 w 1/4, 2 w 3/4}: quantile coupling moves 1/4 mass 0->2
  EmpiricalMeasure X(Eigen::MatrixXd{{0.0}, {2.0}}, Eigen::VectorXd{{0.5, 0.5}});
  EmpiricalMeasure Y(Eigen::MatrixXd{{0.0}, {2.0}}, Eigen::VectorXd{{0.25, 0.75}});
  CHECK(w_alpha_1d(X, Y).cost == doctest::Approx(std::sqrt(0.25 * 4.0)));
  CHECK(w_alpha_1d(X, Y, 1.0).cost == doctest::Approx(0.5));
}

TEST_CASE("w2_assignment hand values and the brute force oracle") {
  EmpiricalMeasure X(Eigen::MatrixXd{{0.0, 0.0}, {2.0, 0.0}});
  EmpiricalMeasure Y(Eigen::MatrixXd{{1.0, 0.0}, {1.0, 1.0}});
  CHECK(w2_assignment(X, Y).cost == doctest::Approx(std::sqrt(1.5)));
  CHECK(w2_assignment(X, X).cost == doctest::Approx(0.0));

  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    const EmpiricalMeasure A = gaussian_cloud(7, 2, 0.0, 1.0, seed);
    const EmpiricalMeasure B = gaussian_cloud(7, 2, 0.5, 1.3, seed + 100);
    CHECK(w2_assignment(A, B).cost ==
          doctest::Approx(brute_force_w(A, B, 2.0)).epsilon(1e-10));
    CHECK(w2_assignment(A, B, 1.0).cost ==
          doctest::Approx(brute_force_w(A, B, 1.0)).epsilon(1e-10));
  }
}

TEST_CASE("w2_assignment agrees with the 1d exact solver") {
  const EmpiricalMeasure A = gaussian_cloud(64, 1, 0.0, 1.0, 11);
  const EmpiricalMeasure B = gaussian_cloud(64, 1, 1.0, 0.7, 12);
  CHECK(w2_assignment(A, B).cost ==
        doctest::Approx(w_alpha_1d(A, B).cost).epsilon(1e-9));
}

TEST_CASE("w2_assignment preconditions") {
  const EmpiricalMeasure A = gaussian_cloud(4, 1, 0, 1, 1);
  const EmpiricalMeasure B = gaussian_cloud(5, 1, 0, 1, 2);
  CHECK_THROWS_AS((void)w2_assignment(A, B), std::invalid_argument);
  CHECK_THROWS_AS((void)w2_assignment(A, A, 2.0, /*cap=*/2), std::invalid_argument);
}

TEST_CASE("entropic: identical clouds, debiasing, epsilon ordering") {
  const EmpiricalMeasure X = gaussian_cloud(128, 2, 0.0, 1.0, 5);
  SinkhornOptions opt;
  opt.epsilon = 0.2;
  const TransportResult biased = w2_entropic(X, X, 2.0, opt);
  CHECK(biased.converged);
  // entropic bias keeps the plan off the diagonal but within the blur scale
  CHECK(biased.cost * biased.cost <= 2.0 * opt.epsilon);
  opt.debiased = true;
  CHECK(w2_entropic(X, X, 2.0, opt).cost <= 1e-3);

  // large epsilon lies strictly above the exact assignment cost
  const EmpiricalMeasure Y = gaussian_cloud(128, 2, 1.0, 1.0, 6);
  SinkhornOptions big;
  big.epsilon = 10.0;
  const double exact = w2_assignment(X, Y).cost;
  CHECK(w2_entropic(X, Y, 2.0, big).cost > exact);
}

TEST_CASE("entropic matches the analytic gaussian shift") {
  // N(0,1) vs N(3,1): W2 = 3 for equal variances
  const int n = 4096;
  const EmpiricalMeasure X = gaussian_cloud(n, 1, 0.0, 1.0, 21);
  const EmpiricalMeasure Y = gaussian_cloud(n, 1, 3.0, 1.0, 22);
  SinkhornOptions opt;
  opt.epsilon = 0.5;
  opt.debiased = true;
  opt.max_iter = 400;
  const TransportResult r = w2_entropic(X, Y, 2.0, opt);
  CHECK(std::abs(r.cost - 3.0) / 3.0 < 0.03);
}

TEST_CASE("transport invariants on random clouds") {
  const EmpiricalMeasure A = gaussian_cloud(48, 2, 0.0, 1.0, 31);
  const EmpiricalMeasure B = gaussian_cloud(48, 2, 0.8, 1.1, 32);
  const EmpiricalMeasure C = gaussian_cloud(48, 2, -0.5, 0.6, 33);

  SUBCASE("symmetry") {
    CHECK(w2_assignment(A, B).cost == doctest::Approx(w2_assignment(B, A).cost));
  }
  SUBCASE("triangle inequality") {
    CHECK(w2_assignment(A, C).cost <=
          w2_assignment(A, B).cost + w2_assignment(B, C).cost + 1e-12);
  }
  SUBCASE("W1 <= W2 on uniform couplings") {
    CHECK(w2_assignment(A, B, 1.0).cost <= w2_assignment(A, B, 2.0).cost + 1e-12);
  }
  SUBCASE("debiased entropic triangle within 1e-3") {
    SinkhornOptions opt;
    opt.epsilon = 0.05;
    opt.debiased = true;
    const double ab = w2_entropic(A, B, 2.0, opt).cost;
    const double bc = w2_entropic(B, C, 2.0, opt).cost;
    const double ac = w2_entropic(A, C, 2.0, opt).cost;
    CHECK(ac <= ab + bc + 1e-3);
  }
  SUBCASE("translation covariance") {
    Eigen::MatrixXd shifted = A.points;
    shifted.col(0).array() += 2.5;
    Eigen::MatrixXd shiftedB = B.points;
    shiftedB.col(0).array() += 2.5;
    CHECK(w2_assignment(EmpiricalMeasure(shifted), EmpiricalMeasure(shiftedB)).cost ==
          doctest::Approx(w2_assignment(A, B).cost).epsilon(1e-12));
    // point masses move exactly by |v|
    EmpiricalMeasure p(Eigen::MatrixXd{{0.0, 0.0}});
    EmpiricalMeasure q(Eigen::MatrixXd{{3.0, 4.0}});
    CHECK(w2_assignment(p, q).cost == doctest::Approx(5.0));
  }
}

TEST_CASE("bootstrap_ci") {
  const EmpiricalMeasure X = gaussian_cloud(400, 1, 0.0, 1.0, 41);
  const EmpiricalMeasure Y = gaussian_cloud(400, 1, 1.0, 1.0, 42);
  const TransportResult r =
      bootstrap_ci(X, Y, 2.0, TransportMethod::OneDExact, 200, 7);
  CHECK(r.has_ci);
  CHECK(r.ci_lo <= r.cost);
  CHECK(r.cost <= r.ci_hi);
  CHECK(r.ci_lo <= 1.0);  // true shift is 1
  CHECK(1.0 <= r.ci_hi + 0.15);

  // identical clouds: lower bound collapses to zero
  const TransportResult same =
      bootstrap_ci(X, X, 2.0, TransportMethod::OneDExact, 120, 9);
  CHECK(same.ci_lo == doctest::Approx(0.0));

  // determinism in the seed
  const TransportResult again =
      bootstrap_ci(X, Y, 2.0, TransportMethod::OneDExact, 200, 7);
  CHECK(again.ci_lo == r.ci_lo);
  CHECK(again.ci_hi == r.ci_hi);
  CHECK_THROWS_AS(
      (void)bootstrap_ci(X, Y, 2.0, TransportMethod::OneDExact, 10, 7),
      std::invalid_argument);
}
