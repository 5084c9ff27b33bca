#include <doctest.h>

#include <cmath>
#include <vector>

#include "driftlab/rng.hpp"

using driftlab::CounterRng;

TEST_CASE("counter rng is a pure function of (seed, stream, step, slot)") {
  CounterRng a(42, 7), b(42, 7);
  for (std::uint64_t step : {0ull, 1ull, 999ull, 123456789ull})
    for (std::uint32_t slot : {0u, 1u, 5u})
      CHECK(a.uniform(step, slot) == b.uniform(step, slot));

  std::vector<double> z1(5), z2(5);
  a.fill_normals(17, z1);
  b.fill_normals(17, z2);
  CHECK(z1 == z2);
}

TEST_CASE("streams and steps decorrelate") {
  CounterRng a(42, 0), b(42, 1), c(43, 0);
  CHECK(a.uniform(0, 0) != b.uniform(0, 0));
  CHECK(a.uniform(0, 0) != c.uniform(0, 0));
  CHECK(a.uniform(0, 0) != a.uniform(1, 0));
  CHECK(a.uniform(0, 0) != a.uniform(0, 1));
}

TEST_CASE("uniforms look uniform, normals look normal") {
  CounterRng rng(2024, 3);
  const int n = 200000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform(static_cast<std::uint64_t>(i), 0);
    CHECK(u > 0.0);
    CHECK(u <= 1.0);
    s += u;
    s2 += u * u;
  }
  CHECK(std::abs(s / n - 0.5) < 0.005);
  CHECK(std::abs(s2 / n - 1.0 / 3.0) < 0.005);

  double m = 0.0, v = 0.0, m4 = 0.0;
  std::vector<double> z(2);
  for (int i = 0; i < n / 2; ++i) {
    rng.fill_normals(static_cast<std::uint64_t>(i), z);
    for (double x : z) {
      m += x;
      v += x * x;
      m4 += x * x * x * x;
    }
  }
  m /= n;
  v /= n;
  m4 /= n;
  CHECK(std::abs(m) < 0.01);
  CHECK(std::abs(v - 1.0) < 0.02);
  CHECK(std::abs(m4 - 3.0) < 0.1);
}

TEST_CASE("mix_stream separates labels") {
  CHECK(driftlab::mix_stream(1, 2) != driftlab::mix_stream(2, 1));
  CHECK(driftlab::mix_stream(0, 0) != driftlab::mix_stream(0, 1));
}
