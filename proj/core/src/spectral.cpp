#include "driftlab/spectral.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "driftlab/transport.hpp"

namespace driftlab {

Grid::Grid(double a, int n0) : dim(1), half{a, 0.0}, n{n0, 1} {
  if (n0 < 3 || n0 % 2 == 0)
    throw std::invalid_argument("Grid: node count must be odd and >= 3");
  if (a <= 0.0) throw std::invalid_argument("Grid: half width must be positive");
}

Grid::Grid(double a0, int n0, double a1, int n1)
    : dim(2), half{a0, a1}, n{n0, n1} {
  if (n0 < 3 || n0 % 2 == 0 || n1 < 3 || n1 % 2 == 0)
    throw std::invalid_argument("Grid: node counts must be odd and >= 3");
  if (a0 <= 0.0 || a1 <= 0.0)
    throw std::invalid_argument("Grid: half widths must be positive");
}

Vec Grid::point(int idx) const {
  Vec x(dim);
  if (dim == 1) {
    x[0] = coord(0, idx);
  } else {
    x[0] = coord(0, idx % n[0]);
    x[1] = coord(1, idx / n[0]);
  }
  return x;
}

namespace {

// 16-point Gauss-Legendre on [a, b]
const double kX[8] = {0.0950125098376374, 0.2816035507792589,
                      0.4580167776572274, 0.6178762444026438,
                      0.7554044083550030, 0.8656312023878318,
                      0.9445750230732326, 0.9894009349916499};
const double kW[8] = {0.1894506104550685, 0.1826034150449236,
                      0.1691565193950025, 0.1495959888165767,
                      0.1246289712555339, 0.0951585116824928,
                      0.0622535239386479, 0.0271524594117541};

template <class F>
double gl16(const F& f, double a, double b) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double s = 0.0;
  for (int i = 0; i < 8; ++i) s += kW[i] * (f(c - h * kX[i]) + f(c + h * kX[i]));
  return s * h;
}

Eigen::VectorXd quadrature_weights(const Grid& g) {
  auto axis_w = [&](int axis) {
    Eigen::VectorXd w = Eigen::VectorXd::Constant(g.n[axis], g.h(axis));
    w[0] *= 0.5;
    w[g.n[axis] - 1] *= 0.5;
    return w;
  };
  if (g.dim == 1) return axis_w(0);
  const Eigen::VectorXd w0 = axis_w(0), w1 = axis_w(1);
  Eigen::VectorXd W(g.size());
  for (int j = 0; j < g.n[1]; ++j)
    for (int i = 0; i < g.n[0]; ++i) W[g.flat(i, j)] = w0[i] * w1[j];
  return W;
}

// 1d stationary density by quadrature of exp(int b / T); any 1d elliptic
// diffusion is of gradient type.
Eigen::VectorXd mu_1d(const DriftModel& model, double T, const Grid& g,
                      const Eigen::VectorXd& W) {
  const int n = g.n[0];
  auto b = [&](double x) { return model.drift(Vec::Constant(1, x))[0]; };
  Eigen::VectorXd logmu(n);
  const int center = (n - 1) / 2;  // node at 0
  logmu[center] = 0.0;
  for (int i = center + 1; i < n; ++i)
    logmu[i] = logmu[i - 1] + gl16(b, g.coord(0, i - 1), g.coord(0, i)) / T;
  for (int i = center - 1; i >= 0; --i)
    logmu[i] = logmu[i + 1] - gl16(b, g.coord(0, i), g.coord(0, i + 1)) / T;
  const double shift = logmu.maxCoeff();
  // floor far-tail log densities: underflow to exact zero would break the
  // weighted eigenproblem scaling
  Eigen::VectorXd mu = (logmu.array() - shift).cwiseMax(-600.0).exp();
  mu /= W.dot(mu);
  return mu;
}

SpMat stiffness_matrix(const Grid& g, double T, const Eigen::VectorXd& mu) {
  std::vector<Eigen::Triplet<double>> trip;
  auto add_edge = [&](int a, int b, double coeff) {
    trip.emplace_back(a, a, coeff);
    trip.emplace_back(b, b, coeff);
    trip.emplace_back(a, b, -coeff);
    trip.emplace_back(b, a, -coeff);
  };
  if (g.dim == 1) {
    const double h = g.h(0);
    for (int i = 0; i + 1 < g.n[0]; ++i) {
      const double me = std::sqrt(mu[i]) * std::sqrt(mu[i + 1]);
      add_edge(i, i + 1, T * me / h);
    }
  } else {
    const double h0 = g.h(0), h1 = g.h(1);
    auto wgt = [&](int idx, int nn) { return (idx == 0 || idx == nn - 1) ? 0.5 : 1.0; };
    for (int j = 0; j < g.n[1]; ++j)
      for (int i = 0; i + 1 < g.n[0]; ++i) {
        const int a = g.flat(i, j), b = g.flat(i + 1, j);
        const double me = std::sqrt(mu[a]) * std::sqrt(mu[b]);
        add_edge(a, b, T * me * wgt(j, g.n[1]) * h1 / h0);
      }
    for (int j = 0; j + 1 < g.n[1]; ++j)
      for (int i = 0; i < g.n[0]; ++i) {
        const int a = g.flat(i, j), b = g.flat(i, j + 1);
        const double me = std::sqrt(mu[a]) * std::sqrt(mu[b]);
        add_edge(a, b, T * me * wgt(i, g.n[0]) * h0 / h1);
      }
  }
  SpMat S(g.size(), g.size());
  S.setFromTriplets(trip.begin(), trip.end());
  return S;
}

// Direct discretization in 2d: T (5-point laplacian) + central b.grad with
// mirror closure at the reflecting boundary.
SpMat generator_2d(const DriftModel& model, double T, const Grid& g) {
  std::vector<Eigen::Triplet<double>> trip;
  const double h0 = g.h(0), h1 = g.h(1);
  for (int j = 0; j < g.n[1]; ++j) {
    for (int i = 0; i < g.n[0]; ++i) {
      const int row = g.flat(i, j);
      Vec x(2);
      x << g.coord(0, i), g.coord(1, j);
      const Vec b = model.drift(x);
      double diag = 0.0;
      auto couple = [&](int col, double v) {
        if (col == row) diag += v;
        else trip.emplace_back(row, col, v);
      };
      // x-axis: mirror neighbor indices at the edges
      {
        const int ip = i + 1 < g.n[0] ? i + 1 : i - 1;
        const int im = i - 1 >= 0 ? i - 1 : i + 1;
        couple(g.flat(ip, j), T / (h0 * h0));
        couple(g.flat(im, j), T / (h0 * h0));
        diag += -2.0 * T / (h0 * h0);
        if (i + 1 < g.n[0] && i - 1 >= 0) {  // gradient vanishes at the mirror
          couple(g.flat(i + 1, j), b[0] / (2.0 * h0));
          couple(g.flat(i - 1, j), -b[0] / (2.0 * h0));
        }
      }
      {
        const int jp = j + 1 < g.n[1] ? j + 1 : j - 1;
        const int jm = j - 1 >= 0 ? j - 1 : j + 1;
        couple(g.flat(i, jp), T / (h1 * h1));
        couple(g.flat(i, jm), T / (h1 * h1));
        diag += -2.0 * T / (h1 * h1);
        if (j + 1 < g.n[1] && j - 1 >= 0) {
          couple(g.flat(i, j + 1), b[1] / (2.0 * h1));
          couple(g.flat(i, j - 1), -b[1] / (2.0 * h1));
        }
      }
      trip.emplace_back(row, row, diag);
    }
  }
  SpMat L(g.size(), g.size());
  L.setFromTriplets(trip.begin(), trip.end());
  return L;
}

// Stationary density of the 2d operator: null vector of the weighted adjoint
// by shifted inverse iteration.
Eigen::VectorXd mu_2d(const SpMat& L, const Eigen::VectorXd& W) {
  const int n = static_cast<int>(L.rows());
  SpMat At = SpMat(L.transpose());
  double scale = 0.0;
  for (int k = 0; k < At.outerSize(); ++k)
    for (SpMat::InnerIterator it(At, k); it; ++it)
      scale = std::max(scale, std::abs(it.value()));
  SpMat shifted = At;
  const double sigma = 1e-10 * scale;
  shifted.diagonal().array() -= sigma;
  Eigen::SparseLU<SpMat> lu(shifted);
  if (lu.info() != Eigen::Success)
    throw std::runtime_error("build_operator: adjoint factorization failed");
  Eigen::VectorXd v = Eigen::VectorXd::Ones(n) / std::sqrt(static_cast<double>(n));
  double res = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 10000; ++it) {
    v = lu.solve(v);
    v /= v.norm();
    res = (At * v).lpNorm<Eigen::Infinity>() / scale;
    if (res < 1e-12) break;
  }
  if (res > 1e-8)
    throw std::runtime_error("build_operator: inverse iteration did not converge");
  if (v.sum() < 0.0) v = -v;
  // far-tail entries sit at solver noise level; only structural negativity
  // is an error
  if (v.minCoeff() < -1e-8 * v.maxCoeff())
    throw std::runtime_error("build_operator: stationary vector not positive");
  v = v.cwiseMax(1e-300);
  Eigen::VectorXd mu = v.cwiseQuotient(W);
  mu /= W.dot(mu);
  return mu;
}

}  // namespace

GridOperator build_operator(const DriftModel& model, double T, const Grid& grid) {
  if (model.dim != grid.dim)
    throw std::invalid_argument("build_operator: model/grid dimension mismatch");
  if (T <= 0.0) throw std::invalid_argument("build_operator: T must be positive");
  GridOperator op;
  op.grid = grid;
  op.T = T;
  op.W = quadrature_weights(grid);

  if (grid.dim == 1) {
    op.mu = mu_1d(model, T, grid, op.W);
    // flux form: (L u)_i = T [mu_e (u_n - u_i)] / (W_i mu_i h)
    const int n = grid.n[0];
    const double h = grid.h(0);
    std::vector<Eigen::Triplet<double>> trip;
    for (int i = 0; i + 1 < n; ++i) {
      const double me = std::sqrt(op.mu[i]) * std::sqrt(op.mu[i + 1]);
      const double fi = T * me / (h * op.W[i] * op.mu[i]);
      const double fj = T * me / (h * op.W[i + 1] * op.mu[i + 1]);
      trip.emplace_back(i, i + 1, fi);
      trip.emplace_back(i, i, -fi);
      trip.emplace_back(i + 1, i, fj);
      trip.emplace_back(i + 1, i + 1, -fj);
    }
    op.L = SpMat(n, n);
    op.L.setFromTriplets(trip.begin(), trip.end());
  } else {
    op.L = generator_2d(model, T, grid);
    op.mu = mu_2d(op.L, op.W);
  }
  op.stiff = stiffness_matrix(grid, T, op.mu);
  op.adjoint_residual =
      (op.L.transpose() * op.W.cwiseProduct(op.mu).eval()).lpNorm<Eigen::Infinity>();
  return op;
}

namespace {

// eigenvalue counting for a symmetric tridiagonal matrix (Sturm bisection)
int sturm_count(const Eigen::VectorXd& d, const Eigen::VectorXd& e, double x) {
  int count = 0;
  double q = d[0] - x;
  if (q < 0.0) ++count;
  for (int i = 1; i < d.size(); ++i) {
    const double denom = q == 0.0 ? 1e-300 : q;
    q = d[i] - x - e[i - 1] * e[i - 1] / denom;
    if (q < 0.0) ++count;
  }
  return count;
}

double tridiag_kth_eigenvalue(const Eigen::VectorXd& d, const Eigen::VectorXd& e,
                              int k) {
  double lo = d.minCoeff(), hi = d.maxCoeff();
  double rad = 0.0;
  for (int i = 0; i < d.size(); ++i) {
    double r = std::abs(d[i]);
    if (i > 0) r += std::abs(e[i - 1]);
    if (i + 1 < d.size()) r += std::abs(e[i]);
    rad = std::max(rad, r);
  }
  lo = -rad;
  hi = rad;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (sturm_count(d, e, mid) <= k ? lo : hi) = mid;
    if (hi - lo < 1e-14 * (1.0 + std::abs(hi))) break;
  }
  return 0.5 * (lo + hi);
}

// smallest nonzero eigenvalue of the pencil (S, B), B diagonal positive,
// S symmetric psd with null vector 1. Nodes whose mass is below 1e-12 of the
// largest are dropped first: they contribute O(1e-12) to any variance, but
// their floored (1d) or noise-level (2d) density would otherwise admit
// spurious near-null plateau modes.
double pencil_lambda1(const SpMat& S_in, const Eigen::VectorXd& B_in,
                      const Grid& g) {
  const double cutoff = 1e-12 * B_in.maxCoeff();
  std::vector<int> keep;
  keep.reserve(static_cast<std::size_t>(B_in.size()));
  for (int i = 0; i < B_in.size(); ++i)
    if (B_in[i] >= cutoff) keep.push_back(i);
  if (keep.size() < 3) {
    keep.clear();
    for (int i = 0; i < B_in.size(); ++i) keep.push_back(i);
  }
  SpMat S;
  Eigen::VectorXd B;
  if (static_cast<int>(keep.size()) == B_in.size()) {
    S = S_in;
    B = B_in;
  } else {
    std::vector<int> remap(static_cast<std::size_t>(B_in.size()), -1);
    for (std::size_t k = 0; k < keep.size(); ++k)
      remap[static_cast<std::size_t>(keep[k])] = static_cast<int>(k);
    std::vector<Eigen::Triplet<double>> trip;
    for (int col = 0; col < S_in.outerSize(); ++col)
      for (SpMat::InnerIterator it(S_in, col); it; ++it) {
        const int ri = remap[static_cast<std::size_t>(it.row())];
        const int ci = remap[static_cast<std::size_t>(it.col())];
        if (ri >= 0 && ci >= 0) trip.emplace_back(ri, ci, it.value());
      }
    S = SpMat(static_cast<int>(keep.size()), static_cast<int>(keep.size()));
    S.setFromTriplets(trip.begin(), trip.end());
    B.resize(static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k)
      B[static_cast<Eigen::Index>(k)] = B_in[keep[k]];
  }
  const int n = static_cast<int>(S.rows());
  const Eigen::VectorXd s = B.cwiseSqrt();
  if (g.dim == 1) {
    Eigen::VectorXd d(n), e(n - 1);
    for (int i = 0; i < n; ++i) d[i] = S.coeff(i, i) / B[i];
    for (int i = 0; i + 1 < n; ++i) e[i] = S.coeff(i, i + 1) / (s[i] * s[i + 1]);
    return tridiag_kth_eigenvalue(d, e, 1);
  }
  // scaled matrix A = B^(-1/2) S B^(-1/2), deflated shift-invert Lanczos
  SpMat A = S;
  for (int k = 0; k < A.outerSize(); ++k)
    for (SpMat::InnerIterator it(A, k); it; ++it)
      it.valueRef() /= s[it.row()] * s[it.col()];
  double scale = 0.0;
  for (int i = 0; i < n; ++i) scale = std::max(scale, std::abs(A.coeff(i, i)));
  const double sigma = 1e-8 * scale;
  SpMat Ashift = A;
  Ashift.diagonal().array() += sigma;
  Eigen::SimplicialLDLT<SpMat> ldlt(Ashift);
  if (ldlt.info() != Eigen::Success)
    throw std::runtime_error("poincare_constant: factorization failed");

  Eigen::VectorXd z = s / s.norm();  // null vector of A
  const int m_max = 120;
  std::vector<Eigen::VectorXd> V;
  V.reserve(m_max);
  std::vector<double> alpha, beta;
  // deterministic start orthogonal to z
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) v[i] = std::sin(0.37 * (i + 1)) + 1e-3 * (i % 7);
  v -= z * z.dot(v);
  v /= v.norm();
  V.push_back(v);
  double theta_prev = 0.0;
  double theta = 0.0;
  for (int j = 0; j < m_max; ++j) {
    Eigen::VectorXd w = ldlt.solve(V[static_cast<std::size_t>(j)]);
    w -= z * z.dot(w);
    const double a = w.dot(V[static_cast<std::size_t>(j)]);
    alpha.push_back(a);
    w -= a * V[static_cast<std::size_t>(j)];
    if (j > 0) w -= beta[static_cast<std::size_t>(j - 1)] * V[static_cast<std::size_t>(j - 1)];
    for (const auto& q : V) w -= q * q.dot(w);  // full reorthogonalization
    w -= z * z.dot(w);
    const double b = w.norm();
    // Rayleigh tridiagonal: largest eigenvalue of (alpha, beta)
    {
      Eigen::VectorXd dd(static_cast<Eigen::Index>(alpha.size()));
      Eigen::VectorXd ee(std::max<Eigen::Index>(0, static_cast<Eigen::Index>(alpha.size()) - 1));
      for (std::size_t i = 0; i < alpha.size(); ++i) dd[static_cast<Eigen::Index>(i)] = alpha[i];
      for (std::size_t i = 0; i + 1 < alpha.size(); ++i) ee[static_cast<Eigen::Index>(i)] = beta[i];
      theta = tridiag_kth_eigenvalue(dd, ee, static_cast<int>(alpha.size()) - 1);
    }
    if (j > 6 && std::abs(theta - theta_prev) < 1e-13 * std::abs(theta)) break;
    theta_prev = theta;
    if (b < 1e-14) break;
    beta.push_back(b);
    V.push_back(w / b);
  }
  if (theta <= 0.0)
    throw std::runtime_error("poincare_constant: Lanczos failed to converge");
  return 1.0 / theta - sigma;
}

}  // namespace

double poincare_constant(const GridOperator& op) {
  const Eigen::VectorXd B = op.W.cwiseProduct(op.mu);
  const double lambda1 = pencil_lambda1(op.stiff, B, op.grid);
  // stiff carries the T factor; the Poincare form uses plain |grad f|^2
  return op.T / lambda1;
}

PoincareReport poincare_with_refinement(const DriftModel& model, double T,
                                        const Grid& grid) {
  PoincareReport rep;
  rep.C_P = poincare_constant(build_operator(model, T, grid));
  auto halved = [](int n) { return (n - 1) / 2 + 1; };
  const bool can_halve = (grid.n[0] - 1) % 2 == 0 && halved(grid.n[0]) >= 3 &&
                         halved(grid.n[0]) % 2 == 1 &&
                         (grid.dim == 1 ||
                          ((grid.n[1] - 1) % 2 == 0 && halved(grid.n[1]) >= 3 &&
                           halved(grid.n[1]) % 2 == 1));
  if (!can_halve) return rep;
  Grid coarse = grid;
  coarse.n[0] = halved(grid.n[0]);
  if (grid.dim == 2) coarse.n[1] = halved(grid.n[1]);
  rep.C_P_coarse = poincare_constant(build_operator(model, T, coarse));
  rep.discretization_error = std::abs(rep.C_P - rep.C_P_coarse) / 3.0;
  const bool can_halve_again = (coarse.n[0] - 1) % 2 == 0 &&
                               halved(coarse.n[0]) >= 3 &&
                               halved(coarse.n[0]) % 2 == 1 &&
                               (grid.dim == 1 || ((coarse.n[1] - 1) % 2 == 0 &&
                                                  halved(coarse.n[1]) >= 3 &&
                                                  halved(coarse.n[1]) % 2 == 1));
  if (can_halve_again) {
    Grid coarser = coarse;
    coarser.n[0] = halved(coarse.n[0]);
    if (grid.dim == 2) coarser.n[1] = halved(coarse.n[1]);
    const double c2 = poincare_constant(build_operator(model, T, coarser));
    const double e1 = std::abs(rep.C_P_coarse - rep.C_P);
    const double e2 = std::abs(c2 - rep.C_P_coarse);
    if (e1 > 0.0 && e2 > 0.0) rep.richardson_slope = std::log2(e2 / e1);
  }
  return rep;
}

namespace {

double default_dt(const GridOperator& op, double t) {
  const double h = op.grid.h(0);
  return std::min({0.01, t / 64.0, h});
}

Eigen::VectorXd crank_nicolson(const SpMat& L, const Eigen::VectorXd& f0, double t,
                               double dt) {
  if (t <= 0.0) return f0;
  const int n_steps = std::max(1, static_cast<int>(std::ceil(t / dt - 1e-12)));
  const double step = t / n_steps;
  const int n = static_cast<int>(L.rows());
  SpMat I(n, n);
  I.setIdentity();
  const SpMat A = I - 0.5 * step * L;
  const SpMat B = I + 0.5 * step * L;
  Eigen::SparseLU<SpMat> lu(A);
  if (lu.info() != Eigen::Success)
    throw std::runtime_error("semigroup_evolve: factorization failed");
  Eigen::VectorXd u = f0;
  for (int k = 0; k < n_steps; ++k) u = lu.solve(B * u);
  return u;
}

}  // namespace

Eigen::VectorXd semigroup_evolve(const GridOperator& op, const Eigen::VectorXd& f0,
                                 double t, double dt) {
  if (f0.size() != op.grid.size())
    throw std::invalid_argument("semigroup_evolve: size mismatch");
  if (t < 0.0) throw std::invalid_argument("semigroup_evolve: negative time");
  const double step = dt > 0.0 ? dt : default_dt(op, t);
  return crank_nicolson(op.L, f0, t, step);
}

Eigen::VectorXd evolve_density(const GridOperator& op, const Eigen::VectorXd& p0,
                               double t, double dt) {
  if (p0.size() != op.grid.size())
    throw std::invalid_argument("evolve_density: size mismatch");
  const double step = dt > 0.0 ? dt : default_dt(op, t);
  // d_t <p, u>_W = <p, L u>_W: densities follow W^{-1} L^T W
  SpMat Lt = SpMat(op.L.transpose());
  for (int k = 0; k < Lt.outerSize(); ++k)
    for (SpMat::InnerIterator it(Lt, k); it; ++it)
      it.valueRef() *= op.W[it.col()] / op.W[it.row()];
  Eigen::VectorXd p = crank_nicolson(Lt, p0, t, step);
  if (p.minCoeff() < -1e-8 * p.maxCoeff())
    throw std::runtime_error("evolve_density: negative density (step too large)");
  return p;
}

Eigen::VectorXd grad_sq(const GridOperator& op, const Eigen::VectorXd& f) {
  const Grid& g = op.grid;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(g.size());
  if (g.dim == 1) {
    const double h = g.h(0);
    for (int i = 1; i + 1 < g.n[0]; ++i) {
      const double d = (f[i + 1] - f[i - 1]) / (2.0 * h);
      out[i] = d * d;
    }
  } else {
    const double h0 = g.h(0), h1 = g.h(1);
    for (int j = 1; j + 1 < g.n[1]; ++j)
      for (int i = 1; i + 1 < g.n[0]; ++i) {
        const double dx = (f[g.flat(i + 1, j)] - f[g.flat(i - 1, j)]) / (2.0 * h0);
        const double dy = (f[g.flat(i, j + 1)] - f[g.flat(i, j - 1)]) / (2.0 * h1);
        out[g.flat(i, j)] = dx * dx + dy * dy;
      }
  }
  return out;
}

GradientContractionReport gradient_contraction_check(
    const GridOperator& op, double M2, double lambda,
    const std::vector<Eigen::VectorXd>& test_functions,
    const std::vector<double>& times, double tol_coeff) {
  GradientContractionReport rep;
  const Grid& g = op.grid;
  const double h2 = g.h(0) * g.h(0);
  rep.tol = tol_coeff * h2;
  rep.times = times;
  rep.worst_by_time.assign(times.size(), 0.0);
  double worst = 0.0;
  for (const Eigen::VectorXd& f : test_functions) {
    const Eigen::VectorXd gf = grad_sq(op, f);
    const double scale = std::max(gf.maxCoeff(), 1e-12);
    for (std::size_t k = 0; k < times.size(); ++k) {
      const double t = times[k];
      const Eigen::VectorXd u = semigroup_evolve(op, f, t);
      const Eigen::VectorXd w = semigroup_evolve(op, gf, t);
      const Eigen::VectorXd gu = grad_sq(op, u);
      const double decay = M2 * std::exp(-2.0 * lambda * t);
      double v = 0.0;
      if (g.dim == 1) {
        for (int i = 1; i + 1 < g.n[0]; ++i)
          v = std::max(v, gu[i] - decay * std::max(w[i], 0.0));
      } else {
        for (int j = 1; j + 1 < g.n[1]; ++j)
          for (int i = 1; i + 1 < g.n[0]; ++i) {
            const int id = g.flat(i, j);
            v = std::max(v, gu[id] - decay * std::max(w[id], 0.0));
          }
      }
      v /= scale;
      rep.worst_by_time[k] = std::max(rep.worst_by_time[k], v);
      worst = std::max(worst, v);
    }
  }
  rep.max_violation = worst;
  rep.pass = worst <= rep.tol;
  return rep;
}

double grid_w2_1d(const GridOperator& op, const Eigen::VectorXd& p,
                  const Eigen::VectorXd& q) {
  if (op.grid.dim != 1)
    throw std::invalid_argument("grid_w2_1d: requires a 1d grid");
  const int n = op.grid.n[0];
  Eigen::MatrixXd pts(n, 1);
  for (int i = 0; i < n; ++i) pts(i, 0) = op.grid.coord(0, i);
  Eigen::VectorXd wp = op.W.cwiseProduct(p).cwiseMax(0.0);
  Eigen::VectorXd wq = op.W.cwiseProduct(q).cwiseMax(0.0);
  wp /= wp.sum();
  wq /= wq.sum();
  return w_alpha_1d(EmpiricalMeasure(pts, wp), EmpiricalMeasure(pts, wq), 2.0).cost;
}

KlTvReport kl_tv_check(const GridOperator& op, const Eigen::VectorXd& nu0,
                       double K, double lambda, double M,
                       const std::vector<double>& times, double slack, double dt) {
  if (op.grid.dim != 1)
    throw std::invalid_argument("kl_tv_check: requires a 1d grid");
  if (nu0.minCoeff() <= 0.0)
    throw std::invalid_argument("kl_tv_check: initial density must be positive");
  KlTvReport rep;
  Eigen::VectorXd p0 = nu0;
  p0 /= op.W.dot(p0);
  rep.w2_init = grid_w2_1d(op, p0, op.mu);
  rep.pass = true;
  for (double t : times) {
    const Eigen::VectorXd p = evolve_density(op, p0, t, dt);
    KlTvEntry e;
    e.t = t;
    double tv = 0.0, kl = 0.0;
    for (int i = 0; i < op.grid.n[0]; ++i) {
      tv += 0.5 * op.W[i] * std::abs(p[i] - op.mu[i]);
      const double pi = std::max(p[i], 1e-300);
      if (p[i] > 0.0) kl += op.W[i] * pi * std::log(pi / std::max(op.mu[i], 1e-300));
    }
    e.tv = tv;
    e.kl = std::max(kl, 0.0);
    e.jt = j_t(K, lambda, M, t);
    e.rhs = e.jt / (2.0 * op.T) * rep.w2_init * rep.w2_init;
    e.pinsker_ok = e.tv * e.tv <= e.kl + 1e-8;
    e.regularization_ok = e.kl <= e.rhs + slack;
    rep.pass = rep.pass && e.pinsker_ok && e.regularization_ok;
    rep.entries.push_back(e);
  }
  return rep;
}

}  // namespace driftlab
