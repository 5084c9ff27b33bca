#include "driftlab/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "driftlab/rng.hpp"

namespace driftlab {

EmpiricalMeasure::EmpiricalMeasure(Eigen::MatrixXd pts) : points(std::move(pts)) {
  if (points.rows() < 1) throw std::invalid_argument("EmpiricalMeasure: empty cloud");
}

EmpiricalMeasure::EmpiricalMeasure(Eigen::MatrixXd pts, Eigen::VectorXd w)
    : points(std::move(pts)), weights(std::move(w)) {
  if (points.rows() < 1) throw std::invalid_argument("EmpiricalMeasure: empty cloud");
  if (weights.size() != points.rows())
    throw std::invalid_argument("EmpiricalMeasure: weight/point count mismatch");
  if (weights.minCoeff() < 0.0)
    throw std::invalid_argument("EmpiricalMeasure: negative weight");
  if (std::abs(weights.sum() - 1.0) > 1e-12)
    throw std::invalid_argument("EmpiricalMeasure: weights must sum to 1");
}

EmpiricalMeasure EmpiricalMeasure::from_samples(const std::vector<double>& xs) {
  Eigen::MatrixXd pts(static_cast<Eigen::Index>(xs.size()), 1);
  for (std::size_t i = 0; i < xs.size(); ++i) pts(static_cast<Eigen::Index>(i), 0) = xs[i];
  return EmpiricalMeasure(std::move(pts));
}

TransportResult w_alpha_1d(const EmpiricalMeasure& X, const EmpiricalMeasure& Y,
                           double alpha) {
  if (X.dim() != 1 || Y.dim() != 1)
    throw std::invalid_argument("w_alpha_1d: requires d = 1");
  const Eigen::Index n = X.size(), m = Y.size();
  std::vector<Eigen::Index> ix(n), iy(m);
  std::iota(ix.begin(), ix.end(), 0);
  std::iota(iy.begin(), iy.end(), 0);
  std::sort(ix.begin(), ix.end(),
            [&](auto a, auto b) { return X.points(a, 0) < X.points(b, 0); });
  std::sort(iy.begin(), iy.end(),
            [&](auto a, auto b) { return Y.points(a, 0) < Y.points(b, 0); });
  // quantile coupling over the merged cumulative weights
  double cost = 0.0;
  Eigen::Index i = 0, j = 0;
  double wx = X.weight(ix[0]), wy = Y.weight(iy[0]);
  while (i < n && j < m) {
    const double w = std::min(wx, wy);
    cost += w * std::pow(std::abs(X.points(ix[i], 0) - Y.points(iy[j], 0)), alpha);
    wx -= w;
    wy -= w;
    if (wx <= 1e-15 * (1.0 + w)) {
      ++i;
      if (i < n) wx = X.weight(ix[i]);
    }
    if (wy <= 1e-15 * (1.0 + w)) {
      ++j;
      if (j < m) wy = Y.weight(iy[j]);
    }
  }
  TransportResult r;
  r.alpha = alpha;
  r.method = "1d-exact";
  r.cost = std::pow(std::max(cost, 0.0), 1.0 / alpha);
  return r;
}

namespace {

// Shortest augmenting path assignment (Jonker-Volgenant flavor).
// Returns the minimal total cost; match[j] = row assigned to column j.
double solve_assignment(const Eigen::MatrixXd& C, std::vector<int>& match) {
  const int n = static_cast<int>(C.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, n), way(n + 1, 0);
  for (int i = 0; i < n; ++i) {
    p[n] = i;
    int j0 = n;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = -1;
      for (int j = 0; j < n; ++j) {
        if (used[j]) continue;
        const double cur = C(i0, j) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != n);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != n);
  }
  match.assign(n, -1);
  double total = 0.0;
  for (int j = 0; j < n; ++j) {
    match[j] = p[j];
    total += C(p[j], j);
  }
  return total;
}

}  // namespace

TransportResult w2_assignment(const EmpiricalMeasure& X, const EmpiricalMeasure& Y,
                              double alpha, Eigen::Index cap, bool keep_plan) {
  const Eigen::Index n = X.size();
  if (Y.size() != n)
    throw std::invalid_argument("w2_assignment: clouds must have equal size");
  if (X.weights.size() || Y.weights.size())
    throw std::invalid_argument("w2_assignment: uniform weights only");
  if (n > cap)
    throw std::invalid_argument("w2_assignment: size exceeds cap (" +
                                std::to_string(cap) + ")");
  Eigen::MatrixXd C(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      C(i, j) = std::pow((X.points.row(i) - Y.points.row(j)).norm(), alpha);
  std::vector<int> match;
  const double total = solve_assignment(C, match);
  TransportResult r;
  r.alpha = alpha;
  r.method = "assignment";
  r.cost = std::pow(std::max(total / static_cast<double>(n), 0.0), 1.0 / alpha);
  if (keep_plan) {
    Eigen::MatrixXd plan = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
      plan(match[static_cast<std::size_t>(j)], j) = 1.0 / static_cast<double>(n);
    r.plan = std::move(plan);
  }
  return r;
}

namespace {

struct SinkhornRun {
  double sharp_cost = 0.0;  // <pi, C>
  int iterations = 0;
  double violation = 0.0;
  bool converged = false;
};

// Log-domain Sinkhorn; cost rows cached when they fit, recomputed otherwise.
SinkhornRun sinkhorn_log(const EmpiricalMeasure& X, const EmpiricalMeasure& Y,
                         double alpha, const SinkhornOptions& opt) {
  const Eigen::Index n = X.size(), m = Y.size();
  Eigen::VectorXd la(n), lb(m);
  for (Eigen::Index i = 0; i < n; ++i) la[i] = std::log(X.weight(i));
  for (Eigen::Index j = 0; j < m; ++j) lb[j] = std::log(Y.weight(j));
  Eigen::VectorXd f = Eigen::VectorXd::Zero(n), g = Eigen::VectorXd::Zero(m);
  const double eps = opt.epsilon;

  auto cost_row = [&](Eigen::Index i, Eigen::VectorXd& row) {
    for (Eigen::Index j = 0; j < m; ++j)
      row[j] = std::pow((X.points.row(i) - Y.points.row(j)).norm(), alpha);
  };
  const bool cached = static_cast<std::size_t>(n) * static_cast<std::size_t>(m) <=
                      (std::size_t{1} << 24);
  std::vector<Eigen::VectorXd> cache;
  if (cached) {
    cache.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      cache[static_cast<std::size_t>(i)].resize(m);
      cost_row(i, cache[static_cast<std::size_t>(i)]);
    }
  }
  Eigen::VectorXd scratch(m);
  auto row_ref = [&](Eigen::Index i) -> const Eigen::VectorXd& {
    if (cached) return cache[static_cast<std::size_t>(i)];
    cost_row(i, scratch);
    return scratch;
  };

  SinkhornRun out;
  Eigen::VectorXd z(m);
  const double neg_inf = -std::numeric_limits<double>::infinity();
  for (int it = 0; it < opt.max_iter; ++it) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::VectorXd& row = row_ref(i);
      z = (g - row) / eps + lb;
      const double zmax = z.maxCoeff();
      f[i] = -eps * (zmax + std::log((z.array() - zmax).exp().sum()));
    }
    // column logsumexp in two passes (max, then sum)
    Eigen::VectorXd gmax = Eigen::VectorXd::Constant(m, neg_inf);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::VectorXd& row = row_ref(i);
      for (Eigen::Index j = 0; j < m; ++j)
        gmax[j] = std::max(gmax[j], (f[i] - row[j]) / eps + la[i]);
    }
    Eigen::VectorXd colsum = Eigen::VectorXd::Zero(m);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::VectorXd& row = row_ref(i);
      for (Eigen::Index j = 0; j < m; ++j)
        colsum[j] += std::exp((f[i] - row[j]) / eps + la[i] - gmax[j]);
    }
    for (Eigen::Index j = 0; j < m; ++j)
      g[j] = -eps * (gmax[j] + std::log(colsum[j]));

    out.iterations = it + 1;
    if ((it + 1) % 4 == 0 || it + 1 == opt.max_iter) {
      double viol = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::VectorXd& row = row_ref(i);
        double s = 0.0;
        for (Eigen::Index j = 0; j < m; ++j)
          s += std::exp((f[i] + g[j] - row[j]) / eps + la[i] + lb[j]);
        viol += std::abs(s - X.weight(i));
      }
      out.violation = viol;
      if (viol < opt.marginal_tol) {
        out.converged = true;
        break;
      }
    }
  }
  double cost = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd& row = row_ref(i);
    for (Eigen::Index j = 0; j < m; ++j)
      cost += row[j] * std::exp((f[i] + g[j] - row[j]) / eps + la[i] + lb[j]);
  }
  out.sharp_cost = cost;
  return out;
}

}  // namespace

TransportResult w2_entropic(const EmpiricalMeasure& X, const EmpiricalMeasure& Y,
                            double alpha, const SinkhornOptions& opt) {
  if (opt.epsilon <= 0.0) throw std::invalid_argument("w2_entropic: epsilon must be positive");
  TransportResult r;
  r.alpha = alpha;
  r.method = "entropic";
  r.epsilon = opt.epsilon;
  const SinkhornRun xy = sinkhorn_log(X, Y, alpha, opt);
  r.iterations = xy.iterations;
  r.converged = xy.converged;
  r.marginal_violation = xy.violation;
  double cost = xy.sharp_cost;
  if (opt.debiased) {
    const SinkhornRun xx = sinkhorn_log(X, X, alpha, opt);
    const SinkhornRun yy = sinkhorn_log(Y, Y, alpha, opt);
    cost -= 0.5 * (xx.sharp_cost + yy.sharp_cost);
  }
  r.cost = std::pow(std::max(cost, 0.0), 1.0 / alpha);
  return r;
}

namespace {

EmpiricalMeasure resample(const EmpiricalMeasure& X, const CounterRng& rng,
                          std::uint64_t step_base) {
  const Eigen::Index n = X.size();
  Eigen::MatrixXd pts(n, X.dim());
  // inverse-CDF over the weights
  Eigen::VectorXd cum(n);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    acc += X.weight(i);
    cum[i] = acc;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = rng.uniform(step_base + static_cast<std::uint64_t>(i), 0);
    const double* lo = std::lower_bound(cum.data(), cum.data() + n, u * acc);
    Eigen::Index k = std::min<Eigen::Index>(lo - cum.data(), n - 1);
    pts.row(i) = X.points.row(k);
  }
  return EmpiricalMeasure(std::move(pts));
}

}  // namespace

TransportResult bootstrap_ci(const EmpiricalMeasure& X, const EmpiricalMeasure& Y,
                             double alpha, TransportMethod method, int n_boot,
                             std::uint64_t seed, const SinkhornOptions& opt) {
  if (n_boot < 100) throw std::invalid_argument("bootstrap_ci: n_boot must be >= 100");
  auto eval = [&](const EmpiricalMeasure& A, const EmpiricalMeasure& B) {
    switch (method) {
      case TransportMethod::OneDExact: return w_alpha_1d(A, B, alpha);
      case TransportMethod::Assignment: return w2_assignment(A, B, alpha);
      case TransportMethod::Entropic: return w2_entropic(A, B, alpha, opt);
    }
    throw std::logic_error("bootstrap_ci: bad method");
  };
  TransportResult point = eval(X, Y);
  std::vector<double> vals(static_cast<std::size_t>(n_boot));
  // paired index streams when the sizes match (common random numbers);
  // identical clouds then resample identically and the CI collapses at 0
  const CounterRng rx(seed, 1), ry(seed, X.size() == Y.size() ? 1 : 2);
  for (int b = 0; b < n_boot; ++b) {
    const std::uint64_t base =
        static_cast<std::uint64_t>(b) * (static_cast<std::uint64_t>(X.size()) +
                                         static_cast<std::uint64_t>(Y.size()) + 7);
    const EmpiricalMeasure Xb = resample(X, rx, base);
    const EmpiricalMeasure Yb = resample(Y, ry, base);
    vals[static_cast<std::size_t>(b)] = eval(Xb, Yb).cost;
  }
  std::sort(vals.begin(), vals.end());
  auto pick = [&](double q) {
    const double pos = q * (vals.size() - 1);
    const std::size_t i = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    return i + 1 < vals.size() ? vals[i] * (1.0 - frac) + vals[i + 1] * frac
                               : vals[i];
  };
  point.has_ci = true;
  point.ci_lo = pick(0.025);
  point.ci_hi = pick(0.975);
  point.n_boot = n_boot;
  return point;
}

}  // namespace driftlab
