#include "driftlab/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "driftlab/rng.hpp"

namespace driftlab {

Vec DriftModel::eval_drift(const Vec& x) const {
  if (x.size() != dim)
    throw std::invalid_argument("eval_drift: point has length " +
                                std::to_string(x.size()) + ", model dimension is " +
                                std::to_string(dim));
  return drift(x);
}

double drift_quotient(const DriftModel& model, const Vec& x, const Vec& y) {
  const Vec d = x - y;
  const double n2 = d.squaredNorm();
  if (n2 == 0.0) throw std::invalid_argument("drift_quotient: y == x");
  return d.dot(model.eval_drift(x) - model.eval_drift(y)) / n2;
}

KEstimate estimate_k(const DriftModel& model, const Vec& x,
                     const std::vector<Vec>& probes, double ceiling) {
  if (probes.empty()) throw std::invalid_argument("estimate_k: empty probe set");
  KEstimate est;
  est.n_probes = probes.size();
  double sup = -std::numeric_limits<double>::infinity();
  const Vec bx = model.eval_drift(x);
  for (const Vec& y : probes) {
    const Vec d = x - y;
    const double n2 = d.squaredNorm();
    if (n2 == 0.0) continue;
    const double q = d.dot(bx - model.eval_drift(y)) / n2;
    if (q > sup) sup = q;
    if (q > ceiling) est.unbounded = true;
  }
  est.value = -sup;
  return est;
}

namespace {

std::vector<Vec> build_probes(const Vec& x, const ProbeSpec& spec) {
  const int d = static_cast<int>(x.size());
  std::vector<Vec> probes;
  probes.reserve(static_cast<std::size_t>(spec.n_radii) * spec.n_dir +
                 2 * d + spec.near_steps);
  CounterRng rng(spec.seed, 0);
  std::uint64_t ctr = 0;
  auto direction = [&]() {
    Vec u(d);
    double n2 = 0.0;
    do {
      for (int i = 0; i < d; ++i) u[i] = rng.normal(ctr, static_cast<std::uint32_t>(i));
      ++ctr;
      n2 = u.squaredNorm();
    } while (n2 == 0.0);
    return Vec(u / std::sqrt(n2));
  };
  for (int ir = 0; ir < spec.n_radii; ++ir) {
    const double t = spec.n_radii == 1 ? 0.0
                     : static_cast<double>(ir) / (spec.n_radii - 1);
    const double r = spec.r_min * std::pow(spec.r_max / spec.r_min, t);
    if (d == 1) {
      probes.push_back(x + Vec::Constant(1, r));
      probes.push_back(x - Vec::Constant(1, r));
    } else {
      for (int id = 0; id < spec.n_dir; ++id) probes.push_back(x + r * direction());
    }
  }
  // near-x probes at the fd scale; the sup is often attained as y -> x
  for (int i = 0; i < d; ++i) {
    Vec e = Vec::Zero(d);
    e[i] = spec.fd_step * (1.0 + x.norm());
    probes.push_back(x + e);
    probes.push_back(x - e);
  }
  for (int j = 0; j < spec.near_steps && d > 1; ++j)
    probes.push_back(x + spec.fd_step * (1.0 + x.norm()) * direction());
  return probes;
}

}  // namespace

KEstimate estimate_k(const DriftModel& model, const Vec& x,
                     const ProbeSpec& spec) {
  return estimate_k(model, x, build_probes(x, spec), spec.ceiling);
}

Mat drift_jacobian(const DriftModel& model, const Vec& x, double fd_step) {
  const int d = model.dim;
  const double h = fd_step > 0.0 ? fd_step : 1e-5 * (1.0 + x.norm());
  Mat J(d, d);
  Vec xp = x, xm = x;
  for (int j = 0; j < d; ++j) {
    xp[j] = x[j] + h;
    xm[j] = x[j] - h;
    J.col(j) = (model.eval_drift(xp) - model.eval_drift(xm)) / (2.0 * h);
    xp[j] = x[j];
    xm[j] = x[j];
  }
  return J;
}

namespace {

// Largest eigenvalue of a symmetric matrix. Dense solve for moderate sizes,
// shifted power iteration beyond (mean-field drifts can live on R^(Nd)).
double sym_lambda_max(const Mat& S) {
  const int n = static_cast<int>(S.rows());
  if (n <= 64) {
    Eigen::SelfAdjointEigenSolver<Mat> es(S, Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
  }
  const double shift = S.cwiseAbs().rowwise().sum().maxCoeff();  // Gershgorin
  Vec v = Vec::Ones(n).normalized();
  double theta = 0.0;
  for (int it = 0; it < 500; ++it) {
    Vec w = S * v + shift * v;
    const double nw = w.norm();
    if (nw == 0.0) return -shift;
    w /= nw;
    const double t = w.dot(S * w);
    if (it > 3 && std::abs(t - theta) < 1e-12 * (1.0 + std::abs(t))) {
      theta = t;
      break;
    }
    theta = t;
    v = w;
  }
  return theta;
}

}  // namespace

double jacobian_k_tilde(const DriftModel& model, const Vec& x, double fd_step) {
  const Mat J = drift_jacobian(model, x, fd_step);
  const Mat S = 0.5 * (J + J.transpose());
  return -sym_lambda_max(S);
}

Assumption1Report verify_assumption1(const DriftModel& model,
                                     const ProbeSpec& spec, double tol) {
  if (!model.assumption)
    throw std::invalid_argument("verify_assumption1: model declares no (K,R,c)");
  const auto [K, R, c] = *model.assumption;
  Assumption1Report rep;
  rep.tol = tol;
  rep.worst_global = std::numeric_limits<double>::infinity();
  rep.worst_outer = std::numeric_limits<double>::infinity();

  const int d = model.dim;
  std::vector<double> radii;
  for (int i = 0; i <= 20; ++i) radii.push_back(spec.r_max * i / 20.0);
  radii.push_back(R);
  radii.push_back(R * 1.01 + 1e-9);

  CounterRng rng(spec.seed + 1, 1);
  std::uint64_t ctr = 0;
  rep.profile.samples_per_point = 0;
  for (double r : radii) {
    double kmin = std::numeric_limits<double>::infinity();
    const int ndir = d == 1 ? 2 : spec.n_dir;
    for (int id = 0; id < ndir; ++id) {
      Vec x(d);
      if (d == 1) {
        x[0] = id == 0 ? r : -r;
      } else {
        for (int i = 0; i < d; ++i) x[i] = rng.normal(ctr, static_cast<std::uint32_t>(i));
        ++ctr;
        const double n = x.norm();
        x = n > 0 ? Vec(x * (r / n)) : Vec::Zero(d);
      }
      const KEstimate est = estimate_k(model, x, spec);
      rep.profile.samples_per_point = est.n_probes;
      if (est.unbounded) rep.profile.unbounded_below = true;
      kmin = std::min(kmin, est.value);
      rep.worst_global = std::min(rep.worst_global, est.value + K);
      if (r >= R) rep.worst_outer = std::min(rep.worst_outer, est.value - c);
    }
    rep.profile.radii.push_back(r);
    rep.profile.k_lower.push_back(kmin);
  }
  rep.profile.K_hat =
      -*std::min_element(rep.profile.k_lower.begin(), rep.profile.k_lower.end());
  rep.pass = rep.worst_global >= -tol && rep.worst_outer >= -tol &&
             !rep.profile.unbounded_below;
  return rep;
}

// ---- model zoo ------------------------------------------------------------

DriftModel make_ou(int dim) {
  DriftModel m;
  m.name = "ou";
  m.dim = dim;
  m.drift = [](const Vec& x) { return Vec(-x); };
  if (dim == 1) m.drift_1d = [](double x) { return -x; };
  m.assumption = AssumptionParams{0.0, 0.0, 1.0};
  m.is_gradient = true;
  m.potential = [](const Vec& x) { return 0.5 * x.squaredNorm(); };
  m.log_density = [](const Vec& x) { return -0.5 * x.squaredNorm(); };
  return m;
}

DriftModel make_power_law(int dim, double beta, double r) {
  if (beta <= 2.0) throw std::invalid_argument("make_power_law: beta must exceed 2");
  DriftModel m;
  m.name = "power";
  m.dim = dim;
  m.drift = [beta](const Vec& x) {
    const double n = x.norm();
    return n == 0.0 ? Vec(Vec::Zero(x.size())) : Vec(-std::pow(n, beta - 2.0) * x);
  };
  if (dim == 1) {
    if (beta == 4.0)
      m.drift_1d = [](double x) { return -x * x * x; };
    else
      m.drift_1d = [beta](double x) {
        return x == 0.0 ? 0.0 : -std::copysign(std::pow(std::abs(x), beta - 1.0), x);
      };
  }
  m.assumption =
      AssumptionParams{0.0, r, std::pow(r, beta - 2.0) / (2.0 * beta - 2.0)};
  m.is_gradient = true;
  m.potential = [beta](const Vec& x) { return std::pow(x.norm(), beta) / beta; };
  m.log_density = [beta](const Vec& x) { return -std::pow(x.norm(), beta) / beta; };
  return m;
}

DriftModel make_double_well(int dim) {
  DriftModel m;
  m.name = "doublewell";
  m.dim = dim;
  m.drift = [](const Vec& x) { return Vec(x - x * x.squaredNorm()); };
  if (dim == 1) m.drift_1d = [](double x) { return x - x * x * x; };
  // k(x) = (3/4)|x|^2 - 1; valid declarations need c = (3/4)R^2 - 1 > 0
  m.assumption = AssumptionParams{1.0, 2.0, 2.0};
  m.is_gradient = true;
  m.potential = [](const Vec& x) {
    const double n2 = x.squaredNorm();
    return 0.25 * n2 * n2 - 0.5 * n2;
  };
  m.log_density = [m](const Vec& x) { return -m.potential(x); };
  return m;
}

DriftModel make_skew_gradient(int dim, double gamma) {
  if (dim % 2 != 0)
    throw std::invalid_argument("make_skew_gradient: dimension must be even");
  DriftModel m;
  m.name = "skew";
  m.dim = dim;
  // b = -(I + gamma J) x, J = block diag of [[0,1],[-1,0]]
  m.drift = [gamma](const Vec& x) {
    Vec b = -x;
    for (int i = 0; i + 1 < x.size(); i += 2) {
      b[i] -= gamma * x[i + 1];
      b[i + 1] += gamma * x[i];
    }
    return b;
  };
  m.assumption = AssumptionParams{0.0, 0.0, 1.0};
  m.is_gradient = false;  // drift is not a gradient; exp(-U/T) still invariant
  m.log_density = [](const Vec& x) { return -0.5 * x.squaredNorm(); };
  return m;
}

DriftModel make_exponential_tail(int dim) {
  DriftModel m;
  m.name = "exptail";
  m.dim = dim;
  m.drift = [](const Vec& x) {
    return Vec(-x / std::sqrt(1.0 + x.squaredNorm()));
  };
  if (dim == 1) m.drift_1d = [](double x) { return -x / std::sqrt(1.0 + x * x); };
  m.is_gradient = true;
  m.potential = [](const Vec& x) { return std::sqrt(1.0 + x.squaredNorm()); };
  m.log_density = [](const Vec& x) { return -std::sqrt(1.0 + x.squaredNorm()); };
  return m;
}

DriftModel make_perturbed(const DriftModel& base, double eps,
                          std::function<Vec(const Vec&)> phi,
                          const std::string& tag) {
  DriftModel m = base;
  m.name = base.name + "+" + tag;
  auto inner = base.drift;
  m.drift = [inner, phi, eps](const Vec& x) { return Vec(inner(x) + eps * phi(x)); };
  m.drift_1d = nullptr;  // phi is vector-valued; scalar fast path dropped
  m.is_gradient = false;
  m.potential = nullptr;
  m.log_density = nullptr;
  m.assumption.reset();
  return m;
}

DriftModel make_perturbed(const DriftModel& base, double eps) {
  DriftModel m = make_perturbed(
      base, eps,
      [](const Vec& x) { return Vec(x.array().tanh().matrix()); }, "tanh");
  if (base.dim == 1 && base.drift_1d) {
    auto inner1 = base.drift_1d;
    m.drift_1d = [inner1, eps](double x) { return inner1(x) + eps * std::tanh(x); };
  }
  return m;
}

DriftModel make_model(const std::string& id,
                      const std::map<std::string, double>& params) {
  auto get = [&](const std::string& key, double def) {
    auto it = params.find(key);
    return it == params.end() ? def : it->second;
  };
  auto check_keys = [&](std::initializer_list<const char*> allowed) {
    for (const auto& [k, v] : params) {
      bool ok = false;
      for (const char* a : allowed)
        if (k == a) ok = true;
      if (!ok)
        throw std::invalid_argument("make_model(" + id + "): unknown parameter '" +
                                    k + "'");
    }
  };
  const int dim = static_cast<int>(get("dim", 1));
  if (id == "ou") {
    check_keys({"dim"});
    return make_ou(dim);
  }
  if (id == "power") {
    check_keys({"dim", "beta", "r"});
    return make_power_law(dim, get("beta", 4.0), get("r", 1.0));
  }
  if (id == "doublewell") {
    check_keys({"dim"});
    return make_double_well(dim);
  }
  if (id == "skew") {
    check_keys({"dim", "gamma"});
    return make_skew_gradient(dim == 1 ? 2 : dim, get("gamma", 1.0));
  }
  if (id == "exptail") {
    check_keys({"dim"});
    return make_exponential_tail(dim);
  }
  if (id == "cubic") {  // alias: power law with beta = 4
    check_keys({"dim", "r"});
    return make_power_law(dim, 4.0, get("r", 1.0));
  }
  if (id == "cubic-tanh") {
    check_keys({"dim", "r", "eps"});
    return make_perturbed(make_power_law(dim, 4.0, get("r", 1.0)), get("eps", 0.5));
  }
  throw std::invalid_argument("make_model: unknown model id '" + id + "'");
}

}  // namespace driftlab
