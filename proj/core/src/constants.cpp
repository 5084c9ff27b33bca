#include "driftlab/constants.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "driftlab/rng.hpp"

namespace driftlab {

namespace {

// C2 smoothstep on [0,1]
inline double smoothstep(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

// 16-point Gauss-Legendre on [a,b]
const double kGlX[8] = {0.0950125098376374, 0.2816035507792589,
                        0.4580167776572274, 0.6178762444026438,
                        0.7554044083550030, 0.8656312023878318,
                        0.9445750230732326, 0.9894009349916499};
const double kGlW[8] = {0.1894506104550685, 0.1826034150449236,
                        0.1691565193950025, 0.1495959888165767,
                        0.1246289712555339, 0.0951585116824928,
                        0.0622535239386479, 0.0271524594117541};

template <class F>
double gl16(const F& f, double a, double b) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double s = 0.0;
  for (int i = 0; i < 8; ++i)
    s += kGlW[i] * (f(c - h * kGlX[i]) + f(c + h * kGlX[i]));
  return s * h;
}

}  // namespace

double r_star(double K, double c, double R, int d) {
  if (c <= 0.0) throw std::invalid_argument("r_star: c must be positive");
  if (K < 0.0 || R < 0.0 || d < 1) throw std::invalid_argument("r_star: bad inputs");
  return R * std::pow(2.0 + 2.0 * K / c, 1.0 / d);
}

WeightFunction::WeightFunction(double K_, double c_, double R_, int d_, double eps_in)
    : K(K_), c(c_), R(R_), d(d_) {
  if (c <= 0.0) throw std::invalid_argument("WeightFunction: c must be positive");
  if (K < 0.0 || R < 0.0 || d < 1)
    throw std::invalid_argument("WeightFunction: bad (K,R,d)");
  Kstar_ = K / 4.0 + c / 8.0;
  R2_ = R * R;
  Rstar_ = driftlab::r_star(K, c, R, d);
  Rstar2_ = Rstar_ * Rstar_;
  if (R == 0.0) {  // no bad region, kappa == 0
    trivial_ = true;
    rho1_ = 0.0;
    return;
  }
  eps_ = eps_in < 0.0 ? 1e-3 * (Rstar2_ - R2_) : eps_in;
  if (Rstar2_ - R2_ < 4.0 * eps_)
    throw std::invalid_argument("WeightFunction: smoothing band does not fit");
  // The rise band straddles the h jump at R^2 where the radial weight is
  // largest; shrinking it by (c/8)/(c/8+K_*) keeps the lost mass, and with it
  // the outward shift of the support, at the same O(eps) scale as the fall band.
  eps_rise_ = eps_ * (c / 8.0) / (c / 8.0 + Kstar_);

  const double w = 0.5 * d - 1.0;  // exponent in the radial measure s^(d/2-1)
  auto pow_w = [w](double s) { return std::pow(s, w); };
  rise_full_ = gl16(
      [&](double s) {
        return (-Kstar_ + (c / 8.0 + Kstar_) * smoothstep((s - R2_) / eps_rise_)) *
               pow_w(s);
      },
      R2_, R2_ + eps_rise_);
  const double rise_full = rise_full_;

  // place the outer band so the cumulative mass hits the target exactly
  const double target = target_mass();
  auto G = [&](double rho) {
    const double body =
        (c / 8.0) * (2.0 / d) *
        (std::pow(rho - eps_, 0.5 * d) - std::pow(R2_ + eps_rise_, 0.5 * d));
    const double fall = gl16(
        [&](double s) {
          return (c / 8.0) * (1.0 - smoothstep((s - (rho - eps_)) / eps_)) * pow_w(s);
        },
        rho - eps_, rho);
    return rise_full + body + fall - target;
  };
  double lo = R2_ + eps_rise_ + eps_, hi = Rstar2_ + 3.0 * eps_;
  while (G(hi) < 0.0) hi += std::max(eps_, 0.05 * (Rstar2_ - R2_));
  if (G(lo) > 0.0) throw std::runtime_error("WeightFunction: band placement failed");
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (G(mid) < 0.0 ? lo : hi) = mid;
    if (hi - lo < 1e-15 * (1.0 + hi)) break;
  }
  rho1_ = 0.5 * (lo + hi);

  // cumulative table of g over [R^2, rho1]; g is linear below R^2
  const int n_knots = 4097;
  knots_.resize(n_knots);
  g_vals_.resize(n_knots);
  gp_vals_.resize(n_knots);
  const double g_R2 = -(2.0 * Kstar_ / d) * R2_;
  double acc = g_R2;
  for (int i = 0; i < n_knots; ++i) {
    knots_[i] = R2_ + (rho1_ - R2_) * i / (n_knots - 1);
    gp_vals_[i] = g_prime(knots_[i]);
    if (i > 0)
      acc += gl16([&](double s) { return g_prime(s); }, knots_[i - 1], knots_[i]);
    g_vals_[i] = acc;
  }
  g_min_ = g_vals_.back();
  kappa_inf_ = -g_min_;  // g(0) = 0 and g is non-increasing

  double best = 2.0 * R * (2.0 * Kstar_ / d);  // sup over [0, R^2] is at R^2
  for (int i = 0; i < n_knots; ++i)
    best = std::max(best, 2.0 * std::sqrt(knots_[i]) * std::abs(gp_vals_[i]));
  grad_inf_ = best;
}

double WeightFunction::target_mass() const {
  return (2.0 * Kstar_ / d) * std::pow(R2_, 0.5 * d);
}

double WeightFunction::cum_h(double r) const {
  const double w = 0.5 * d - 1.0;
  auto pow_w = [w](double s) { return std::pow(s, w); };
  const double a_end = R2_ + eps_rise_, c_start = rho1_ - eps_;
  auto rise = [&](double s) {
    return (-Kstar_ + (c / 8.0 + Kstar_) * smoothstep((s - R2_) / eps_rise_)) *
           pow_w(s);
  };
  auto fall = [&](double s) {
    return (c / 8.0) * (1.0 - smoothstep((s - c_start) / eps_)) * pow_w(s);
  };
  if (r <= a_end) return gl16(rise, R2_, r);
  const double rise_full = rise_full_;
  if (r <= c_start)
    return rise_full + (c / 8.0) * (2.0 / d) *
                           (std::pow(r, 0.5 * d) - std::pow(a_end, 0.5 * d));
  const double body = (c / 8.0) * (2.0 / d) *
                      (std::pow(c_start, 0.5 * d) - std::pow(a_end, 0.5 * d));
  return rise_full + body + gl16(fall, c_start, std::min(r, rho1_));
}

double WeightFunction::h_eps(double r) const {
  if (trivial_) return 0.0;
  if (r <= R2_) return -Kstar_;
  if (r < R2_ + eps_rise_)
    return -Kstar_ + (c / 8.0 + Kstar_) * smoothstep((r - R2_) / eps_rise_);
  if (r <= rho1_ - eps_) return c / 8.0;
  if (r < rho1_) return (c / 8.0) * (1.0 - smoothstep((r - (rho1_ - eps_)) / eps_));
  return 0.0;
}

double WeightFunction::g_prime(double r) const {
  if (trivial_) return 0.0;
  if (r <= R2_) return -2.0 * Kstar_ / d;
  if (r >= rho1_) return 0.0;
  return (-target_mass() + cum_h(r)) * std::pow(r, -0.5 * d);
}

double WeightFunction::g(double r) const {
  if (trivial_) return 0.0;
  if (r <= R2_) return -(2.0 * Kstar_ / d) * r;
  if (r >= rho1_) return g_min_;
  // Hermite cubic on the table
  const double t = (r - R2_) / (rho1_ - R2_) * (knots_.size() - 1);
  std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(t), knots_.size() - 2);
  const double h = knots_[i + 1] - knots_[i];
  const double s = (r - knots_[i]) / h;
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * g_vals_[i] + (s3 - 2 * s2 + s) * h * gp_vals_[i] +
         (-2 * s3 + 3 * s2) * g_vals_[i + 1] + (s3 - s2) * h * gp_vals_[i + 1];
}

double WeightFunction::kappa_r(double r) const {
  if (trivial_) return 0.0;
  return g(r) - g_min_;
}

Vec WeightFunction::grad_kappa(const Vec& x) const {
  if (trivial_) return Vec::Zero(x.size());
  return Vec(2.0 * g_prime(x.squaredNorm()) * x);
}

WeightFunction build_weight(double K, double c, double R, int d, double eps) {
  return WeightFunction(K, c, R, d, eps);
}

// ---- ball supremum ----------------------------------------------------------

BallSup ball_sup(const std::function<double(const Vec&)>& f, int dim,
                 double radius, int grid_per_axis) {
  BallSup out;
  out.grid_points_per_axis = grid_per_axis;
  if (radius <= 0.0) {
    Vec z = Vec::Zero(dim);
    out.value = f(z);
    out.argmax = z;
    out.evaluations = 1;
    return out;
  }
  std::vector<std::pair<double, Vec>> best;
  auto consider = [&](const Vec& x) {
    const double v = f(x);
    ++out.evaluations;
    best.emplace_back(v, x);
  };
  if (dim <= 3) {
    const int n = grid_per_axis;
    std::vector<int> idx(dim, 0);
    while (true) {
      Vec x(dim);
      for (int i = 0; i < dim; ++i) x[i] = -radius + 2.0 * radius * idx[i] / (n - 1);
      const double nx = x.norm();
      if (nx <= radius) consider(x);
      else consider(Vec(x * (radius / nx)));  // keep boundary coverage
      int i = 0;
      while (i < dim && ++idx[i] == n) idx[i++] = 0;
      if (i == dim) break;
    }
  } else {
    const int n_samples = grid_per_axis * grid_per_axis * grid_per_axis;
    CounterRng rng(0x5u, 0);
    for (int s = 0; s < n_samples; ++s) {
      Vec x(dim);
      for (int i = 0; i < dim; ++i)
        x[i] = rng.normal(static_cast<std::uint64_t>(s), static_cast<std::uint32_t>(i));
      const double nx = x.norm();
      if (nx == 0.0) continue;
      const double u = rng.uniform(static_cast<std::uint64_t>(s), 1u << 20);
      consider(Vec(x * (radius * std::pow(u, 1.0 / dim) / nx)));
    }
  }
  std::partial_sort(best.begin(), best.begin() + std::min<std::size_t>(8, best.size()),
                    best.end(),
                    [](const auto& a, const auto& b) { return a.first > b.first; });

  out.value = best.front().first;
  out.argmax = best.front().second;
  const int n_starts = static_cast<int>(std::min<std::size_t>(8, best.size()));
  for (int s = 0; s < n_starts; ++s) {
    Vec x = best[s].second;
    double fx = best[s].first;
    double step = 0.1 * radius;
    for (int it = 0; it < 50; ++it) {
      Vec grad(dim);
      const double h = 1e-6 * (1.0 + x.norm());
      for (int i = 0; i < dim; ++i) {
        Vec xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        grad[i] = (f(xp) - f(xm)) / (2.0 * h);
        out.evaluations += 2;
      }
      const double gn = grad.norm();
      if (gn == 0.0) break;
      Vec cand = x + (step / gn) * grad;
      if (cand.norm() > radius) cand *= radius / cand.norm();
      const double fc = f(cand);
      ++out.evaluations;
      if (fc > fx) {
        x = cand;
        fx = fc;
      } else {
        step *= 0.5;
        if (step < 1e-12 * radius) break;
      }
    }
    if (fx > out.value) {
      out.value = fx;
      out.argmax = x;
    }
  }
  return out;
}

T0Result t0_threshold(const DriftModel& model, double alpha) {
  if (!model.assumption)
    throw std::invalid_argument("t0_threshold: model declares no (K,R,c)");
  if (alpha < 2.0) throw std::invalid_argument("t0_threshold: alpha must be >= 2");
  const auto [K, R, c] = *model.assumption;
  const double Rs = r_star(K, c, R, model.dim);
  const BallSup sup = ball_sup(
      [&](const Vec& x) { return -x.dot(model.drift(x)); }, model.dim, Rs);
  T0Result out;
  out.sup_minus_xb = sup.value;
  out.grid_points_per_axis = sup.grid_points_per_axis;
  out.t0 = (2.0 * K + c) *
           (alpha * (K + c / 4.0) * Rs * Rs + 2.0 * sup.value) / (c * model.dim);
  out.t0_safe = 1.05 * out.t0;
  return out;
}

ContractionConstants contraction_constants(double K, double c, double R, int d,
                                           double T, double alpha) {
  if (alpha < 2.0)
    throw std::invalid_argument("contraction_constants: alpha must be >= 2");
  if (T <= 0.0) throw std::invalid_argument("contraction_constants: T must be positive");
  const double Rs = r_star(K, c, R, d);
  ContractionConstants cc;
  cc.alpha = alpha;
  cc.M = std::pow(1.0 + alpha * (2.0 * K + c) * Rs * Rs / (4.0 * d * T), 1.0 / alpha);
  cc.lambda = c / 4.0;
  cc.provenance = "theorem-1";
  return cc;
}

double poincare_from_contraction(double M, double lambda, double T,
                                 bool reversible) {
  if (M < 1.0 || lambda <= 0.0 || T <= 0.0)
    throw std::invalid_argument("poincare_from_contraction: need M>=1, lambda>0, T>0");
  return reversible ? T / lambda : M * M * T / lambda;
}

CpBetaBound cp_beta_bound(double beta, int d) {
  if (beta <= 2.0) throw std::invalid_argument("cp_beta_bound: beta must exceed 2");
  if (d < 1) throw std::invalid_argument("cp_beta_bound: d must be positive");
  CpBetaBound out;
  const double dm = std::pow(static_cast<double>(d), 1.0 - 2.0 / beta);
  out.bound = 8.0 * (beta - 1.0) *
              std::pow(1.0 + std::pow(2.0, beta / d + 1.0), 1.0 - 2.0 / beta) / dm;
  if (d >= 2) {
    out.has_window = true;
    out.window_lo = d / ((d + 2.0) * dm);
    out.window_hi = (d + 1.0) / ((d - 1.0) * dm);
  }
  return out;
}

double holley_stroock_bound(double K, double c, double R, double T) {
  if (c <= 0.0 || T <= 0.0)
    throw std::invalid_argument("holley_stroock_bound: need c>0, T>0");
  return (2.0 * T / c) *
         std::exp((2.0 * K + c) * R * R * (1.0 + K / c) * (1.0 + K / c) / T);
}

double j_t(double K, double lambda, double M, double t) {
  if (t <= 0.0) throw std::invalid_argument("j_t: t must be positive");
  if (lambda <= 0.0 || M < 1.0 || K < 0.0)
    throw std::invalid_argument("j_t: need lambda>0, M>=1, K>=0");
  double first, second, threshold;
  if (K > 0.0) {
    first = K / (-std::expm1(-2.0 * K * t));
    threshold = std::log1p(K / lambda) / (2.0 * K);
    second = M * M * (K + lambda) * std::pow(1.0 + K / lambda, lambda / K) *
             std::exp(-2.0 * lambda * t);
  } else {
    first = 1.0 / (2.0 * t);
    threshold = 1.0 / (2.0 * lambda);
    second = M * M * lambda * std::exp(1.0 - 2.0 * lambda * t);
  }
  return t >= threshold ? std::min(first, second) : first;
}

ContractionConstants particle_constants(const ParticleParams& p, double T,
                                        double sup_minus_xF) {
  if (p.a >= p.c) throw std::invalid_argument("particle_constants: need a < c");
  if (T <= 0.0) throw std::invalid_argument("particle_constants: T must be positive");
  const double Rs =
      p.R * std::pow(2.0 + 2.0 * (p.C_F + p.a) / (p.c - p.a), 1.0 / (2.0 * p.d));
  const double Ks = p.C_F + 0.5 * (p.c + p.a);
  ContractionConstants cc;
  cc.alpha = 2.0;
  cc.T0 = Ks / (p.d * (p.c - p.a)) *
          (Rs * Rs * (p.C_F + p.C_G) + 2.0 * sup_minus_xF + 4.0 * p.M_G * Rs);
  const double q = 2.0 * Ks * Rs * Rs / (T * p.d);
  cc.M = std::sqrt(1.0 + q);
  cc.lambda = (p.c - p.a) / (4.0 + 4.0 * q);
  cc.provenance = "theorem-4.1";
  return cc;
}

ContractionConstants particle_constants(const ParticleParams& p, double T,
                                        const std::function<Vec(const Vec&)>& F) {
  const double Rs =
      p.R * std::pow(2.0 + 2.0 * (p.C_F + p.a) / (p.c - p.a), 1.0 / (2.0 * p.d));
  const BallSup sup =
      ball_sup([&](const Vec& x) { return -x.dot(F(x)); }, p.d, Rs);
  return particle_constants(p, T, sup.value);
}

std::vector<Vec> axis_grid(int dim, double lo, double hi, int n) {
  std::vector<Vec> pts;
  pts.reserve(n);
  for (int i = 0; i < n; ++i) {
    Vec x = Vec::Zero(dim);
    x[0] = lo + (hi - lo) * i / (n - 1);
    pts.push_back(x);
  }
  return pts;
}

BakryEmeryReport verify_bakry_emery_weight(const DriftModel& model,
                                           const WeightFunction& w, double T,
                                           const std::vector<Vec>& grid,
                                           double tol) {
  if (grid.empty())
    throw std::invalid_argument("verify_bakry_emery_weight: empty grid");
  if (T <= 0.0)
    throw std::invalid_argument("verify_bakry_emery_weight: T must be positive");
  BakryEmeryReport rep;
  rep.tol = tol;
  rep.grid_size = grid.size();
  const double lambda = w.c / 4.0;
  double min_margin = std::numeric_limits<double>::infinity();
  double sup_q = 0.0;
  for (const Vec& x : grid) {
    const Vec b = model.eval_drift(x);
    const double kap = w.kappa(x);
    const Vec gk = w.grad_kappa(x);
    const double lk = w.lap_kappa(x);
    const double a = T + 2.0 * (w.kappa_inf() - kap);
    // a = T + 2(||kappa|| - kappa): grad a = -2 grad kappa, lap a = -2 lap kappa
    const double La = T * (-2.0 * lk) + b.dot(-2.0 * gk);
    const double Gamma_a = T * 4.0 * gk.squaredNorm();
    const double ktilde = jacobian_k_tilde(model, x);
    const double phi = 0.5 * La - Gamma_a / a + a * ktilde;
    min_margin = std::min(min_margin, phi - lambda * a);
    sup_q = std::max(sup_q, b.dot(gk) + 4.0 * gk.squaredNorm());
  }
  rep.min_margin = min_margin;
  rep.Q_tilde = w.K * w.kappa_inf() + sup_q;
  rep.T_tilde0 = 6.0 * std::max(rep.Q_tilde / w.c, w.kappa_inf());
  rep.pass = T >= rep.T_tilde0 && min_margin >= -tol;
  return rep;
}

}  // namespace driftlab
