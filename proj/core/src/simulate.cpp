#include "driftlab/simulate.hpp"

#include <cmath>
#include <mutex>
#include <stdexcept>

#include "driftlab/parallel.hpp"
#include "driftlab/rng.hpp"

namespace driftlab {

namespace {

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double se_of(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return std::sqrt(s / (static_cast<double>(v.size()) - 1.0) /
                   static_cast<double>(v.size()));
}

void check_state(const Vec& x, double t, double blowup, const char* where) {
  if (!x.allFinite())
    throw SimulationError(std::string(where) + ": non-finite state", x, t);
  if (x.norm() > blowup)
    throw SimulationError(std::string(where) + ": trajectory diverged", x, t);
}

}  // namespace

std::vector<std::uint64_t> SimConfig::output_steps() const {
  if (dt <= 0.0) throw std::invalid_argument("SimConfig: dt must be positive");
  if (dt > t_max) throw std::invalid_argument("SimConfig: dt exceeds t_max");
  std::vector<double> times = output_times;
  if (times.empty()) times = {0.0, t_max};
  std::vector<std::uint64_t> steps;
  steps.reserve(times.size());
  for (double t : times) {
    const double k = t / dt;
    const std::uint64_t ki = static_cast<std::uint64_t>(std::llround(k));
    if (std::abs(k - static_cast<double>(ki)) > 1e-6 * (1.0 + k))
      throw std::invalid_argument("SimConfig: output time " + std::to_string(t) +
                                  " is not a multiple of dt");
    if (t > t_max * (1.0 + 1e-12))
      throw std::invalid_argument("SimConfig: output time beyond t_max");
    steps.push_back(ki);
  }
  return steps;
}

Path euler_maruyama(const DriftModel& model, const Vec& x0,
                    const SimConfig& config, std::uint64_t traj_index) {
  if (!x0.allFinite()) throw std::invalid_argument("euler_maruyama: bad x0");
  if (x0.size() != model.dim)
    throw std::invalid_argument("euler_maruyama: dimension mismatch");
  const auto out_steps = config.output_steps();
  const std::uint64_t n_steps = out_steps.back();
  const double sdt = std::sqrt(2.0 * config.T * config.dt);
  const CounterRng rng(config.seed, traj_index);

  Path path;
  path.times.reserve(out_steps.size());
  path.states.reserve(out_steps.size());
  std::size_t next_out = 0;

  if (model.dim == 1 && model.drift_1d) {
    double x = x0[0];
    for (std::uint64_t k = 0;; ++k) {
      if (next_out < out_steps.size() && k == out_steps[next_out]) {
        path.times.push_back(static_cast<double>(k) * config.dt);
        path.states.push_back(Vec::Constant(1, x));
        ++next_out;
      }
      if (k == n_steps) break;
      const double b = model.drift_1d(x);
      if (!std::isfinite(b))
        throw SimulationError("euler_maruyama: non-finite drift",
                              Vec::Constant(1, x), static_cast<double>(k) * config.dt);
      x += b * config.dt + sdt * rng.normal(k, 0);
      if (!std::isfinite(x) || std::abs(x) > config.blowup)
        throw SimulationError("euler_maruyama: trajectory diverged",
                              Vec::Constant(1, x),
                              static_cast<double>(k + 1) * config.dt);
    }
    return path;
  }

  Vec x = x0;
  std::vector<double> z(static_cast<std::size_t>(model.dim));
  for (std::uint64_t k = 0;; ++k) {
    if (next_out < out_steps.size() && k == out_steps[next_out]) {
      path.times.push_back(static_cast<double>(k) * config.dt);
      path.states.push_back(x);
      ++next_out;
    }
    if (k == n_steps) break;
    const Vec b = model.eval_drift(x);
    if (!b.allFinite())
      throw SimulationError("euler_maruyama: non-finite drift", x,
                            static_cast<double>(k) * config.dt);
    rng.fill_normals(k, z);
    for (int i = 0; i < model.dim; ++i)
      x[i] += b[i] * config.dt + sdt * z[static_cast<std::size_t>(i)];
    check_state(x, static_cast<double>(k + 1) * config.dt, config.blowup,
                "euler_maruyama");
  }
  return path;
}

namespace {

// Per-trajectory coupled run collecting |X-Y|^alpha (and rho) at output times.
struct CoupledSamples {
  std::vector<double> pow_dist;  // one slot per output time
  std::vector<double> rho;
};

CoupledSamples run_coupled(const DriftModel& model, const Vec& x0, const Vec& y0,
                           const SimConfig& config, double alpha,
                           const WeightFunction* weight, std::uint64_t traj) {
  const auto out_steps = config.output_steps();
  const std::uint64_t n_steps = out_steps.back();
  const double sdt = std::sqrt(2.0 * config.T * config.dt);
  const CounterRng rng(config.seed, traj);

  CoupledSamples s;
  s.pow_dist.reserve(out_steps.size());
  if (weight) s.rho.reserve(out_steps.size());
  std::size_t next_out = 0;

  if (model.dim == 1 && model.drift_1d) {
    double x = x0[0], y = y0[0];
    for (std::uint64_t k = 0;; ++k) {
      if (next_out < out_steps.size() && k == out_steps[next_out]) {
        const double d = std::abs(x - y);
        s.pow_dist.push_back(std::pow(d, alpha));
        if (weight)
          s.rho.push_back(std::pow(d, alpha) *
                          (2.0 * config.T + alpha * weight->kappa_r(x * x) +
                           alpha * weight->kappa_r(y * y)));
        ++next_out;
      }
      if (k == n_steps) break;
      const double bx = model.drift_1d(x), by = model.drift_1d(y);
      if (!std::isfinite(bx) || !std::isfinite(by))
        throw SimulationError("synchronous_coupling: non-finite drift",
                              Vec::Constant(1, x), static_cast<double>(k) * config.dt);
      const double noise = sdt * rng.normal(k, 0);
      x += bx * config.dt + noise;
      y += by * config.dt + noise;
      if (!std::isfinite(x) || !std::isfinite(y) ||
          std::abs(x) > config.blowup || std::abs(y) > config.blowup)
        throw SimulationError("synchronous_coupling: trajectory diverged",
                              Vec::Constant(1, x),
                              static_cast<double>(k + 1) * config.dt);
    }
    return s;
  }

  Vec x = x0, y = y0;
  std::vector<double> z(static_cast<std::size_t>(model.dim));
  for (std::uint64_t k = 0;; ++k) {
    if (next_out < out_steps.size() && k == out_steps[next_out]) {
      const double d = (x - y).norm();
      s.pow_dist.push_back(std::pow(d, alpha));
      if (weight)
        s.rho.push_back(std::pow(d, alpha) *
                        (2.0 * config.T + alpha * weight->kappa(x) +
                         alpha * weight->kappa(y)));
      ++next_out;
    }
    if (k == n_steps) break;
    const Vec bx = model.eval_drift(x), by = model.eval_drift(y);
    if (!bx.allFinite() || !by.allFinite())
      throw SimulationError("synchronous_coupling: non-finite drift", x,
                            static_cast<double>(k) * config.dt);
    rng.fill_normals(k, z);
    for (int i = 0; i < model.dim; ++i) {
      const double noise = sdt * z[static_cast<std::size_t>(i)];
      x[i] += bx[i] * config.dt + noise;
      y[i] += by[i] * config.dt + noise;
    }
    const double t1 = static_cast<double>(k + 1) * config.dt;
    check_state(x, t1, config.blowup, "synchronous_coupling");
    check_state(y, t1, config.blowup, "synchronous_coupling");
  }
  return s;
}

}  // namespace

CouplingStats synchronous_coupling(const DriftModel& model,
                                   const PairSampler& init,
                                   const SimConfig& config, double alpha,
                                   const WeightFunction* weight) {
  const auto out_steps = config.output_steps();
  const std::size_t n_out = out_steps.size();
  const std::size_t n_traj = static_cast<std::size_t>(config.n_traj);

  std::vector<std::vector<double>> pow_vals(n_out, std::vector<double>(n_traj));
  std::vector<std::vector<double>> rho_vals(
      weight ? n_out : 0, std::vector<double>(weight ? n_traj : 0));
  std::mutex error_guard;  // first simulation error wins
  parallel_for(n_traj, config.workers, [&](std::uint64_t i) {
    const auto [x0, y0] = init(i);
    const CoupledSamples s = run_coupled(model, x0, y0, config, alpha, weight, i);
    for (std::size_t k = 0; k < n_out; ++k) {
      pow_vals[k][i] = s.pow_dist[k];
      if (weight) rho_vals[k][i] = s.rho[k];
    }
  });
  (void)error_guard;

  CouplingStats stats;
  stats.alpha = alpha;
  stats.seed = config.seed;
  stats.n_traj = config.n_traj;
  for (std::size_t k = 0; k < n_out; ++k) {
    const double t = static_cast<double>(out_steps[k]) * config.dt;
    const double m = mean_of(pow_vals[k]);
    const double se = se_of(pow_vals[k], m);
    stats.times.push_back(t);
    stats.pow_moment.times.push_back(t);
    stats.pow_moment.mean.push_back(m);
    stats.pow_moment.stderr_.push_back(se);
    stats.dist.push_back(std::pow(std::max(m, 0.0), 1.0 / alpha));
    stats.dist_upper.push_back(std::pow(std::max(m + 3.0 * se, 0.0), 1.0 / alpha));
  }
  if (weight) {
    MeanSeries rho;
    for (std::size_t k = 0; k < n_out; ++k) {
      const double m = mean_of(rho_vals[k]);
      rho.times.push_back(stats.times[k]);
      rho.mean.push_back(m);
      rho.stderr_.push_back(se_of(rho_vals[k], m));
    }
    stats.rho = std::move(rho);
  }
  return stats;
}

SubmartingaleReport submartingale_check(const DriftModel& model,
                                        const WeightFunction& weight,
                                        const PairSampler& init,
                                        const SimConfig& config, double alpha,
                                        double lambda,
                                        std::optional<double> t0) {
  const auto out_steps = config.output_steps();
  const std::size_t n_out = out_steps.size();
  const std::size_t n_traj = static_cast<std::size_t>(config.n_traj);

  // per-trajectory discounted rho at every output time
  std::vector<std::vector<double>> vals(n_out, std::vector<double>(n_traj));
  parallel_for(n_traj, config.workers, [&](std::uint64_t i) {
    const auto [x0, y0] = init(i);
    const CoupledSamples s = run_coupled(model, x0, y0, config, alpha, &weight, i);
    for (std::size_t k = 0; k < n_out; ++k) {
      const double t = static_cast<double>(out_steps[k]) * config.dt;
      vals[k][i] = std::exp(alpha * lambda * t) * s.rho[k];
    }
  });

  SubmartingaleReport rep;
  rep.lambda = lambda;
  rep.temperature_ok = !t0 || config.T >= *t0;
  rep.pass = true;
  std::vector<double> diff(n_traj);
  for (std::size_t k = 0; k < n_out; ++k) {
    rep.times.push_back(static_cast<double>(out_steps[k]) * config.dt);
    rep.value.push_back(mean_of(vals[k]));
    if (k == 0) continue;
    for (std::size_t i = 0; i < n_traj; ++i) diff[i] = vals[k][i] - vals[k - 1][i];
    const double m = mean_of(diff);
    const double se = se_of(diff, m);
    rep.step_mean.push_back(m);
    rep.step_se.push_back(se);
    if (m > 2.0 * se && rep.first_violation < 0) {
      rep.first_violation = static_cast<int>(k);
      rep.pass = false;
    }
  }
  return rep;
}

PerturbedReport perturbed_coupling(const DriftModel& model,
                                   const DriftModel& model_tilde,
                                   const std::function<Vec(std::uint64_t)>& init,
                                   const SimConfig& config, double alpha) {
  if (!model.assumption)
    throw std::invalid_argument("perturbed_coupling: base model declares no (K,R,c)");
  if (model.dim != model_tilde.dim)
    throw std::invalid_argument("perturbed_coupling: dimension mismatch");
  const auto [K, R, c] = *model.assumption;
  const ContractionConstants cc =
      contraction_constants(K, c, R, model.dim, config.T, alpha);

  // sup |b - b_tilde| over a generous ball, inflated 5%
  const BallSup sup = ball_sup(
      [&](const Vec& x) { return (model.drift(x) - model_tilde.drift(x)).norm(); },
      model.dim, 16.0);
  const double sup_diff = 1.05 * sup.value;

  const auto out_steps = config.output_steps();
  const std::size_t n_out = out_steps.size();
  const std::size_t n_traj = static_cast<std::size_t>(config.n_traj);
  std::vector<Mat> cx(n_out, Mat(n_traj, model.dim));
  std::vector<Mat> cy(n_out, Mat(n_traj, model.dim));

  parallel_for(n_traj, config.workers, [&](std::uint64_t i) {
    const Vec x0 = init(i);
    const double sdt = std::sqrt(2.0 * config.T * config.dt);
    const CounterRng rng(config.seed, i);
    Vec x = x0, y = x0;
    std::vector<double> z(static_cast<std::size_t>(model.dim));
    std::size_t next_out = 0;
    const std::uint64_t n_steps = out_steps.back();
    for (std::uint64_t k = 0;; ++k) {
      if (next_out < n_out && k == out_steps[next_out]) {
        cx[next_out].row(static_cast<Eigen::Index>(i)) = x.transpose();
        cy[next_out].row(static_cast<Eigen::Index>(i)) = y.transpose();
        ++next_out;
      }
      if (k == n_steps) break;
      const Vec bx = model.eval_drift(x), by = model_tilde.eval_drift(y);
      if (!bx.allFinite() || !by.allFinite())
        throw SimulationError("perturbed_coupling: non-finite drift", x,
                              static_cast<double>(k) * config.dt);
      rng.fill_normals(k, z);
      for (int j = 0; j < model.dim; ++j) {
        const double noise = sdt * z[static_cast<std::size_t>(j)];
        x[j] += bx[j] * config.dt + noise;
        y[j] += by[j] * config.dt + noise;
      }
      const double t1 = static_cast<double>(k + 1) * config.dt;
      check_state(x, t1, config.blowup, "perturbed_coupling");
      check_state(y, t1, config.blowup, "perturbed_coupling");
    }
  });

  PerturbedReport rep;
  rep.sup_diff = sup_diff;
  rep.all_below = true;
  for (std::size_t k = 0; k < n_out; ++k) {
    const double t = static_cast<double>(out_steps[k]) * config.dt;
    const EmpiricalMeasure X(cx[k]), Y(cy[k]);
    const double w = model.dim == 1 ? w_alpha_1d(X, Y, alpha).cost
                                    : w2_assignment(X, Y, alpha).cost;
    // shared initial points: the W(nu, nu~_0) term vanishes
    const double bound = std::pow(cc.M, alpha) * (1.0 - std::exp(-cc.lambda * t)) /
                         cc.lambda * sup_diff;
    rep.times.push_back(t);
    rep.w_empirical.push_back(w);
    rep.bound.push_back(bound);
    if (k > 0 && w > bound) rep.all_below = false;
  }
  return rep;
}

ParticlePath particle_system(const std::function<Vec(const Vec&)>& F, int d,
                             const InteractionSpec& inter, int N, const Mat& x0,
                             const SimConfig& config,
                             const std::function<std::uint64_t(int)>& stream_of) {
  if (x0.rows() != N || x0.cols() != d)
    throw std::invalid_argument("particle_system: x0 must be N x d");
  const bool graph = !inter.neighbors.empty();
  if (graph && inter.neighbors.size() != static_cast<std::size_t>(N))
    throw std::invalid_argument("particle_system: neighbor list size mismatch");
  const bool fast1d = d == 1 && !graph && static_cast<bool>(inter.H_diff_1d);

  const auto out_steps = config.output_steps();
  const std::uint64_t n_steps = out_steps.back();
  const double sdt = std::sqrt(2.0 * config.T * config.dt);

  std::vector<CounterRng> rngs;
  rngs.reserve(static_cast<std::size_t>(N));
  for (int i = 0; i < N; ++i)
    rngs.emplace_back(config.seed,
                      stream_of ? stream_of(i) : static_cast<std::uint64_t>(i));

  ParticlePath path;
  Mat x = x0;
  Mat g(N, d);
  std::vector<double> z(static_cast<std::size_t>(d));
  std::size_t next_out = 0;
  for (std::uint64_t k = 0;; ++k) {
    if (next_out < out_steps.size() && k == out_steps[next_out]) {
      path.times.push_back(static_cast<double>(k) * config.dt);
      path.states.push_back(x);
      ++next_out;
    }
    if (k == n_steps) break;

    // interaction term
    g.setZero();
    if (fast1d) {
      const double* xs = x.data();
      double* gs = g.data();
      if (inter.antisymmetric) {
        for (int i = 0; i < N; ++i) {
          const double xi = xs[i];
          double acc = 0.0;
          for (int j = i + 1; j < N; ++j) {
            const double v = inter.H_diff_1d(xi - xs[j]);
            acc += v;
            gs[j] -= v;
          }
          gs[i] += acc;
        }
      } else {
        for (int i = 0; i < N; ++i) {
          const double xi = xs[i];
          double acc = 0.0;
          for (int j = 0; j < N; ++j) acc += inter.H_diff_1d(xi - xs[j]);
          gs[i] = acc;
        }
      }
      g /= static_cast<double>(N);
    } else if (inter.H) {
      for (int i = 0; i < N; ++i) {
        Vec acc = Vec::Zero(d);
        if (graph) {
          const auto& nb = inter.neighbors[static_cast<std::size_t>(i)];
          for (int j : nb) acc += inter.H(x.row(i).transpose(), x.row(j).transpose());
          if (!nb.empty()) acc /= static_cast<double>(nb.size());
        } else {
          for (int j = 0; j < N; ++j)
            acc += inter.H(x.row(i).transpose(), x.row(j).transpose());
          acc /= static_cast<double>(N);
        }
        g.row(i) = acc.transpose();
      }
    }

    for (int i = 0; i < N; ++i) {
      const Vec xi = x.row(i).transpose();
      const Vec b = F(xi) + g.row(i).transpose();
      if (!b.allFinite())
        throw SimulationError("particle_system: non-finite drift", xi,
                              static_cast<double>(k) * config.dt);
      rngs[static_cast<std::size_t>(i)].fill_normals(k, z);
      for (int j = 0; j < d; ++j)
        x(i, j) += b[j] * config.dt + sdt * z[static_cast<std::size_t>(j)];
    }
    if (!x.allFinite() || x.rowwise().norm().maxCoeff() > config.blowup)
      throw SimulationError("particle_system: trajectory diverged",
                            Vec(x.rowwise().norm()),
                            static_cast<double>(k + 1) * config.dt);
  }
  return path;
}

namespace {

MomentSeries moments_from(const std::vector<double>& times,
                          const std::function<void(std::size_t, std::vector<double>&,
                                                   std::vector<double>&)>& fill) {
  MomentSeries ms;
  ms.times = times;
  std::vector<double> n2, n5;
  for (std::size_t k = 0; k < times.size(); ++k) {
    fill(k, n2, n5);
    const double m2 = mean_of(n2), m5 = mean_of(n5);
    ms.m2.push_back(m2);
    ms.m2_se.push_back(se_of(n2, m2));
    ms.m5.push_back(m5);
    ms.m5_se.push_back(se_of(n5, m5));
  }
  return ms;
}

}  // namespace

MomentSeries moment_tracker(const ParticlePath& path) {
  return moments_from(path.times, [&](std::size_t k, std::vector<double>& n2,
                                      std::vector<double>& n5) {
    const Mat& s = path.states[k];
    n2.resize(static_cast<std::size_t>(s.rows()));
    n5.resize(static_cast<std::size_t>(s.rows()));
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
      const double n = s.row(i).norm();
      n2[static_cast<std::size_t>(i)] = n * n;
      n5[static_cast<std::size_t>(i)] = std::pow(n, 5.0);
    }
  });
}

MomentSeries moment_tracker(const std::vector<Path>& paths) {
  if (paths.empty()) throw std::invalid_argument("moment_tracker: no paths");
  return moments_from(paths.front().times,
                      [&](std::size_t k, std::vector<double>& n2,
                          std::vector<double>& n5) {
                        n2.resize(paths.size());
                        n5.resize(paths.size());
                        for (std::size_t i = 0; i < paths.size(); ++i) {
                          const double n = paths[i].states[k].norm();
                          n2[i] = n * n;
                          n5[i] = std::pow(n, 5.0);
                        }
                      });
}

std::vector<Vec> terminal_cloud(const DriftModel& model,
                                const std::function<Vec(std::uint64_t)>& init,
                                const SimConfig& config) {
  const std::size_t n = static_cast<std::size_t>(config.n_traj);
  std::vector<Vec> cloud(n);
  parallel_for(n, config.workers, [&](std::uint64_t i) {
    cloud[i] = euler_maruyama(model, init(i), config, i).states.back();
  });
  return cloud;
}

}  // namespace driftlab
