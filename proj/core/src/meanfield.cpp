#include "driftlab/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "driftlab/parallel.hpp"
#include "driftlab/rng.hpp"
#include "driftlab/transport.hpp"

namespace driftlab {

Vec MeanFieldSpec::eval_H(const Vec& x, const Vec& y) const {
  if (H) return H(x, y);
  if (H_diff_1d && d == 1) return Vec::Constant(1, H_diff_1d(x[0] - y[0]));
  return Vec::Zero(d);
}

PairConditionReport validate_pair_condition(const MeanFieldSpec& spec,
                                            int n_probes, std::uint64_t seed,
                                            double tol) {
  PairConditionReport rep;
  rep.n_probes = static_cast<std::size_t>(n_probes);
  if (!spec.has_interaction()) {
    rep.pass = true;
    return rep;
  }
  CounterRng rng(seed, 0);
  double worst = -std::numeric_limits<double>::infinity();
  double lip = 0.0;
  const int d = spec.d;
  for (int p = 0; p < n_probes; ++p) {
    Vec x(d), y(d), xp(d), yp(d);
    for (int i = 0; i < d; ++i) {
      const std::uint64_t s = static_cast<std::uint64_t>(p);
      x[i] = 4.0 * rng.normal(s, static_cast<std::uint32_t>(4 * i));
      y[i] = 4.0 * rng.normal(s, static_cast<std::uint32_t>(4 * i + 1));
      xp[i] = 4.0 * rng.normal(s, static_cast<std::uint32_t>(4 * i + 2));
      yp[i] = 4.0 * rng.normal(s, static_cast<std::uint32_t>(4 * i + 3));
    }
    const double lhs = (x - y).dot(spec.eval_H(x, xp) - spec.eval_H(y, yp)) +
                       (xp - yp).dot(spec.eval_H(xp, x) - spec.eval_H(yp, y));
    const double rhs = spec.a * ((x - y).squaredNorm() + (xp - yp).squaredNorm());
    worst = std::max(worst, lhs - rhs);
    // second-argument Lipschitz probe
    const double dn = (xp - yp).norm();
    if (dn > 1e-12)
      lip = std::max(lip, (spec.eval_H(x, xp) - spec.eval_H(x, yp)).norm() / dn);
  }
  rep.worst = worst;
  rep.measured_L_H = 1.05 * lip;
  rep.pass = worst <= tol;
  return rep;
}

namespace {

// Scharfetter-Gummel B(w) = w / (e^w - 1), B(0) = 1
double bernoulli_fn(double w) {
  if (std::abs(w) < 1e-10) return 1.0 - 0.5 * w;
  return w / std::expm1(w);
}

// drift field at faces: v_{i+1/2} = F + H * nu at the face midpoint
void face_velocity(const MeanFieldSpec& spec, const Grid& g,
                   const Eigen::VectorXd& nu, Eigen::VectorXd& v) {
  const int n = g.n[0];
  const double h = g.h(0);
  for (int i = 0; i + 1 < n; ++i) {
    const double xf = 0.5 * (g.coord(0, i) + g.coord(0, i + 1));
    double drift = spec.F(Vec::Constant(1, xf))[0];
    if (spec.H_diff_1d) {
      double acc = 0.0;
      for (int j = 0; j < n; ++j)
        acc += spec.H_diff_1d(xf - g.coord(0, j)) * nu[j];
      drift += acc * h;
    } else if (spec.H) {
      double acc = 0.0;
      for (int j = 0; j < n; ++j)
        acc += spec.H(Vec::Constant(1, xf), Vec::Constant(1, g.coord(0, j)))[0] * nu[j];
      drift += acc * h;
    }
    v[i] = drift;
  }
}

// one implicit Euler step of the flux form; Thomas solve of (I - dt A)
void sg_step(const MeanFieldSpec& spec, const Grid& g, Eigen::VectorXd& nu,
             double dt, Eigen::VectorXd& v, Eigen::VectorXd& lower,
             Eigen::VectorXd& diag, Eigen::VectorXd& upper) {
  const int n = g.n[0];
  const double h = g.h(0);
  const double T = spec.T;
  face_velocity(spec, g, nu, v);
  // A nu | row i: (J_{i-1/2} - J_{i+1/2})/h, J_{i+1/2} = (T/h)(B(-w) nu_i - B(w) nu_{i+1})
  diag.setZero();
  lower.setZero();
  upper.setZero();
  for (int f = 0; f + 1 < n; ++f) {  // face between cells f and f+1
    const double w = v[f] * h / T;
    const double bm = bernoulli_fn(-w), bp = bernoulli_fn(w);
    const double k = T / (h * h);
    // J = k h (bm nu_f - bp nu_{f+1}); row f gets -J/h, row f+1 gets +J/h
    diag[f] += dt * k * bm;
    upper[f] -= dt * k * bp;       // coupling of row f to nu_{f+1}
    diag[f + 1] += dt * k * bp;
    lower[f + 1] -= dt * k * bm;   // coupling of row f+1 to nu_f
  }
  diag.array() += 1.0;
  // Thomas algorithm
  for (int i = 1; i < n; ++i) {
    const double m = lower[i] / diag[i - 1];
    diag[i] -= m * upper[i - 1];
    nu[i] -= m * nu[i - 1];
  }
  nu[n - 1] /= diag[n - 1];
  for (int i = n - 2; i >= 0; --i) nu[i] = (nu[i] - upper[i] * nu[i + 1]) / diag[i];
}

void check_density(const Eigen::VectorXd& nu, double t) {
  if (!nu.allFinite() || nu.minCoeff() < -1e-12)
    throw std::runtime_error("mean-field solver: invalid density at t = " +
                             std::to_string(t) + " (time step too large)");
}

}  // namespace

const Eigen::VectorXd& MeanFieldFlow::at(double t) const {
  const double k = t / dt;
  const std::size_t ki =
      std::min(densities.size() - 1,
               static_cast<std::size_t>(std::llround(std::max(0.0, k))));
  return densities[ki];
}

double MeanFieldFlow::conv(const MeanFieldSpec& spec, double x,
                           std::size_t step) const {
  const Eigen::VectorXd& nu = densities[std::min(step, densities.size() - 1)];
  const int n = grid.n[0];
  const double h = grid.h(0);
  double acc = 0.0;
  if (spec.H_diff_1d) {
    for (int j = 0; j < n; ++j) acc += spec.H_diff_1d(x - grid.coord(0, j)) * nu[j];
  } else if (spec.H) {
    for (int j = 0; j < n; ++j)
      acc += spec.H(Vec::Constant(1, x), Vec::Constant(1, grid.coord(0, j)))[0] * nu[j];
  }
  return acc * h;
}

MeanFieldFlow evolve_with_flow(const MeanFieldSpec& spec, const Grid& grid,
                               const Eigen::VectorXd& nu0, double dt,
                               double t_end) {
  if (grid.dim != 1 || spec.d != 1)
    throw std::invalid_argument("mean-field solver: 1d only");
  if (nu0.size() != grid.size())
    throw std::invalid_argument("mean-field solver: density size mismatch");
  const int n = grid.n[0];
  const double h = grid.h(0);
  MeanFieldFlow flow;
  flow.grid = grid;
  flow.dt = dt;
  Eigen::VectorXd nu = nu0;
  nu /= nu.sum() * h;
  const int n_steps = std::max(0, static_cast<int>(std::llround(t_end / dt)));
  flow.times.reserve(static_cast<std::size_t>(n_steps) + 1);
  flow.densities.reserve(static_cast<std::size_t>(n_steps) + 1);
  flow.times.push_back(0.0);
  flow.densities.push_back(nu);
  Eigen::VectorXd v(n - 1), lower(n), diag(n), upper(n);
  for (int k = 0; k < n_steps; ++k) {
    sg_step(spec, grid, nu, dt, v, lower, diag, upper);
    check_density(nu, (k + 1) * dt);
    flow.times.push_back((k + 1) * dt);
    flow.densities.push_back(nu);
  }
  return flow;
}

MeanFieldState evolve_mckean_vlasov_1d(const MeanFieldSpec& spec, const Grid& grid,
                                       const Eigen::VectorXd& nu0, double dt,
                                       double t_end) {
  if (grid.dim != 1 || spec.d != 1)
    throw std::invalid_argument("mean-field solver: 1d only");
  if (nu0.size() != grid.size())
    throw std::invalid_argument("mean-field solver: density size mismatch");
  const int n = grid.n[0];
  const double h = grid.h(0);
  Eigen::VectorXd nu = nu0;
  nu /= nu.sum() * h;
  const int n_steps = std::max(0, static_cast<int>(std::llround(t_end / dt)));
  Eigen::VectorXd v(n - 1), lower(n), diag(n), upper(n);
  for (int k = 0; k < n_steps; ++k) {
    sg_step(spec, grid, nu, dt, v, lower, diag, upper);
    check_density(nu, (k + 1) * dt);
  }
  MeanFieldState st;
  st.grid = grid;
  st.density = nu;
  st.time = n_steps * dt;
  st.m2 = moment_of(grid, nu, 2.0);
  st.m5 = moment_of(grid, nu, 5.0);
  return st;
}

double cell_w2_1d(const Grid& grid, const Eigen::VectorXd& p,
                  const Eigen::VectorXd& q) {
  const int n = grid.n[0];
  Eigen::MatrixXd pts(n, 1);
  for (int i = 0; i < n; ++i) pts(i, 0) = grid.coord(0, i);
  Eigen::VectorXd wp = p.cwiseMax(0.0), wq = q.cwiseMax(0.0);
  wp /= wp.sum();
  wq /= wq.sum();
  return w_alpha_1d(EmpiricalMeasure(pts, wp), EmpiricalMeasure(pts, wq), 2.0).cost;
}

double moment_of(const Grid& grid, const Eigen::VectorXd& density, double order) {
  const double h = grid.h(0);
  double acc = 0.0, mass = 0.0;
  for (int i = 0; i < grid.n[0]; ++i) {
    acc += std::pow(std::abs(grid.coord(0, i)), order) * density[i] * h;
    mass += density[i] * h;
  }
  return acc / mass;
}

Eigen::VectorXd gaussian_density(const Grid& grid, double mean, double var) {
  Eigen::VectorXd nu(grid.n[0]);
  for (int i = 0; i < grid.n[0]; ++i) {
    const double x = grid.coord(0, i);
    nu[i] = std::exp(-0.5 * (x - mean) * (x - mean) / var);
  }
  nu /= nu.sum() * grid.h(0);
  return nu;
}

std::vector<double> sample_from_density(const Grid& grid,
                                        const Eigen::VectorXd& density, int n,
                                        std::uint64_t seed, std::uint64_t stream) {
  const int m = grid.n[0];
  const double h = grid.h(0);
  Eigen::VectorXd cdf(m + 1);
  cdf[0] = 0.0;
  for (int i = 0; i < m; ++i) cdf[i + 1] = cdf[i] + std::max(density[i], 0.0) * h;
  const double total = cdf[m];
  const CounterRng rng(seed, stream);
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform(static_cast<std::uint64_t>(i), 0) * total;
    const double* lo = std::upper_bound(cdf.data(), cdf.data() + m + 1, u);
    int cell = std::clamp(static_cast<int>(lo - cdf.data()) - 1, 0, m - 1);
    const double within = cdf[cell + 1] > cdf[cell]
                              ? (u - cdf[cell]) / (cdf[cell + 1] - cdf[cell])
                              : 0.5;
    // cells centered at the nodes
    out[static_cast<std::size_t>(i)] = grid.coord(0, cell) + (within - 0.5) * h;
  }
  return out;
}

ChaosConstants derive_chaos_constants(const MeanFieldSpec& spec,
                                      const ContractionConstants& cc,
                                      double m2_initial) {
  ChaosConstants out;
  out.lambda = cc.lambda;
  if (cc.lambda >= (spec.c - spec.a) / 2.0)
    throw std::logic_error(
        "derive_chaos_constants: lambda must stay below (c-a)/2");
  // kappa built with (K, c) -> (C_F + a, c - a) as in the particle theorem
  const WeightFunction w =
      build_weight(spec.C_F + spec.a, spec.c - spec.a, spec.R, spec.d);
  out.kappa_inf = w.kappa_inf();
  const double F0 = spec.F(Vec::Zero(spec.d)).norm();
  const double H00 = spec.eval_H(Vec::Zero(spec.d), Vec::Zero(spec.d)).norm();
  out.Q = spec.T * spec.d + 2.0 * (spec.C_F + spec.c) * spec.R * spec.R +
          (H00 + F0) * (H00 + F0) / (spec.c - spec.a);
  const double factor =
      2.0 * spec.L_H * (spec.T + 2.0 * out.kappa_inf) / std::sqrt(spec.T);
  out.A = factor * std::sqrt(m2_initial);
  out.B = factor * std::sqrt(out.Q);
  out.alpha = 2.0 * spec.L_H * (spec.T + 2.0 * out.kappa_inf) /
              (spec.T * ((spec.c - spec.a) / 2.0 - cc.lambda));
  out.beta = 2.0 * spec.L_H * (spec.T + 2.0 * out.kappa_inf) * std::sqrt(out.Q) /
             (spec.T * cc.lambda);
  return out;
}

namespace {

struct WlsFit {
  double slope = 0.0;
  double intercept = 0.0;
};

WlsFit wls_loglog(const std::vector<double>& xs, const std::vector<double>& ys,
                  const std::vector<double>& wts) {
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double w = wts[i], x = std::log(xs[i]), y = std::log(ys[i]);
    sw += w;
    sx += w * x;
    sy += w * y;
    sxx += w * x * x;
    sxy += w * x * y;
  }
  WlsFit f;
  const double det = sw * sxx - sx * sx;
  f.slope = (sw * sxy - sx * sy) / det;
  f.intercept = (sxx * sy - sx * sxy) / det;
  return f;
}

}  // namespace

ChaosReport chaos_experiment(const MeanFieldSpec& spec, const Grid& grid,
                             const Eigen::VectorXd& nu0,
                             const std::vector<int>& Ns, double t, int n_reps,
                             double dt, std::uint64_t seed, int workers) {
  if (spec.d != 1) throw std::invalid_argument("chaos_experiment: 1d only");
  ChaosReport rep;
  const MeanFieldFlow flow = evolve_with_flow(spec, grid, nu0, dt, t);
  rep.m2_initial = moment_of(grid, flow.densities.front(), 2.0);

  // reference constants
  ParticleParams pp;
  pp.C_F = spec.C_F;
  pp.C_G = 2.0 * spec.L_H;
  pp.a = spec.a;
  pp.c = spec.c;
  pp.R = spec.R;
  pp.M_G = spec.M_H;
  pp.d = 1;
  rep.cc = particle_constants(pp, spec.T, spec.F);
  rep.constants = derive_chaos_constants(spec, rep.cc, rep.m2_initial);

  const int n_steps = static_cast<int>(std::llround(t / dt));
  const double sdt = std::sqrt(2.0 * spec.T * dt);

  std::vector<std::vector<double>> coupled_sq_all;  // per N, per rep
  std::vector<std::vector<double>> x1_all;
  InteractionSpec inter;
  inter.H = spec.H;
  inter.H_diff_1d = spec.H_diff_1d;
  inter.antisymmetric = spec.antisymmetric;

  for (std::size_t iN = 0; iN < Ns.size(); ++iN) {
    const int N = Ns[iN];
    std::vector<double> coupled_sq(static_cast<std::size_t>(n_reps));
    std::vector<double> x1(static_cast<std::size_t>(n_reps));
    parallel_for(static_cast<std::uint64_t>(n_reps), workers, [&](std::uint64_t rep_i) {
      const std::uint64_t rep_stream = mix_stream(seed, (iN << 32) | rep_i);
      const std::vector<double> init =
          sample_from_density(grid, nu0, N, seed + 1, rep_stream);
      SimConfig cfg;
      cfg.T = spec.T;
      cfg.dt = dt;
      cfg.t_max = t;
      cfg.n_traj = 1;
      cfg.seed = rep_stream;
      cfg.output_times = {t};
      Mat x0 = Mat::Zero(N, 1);
      for (int i = 0; i < N; ++i) x0(i, 0) = init[static_cast<std::size_t>(i)];
      // coupled McKean proxy: same Brownian increments as particle 0
      double y = x0(0, 0);
      Mat x = x0;
      Eigen::VectorXd g = Eigen::VectorXd::Zero(N);
      std::vector<double> z(1);
      for (int k = 0; k < n_steps; ++k) {
        // interaction for the particle system
        g.setZero();
        if (spec.H_diff_1d) {
          if (spec.antisymmetric) {
            for (int i = 0; i < N; ++i) {
              const double xi = x(i, 0);
              double acc = 0.0;
              for (int j = i + 1; j < N; ++j) {
                const double v = spec.H_diff_1d(xi - x(j, 0));
                acc += v;
                g[j] -= v;
              }
              g[i] += acc;
            }
          } else {
            for (int i = 0; i < N; ++i) {
              const double xi = x(i, 0);
              double acc = 0.0;
              for (int j = 0; j < N; ++j) acc += spec.H_diff_1d(xi - x(j, 0));
              g[i] = acc;
            }
          }
          g /= static_cast<double>(N);
        } else if (spec.H) {
          for (int i = 0; i < N; ++i) {
            double acc = 0.0;
            for (int j = 0; j < N; ++j)
              acc += spec.H(Vec::Constant(1, x(i, 0)), Vec::Constant(1, x(j, 0)))[0];
            g[i] = acc / static_cast<double>(N);
          }
        }
        const double conv_y =
            spec.has_interaction() ? flow.conv(spec, y, static_cast<std::size_t>(k)) : 0.0;
        const double by = spec.F(Vec::Constant(1, y))[0] + conv_y;
        for (int i = 0; i < N; ++i) {
          const double bi = spec.F(Vec::Constant(1, x(i, 0)))[0] + g[i];
          const CounterRng rng_i(cfg.seed, static_cast<std::uint64_t>(i));
          rng_i.fill_normals(static_cast<std::uint64_t>(k), z);
          const double noise = sdt * z[0];
          x(i, 0) += bi * dt + noise;
          if (i == 0) y += by * dt + noise;
        }
        if (!x.allFinite())
          throw std::runtime_error("chaos_experiment: particle system diverged");
      }
      coupled_sq[rep_i] = (x(0, 0) - y) * (x(0, 0) - y);
      x1[rep_i] = x(0, 0);
    });
    coupled_sq_all.push_back(std::move(coupled_sq));
    x1_all.push_back(std::move(x1));
  }

  // assemble points
  const Eigen::VectorXd& nu_t = flow.densities.back();
  Eigen::MatrixXd grid_pts(grid.n[0], 1);
  for (int i = 0; i < grid.n[0]; ++i) grid_pts(i, 0) = grid.coord(0, i);
  Eigen::VectorXd grid_w = nu_t.cwiseMax(0.0);
  grid_w /= grid_w.sum();
  const EmpiricalMeasure ref(grid_pts, grid_w);

  const CounterRng boot_rng(seed + 99, 0);
  rep.all_below_bound = true;
  for (std::size_t iN = 0; iN < Ns.size(); ++iN) {
    const int N = Ns[iN];
    ChaosPoint pt;
    pt.N = N;
    const auto& cs = coupled_sq_all[iN];
    double m = 0.0;
    for (double v : cs) m += v;
    m /= static_cast<double>(n_reps);
    double var = 0.0;
    for (double v : cs) var += (v - m) * (v - m);
    var /= std::max(1.0, static_cast<double>(n_reps - 1));
    const double se_m = std::sqrt(var / n_reps);
    pt.coupled_rms = std::sqrt(std::max(m, 0.0));
    // delta method on sqrt
    pt.coupled_rms_se = pt.coupled_rms > 0.0 ? 0.5 * se_m / pt.coupled_rms : se_m;

    Eigen::MatrixXd cloud(n_reps, 1);
    for (int r = 0; r < n_reps; ++r) cloud(r, 0) = x1_all[iN][static_cast<std::size_t>(r)];
    pt.w2_marginal = w_alpha_1d(EmpiricalMeasure(cloud), ref, 2.0).cost;
    // bootstrap the marginal W2 over repetitions
    const int n_boot = 60;
    std::vector<double> boots;
    boots.reserve(n_boot);
    for (int b = 0; b < n_boot; ++b) {
      Eigen::MatrixXd bc(n_reps, 1);
      for (int r = 0; r < n_reps; ++r) {
        const double u =
            boot_rng.uniform(static_cast<std::uint64_t>((iN << 20) + b * n_reps + r), 0);
        bc(r, 0) = cloud(static_cast<int>(u * n_reps) % n_reps, 0);
      }
      boots.push_back(w_alpha_1d(EmpiricalMeasure(bc), ref, 2.0).cost);
    }
    double bm = 0.0, bv = 0.0;
    for (double v : boots) bm += v;
    bm /= boots.size();
    for (double v : boots) bv += (v - bm) * (v - bm);
    pt.w2_marginal_se = std::sqrt(bv / (boots.size() - 1));

    pt.bound = (rep.constants.alpha * std::exp(-(spec.c - spec.a) * t / 2.0) *
                    std::sqrt(rep.m2_initial) +
                rep.constants.beta) /
               std::sqrt(static_cast<double>(N));
    if (pt.coupled_rms > pt.bound + 3.0 * pt.coupled_rms_se)
      rep.all_below_bound = false;
    rep.points.push_back(pt);
  }

  // WLS slope of log coupled_rms vs log N, bootstrap over reps for the se
  std::vector<double> xs, ys, ws;
  for (const ChaosPoint& pt : rep.points) {
    xs.push_back(static_cast<double>(pt.N));
    ys.push_back(pt.coupled_rms);
    const double rel = pt.coupled_rms_se / std::max(pt.coupled_rms, 1e-300);
    ws.push_back(1.0 / std::max(rel * rel, 1e-12));
  }
  rep.slope = wls_loglog(xs, ys, ws).slope;
  const int n_boot = 200;
  std::vector<double> slopes;
  slopes.reserve(n_boot);
  const CounterRng srng(seed + 123, 1);
  for (int b = 0; b < n_boot; ++b) {
    std::vector<double> ybs;
    for (std::size_t iN = 0; iN < Ns.size(); ++iN) {
      double m = 0.0;
      for (int r = 0; r < n_reps; ++r) {
        const double u = srng.uniform(
            static_cast<std::uint64_t>(b) * Ns.size() * n_reps +
                iN * static_cast<std::size_t>(n_reps) + static_cast<std::size_t>(r),
            0);
        m += coupled_sq_all[iN][static_cast<std::size_t>(
            static_cast<int>(u * n_reps) % n_reps)];
      }
      ybs.push_back(std::sqrt(std::max(m / n_reps, 1e-300)));
    }
    slopes.push_back(wls_loglog(xs, ybs, ws).slope);
  }
  double sm = 0.0, sv = 0.0;
  for (double v : slopes) sm += v;
  sm /= slopes.size();
  for (double v : slopes) sv += (v - sm) * (v - sm);
  rep.slope_se = std::sqrt(sv / (slopes.size() - 1));
  return rep;
}

RateReport empirical_measure_rate(const MeanFieldSpec& spec, const Grid& grid,
                                  const Eigen::VectorXd& nu0,
                                  const std::vector<int>& Ns, double t,
                                  int n_reps, double dt, std::uint64_t seed,
                                  int workers) {
  if (spec.d != 1)
    throw std::invalid_argument("empirical_measure_rate: 1d only");
  const MeanFieldFlow flow = evolve_with_flow(spec, grid, nu0, dt, t);
  const Eigen::VectorXd& nu_t = flow.densities.back();
  Eigen::MatrixXd grid_pts(grid.n[0], 1);
  for (int i = 0; i < grid.n[0]; ++i) grid_pts(i, 0) = grid.coord(0, i);
  Eigen::VectorXd grid_w = nu_t.cwiseMax(0.0);
  grid_w /= grid_w.sum();
  const EmpiricalMeasure ref(grid_pts, grid_w);

  const int n_steps = static_cast<int>(std::llround(t / dt));
  const double sdt = std::sqrt(2.0 * spec.T * dt);
  RateReport rep;
  std::vector<double> xs, ys, ws;
  for (std::size_t iN = 0; iN < Ns.size(); ++iN) {
    const int N = Ns[iN];
    std::vector<double> w2sq(static_cast<std::size_t>(n_reps));
    parallel_for(static_cast<std::uint64_t>(n_reps), workers, [&](std::uint64_t rep_i) {
      const std::uint64_t rep_stream = mix_stream(seed + 7, (iN << 32) | rep_i);
      std::vector<double> init = sample_from_density(grid, nu0, N, seed + 8, rep_stream);
      Eigen::VectorXd x =
          Eigen::Map<Eigen::VectorXd>(init.data(), static_cast<Eigen::Index>(N));
      Eigen::VectorXd g = Eigen::VectorXd::Zero(N);
      std::vector<double> z(1);
      for (int k = 0; k < n_steps; ++k) {
        g.setZero();
        if (spec.H_diff_1d) {
          if (spec.antisymmetric) {
            for (int i = 0; i < N; ++i) {
              double acc = 0.0;
              for (int j = i + 1; j < N; ++j) {
                const double v = spec.H_diff_1d(x[i] - x[j]);
                acc += v;
                g[j] -= v;
              }
              g[i] += acc;
            }
          } else {
            for (int i = 0; i < N; ++i) {
              double acc = 0.0;
              for (int j = 0; j < N; ++j) acc += spec.H_diff_1d(x[i] - x[j]);
              g[i] = acc;
            }
          }
          g /= static_cast<double>(N);
        }
        for (int i = 0; i < N; ++i) {
          const double bi = spec.F(Vec::Constant(1, x[i]))[0] + g[i];
          const CounterRng rng_i(rep_stream, static_cast<std::uint64_t>(i));
          rng_i.fill_normals(static_cast<std::uint64_t>(k), z);
          x[i] += bi * dt + sdt * z[0];
        }
      }
      Eigen::MatrixXd cloud(N, 1);
      cloud.col(0) = x;
      const double w2 = w_alpha_1d(EmpiricalMeasure(cloud), ref, 2.0).cost;
      w2sq[rep_i] = w2 * w2;
    });
    double m = 0.0;
    for (double v : w2sq) m += v;
    m /= n_reps;
    double var = 0.0;
    for (double v : w2sq) var += (v - m) * (v - m);
    var /= std::max(1.0, static_cast<double>(n_reps - 1));
    RatePoint pt;
    pt.N = N;
    pt.mean_w2_sq = m;
    pt.rms_w2 = std::sqrt(m);
    pt.se = std::sqrt(var / n_reps);
    rep.points.push_back(pt);
    xs.push_back(static_cast<double>(N));
    ys.push_back(pt.rms_w2);
    const double rel = 0.5 * pt.se / std::max(m, 1e-300);
    ws.push_back(1.0 / std::max(rel * rel, 1e-12));
  }
  rep.exponent = wls_loglog(xs, ys, ws).slope;
  // rough se by leaving one point out
  std::vector<double> loo;
  for (std::size_t drop = 0; drop < xs.size(); ++drop) {
    std::vector<double> x2, y2, w2;
    for (std::size_t i = 0; i < xs.size(); ++i)
      if (i != drop) {
        x2.push_back(xs[i]);
        y2.push_back(ys[i]);
        w2.push_back(ws[i]);
      }
    loo.push_back(wls_loglog(x2, y2, w2).slope);
  }
  double lm = 0.0, lv = 0.0;
  for (double v : loo) lm += v;
  lm /= loo.size();
  for (double v : loo) lv += (v - lm) * (v - lm);
  rep.exponent_se = std::sqrt(lv * (loo.size() - 1) / loo.size());
  return rep;
}

StationaryResult stationary_meanfield(const MeanFieldSpec& spec, const Grid& grid,
                                      const Eigen::VectorXd& nu0, double tol,
                                      double t1, double t2, double dt,
                                      int max_iters) {
  StationaryResult out;
  Eigen::VectorXd nu = nu0;
  nu /= nu.sum() * grid.h(0);
  for (int it = 0; it < max_iters; ++it) {
    const MeanFieldState next = evolve_mckean_vlasov_1d(spec, grid, nu, dt, t1);
    const double inc = cell_w2_1d(grid, nu, next.density);
    out.increments.push_back(inc);
    nu = next.density;
    out.iterations = it + 1;
    out.final_increment = inc;
    if (inc < tol) {
      out.converged = true;
      break;
    }
  }
  out.density = nu;
  if (!out.converged)
    return out;  // caller inspects the increment trace
  const MeanFieldState alt = evolve_mckean_vlasov_1d(spec, grid, nu, dt, t2);
  out.stationarity_check = cell_w2_1d(grid, nu, alt.density);
  return out;
}

}  // namespace driftlab
