#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "driftlab/constants.hpp"
#include "driftlab/model.hpp"
#include "driftlab/simulate.hpp"
#include "driftlab/spectral.hpp"

namespace driftlab {

// Confinement F plus pairwise kernel H with the dissipativity metadata of the
// interacting-particle theorem: (x-y).(F(x)-F(y)) <= C_F|x-y|^2 globally and
// <= -c|x-y|^2 for |x| >= R; H satisfies the two-sided pair condition with
// defect a < c and is bounded by M_H on the core.
struct MeanFieldSpec {
  std::function<Vec(const Vec&)> F;
  double C_F = 0.0;
  double R = 0.0;
  double c = 1.0;
  std::function<Vec(const Vec&, const Vec&)> H;  // may be empty (no interaction)
  std::function<double(double)> H_diff_1d;       // H(x,y) = h(x-y), 1d fast path
  bool antisymmetric = false;
  double a = 0.0;
  double M_H = 0.0;
  double L_H = 0.0;  // Lipschitz constant in the second argument
  double T = 1.0;
  int d = 1;

  Vec eval_H(const Vec& x, const Vec& y) const;
  bool has_interaction() const { return static_cast<bool>(H) || static_cast<bool>(H_diff_1d); }
};

struct PairConditionReport {
  bool pass = false;
  double worst = 0.0;  // max of lhs - a(|x-y|^2+|x'-y'|^2) over probes
  double measured_L_H = 0.0;  // probe-based, 5% inflated
  std::size_t n_probes = 0;
};

// Probe check of the pair dissipativity condition on random quadruples and a
// probe estimate of the second-argument Lipschitz constant.
PairConditionReport validate_pair_condition(const MeanFieldSpec& spec,
                                            int n_probes = 4096,
                                            std::uint64_t seed = 1,
                                            double tol = 1e-9);

struct MeanFieldState {
  Grid grid;
  Eigen::VectorXd density;  // cell values, sum * h == 1
  double time = 0.0;
  double m2 = 0.0, m5 = 0.0;
};

// One semi-implicit finite-volume step history of the nonlinear flow: the
// diffusion and drift enter through an implicit Scharfetter-Gummel flux with
// the convolution field frozen at the previous step. Mass is conserved
// exactly by the flux form and positivity is preserved (M-matrix).
struct MeanFieldFlow {
  Grid grid;
  double dt = 0.0;
  std::vector<double> times;                // every step, times[k] = k dt
  std::vector<Eigen::VectorXd> densities;   // cell values per step
  const Eigen::VectorXd& at(double t) const;
  // convolution field (H * nu_t)(x) by direct quadrature at an arbitrary point
  double conv(const MeanFieldSpec& spec, double x, std::size_t step) const;
};

MeanFieldState evolve_mckean_vlasov_1d(const MeanFieldSpec& spec, const Grid& grid,
                                       const Eigen::VectorXd& nu0, double dt,
                                       double t_end);
MeanFieldFlow evolve_with_flow(const MeanFieldSpec& spec, const Grid& grid,
                               const Eigen::VectorXd& nu0, double dt, double t_end);

// Exact quantile W2 between two cell densities on the same grid.
double cell_w2_1d(const Grid& grid, const Eigen::VectorXd& p,
                  const Eigen::VectorXd& q);

double moment_of(const Grid& grid, const Eigen::VectorXd& density, double order);

// Normalized gaussian (or custom) initial cell density.
Eigen::VectorXd gaussian_density(const Grid& grid, double mean, double var);

struct ChaosConstants {
  double A = 0.0, B = 0.0;
  double alpha = 0.0, beta = 0.0;  // bound: (alpha e^{-(c-a)t/2} sqrt(m2_0) + beta)/sqrt(N)
  double Q = 0.0;
  double kappa_inf = 0.0;
  double lambda = 0.0;
};

// Follows the moment-dissipation chain of the mean-field theorem's proof:
// Q = Td + 2(C_F+c)R^2 + (|H(0,0)|+|F(0)|)^2/(c-a), the L_H factor
// 2 L_H (T + 2||kappa||)/sqrt(T), and the two integrated terms.
ChaosConstants derive_chaos_constants(const MeanFieldSpec& spec,
                                      const ContractionConstants& cc,
                                      double m2_initial);

struct ChaosPoint {
  int N = 0;
  double w2_marginal = 0.0;     // W2(200-rep cloud of particle 1, grid nu_t)
  double w2_marginal_se = 0.0;  // bootstrap over repetitions
  double coupled_rms = 0.0;     // sqrt(mean over reps |X_1 - Y|^2), Y the
  double coupled_rms_se = 0.0;  //   synchronous McKean proxy (same noise)
  double bound = 0.0;           // theorem bound at this N (applies to both)
};

struct ChaosReport {
  std::vector<ChaosPoint> points;
  double slope = 0.0;     // WLS fit of log coupled_rms vs log N
  double slope_se = 0.0;  // bootstrap over repetitions
  ChaosConstants constants;
  ContractionConstants cc;
  double m2_initial = 0.0;
  bool all_below_bound = false;  // every coupled point <= bound + 3 se
};

ChaosReport chaos_experiment(const MeanFieldSpec& spec, const Grid& grid,
                             const Eigen::VectorXd& nu0,
                             const std::vector<int>& Ns, double t, int n_reps,
                             double dt, std::uint64_t seed, int workers = 1);

struct RatePoint {
  int N = 0;
  double mean_w2_sq = 0.0;
  double rms_w2 = 0.0;
  double se = 0.0;
};

struct RateReport {
  std::vector<RatePoint> points;
  double exponent = 0.0;  // fit of log rms_w2 against log N
  double exponent_se = 0.0;
};

// Empirical-measure rate: W2^2 between one run's N-cloud and the grid
// reference, averaged over runs; the fitted exponent is for the rms W2.
RateReport empirical_measure_rate(const MeanFieldSpec& spec, const Grid& grid,
                                  const Eigen::VectorXd& nu0,
                                  const std::vector<int>& Ns, double t,
                                  int n_reps, double dt, std::uint64_t seed,
                                  int workers = 1);

struct StationaryResult {
  Eigen::VectorXd density;
  int iterations = 0;
  double final_increment = 0.0;       // W2 between successive iterates
  double stationarity_check = 0.0;    // W2 drift under the alternate step t2
  bool converged = false;
  std::vector<double> increments;
};

// Fixed point of the flow map by Picard iteration with step t1 >= 1/(2 lambda),
// verified stationary under a different step t2.
StationaryResult stationary_meanfield(const MeanFieldSpec& spec, const Grid& grid,
                                      const Eigen::VectorXd& nu0, double tol,
                                      double t1, double t2, double dt,
                                      int max_iters = 200);

// Samples n points from a cell density (inverse CDF, deterministic in seed).
std::vector<double> sample_from_density(const Grid& grid,
                                        const Eigen::VectorXd& density, int n,
                                        std::uint64_t seed, std::uint64_t stream);

}  // namespace driftlab
