#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "driftlab/constants.hpp"
#include "driftlab/model.hpp"
#include "driftlab/transport.hpp"

namespace driftlab {

// dX = b(X) dt + sqrt(2T) dB. Output times must be multiples of dt.
struct SimConfig {
  double T = 1.0;
  double dt = 1e-3;
  double t_max = 1.0;
  int n_traj = 1;
  std::uint64_t seed = 0;
  std::vector<double> output_times;
  int workers = 1;  // recorded, never affects results
  double blowup = 1e8;

  std::vector<std::uint64_t> output_steps() const;  // validates the grid
};

// Trajectories diverging past config.blowup or producing non-finite drift
// abort the experiment; dropping paths silently would bias the estimates.
struct SimulationError : std::runtime_error {
  SimulationError(const std::string& what, Vec state, double time)
      : std::runtime_error(what), state(std::move(state)), time(time) {}
  Vec state;
  double time;
};

struct Path {
  std::vector<double> times;
  std::vector<Vec> states;
};

Path euler_maruyama(const DriftModel& model, const Vec& x0,
                    const SimConfig& config, std::uint64_t traj_index = 0);

struct MeanSeries {
  std::vector<double> times;
  std::vector<double> mean;    // estimate of E[value]
  std::vector<double> stderr_; // from per-trajectory values
  double upper(std::size_t i, double z = 3.0) const { return mean[i] + z * stderr_[i]; }
};

struct CouplingStats {
  double alpha = 2.0;
  std::uint64_t seed = 0;
  int n_traj = 0;
  std::vector<double> times;
  std::vector<double> dist;        // (E|X-Y|^alpha)^(1/alpha)
  std::vector<double> dist_upper;  // same transform of mean + 3 se
  MeanSeries pow_moment;           // raw E|X-Y|^alpha series
  std::optional<MeanSeries> rho;   // weighted |x-y|^alpha (2T + a k(x) + a k(y))
};

using PairSampler = std::function<std::pair<Vec, Vec>(std::uint64_t traj)>;

// Both chains share the Gaussian increments (the noise cancels in X - Y).
CouplingStats synchronous_coupling(const DriftModel& model,
                                   const PairSampler& init, const SimConfig& config,
                                   double alpha = 2.0,
                                   const WeightFunction* weight = nullptr);

struct SubmartingaleReport {
  bool pass = false;
  bool temperature_ok = true;  // informational when T < T0
  double lambda = 0.0;
  std::vector<double> times;
  std::vector<double> value;   // estimate of E[e^(alpha lambda t) rho]
  std::vector<double> step_mean;  // paired per-step increments
  std::vector<double> step_se;
  int first_violation = -1;    // index of the first increasing step
};

// Checks that t -> E[e^(alpha lambda t) rho(X_t, Y_t)] is non-increasing, each
// step up to 2 standard errors of the paired per-trajectory increments.
SubmartingaleReport submartingale_check(const DriftModel& model,
                                        const WeightFunction& weight,
                                        const PairSampler& init,
                                        const SimConfig& config, double alpha,
                                        double lambda,
                                        std::optional<double> t0 = std::nullopt);

struct PerturbedReport {
  std::vector<double> times;
  std::vector<double> w_empirical;  // W_alpha between marginal clouds
  std::vector<double> bound;        // M e^(-lt) W0 + M^a (1-e^(-lt))/l ||b - bt||
  double sup_diff = 0.0;            // grid sup of |b - b_tilde|, 5% inflated
  bool all_below = false;
};

// Shared noise, shared initial points; marginal clouds compared against the
// perturbation bound with constants from the base model.
PerturbedReport perturbed_coupling(const DriftModel& model,
                                   const DriftModel& model_tilde,
                                   const std::function<Vec(std::uint64_t)>& init,
                                   const SimConfig& config, double alpha = 2.0);

// ---- interacting particles --------------------------------------------------

struct InteractionSpec {
  // pairwise kernel H(x_i, x_j) acting on particle i
  std::function<Vec(const Vec&, const Vec&)> H;
  // neighbor lists; empty means mean-field (complete graph, G = (1/N) sum H)
  std::vector<std::vector<int>> neighbors;
  // fast path for d = 1 difference kernels H(x,y) = h(x-y); when the kernel
  // is odd the pair loop is halved
  std::function<double(double)> H_diff_1d;
  bool antisymmetric = false;
};

struct ParticlePath {
  std::vector<double> times;
  // states[k] is an N x d matrix at output time k
  std::vector<Mat> states;
};

// dX_i = F(X_i) dt + G_i(X) dt + sqrt(2T) dB_i with independent noises.
// stream_of(i) keys particle i's substream; defaults to i.
ParticlePath particle_system(const std::function<Vec(const Vec&)>& F, int d,
                             const InteractionSpec& inter, int N,
                             const Mat& x0, const SimConfig& config,
                             const std::function<std::uint64_t(int)>& stream_of = {});

struct MomentSeries {
  std::vector<double> times;
  std::vector<double> m2, m2_se;
  std::vector<double> m5, m5_se;
};

// Per-time empirical moments (orders 2 and 5) of |X| over a particle cloud
// or a trajectory ensemble.
MomentSeries moment_tracker(const ParticlePath& path);
MomentSeries moment_tracker(const std::vector<Path>& paths);

// Convenience: run independent scalar trajectories and collect terminal points.
std::vector<Vec> terminal_cloud(const DriftModel& model,
                                const std::function<Vec(std::uint64_t)>& init,
                                const SimConfig& config);

}  // namespace driftlab
