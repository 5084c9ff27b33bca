#pragma once

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace driftlab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Drift contraction metadata: k(x) >= -K everywhere and k(x) >= c outside
// the ball of radius R.
struct AssumptionParams {
  double K = 0.0;
  double R = 0.0;
  double c = 1.0;
};

// A drift field b on R^d together with everything the estimators need to
// know about it. Models are immutable after construction and safe to share
// across threads.
struct DriftModel {
  std::string name;
  int dim = 1;
  std::function<Vec(const Vec&)> drift;
  // scalar fast path for d = 1 (no vector allocation in integrator loops)
  std::function<double(double)> drift_1d;
  std::optional<AssumptionParams> assumption;
  bool is_gradient = false;
  std::function<double(const Vec&)> potential;  // set iff is_gradient
  // Unnormalized log invariant density, when known in closed form.
  std::function<double(const Vec&)> log_density;

  Vec eval_drift(const Vec& x) const;
};

// Sampling plan for the probe-based estimators. Radii are log-spaced in
// [r_min, r_max]; each radius carries n_dir directions; near_steps adds
// probes at distance fd_step from x (the sup is often attained as y -> x).
struct ProbeSpec {
  int n_radii = 24;
  double r_min = 1e-3;
  double r_max = 32.0;
  int n_dir = 16;
  int near_steps = 8;
  double fd_step = 1e-5;
  std::uint64_t seed = 7;
  // Quotients above this ceiling are reported as "unbounded below".
  double ceiling = 1e12;
};

struct KEstimate {
  double value = 0.0;       // upper estimate of k(x): true k <= value
  bool unbounded = false;   // some quotient exceeded the ceiling
  std::size_t n_probes = 0;
};

struct ContractivityProfile {
  std::vector<double> radii;
  std::vector<double> k_lower;  // per-radius min over the sphere of k-hat
  double K_hat = 0.0;           // estimate of -inf k
  std::size_t samples_per_point = 0;
  bool unbounded_below = false;
};

struct Assumption1Report {
  bool pass = false;
  double tol = 0.0;
  double worst_global = 0.0;  // min over all probes of k-hat + K
  double worst_outer = 0.0;   // min over |x| >= R of k-hat - c
  ContractivityProfile profile;
};

// One-sided monotonicity quotient (x-y).(b(x)-b(y))/|x-y|^2.
double drift_quotient(const DriftModel& model, const Vec& x, const Vec& y);

// Probe estimate of k(x) = -sup_y quotient. Monotone non-increasing under
// probe set growth; exact for linear drifts.
KEstimate estimate_k(const DriftModel& model, const Vec& x,
                     const ProbeSpec& spec);
KEstimate estimate_k(const DriftModel& model, const Vec& x,
                     const std::vector<Vec>& probes, double ceiling = 1e12);

// k-tilde(x) = -lambda_max(sym grad b(x)) by central differences.
double jacobian_k_tilde(const DriftModel& model, const Vec& x,
                        double fd_step = 0.0);

// Central-difference Jacobian of the drift.
Mat drift_jacobian(const DriftModel& model, const Vec& x, double fd_step = 0.0);

Assumption1Report verify_assumption1(const DriftModel& model,
                                     const ProbeSpec& spec, double tol = 1e-7);

// ---- model zoo ------------------------------------------------------------

DriftModel make_ou(int dim = 1);
// b = -x |x|^(beta-2), U = |x|^beta / beta. Assumption metadata follows the
// one-parameter family K=0, R=r, c = r^(beta-2)/(2 beta - 2).
DriftModel make_power_law(int dim, double beta, double r = 1.0);
// b = x - x |x|^2 (wells at |x| = 1).
DriftModel make_double_well(int dim = 1);
// b = -(I + gamma J) grad U with U = |x|^2/2, J block skew; dim must be even.
DriftModel make_skew_gradient(int dim = 2, double gamma = 1.0);
// U = sqrt(1 + |x|^2); bounded drift, no Wasserstein contraction.
DriftModel make_exponential_tail(int dim = 1);
// base drift plus eps * phi with ||phi||_inf <= 1 (phi = tanh coordinatewise).
DriftModel make_perturbed(const DriftModel& base, double eps);
DriftModel make_perturbed(const DriftModel& base, double eps,
                          std::function<Vec(const Vec&)> phi,
                          const std::string& tag);

// Zoo lookup by string id with a parameter map; throws on unknown ids/keys.
DriftModel make_model(const std::string& id,
                      const std::map<std::string, double>& params = {});

}  // namespace driftlab
