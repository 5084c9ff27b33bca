#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace driftlab {

// Weighted sample cloud. Rows are points.
struct EmpiricalMeasure {
  Eigen::MatrixXd points;   // n x d
  Eigen::VectorXd weights;  // empty means uniform

  EmpiricalMeasure() = default;
  explicit EmpiricalMeasure(Eigen::MatrixXd pts);
  EmpiricalMeasure(Eigen::MatrixXd pts, Eigen::VectorXd w);

  Eigen::Index size() const { return points.rows(); }
  Eigen::Index dim() const { return points.cols(); }
  double weight(Eigen::Index i) const {
    return weights.size() ? weights[i] : 1.0 / static_cast<double>(points.rows());
  }
  static EmpiricalMeasure from_samples(const std::vector<double>& xs);
};

struct TransportResult {
  double cost = 0.0;  // W_alpha value
  double alpha = 2.0;
  std::string method;      // "1d-exact" | "assignment" | "entropic"
  double epsilon = 0.0;    // entropic only
  int iterations = 0;      // entropic only
  bool converged = true;   // entropic: marginal violation below tolerance
  double marginal_violation = 0.0;
  std::optional<Eigen::MatrixXd> plan;
  // bootstrap CI (95% percentile), when requested
  bool has_ci = false;
  double ci_lo = 0.0, ci_hi = 0.0;
  int n_boot = 0;
};

// Exact 1d W_alpha via the quantile (monotone) coupling; general weights.
TransportResult w_alpha_1d(const EmpiricalMeasure& X, const EmpiricalMeasure& Y,
                           double alpha = 2.0);

// Exact W_alpha for equal-size uniform clouds via optimal assignment
// (Jonker-Volgenant shortest augmenting path, O(n^3)).
TransportResult w2_assignment(const EmpiricalMeasure& X, const EmpiricalMeasure& Y,
                              double alpha = 2.0, Eigen::Index cap = 4096,
                              bool keep_plan = false);

struct SinkhornOptions {
  double epsilon = 0.05;
  int max_iter = 2000;
  double marginal_tol = 1e-6;
  bool debiased = false;
};

// Entropic approximation; cost is the transport part <pi, C>^(1/alpha).
TransportResult w2_entropic(const EmpiricalMeasure& X, const EmpiricalMeasure& Y,
                            double alpha, const SinkhornOptions& opt);

enum class TransportMethod { OneDExact, Assignment, Entropic };

// Percentile bootstrap CI at 95% from resampled clouds; deterministic in seed.
TransportResult bootstrap_ci(const EmpiricalMeasure& X, const EmpiricalMeasure& Y,
                             double alpha, TransportMethod method, int n_boot,
                             std::uint64_t seed,
                             const SinkhornOptions& opt = {});

}  // namespace driftlab
