#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <array>
#include <vector>

#include "driftlab/constants.hpp"
#include "driftlab/model.hpp"

namespace driftlab {

using SpMat = Eigen::SparseMatrix<double>;

// Truncated tensor grid with zero-flux (reflecting) closure.
struct Grid {
  int dim = 1;  // 1 or 2
  std::array<double, 2> half = {8.0, 8.0};
  std::array<int, 2> n = {2001, 1};

  Grid() = default;
  Grid(double a, int n0);                      // 1d
  Grid(double a0, int n0, double a1, int n1);  // 2d

  double h(int axis) const { return 2.0 * half[axis] / (n[axis] - 1); }
  int size() const { return dim == 1 ? n[0] : n[0] * n[1]; }
  double coord(int axis, int idx) const { return -half[axis] + h(axis) * idx; }
  int flat(int i, int j) const { return i + n[0] * j; }
  Vec point(int idx) const;
};

// Discretized generator L = T lap + b.grad with stationary density and the
// Dirichlet form of the carre du champ T |grad f|^2. In 1d the operator is
// assembled in Sturm-Liouville flux form around mu ~ exp(int b / T), which
// makes conservation and stationarity exact; in 2d the stationary density is
// the null vector of the weighted adjoint (inverse iteration).
struct GridOperator {
  Grid grid;
  double T = 1.0;
  SpMat L;            // generator on grid functions
  Eigen::VectorXd mu; // stationary density at nodes, integrates to 1 under W
  Eigen::VectorXd W;  // trapezoid quadrature weights
  SpMat stiff;        // <f, stiff f> = T int |grad f|^2 dmu (quadrature)
  double adjoint_residual = 0.0;  // ||L^T (W mu)||_inf after construction
};

GridOperator build_operator(const DriftModel& model, double T, const Grid& grid);

// Optimal Poincare constant of mu on the grid: C_P = T / lambda_1(stiff, B)
// with B = diag(W mu); lambda_1 is the smallest nonzero eigenvalue.
double poincare_constant(const GridOperator& op);

struct PoincareReport {
  double C_P = 0.0;
  double C_P_coarse = 0.0;    // same computation on the half-resolution grid
  double richardson_slope = 0.0;  // observed order from a 4x refinement chain
  double discretization_error = 0.0;  // |C_P - C_P_coarse| / 3 (h^2 model)
};

PoincareReport poincare_with_refinement(const DriftModel& model, double T,
                                        const Grid& grid);

// Crank-Nicolson evolution of d_t u = L u; preserves constants exactly.
Eigen::VectorXd semigroup_evolve(const GridOperator& op, const Eigen::VectorXd& f0,
                                 double t, double dt = 0.0);

// Evolution of densities (w.r.t. Lebesgue) under the adjoint flow.
Eigen::VectorXd evolve_density(const GridOperator& op, const Eigen::VectorXd& p0,
                               double t, double dt = 0.0);

// |grad f|^2 by central differences (one-sided zero at the reflecting edge).
Eigen::VectorXd grad_sq(const GridOperator& op, const Eigen::VectorXd& f);

struct GradientContractionReport {
  bool pass = false;
  double max_violation = 0.0;  // relative, interior nodes
  double tol = 0.0;            // h^2-scale tolerance used
  std::vector<double> times;
  std::vector<double> worst_by_time;
};

// Pointwise |grad P_t f|^2 <= M^2 e^(-2 lambda t) P_t |grad f|^2 on interior
// nodes for each test function and time.
GradientContractionReport gradient_contraction_check(
    const GridOperator& op, double M2, double lambda,
    const std::vector<Eigen::VectorXd>& test_functions,
    const std::vector<double>& times, double tol_coeff = 25.0);

struct KlTvEntry {
  double t = 0.0;
  double tv = 0.0;   // half L1 distance
  double kl = 0.0;   // relative entropy against mu, nats
  double jt = 0.0;
  double rhs = 0.0;  // (J(t)/2T) W2^2(nu0, mu)
  bool pinsker_ok = false;
  bool regularization_ok = false;
};

struct KlTvReport {
  bool pass = false;
  double w2_init = 0.0;
  std::vector<KlTvEntry> entries;
};

// Checks TV^2 <= KL and KL(nu P_t | mu) <= (J(t)/2T) W2^2(nu0, mu) along the
// adjoint flow; J from j_t with the supplied (K, lambda, M). 1d only (exact
// quantile W2 between grid distributions).
KlTvReport kl_tv_check(const GridOperator& op, const Eigen::VectorXd& nu0,
                       double K, double lambda, double M,
                       const std::vector<double>& times, double slack = 1e-6,
                       double dt = 0.0);

// Exact 1d W2 between two densities sampled on the same grid (atoms at nodes).
double grid_w2_1d(const GridOperator& op, const Eigen::VectorXd& p,
                  const Eigen::VectorXd& q);

}  // namespace driftlab
