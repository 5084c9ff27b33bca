#pragma once

#include <functional>
#include <string>
#include <vector>

#include "driftlab/model.hpp"

namespace driftlab {

// Weight kappa(x) = g(|x|^2) - inf g built from the radial ODE
// r g'' + (d/2) g' = h, with h = -K_* below R^2, c/8 on the shell, 0 past the
// support. K_* = K/4 + c/8. The jump of h at the shell ends is smoothed over
// bands of width eps (in r = |x|^2 units); the outer band end rho1 is placed
// by root finding so that g' vanishes there exactly and kappa has compact
// support. By construction lap kappa = 4 h_eps pointwise, so the defining
// inequality lap kappa <= envelope - c/2 holds with no band tolerance.
class WeightFunction {
 public:
  // eps < 0 selects the default 1e-3 (R_*^2 - R^2).
  WeightFunction(double K, double c, double R, int d, double eps = -1.0);

  double g_prime(double r) const;
  double g(double r) const;
  double h_eps(double r) const;

  double kappa(const Vec& x) const { return kappa_r(x.squaredNorm()); }
  double kappa_r(double r) const;
  Vec grad_kappa(const Vec& x) const;
  double lap_kappa(const Vec& x) const { return 4.0 * h_eps(x.squaredNorm()); }

  double kappa_inf() const { return kappa_inf_; }      // sup kappa
  double grad_inf() const { return grad_inf_; }        // sup |grad kappa|
  double support_r2() const { return rho1_; }          // kappa = 0 past sqrt(rho1)
  double r_star() const { return Rstar_; }
  double r_star2() const { return Rstar2_; }
  double k_star() const { return Kstar_; }
  double eps() const { return eps_; }
  bool trivial() const { return trivial_; }            // R = 0: kappa == 0

  double K, c, R;
  int d;

 private:
  double target_mass() const;
  double cum_h(double r) const;  // int_{R^2}^r h_eps(s) s^(d/2-1) ds, r <= rho1

  bool trivial_ = false;
  double Kstar_ = 0.0, R2_ = 0.0, Rstar_ = 0.0, Rstar2_ = 0.0;
  double eps_ = 0.0, eps_rise_ = 0.0, rho1_ = 0.0, rise_full_ = 0.0;
  double kappa_inf_ = 0.0, grad_inf_ = 0.0, g_min_ = 0.0;
  // cumulative table of g on [R^2, rho1] (g is linear below R^2)
  std::vector<double> knots_, g_vals_, gp_vals_;
};

WeightFunction build_weight(double K, double c, double R, int d,
                            double eps = -1.0);

// R_* = R (2 + 2K/c)^(1/d)
double r_star(double K, double c, double R, int d);

struct ContractionConstants {
  double alpha = 2.0;
  double T0 = 0.0;
  double M = 1.0;
  double lambda = 0.0;
  std::string provenance;  // "theorem-1" | "theorem-4.1"
};

// sup of a scalar field over the ball |x| <= radius: coarse grid
// (33^min(d,3) points, random directions past d = 3) then projected gradient
// ascent from the best starts. Returns the achieved value (a lower bound).
struct BallSup {
  double value = 0.0;
  Vec argmax;
  int grid_points_per_axis = 33;
  std::size_t evaluations = 0;
};
BallSup ball_sup(const std::function<double(const Vec&)>& f, int dim,
                 double radius, int grid_per_axis = 33);

struct T0Result {
  double t0 = 0.0;        // the displayed formula, oracle-exact
  double t0_safe = 0.0;   // t0 inflated 5% (sup term is a lower bound)
  double sup_minus_xb = 0.0;
  int grid_points_per_axis = 33;
};

// Temperature threshold (2K+c)(alpha (K+c/4) R_*^2 + 2 sup{-x.b})/(c d).
T0Result t0_threshold(const DriftModel& model, double alpha = 2.0);

// M_alpha = (1 + alpha (2K+c) R_*^2/(4 d T))^(1/alpha), lambda = c/4.
ContractionConstants contraction_constants(double K, double c, double R, int d,
                                           double T, double alpha = 2.0);

// C_P <= M^2 T / lambda; T / lambda when the drift is a gradient.
double poincare_from_contraction(double M, double lambda, double T,
                                 bool reversible = false);

struct CpBetaBound {
  double bound = 0.0;          // 8(beta-1)(1+2^(beta/d+1))^(1-2/beta) / d^(1-2/beta)
  double window_lo = 0.0;      // radial log-concave two-sided reference, d >= 2
  double window_hi = 0.0;
  bool has_window = false;
};
CpBetaBound cp_beta_bound(double beta, int d);

// (2T/c) exp((2K+c) R^2 (1+K/c)^2 / T)
double holley_stroock_bound(double K, double c, double R, double T);

// Entropy regularization rate J(t): min of K/(1-e^(-2Kt)) and
// M^2 (K+lambda)(1+K/lambda)^(lambda/K) e^(-2 lambda t), the second only for
// t >= ln(1+K/lambda)/(2K); K -> 0 limits 1/(2t), M^2 lambda e e^(-2 lambda t)
// with threshold 1/(2 lambda).
double j_t(double K, double lambda, double M, double t);

struct ParticleParams {
  double C_F = 0.0;  // one-sided Lipschitz bound of the confinement
  double C_G = 0.0;  // interaction coupling bound
  double a = 0.0;    // interaction dissipativity defect (a < c)
  double c = 1.0;
  double R = 0.0;
  double M_G = 0.0;  // interaction bound on the core ball
  int d = 1;
};

// Theorem-4.1 bundle: R_* = R(2+2(C_F+a)/(c-a))^(1/(2d)), K_* = C_F+(c+a)/2,
// T0 = K_*/(d(c-a)) (R_*^2(C_F+C_G) + 2 sup{-F.x} + 4 M_G R_*),
// M = sqrt(1+2 K_* R_*^2/(Td)), lambda = (c-a)/(4+8 K_* R_*^2/(Td)).
ContractionConstants particle_constants(const ParticleParams& p, double T,
                                        double sup_minus_xF);
ContractionConstants particle_constants(const ParticleParams& p, double T,
                                        const std::function<Vec(const Vec&)>& F);

struct BakryEmeryReport {
  bool pass = false;
  double min_margin = 0.0;   // min over grid of Phi(a) - (c/4) a
  double T_tilde0 = 0.0;     // 6 max(Q_tilde/c, ||kappa||_inf)
  double Q_tilde = 0.0;      // K||kappa||_inf + sup(b.grad kappa + 4|grad kappa|^2)
  double tol = 0.0;
  std::size_t grid_size = 0;
};

// Checks Phi(a) >= (c/4) a on probe points for a = T + 2(||kappa||_inf - kappa),
// Phi(a) = L(a)/2 - Gamma(a)/a + a k_tilde. Pass is required only for T >= T_tilde0.
BakryEmeryReport verify_bakry_emery_weight(const DriftModel& model,
                                           const WeightFunction& w, double T,
                                           const std::vector<Vec>& grid,
                                           double tol = 1e-9);

// Uniform 1d probe grid embedded on the first axis (helper for the check).
std::vector<Vec> axis_grid(int dim, double lo, double hi, int n);

}  // namespace driftlab
