#pragma once

#include <cstdint>

#include "icl/linalg.hpp"

namespace icl::theory {

/// Inputs of the bound expressions. Suppressed big-O constants are set to 1
/// throughout, so these values are bound *shapes*: the artifact checks
/// monotonicity and scaling against them, never absolute gaps.
struct TheoryParams {
  int d = 5;
  int t = 20;
  int m = 309;       // number of training prompts
  int d_m = 64;
  double big_d = 0;  // parameter-space dimension D; 0 means derive d*d_m + d_m^2
  double r = 1.0;            // tolerance ellipsoid radius
  double gamma_eff = 1.0;
  double c_pe = 1.0;
  double l_f = 1.0;
  double l_x = 1.0;
  double m_out = 1.0;  // output bound M
  double m_y = 1.0;    // response bound M_y
  double eps = 0.0;    // attack budget

  double dim_d() const { return big_d > 0 ? big_d : static_cast<double>(d) * d_m +
                                                        static_cast<double>(d_m) * d_m; }
};

/// Attack amplification factor 1/(1 - sqrt(d/t) - eps/sqrt(t)).
/// Defined for t > d and eps < sqrt(t) - sqrt(d).
double phi(double eps, int t, int d);

/// 2*sqrt(r/lambda_min(A)) for symmetric positive definite A.
double ellipsoid_diameter(const linalg::Mat& a, double r);

/// D * log(3*diam/eps).
double covering_log_bound(double dim, double diam, double eps);

/// Integral of sqrt(log(K*diam/u)) du over (0, diam], adaptive quadrature
/// after the substitution u = diam*exp(-s^2) removes the endpoint
/// singularity. At K=1 this equals diam*sqrt(pi)/2.
double dudley_quadrature(double diam, double k_const);

double rc_bound_nope(const TheoryParams& p);
double rc_bound_pe(const TheoryParams& p);

/// 2*((M + M_y) + L_x * eps).
double l_h(double m_out, double m_y, double l_x, double eps);

double arc_bound_nope(const TheoryParams& p);
double arc_bound_pe(const TheoryParams& p);

/// sqrt(c_mu) * sqrt(2*log(2/delta)).
double m_y_bound(double c_mu, double delta);

/// Fraction of Gaussian t x d draws with sigma_min below sqrt(t)-sqrt(d)-k.
double sigma_min_tail_mc(int t, int d, double k, int trials, uint64_t seed);

/// max_i |sigma_i(A+B) - sigma_i(A)| - ||B||_2 (nonpositive up to rounding).
double weyl_check(const linalg::Mat& a, const linalg::Mat& b);

/// eps^2/t + 2*sqrt(d)*eps/sqrt(t), the example-Gram perturbation bound.
double delta_cov_bound(double eps, int t, int d);

/// 2*sqrt(r)/sigma_min(X_t) for a t x d design with t > d.
double solution_diameter_clean(const linalg::Mat& x_t, double r);

}  // namespace icl::theory
