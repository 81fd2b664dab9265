#include "icl/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "icl/par.hpp"
#include "icl/rng.hpp"

namespace icl::theory {

using linalg::Mat;
using linalg::Vec;

double phi(double eps, int t, int d) {
  if (t <= d) throw std::domain_error("phi: requires t > d");
  if (eps < 0.0) throw std::domain_error("phi: negative eps");
  double lim = std::sqrt(static_cast<double>(t)) - std::sqrt(static_cast<double>(d));
  if (eps >= lim) throw std::domain_error("phi: eps >= sqrt(t) - sqrt(d)");
  double denom = 1.0 - std::sqrt(static_cast<double>(d) / t) - eps / std::sqrt(static_cast<double>(t));
  return 1.0 / denom;
}

double ellipsoid_diameter(const Mat& a, double r) {
  if (a.rows != a.cols) throw std::invalid_argument("ellipsoid_diameter: matrix not square");
  if (r <= 0.0) throw std::domain_error("ellipsoid_diameter: r must be positive");
  for (int i = 0; i < a.rows; ++i)
    for (int j = i + 1; j < a.cols; ++j)
      if (std::abs(a(i, j) - a(j, i)) > 1e-9 * (1.0 + std::abs(a(i, j))))
        throw std::invalid_argument("ellipsoid_diameter: matrix not symmetric");
  Vec eig = linalg::sym_eigenvalues(a);
  if (eig.front() <= 0.0) throw std::domain_error("ellipsoid_diameter: matrix not positive definite");
  return 2.0 * std::sqrt(r / eig.front());
}

double covering_log_bound(double dim, double diam, double eps) {
  if (eps <= 0.0 || diam <= 0.0)
    throw std::domain_error("covering_log_bound: diam and eps must be positive");
  return dim * std::log(3.0 * diam / eps);
}

namespace {
struct Quad {
  double log_k;

  // After u = diam*exp(-s^2) the integrand becomes 2 s exp(-s^2)
  // sqrt(log K + s^2); the diam factor is applied outside.
  double f(double s) const { return 2.0 * s * std::exp(-s * s) * std::sqrt(log_k + s * s); }

  static double simpson(double a, double b, double fa, double fm, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  }

  double adapt(double a, double b, double fa, double fm, double fb, double whole, double tol,
               int depth) const {
    double mid = 0.5 * (a + b);
    double m1 = 0.5 * (a + mid), m2 = 0.5 * (mid + b);
    double f1 = f(m1), f2 = f(m2);
    double left = simpson(a, mid, fa, f1, fm);
    double right = simpson(mid, b, fm, f2, fb);
    if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
      return left + right + (left + right - whole) / 15.0;
    return adapt(a, mid, fa, f1, fm, left, tol * 0.5, depth - 1) +
           adapt(mid, b, fm, f2, fb, right, tol * 0.5, depth - 1);
  }
};
}  // namespace

double dudley_quadrature(double diam, double k_const) {
  if (diam <= 0.0) throw std::domain_error("dudley_quadrature: diam must be positive");
  if (k_const < 1.0) throw std::domain_error("dudley_quadrature: K must be >= 1");
  Quad q{std::log(k_const)};
  const double a = 0.0, b = 9.0;  // exp(-81): tail is below any tolerance used here
  double fa = q.f(a), fb = q.f(b), fm = q.f(0.5 * (a + b));
  double whole = Quad::simpson(a, b, fa, fm, fb);
  return diam * q.adapt(a, b, fa, fm, fb, whole, 1e-10, 48);
}

double rc_bound_nope(const TheoryParams& p) {
  if (p.t <= p.r) throw std::domain_error("rc_bound_nope: requires t > r");
  if (p.m < 1 || p.t < 1) throw std::domain_error("rc_bound_nope: m, t must be >= 1");
  return p.l_f * std::sqrt(p.r * p.dim_d()) * std::sqrt(std::log(p.t / p.r)) /
         std::sqrt(static_cast<double>(p.m) * p.t);
}

double rc_bound_pe(const TheoryParams& p) {
  return rc_bound_nope(p) + p.c_pe * std::sqrt(static_cast<double>(p.d)) /
                                std::sqrt(static_cast<double>(p.m));
}

double l_h(double m_out, double m_y, double l_x, double eps) {
  if (m_out < 0 || m_y < 0 || l_x < 0 || eps < 0)
    throw std::domain_error("l_h: arguments must be nonnegative");
  return 2.0 * ((m_out + m_y) + l_x * eps);
}

double arc_bound_nope(const TheoryParams& p) {
  double lh = l_h(p.m_out, p.m_y, p.l_x, p.eps);
  return lh * rc_bound_nope(p) * phi(p.eps, p.t, p.d);
}

double arc_bound_pe(const TheoryParams& p) {
  double lh = l_h(p.m_out, p.m_y, p.l_x, p.eps);
  double sm = std::sqrt(static_cast<double>(p.m));
  double pe_terms = p.c_pe * std::sqrt(static_cast<double>(p.d)) / sm + p.c_pe * p.eps / sm;
  return lh * (pe_terms + rc_bound_nope(p) * phi(p.eps, p.t, p.d));
}

double m_y_bound(double c_mu, double delta) {
  if (c_mu <= 0.0) throw std::domain_error("m_y_bound: c_mu must be positive");
  if (delta <= 0.0 || delta >= 1.0) throw std::domain_error("m_y_bound: delta in (0,1)");
  return std::sqrt(c_mu) * std::sqrt(2.0 * std::log(2.0 / delta));
}

double sigma_min_tail_mc(int t, int d, double k, int trials, uint64_t seed) {
  if (t <= d) throw std::domain_error("sigma_min_tail_mc: requires t > d");
  if (trials < 1000) throw std::domain_error("sigma_min_tail_mc: need >= 1000 trials");
  const double threshold = std::sqrt(static_cast<double>(t)) -
                           std::sqrt(static_cast<double>(d)) - k;
  rng::Rng root(seed);
  std::vector<char> hit(trials, 0);
  par::parallel_for(trials, [&](int i) {
    rng::Rng r = root.fork(static_cast<uint64_t>(i));
    Mat x(t, d);
    for (double& v : x.data) v = r.gaussian();
    hit[i] = linalg::min_singular_value(x) <= threshold ? 1 : 0;
  });
  long long count = 0;
  for (char c : hit) count += c;
  return static_cast<double>(count) / trials;
}

double weyl_check(const Mat& a, const Mat& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("weyl_check: shapes differ");
  Mat sum = a;
  for (size_t i = 0; i < sum.data.size(); ++i) sum.data[i] += b.data[i];
  Vec sa = linalg::singular_values(a);
  Vec ss = linalg::singular_values(sum);
  double bnorm = linalg::spectral_norm(b);
  double worst = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < sa.size(); ++i)
    worst = std::max(worst, std::abs(ss[i] - sa[i]) - bnorm);
  return worst;
}

double delta_cov_bound(double eps, int t, int d) {
  if (t < 1) throw std::domain_error("delta_cov_bound: t must be >= 1");
  double st = std::sqrt(static_cast<double>(t));
  return eps * eps / t + 2.0 * std::sqrt(static_cast<double>(d)) * eps / st;
}

double solution_diameter_clean(const Mat& x_t, double r) {
  if (x_t.rows <= x_t.cols) throw std::domain_error("solution_diameter_clean: requires t > d");
  if (r <= 0.0) throw std::domain_error("solution_diameter_clean: r must be positive");
  double smin = linalg::min_singular_value(x_t);
  if (smin <= 0.0 || smin < 1e-12 * linalg::spectral_norm(x_t))
    throw std::domain_error("solution_diameter_clean: singular design matrix");
  return 2.0 * std::sqrt(r) / smin;
}

}  // namespace icl::theory
