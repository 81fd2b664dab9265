#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "icl/linalg.hpp"
#include "icl/rng.hpp"

using namespace icl;
using linalg::Mat;
using linalg::Vec;

namespace {

// Closed-form eigenvalues of a symmetric 3x3 matrix (trigonometric method),
// independent of the Jacobi path under test.
Vec sym3_eigenvalues(const Mat& a) {
  double p1 = a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2);
  double q = (a(0, 0) + a(1, 1) + a(2, 2)) / 3.0;
  double p2 = (a(0, 0) - q) * (a(0, 0) - q) + (a(1, 1) - q) * (a(1, 1) - q) +
              (a(2, 2) - q) * (a(2, 2) - q) + 2.0 * p1;
  double p = std::sqrt(p2 / 6.0);
  Mat b(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) b(i, j) = (a(i, j) - (i == j ? q : 0.0)) / p;
  double detb = b(0, 0) * (b(1, 1) * b(2, 2) - b(1, 2) * b(2, 1)) -
                b(0, 1) * (b(1, 0) * b(2, 2) - b(1, 2) * b(2, 0)) +
                b(0, 2) * (b(1, 0) * b(2, 1) - b(1, 1) * b(2, 0));
  double r = std::clamp(detb / 2.0, -1.0, 1.0);
  double phi = std::acos(r) / 3.0;
  double e1 = q + 2.0 * p * std::cos(phi);
  double e3 = q + 2.0 * p * std::cos(phi + 2.0 * M_PI / 3.0);
  double e2 = 3.0 * q - e1 - e3;
  Vec out{e3, e2, e1};
  std::sort(out.begin(), out.end());
  return out;
}

double power_iteration_spectral_norm(const Mat& m, int iters = 4000) {
  Mat g = linalg::matmul_at(m, m);
  Vec v(g.cols, 1.0);
  double lambda = 0.0;
  for (int it = 0; it < iters; ++it) {
    Vec w = linalg::matvec(g, v);
    double n = linalg::norm2(w);
    if (n == 0.0) return 0.0;
    for (size_t i = 0; i < w.size(); ++i) v[i] = w[i] / n;
    lambda = n;
  }
  return std::sqrt(lambda);
}

// Explicit (X^T X)^{-1} X^T y by Gaussian elimination: the normal-equations
// oracle the QR solver is checked against.
Vec normal_equations_solve(const Mat& x, const Vec& y) {
  Mat g = linalg::matmul_at(x, x);
  Vec rhs = linalg::matvec_t(x, y);
  const int d = g.rows;
  for (int k = 0; k < d; ++k) {
    int piv = k;
    for (int i = k + 1; i < d; ++i)
      if (std::abs(g(i, k)) > std::abs(g(piv, k))) piv = i;
    if (piv != k) {
      for (int j = 0; j < d; ++j) std::swap(g(k, j), g(piv, j));
      std::swap(rhs[k], rhs[piv]);
    }
    for (int i = k + 1; i < d; ++i) {
      double f = g(i, k) / g(k, k);
      for (int j = k; j < d; ++j) g(i, j) -= f * g(k, j);
      rhs[i] -= f * rhs[k];
    }
  }
  Vec w(d);
  for (int k = d - 1; k >= 0; --k) {
    double s = rhs[k];
    for (int j = k + 1; j < d; ++j) s -= g(k, j) * w[j];
    w[k] = s / g(k, k);
  }
  return w;
}

Mat random_mat(rng::Rng& r, int rows, int cols) {
  Mat m(rows, cols);
  for (double& v : m.data) v = r.gaussian();
  return m;
}

}  // namespace

TEST_CASE("row_softmax on reference rows") {
  Mat zeros(1, 3);
  Mat s = linalg::row_softmax(zeros);
  for (int j = 0; j < 3; ++j) CHECK(s(0, j) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));

  Mat ln2(1, 2);
  ln2(0, 0) = std::log(2.0);
  Mat s2 = linalg::row_softmax(ln2);
  CHECK(s2(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(s2(0, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("row_softmax shift invariance and row sums") {
  rng::Rng r(11);
  for (int rep = 0; rep < 20; ++rep) {
    Mat m(4, 6);
    for (double& v : m.data) v = r.uniform(-700.0, 700.0);
    Mat shifted = m;
    double c = r.uniform(-5.0, 5.0);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 6; ++j) shifted(i, j) += c;
    Mat a = linalg::row_softmax(m);
    Mat b = linalg::row_softmax(shifted);
    for (size_t k = 0; k < a.data.size(); ++k) CHECK(a.data[k] == doctest::Approx(b.data[k]));
    for (int i = 0; i < a.rows; ++i) {
      double sum = 0.0;
      for (int j = 0; j < a.cols; ++j) {
        sum += a(i, j);
        CHECK(a(i, j) >= 0.0);
      }
      CHECK(std::abs(sum - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("min_singular_value basics and eigensolve oracle") {
  CHECK(linalg::min_singular_value(Mat::identity(3)) == doctest::Approx(1.0).epsilon(1e-12));

  Mat diag(2, 2);
  diag(0, 0) = 3.0;
  diag(1, 1) = 2.0;
  CHECK(linalg::min_singular_value(diag) == doctest::Approx(2.0).epsilon(1e-12));

  rng::Rng r(7);
  for (int rep = 0; rep < 10; ++rep) {
    Mat m = random_mat(r, 8, 3);
    Vec eig = sym3_eigenvalues(linalg::matmul_at(m, m));
    double oracle = std::sqrt(std::max(0.0, eig.front()));
    CHECK(linalg::min_singular_value(m) == doctest::Approx(oracle).epsilon(1e-9));
  }

  CHECK_THROWS(linalg::min_singular_value(random_mat(r, 3, 8)));
}

TEST_CASE("spectral_norm basics and power-iteration oracle") {
  Mat diag(2, 2);
  diag(0, 0) = 3.0;
  diag(1, 1) = 2.0;
  CHECK(linalg::spectral_norm(diag) == doctest::Approx(3.0).epsilon(1e-12));

  rng::Rng r(13);
  Vec u(4), v(5);
  for (double& x : u) x = r.gaussian();
  for (double& x : v) x = r.gaussian();
  Mat rank1(4, 5);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 5; ++j) rank1(i, j) = u[i] * v[j];
  CHECK(linalg::spectral_norm(rank1) ==
        doctest::Approx(linalg::norm2(u) * linalg::norm2(v)).epsilon(1e-10));

  for (int rep = 0; rep < 10; ++rep) {
    Mat m = random_mat(r, 5, 5);
    CHECK(linalg::spectral_norm(m) ==
          doctest::Approx(power_iteration_spectral_norm(m)).epsilon(1e-8));
  }
}

TEST_CASE("norm inequality on random matrices") {
  rng::Rng r(17);
  for (int rep = 0; rep < 20; ++rep) {
    int rows = 2 + static_cast<int>(r.next_u64() % 6);
    int cols = 2 + static_cast<int>(r.next_u64() % 6);
    Mat m = random_mat(r, rows, cols);
    double s = linalg::spectral_norm(m);
    double f = linalg::frobenius_norm(m);
    CHECK(s <= f * (1 + 1e-12));
    CHECK(f <= std::sqrt(static_cast<double>(std::min(rows, cols))) * s * (1 + 1e-12));
  }
}

TEST_CASE("least_squares identity, interpolation, oracle, residual") {
  rng::Rng r(23);
  Vec y{1.5, -2.0, 0.25};
  Vec w = linalg::least_squares(Mat::identity(3), y);
  for (int i = 0; i < 3; ++i) CHECK(w[i] == doctest::Approx(y[i]).epsilon(1e-14));

  // exact interpolation
  Mat x = random_mat(r, 6, 4);
  Vec wstar(4);
  for (double& v : wstar) v = r.gaussian();
  Vec yx = linalg::matvec(x, wstar);
  Vec rec = linalg::least_squares(x, yx);
  for (int i = 0; i < 4; ++i) CHECK(rec[i] == doctest::Approx(wstar[i]).epsilon(1e-10));

  // overdetermined random instance vs the normal-equations oracle
  for (int rep = 0; rep < 10; ++rep) {
    Mat xr = random_mat(r, 12, 4);
    Vec yr(12);
    for (double& v : yr) v = r.gaussian();
    Vec qr = linalg::least_squares(xr, yr);
    Vec ne = normal_equations_solve(xr, yr);
    for (int i = 0; i < 4; ++i) CHECK(qr[i] == doctest::Approx(ne[i]).epsilon(1e-8));

    // residual orthogonal to the column space
    Vec resid = linalg::matvec(xr, qr);
    for (int i = 0; i < 12; ++i) resid[i] -= yr[i];
    Vec xtres = linalg::matvec_t(xr, resid);
    Vec xty = linalg::matvec_t(xr, yr);
    double num = 0.0, den = 0.0;
    for (int i = 0; i < 4; ++i) {
      num = std::max(num, std::abs(xtres[i]));
      den = std::max(den, std::abs(xty[i]));
    }
    CHECK(num < 1e-8 * den);
  }
}

TEST_CASE("least_squares rejects degenerate designs") {
  Mat x(4, 2);
  for (int i = 0; i < 4; ++i) {
    x(i, 0) = i + 1.0;
    x(i, 1) = 2.0 * (i + 1.0);  // exactly collinear columns
  }
  Vec y{1, 2, 3, 4};
  CHECK_THROWS_AS((void)linalg::least_squares(x, y), std::domain_error);
  rng::Rng r(1);
  CHECK_THROWS(linalg::least_squares(random_mat(r, 2, 3), Vec{1, 2}));
}
