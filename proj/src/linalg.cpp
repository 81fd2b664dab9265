#include "icl/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace icl::linalg {

Mat::Mat(int r, int c, double fill) : rows(r), cols(c) {
  if (r < 0 || c < 0) throw std::invalid_argument("Mat: negative dimensions");
  data.assign(static_cast<size_t>(r) * c, fill);
}

Mat Mat::identity(int n) {
  Mat m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

double dot(const double* a, const double* b, int n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  double s = (s0 + s1) + (s2 + s3);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double* y, double a, const double* x, int n) {
  for (int i = 0; i < n; ++i) y[i] += a * x[i];
}

static void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

Mat matmul(const Mat& a, const Mat& b) {
  require(a.cols == b.rows, "matmul: inner dimensions differ");
  Mat c(a.rows, b.cols);
  matmul_acc(c, a, b);
  return c;
}

void matmul_acc(Mat& c, const Mat& a, const Mat& b) {
  require(a.cols == b.rows && c.rows == a.rows && c.cols == b.cols,
          "matmul_acc: shape mismatch");
  for (int i = 0; i < a.rows; ++i) {
    const double* arow = a.row(i);
    double* crow = c.row(i);
    for (int p = 0; p < a.cols; ++p) axpy(crow, arow[p], b.row(p), b.cols);
  }
}

Mat matmul_bt(const Mat& a, const Mat& b) {
  require(a.cols == b.cols, "matmul_bt: inner dimensions differ");
  Mat c(a.rows, b.rows);
  for (int i = 0; i < a.rows; ++i) {
    const double* arow = a.row(i);
    double* crow = c.row(i);
    for (int j = 0; j < b.rows; ++j) crow[j] = dot(arow, b.row(j), a.cols);
  }
  return c;
}

Mat matmul_at(const Mat& a, const Mat& b) {
  Mat c(a.cols, b.cols);
  matmul_at_acc(c, a, b);
  return c;
}

void matmul_at_acc(Mat& c, const Mat& a, const Mat& b) {
  require(a.rows == b.rows && c.rows == a.cols && c.cols == b.cols,
          "matmul_at_acc: shape mismatch");
  for (int i = 0; i < a.rows; ++i) {
    const double* arow = a.row(i);
    const double* brow = b.row(i);
    for (int p = 0; p < a.cols; ++p) axpy(c.row(p), arow[p], brow, b.cols);
  }
}

void outer_acc(Mat& c, const double* u, const double* v) {
  for (int i = 0; i < c.rows; ++i) axpy(c.row(i), u[i], v, c.cols);
}

Mat transpose(const Mat& a) {
  Mat t(a.cols, a.rows);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
  return t;
}

Vec matvec(const Mat& a, const Vec& x) {
  require(a.cols == static_cast<int>(x.size()), "matvec: dimension mismatch");
  Vec y(a.rows);
  for (int i = 0; i < a.rows; ++i) y[i] = dot(a.row(i), x.data(), a.cols);
  return y;
}

Vec matvec_t(const Mat& a, const Vec& x) {
  require(a.rows == static_cast<int>(x.size()), "matvec_t: dimension mismatch");
  Vec y(a.cols, 0.0);
  for (int i = 0; i < a.rows; ++i) axpy(y.data(), x[i], a.row(i), a.cols);
  return y;
}

double frobenius_norm(const Mat& m) {
  return std::sqrt(dot(m.data.data(), m.data.data(), static_cast<int>(m.data.size())));
}

double norm2(const Vec& v) { return norm2(v.data(), static_cast<int>(v.size())); }

double norm2(const double* v, int n) { return std::sqrt(dot(v, v, n)); }

bool all_finite(const Mat& m) {
  for (double x : m.data)
    if (!std::isfinite(x)) return false;
  return true;
}

bool all_finite(const Vec& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

Mat row_softmax(const Mat& m) {
  Mat out(m.rows, m.cols);
  for (int i = 0; i < m.rows; ++i) {
    const double* in = m.row(i);
    double* o = out.row(i);
    double mx = in[0];
    for (int j = 1; j < m.cols; ++j) mx = std::max(mx, in[j]);
    double sum = 0.0;
    for (int j = 0; j < m.cols; ++j) {
      o[j] = std::exp(in[j] - mx);
      sum += o[j];
    }
    double inv = 1.0 / sum;
    for (int j = 0; j < m.cols; ++j) o[j] *= inv;
  }
  return out;
}

// Cyclic-by-row Jacobi on a working copy. Quadratic convergence; the sweep
// limit is never reached at the sizes used here.
Vec sym_eigenvalues(const Mat& a) {
  require(a.rows == a.cols, "sym_eigenvalues: matrix not square");
  const int n = a.rows;
  Mat w = a;
  double fro2 = dot(w.data.data(), w.data.data(), static_cast<int>(w.data.size()));
  const double tol = 1e-28 * std::max(fro2, 1e-300);
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += w(p, q) * w(p, q);
    if (off <= tol) break;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        double apq = w(p, q);
        if (apq == 0.0) continue;
        double beta = (w(q, q) - w(p, p)) / (2.0 * apq);
        double t = (beta >= 0.0 ? 1.0 : -1.0) / (std::abs(beta) + std::sqrt(beta * beta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        w(p, p) -= t * apq;
        w(q, q) += t * apq;
        w(p, q) = w(q, p) = 0.0;
        for (int r = 0; r < n; ++r) {
          if (r == p || r == q) continue;
          double arp = w(r, p);
          double arq = w(r, q);
          w(r, p) = w(p, r) = c * arp - s * arq;
          w(r, q) = w(q, r) = s * arp + c * arq;
        }
      }
    }
  }
  Vec eig(n);
  for (int i = 0; i < n; ++i) eig[i] = w(i, i);
  std::sort(eig.begin(), eig.end());
  return eig;
}

Vec singular_values(const Mat& m) {
  require(m.rows > 0 && m.cols > 0, "singular_values: empty matrix");
  Mat gram = (m.rows >= m.cols) ? matmul_at(m, m) : matmul_bt(m, m);
  Vec eig = sym_eigenvalues(gram);
  Vec sv(eig.size());
  for (size_t i = 0; i < eig.size(); ++i)
    sv[eig.size() - 1 - i] = std::sqrt(std::max(0.0, eig[i]));
  return sv;
}

double min_singular_value(const Mat& m) {
  require(m.rows >= m.cols, "min_singular_value: rows < cols");
  Vec eig = sym_eigenvalues(matmul_at(m, m));
  return std::sqrt(std::max(0.0, eig.front()));
}

double spectral_norm(const Mat& m) {
  Mat gram = (m.rows >= m.cols) ? matmul_at(m, m) : matmul_bt(m, m);
  Vec eig = sym_eigenvalues(gram);
  return std::sqrt(std::max(0.0, eig.back()));
}

Vec least_squares(const Mat& x, const Vec& y) {
  const int t = x.rows, d = x.cols;
  require(t >= d && d >= 1, "least_squares: system is underdetermined");
  require(static_cast<int>(y.size()) == t, "least_squares: rhs length mismatch");

  Vec sv = singular_values(x);
  if (sv.front() <= 0.0 || sv.back() < 1e-10 * sv.front())
    throw std::domain_error("least_squares: degenerate design matrix");

  Mat a = x;
  Vec b = y;
  for (int k = 0; k < d; ++k) {
    double sigma = 0.0;
    for (int i = k; i < t; ++i) sigma += a(i, k) * a(i, k);
    sigma = std::sqrt(sigma);
    if (sigma == 0.0) throw std::domain_error("least_squares: rank-deficient column");
    double alpha = (a(k, k) >= 0.0) ? -sigma : sigma;
    Vec v(t - k);
    v[0] = a(k, k) - alpha;
    for (int i = k + 1; i < t; ++i) v[i - k] = a(i, k);
    double vtv = dot(v.data(), v.data(), t - k);
    a(k, k) = alpha;
    for (int i = k + 1; i < t; ++i) a(i, k) = 0.0;
    if (vtv == 0.0) continue;
    for (int j = k + 1; j < d; ++j) {
      double proj = 0.0;
      for (int i = k; i < t; ++i) proj += v[i - k] * a(i, j);
      proj *= 2.0 / vtv;
      for (int i = k; i < t; ++i) a(i, j) -= proj * v[i - k];
    }
    double projb = 0.0;
    for (int i = k; i < t; ++i) projb += v[i - k] * b[i];
    projb *= 2.0 / vtv;
    for (int i = k; i < t; ++i) b[i] -= projb * v[i - k];
  }
  Vec w(d);
  for (int k = d - 1; k >= 0; --k) {
    double s = b[k];
    for (int j = k + 1; j < d; ++j) s -= a(k, j) * w[j];
    w[k] = s / a(k, k);
  }
  return w;
}

}  // namespace icl::linalg
