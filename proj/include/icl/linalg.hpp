#pragma once

#include <cstddef>
#include <vector>

namespace icl::linalg {

using Vec = std::vector<double>;

/// Dense row-major matrix of 64-bit floats. Every routine in this project
/// works on these; shapes are checked at the call sites that can fail.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;  // row-major, rows*cols entries

  Mat() = default;
  Mat(int r, int c, double fill = 0.0);

  double& operator()(int i, int j) { return data[static_cast<size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return data[static_cast<size_t>(i) * cols + j]; }
  double* row(int i) { return data.data() + static_cast<size_t>(i) * cols; }
  const double* row(int i) const { return data.data() + static_cast<size_t>(i) * cols; }

  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
  static Mat identity(int n);
};

// Kernels. dot uses four independent accumulators so the compiler can
// vectorize without reassociating; the summation order is fixed in source.
double dot(const double* a, const double* b, int n);
void axpy(double* y, double a, const double* x, int n);  // y += a*x

Mat matmul(const Mat& a, const Mat& b);                  // a*b
void matmul_acc(Mat& c, const Mat& a, const Mat& b);     // c += a*b
Mat matmul_bt(const Mat& a, const Mat& b);               // a*b^T
Mat matmul_at(const Mat& a, const Mat& b);               // a^T*b
void matmul_at_acc(Mat& c, const Mat& a, const Mat& b);  // c += a^T*b
void outer_acc(Mat& c, const double* u, const double* v);  // c += u v^T
Mat transpose(const Mat& a);
Vec matvec(const Mat& a, const Vec& x);    // a*x
Vec matvec_t(const Mat& a, const Vec& x);  // a^T*x

double frobenius_norm(const Mat& m);
double norm2(const Vec& v);
double norm2(const double* v, int n);
bool all_finite(const Mat& m);
bool all_finite(const Vec& v);

/// Row-wise softmax with per-row max subtraction. Each output row is
/// nonnegative and sums to 1; shape is preserved.
Mat row_softmax(const Mat& m);

/// Eigenvalues of a symmetric matrix (cyclic Jacobi), ascending.
Vec sym_eigenvalues(const Mat& a);

/// All singular values, descending (via the Gram matrix of the smaller side).
Vec singular_values(const Mat& m);

/// Smallest singular value; requires rows >= cols.
double min_singular_value(const Mat& m);

/// Largest singular value.
double spectral_norm(const Mat& m);

/// Minimizer of ||X w - y||_2 by Householder QR. Rejects degenerate designs
/// (sigma_min < 1e-10 * sigma_max) and underdetermined systems.
Vec least_squares(const Mat& x, const Vec& y);

}  // namespace icl::linalg
