#include "icl/par.hpp"

#include <algorithm>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace icl::par {

namespace {
int g_threads = 0;  // 0 = not set yet
}

int threads() {
  if (g_threads > 0) return g_threads;
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int n) { g_threads = std::max(1, n); }

double tree_sum(std::vector<double>&& v) {
  if (v.empty()) return 0.0;
  return tree_reduce(std::move(v), [](double& a, const double& b) { a += b; });
}

double tree_mean(std::vector<double>&& v) {
  if (v.empty()) throw std::invalid_argument("tree_mean: empty input");
  double n = static_cast<double>(v.size());
  return tree_sum(std::move(v)) / n;
}

double serial_sum(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

double serial_mean(const std::vector<double>& v) {
  if (v.empty()) throw std::invalid_argument("serial_mean: empty input");
  return serial_sum(v) / static_cast<double>(v.size());
}

}  // namespace icl::par
