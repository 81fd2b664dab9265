#pragma once

#include <utility>
#include <vector>

namespace icl::par {

/// Worker count used by parallel_for. Defaults to the OpenMP limit
/// (1 when built without OpenMP).
int threads();
void set_threads(int n);

#ifdef _OPENMP
namespace detail {
int clamp_threads(int n);
}
#endif

/// Data-parallel index loop. Iterations must be independent; results that
/// feed a reduction go through tree_reduce so the combination order is
/// fixed regardless of the thread count.
template <class F>
void parallel_for(int n, F&& f) {
#ifdef _OPENMP
  if (threads() > 1 && n > 1) {
#pragma omp parallel for schedule(static) num_threads(threads())
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
#endif
  for (int i = 0; i < n; ++i) f(i);
}

/// Pairwise-tree reduction with a fixed shape: level by level, item 2i is
/// combined with item 2i+1 (an odd tail is carried). The result is
/// bit-identical no matter how the items were produced.
template <class T, class Combine>
T tree_reduce(std::vector<T>&& items, Combine&& comb) {
  size_t len = items.size();
  while (len > 1) {
    size_t out = 0;
    for (size_t i = 0; i + 1 < len; i += 2) {
      comb(items[i], items[i + 1]);
      if (out != i) items[out] = std::move(items[i]);
      ++out;
    }
    if (len % 2) {
      items[out] = std::move(items[len - 1]);
      ++out;
    }
    len = out;
  }
  return std::move(items[0]);
}

double tree_sum(std::vector<double>&& v);
double tree_mean(std::vector<double>&& v);

/// Naive ascending-order sum, kept as the serial reference for tests and
/// benchmarks. Agrees with tree_sum up to summation-order rounding.
double serial_sum(const std::vector<double>& v);
double serial_mean(const std::vector<double>& v);

}  // namespace icl::par
