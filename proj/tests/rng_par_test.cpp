#include <doctest.h>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <cmath>

#include "icl/par.hpp"
#include "icl/rng.hpp"

using namespace icl;

TEST_CASE("rng determinism and stream independence") {
  rng::Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  // forking depends on the root seed, not on the parent's draw position
  rng::Rng parent1(7), parent2(7);
  (void)parent1.next_u64();
  (void)parent1.gaussian();
  rng::Rng c1 = parent1.fork(3);
  rng::Rng c2 = parent2.fork(3);
  for (int i = 0; i < 50; ++i) CHECK(c1.next_u64() == c2.next_u64());

  // sibling streams differ
  rng::Rng s1 = parent2.fork(1);
  rng::Rng s2 = parent2.fork(2);
  CHECK(s1.next_u64() != s2.next_u64());
}

TEST_CASE("rng gaussian moments") {
  rng::Rng r(5);
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    double g = r.gaussian();
    sum += g;
    sum2 += g * g;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(sum2 / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("tree reduction is fixed and matches the serial reference") {
  std::vector<double> v;
  for (int i = 1; i <= 1000; ++i) v.push_back(i * 0.1);
  double serial = par::serial_sum(v);
  std::vector<double> v2 = v;
  double tree = par::tree_sum(std::move(v2));
  CHECK(tree == doctest::Approx(serial).epsilon(1e-13));

  // integer-valued inputs reduce exactly
  std::vector<double> ints;
  for (int i = 1; i <= 777; ++i) ints.push_back(i);
  CHECK(par::tree_sum(std::move(ints)) == 777.0 * 778.0 / 2.0);
}

TEST_CASE("parallel_for visits every index once, any thread count") {
  for (int threads : {1, 3}) {
    par::set_threads(threads);
    std::vector<int> hits(1000, 0);
    par::parallel_for(1000, [&](int i) { hits[i] += 1; });
    for (int h : hits) CHECK(h == 1);
  }
  par::set_threads(1);
}

TEST_CASE("tree mean identical across thread counts") {
  auto compute = [](int threads) {
    par::set_threads(threads);
    std::vector<double> items(309);
    par::parallel_for(309, [&](int i) { items[i] = std::sin(i * 0.37) * 1e-3 + i; });
    return par::tree_mean(std::move(items));
  };
  double m1 = compute(1);
  double m3 = compute(3);
  par::set_threads(1);
  CHECK(m1 == m3);  // bit-identical
}
