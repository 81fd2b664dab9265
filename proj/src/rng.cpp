#include "icl/rng.hpp"

#include <cmath>
#include <numbers>

namespace icl::rng {

uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

static uint64_t mix_seed(uint64_t root, uint64_t stream_id) {
  uint64_t s = root;
  uint64_t a = splitmix64(s);
  s ^= stream_id * 0x9e3779b97f4a7c15ULL;
  uint64_t b = splitmix64(s);
  return a ^ (b + 0x632be59bd9b4e019ULL);
}

Rng::Rng(uint64_t seed) : root_(seed), eng_(mix_seed(seed, 0x5eedULL)) {}

Rng Rng::fork(uint64_t stream_id) const { return Rng(mix_seed(root_, stream_id + 1)); }

uint64_t Rng::next_u64() { return eng_(); }

double Rng::uniform01() {
  // 53 high bits -> double in [0, 1)
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

double Rng::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform01();
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  double u2 = uniform01();
  double r = std::sqrt(-2.0 * std::log(u1));
  double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

double Rng::rademacher() { return (next_u64() & 1ULL) ? 1.0 : -1.0; }

}  // namespace icl::rng
