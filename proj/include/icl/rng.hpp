#pragma once

#include <cstdint>
#include <random>

namespace icl::rng {

uint64_t splitmix64(uint64_t& state);

/// Seedable, splittable stream of 64-bit randomness. Child streams are
/// derived from the parent's root seed and a stream id, never from its draw
/// position, so extending one stream cannot perturb another. The engine is
/// std::mt19937_64 (standardized output sequence); all distribution
/// transforms are done here so results are identical across platforms.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  /// Independent child stream for a fixed purpose id.
  Rng fork(uint64_t stream_id) const;

  uint64_t next_u64();
  double uniform01();                       // [0, 1)
  double uniform(double lo, double hi);     // [lo, hi)
  double gaussian();                        // N(0, 1), Box-Muller
  double rademacher();                      // -1 or +1, equiprobable

 private:
  uint64_t root_;
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace icl::rng
