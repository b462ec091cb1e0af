#pragma once

#include <cstdint>
#include <cstddef>
#include <vector>

#include "lguided/matrix.hpp"

namespace lguided {

// xoshiro256++ seeded through splitmix64. Fixed algorithm, so a seed
// reproduces the same stream on every platform (the standard library's
// distributions carry no such guarantee). Single-owner: never share one
// instance between concurrent tasks.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform in [0, 1), 53-bit resolution.
  double uniform();

  // Uniform in [lo, hi).
  double uniform(double lo, double hi);

  // Uniform integer in [0, n). n must be > 0.
  std::size_t uniform_index(std::size_t n);

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint64_t state_[4];
};

// Entries i.i.d. uniform in [-scale, +scale]; deterministic given the rng state.
Matrix init_uniform(SeededRng& rng, std::size_t rows, std::size_t cols, double scale);

// In-place Fisher-Yates shuffle with a fixed visit order.
template <typename T>
void shuffle(SeededRng& rng, std::vector<T>& v) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = rng.uniform_index(i);
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace lguided
