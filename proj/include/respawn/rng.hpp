#pragma once

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

#include "respawn/hash.hpp"

namespace respawn {

// Deterministic splitmix64 stream with label-based splitting.
//
// Every random draw in the pipeline comes from one of these. Child streams
// derive from the parent's construction seed, not from its advancing state,
// so the seed tree is root -> ecosystem -> per-website -> per-(cookie,
// feature): any stage can be recomputed in isolation, and parallel workers
// draw exactly what a serial run would.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform in [0, bound) via rejection; bound must be positive.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t threshold = (0 - bound) % bound;  // 2^64 mod bound
    for (;;) {
      const std::uint64_t r = next();
      if (r >= threshold) return r % bound;
    }
  }

  Rng split(std::string_view label) const {
    return Rng(Fnv1a64().absorb_u64(seed_).absorb("\x1f").absorb(label).value());
  }

  Rng split(std::string_view label, std::uint64_t index) const {
    return split(label).split_index(index);
  }

  Rng split_index(std::uint64_t index) const {
    return Rng(Fnv1a64().absorb_u64(seed_).absorb_u64(index).value());
  }

  std::uint64_t seed() const { return seed_; }

  // Fisher-Yates with our own bounded draws; std::shuffle's draw sequence is
  // implementation-defined and would break cross-platform byte determinism.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
};

}  // namespace respawn
