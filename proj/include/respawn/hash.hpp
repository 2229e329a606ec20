#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace respawn {

// Incremental 64-bit FNV-1a. Fingerprint digests, minted cookie values and
// derived RNG seeds all go through this, so every artifact is reproducible
// across platforms and runs.
class Fnv1a64 {
 public:
  Fnv1a64& absorb(std::string_view bytes) {
    for (unsigned char c : bytes) {
      hash_ ^= c;
      hash_ *= kPrime;
    }
    return *this;
  }

  Fnv1a64& absorb_u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      hash_ ^= static_cast<unsigned char>(v >> (8 * i));
      hash_ *= kPrime;
    }
    return *this;
  }

  std::uint64_t value() const { return hash_; }

 private:
  static constexpr std::uint64_t kOffset = 0xcbf29ce484222325ull;
  static constexpr std::uint64_t kPrime = 0x100000001b3ull;
  std::uint64_t hash_ = kOffset;
};

inline std::uint64_t fnv1a64(std::string_view bytes) {
  return Fnv1a64().absorb(bytes).value();
}

// 16 lowercase hex digits.
inline std::string to_hex(std::uint64_t v) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kDigits[v & 0xf];
    v >>= 4;
  }
  return out;
}

}  // namespace respawn
