#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>

namespace respawn {

// The eight studied browser/machine features. Enumerator order matches the
// lexicographic order of the serialized names, which doubles as the canonical
// order for fingerprint digests.
enum class FeatureId : std::uint8_t {
  kAcceptLanguage = 0,
  kCanvas,
  kDnt,
  kGeolocation,
  kIp,
  kTimeZone,
  kUserAgent,
  kWebGl,
};

inline constexpr std::size_t kFeatureCount = 8;

inline constexpr std::array<FeatureId, kFeatureCount> kAllFeatures = {
    FeatureId::kAcceptLanguage, FeatureId::kCanvas,   FeatureId::kDnt,
    FeatureId::kGeolocation,    FeatureId::kIp,       FeatureId::kTimeZone,
    FeatureId::kUserAgent,      FeatureId::kWebGl};

// How a server can learn a feature: passively from request metadata, only by
// executing script in the page, or both.
enum class FeatureChannel : std::uint8_t {
  kPassiveOnly,
  kActiveOnly,
  kActiveAndPassive,
};

std::string_view feature_name(FeatureId id);
std::optional<FeatureId> feature_from_name(std::string_view name);
FeatureChannel feature_channel(FeatureId id);

inline std::size_t feature_index(FeatureId id) {
  return static_cast<std::size_t>(id);
}

inline bool is_active_only(FeatureId id) {
  return feature_channel(id) == FeatureChannel::kActiveOnly;
}

// True for features a server sees on every request it receives.
inline bool is_passively_visible(FeatureId id) {
  return feature_channel(id) != FeatureChannel::kActiveOnly;
}

// Value-type set of FeatureIds.
class FeatureSet {
 public:
  constexpr FeatureSet() = default;
  constexpr FeatureSet(std::initializer_list<FeatureId> ids) {
    for (FeatureId id : ids) insert(id);
  }

  static constexpr FeatureSet from_bits(std::uint8_t bits) {
    FeatureSet s;
    s.bits_ = bits;
    return s;
  }

  constexpr void insert(FeatureId id) { bits_ |= mask(id); }
  constexpr void erase(FeatureId id) { bits_ &= static_cast<std::uint8_t>(~mask(id)); }
  constexpr bool contains(FeatureId id) const { return (bits_ & mask(id)) != 0; }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr int size() const { return std::popcount(bits_); }
  constexpr std::uint8_t bits() const { return bits_; }

  constexpr bool subset_of(FeatureSet other) const {
    return (bits_ & ~other.bits_) == 0;
  }

  constexpr FeatureSet operator&(FeatureSet o) const { return from_bits(bits_ & o.bits_); }
  constexpr FeatureSet operator|(FeatureSet o) const { return from_bits(bits_ | o.bits_); }

  friend constexpr auto operator<=>(FeatureSet a, FeatureSet b) = default;

 private:
  static constexpr std::uint8_t mask(FeatureId id) {
    return static_cast<std::uint8_t>(1u << static_cast<unsigned>(id));
  }
  std::uint8_t bits_ = 0;
};

inline constexpr FeatureSet kActiveOnlyFeatures = {
    FeatureId::kCanvas, FeatureId::kGeolocation, FeatureId::kTimeZone,
    FeatureId::kWebGl};

inline constexpr FeatureSet kPassiveHeaderFeatures = {
    FeatureId::kIp, FeatureId::kUserAgent, FeatureId::kAcceptLanguage,
    FeatureId::kDnt};

// A total assignment of values to the eight features.
class FeatureVector {
 public:
  std::string& operator[](FeatureId id) { return values_[feature_index(id)]; }
  const std::string& operator[](FeatureId id) const {
    return values_[feature_index(id)];
  }

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;

 private:
  std::array<std::string, kFeatureCount> values_;
};

// Feature values one server could observe during one page load; an absent
// entry means the value was not obtainable on that visit.
class PartialFeatureVector {
 public:
  std::optional<std::string>& operator[](FeatureId id) {
    return values_[feature_index(id)];
  }
  const std::optional<std::string>& operator[](FeatureId id) const {
    return values_[feature_index(id)];
  }

  friend bool operator==(const PartialFeatureVector&,
                         const PartialFeatureVector&) = default;

 private:
  std::array<std::optional<std::string>, kFeatureCount> values_;
};

// Serialized set form: feature names joined with '+' in canonical order.
std::string feature_set_name(FeatureSet set);

}  // namespace respawn
