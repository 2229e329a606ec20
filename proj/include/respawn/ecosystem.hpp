#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "respawn/features.hpp"
#include "respawn/rng.hpp"

namespace respawn {

using FingerprintId = std::uint64_t;

// Active features missing from a request hash as this token, so a tracker
// that never receives an active feature still produces a stable fingerprint.
inline constexpr std::string_view kUnobservedValue = "∅";

enum class DeliveryKind : std::uint8_t { kHttpHeader, kEmbeddedScript };
enum class ValuePolicy : std::uint8_t { kFingerprintDerived, kRandomPerFingerprint };

enum class CookiePurpose : std::uint8_t {
  kStrictlyNecessary,
  kPerformance,
  kFunctionality,
  kTargeting,
  kUnknown,
};

std::string_view purpose_name(CookiePurpose p);
std::optional<CookiePurpose> purpose_from_name(std::string_view name);

struct CookieDuration {
  bool persistent = false;
  int lifetime_days = 0;  // meaningful when persistent

  static CookieDuration session() { return {}; }
  static CookieDuration persistent_for(int days) { return {true, days}; }

  friend bool operator==(const CookieDuration&, const CookieDuration&) = default;
};

// One respawning (or plain cookie-setting) server.
struct TrackerSpec {
  std::string domain;       // registrable domain
  FeatureSet feature_subset;
  DeliveryKind delivery = DeliveryKind::kHttpHeader;
  std::string script_path;  // embedded-script delivery only
  ValuePolicy value_policy = ValuePolicy::kFingerprintDerived;
  double noise_prob = 0.0;  // chance of minting a fresh value over the match
  std::string cookie_key;
  CookieDuration duration;
  CookiePurpose purpose = CookiePurpose::kUnknown;

  // Folds a stable machine attribute outside the eight studied features into
  // the fingerprint; such cookies survive every spoofing crawl unchanged.
  bool use_unstudied_feature = false;

  // When > 0, the matching-table key is salted with visit_count / N, which
  // models identifiers that rotate over time.
  std::uint32_t rotate_every_visits = 0;
};

// Fingerprint -> cookie value store of one tracker. Entries are only ever
// added or overwritten, never dropped.
struct MatchingTable {
  std::map<FingerprintId, std::string> entries;
};

// Per-run server-side state of one tracker.
struct TrackerState {
  MatchingTable table;
  std::uint64_t visits = 0;
  Rng rng;

  explicit TrackerState(Rng stream) : rng(stream) {}
};

enum class ResourceKind : std::uint8_t {
  kFirstPartyScript,
  kThirdPartyScript,
  kThirdPartyIframeScript,
  kBeacon,
};

struct Resource {
  ResourceKind kind = ResourceKind::kBeacon;
  std::string host;         // third-party script / iframe / beacon host
  std::string path;         // first-party script path
  FeatureSet accesses;      // active-only features the script reads
  FeatureSet covert_accesses;  // beacon only: values the tracker obtains
                               // without a logged JavaScript call
};

struct WebsiteSpec {
  std::string domain;  // registrable domain
  std::vector<Resource> resources;
};

struct Ecosystem {
  std::uint64_t seed = 0;
  std::vector<WebsiteSpec> websites;
  std::map<std::string, TrackerSpec> trackers;  // keyed by registrable domain

  const WebsiteSpec* find_website(std::string_view domain) const;
};

// Checks cross-references, domain shapes and numeric ranges; throws
// ConfigError naming the offending entity.
void validate_ecosystem(const Ecosystem& eco);

// What one tracker receives during one page load.
struct TrackerRequest {
  PartialFeatureVector features;  // passive values plus observed active ones
  std::optional<std::string> unstudied;
  std::optional<std::pair<std::string, std::string>> attached_cookie;  // key, value
};

struct ServedCookie {
  std::string key;
  std::string value;
  CookieDuration duration;
};

// Stable digest of the feature_subset-restricted values, joined in canonical
// feature-name order; missing actives hash as kUnobservedValue.
FingerprintId compute_fingerprint(const TrackerSpec& spec,
                                  const PartialFeatureVector& observed,
                                  const std::optional<std::string>& unstudied =
                                      std::nullopt);

// One tracker transaction: fingerprint the request, then either record an
// attached cookie against the new fingerprint (no Set-Cookie), respawn the
// matched value, or mint and store a fresh one.
std::optional<ServedCookie> serve_request(const TrackerSpec& spec,
                                          TrackerState& state,
                                          const TrackerRequest& request);

}  // namespace respawn
