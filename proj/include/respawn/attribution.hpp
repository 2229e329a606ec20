#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "respawn/detection.hpp"
#include "respawn/features.hpp"

namespace respawn {

// Registrable domain (eTLD+1) of a hostname, resolved against a small bundled
// public-suffix table (see docs/formats.md); hostnames whose suffix is not
// listed fall back to treating the last label as the suffix. Idempotent.
// Throws DataError for empty or single-label names.
std::string etld_plus_one(std::string_view hostname);

// Header cookies are owned by their host; script cookies by the domain that
// served the script.
std::string resolve_owner(const CookieRecord& cookie);

struct HostOwnerOverlap {
  std::set<std::string> host_only;
  std::set<std::string> owner_only;
  std::set<std::string> both;
};

// Partition of the host and owner domains of feature-dependent cookies.
HostOwnerOverlap host_owner_overlap(const std::vector<DetectionResult>& results);

enum class RespawnerVerdict : std::uint8_t {
  kOwnerSelf,
  kCollaboration,
  kUnknown,
  kInapplicable,
};

std::string_view respawner_verdict_name(RespawnerVerdict v);

enum class InapplicableReason : std::uint8_t {
  kNoActiveFeatures,        // dependent set has no active-only feature
  kUnobservedActiveFeatures // some dependent active feature is not observable
};

struct RespawnerClass {
  RespawnerVerdict verdict = RespawnerVerdict::kInapplicable;
  std::set<std::string> collaborators;  // kCollaboration; never the owner
  FeatureSet missing_features;          // kUnknown
  InapplicableReason reason = InapplicableReason::kNoActiveFeatures;
  // kOwnerSelf where a non-owner domain also reads some dependent feature.
  bool shared_access = false;
};

// Three-case classification of who gathered the active features a cookie
// depends on: the owner itself, other scripts on the site, or nobody visible.
// Only applicable when the dependent active features all lie inside
// `observable_active`. Throws DataError on non-feature-dependent results.
RespawnerClass classify_respawner(
    const DetectionResult& result, const CrawlBundle& bundle,
    FeatureSet observable_active = {FeatureId::kCanvas, FeatureId::kGeolocation});

}  // namespace respawn
