#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "respawn/crawler.hpp"
#include "respawn/rng.hpp"

namespace respawn {

// Respawn indicators per configuration for one cookie: bit i of a vector is 1
// iff test crawl i carried the (host, key) with a value different from the
// initial crawl's.
struct ObservationSet {
  std::string host;
  std::string key;
  std::map<FeatureId, std::vector<std::uint8_t>> spoof_obs;
  std::vector<std::uint8_t> control_obs;
};

enum class ExclusionReason : std::uint8_t {
  kNotUserSpecific,
  kAbsentFromUserSpecific,
  kNotReappearing,
  kNotInAllTestCrawls,
  kAllOne,
  kAllZero,
};

std::string_view exclusion_reason_name(ExclusionReason r);
std::optional<ExclusionReason> exclusion_reason_from_name(std::string_view name);

enum class DetectionStatus : std::uint8_t {
  kFeatureDependent,
  kNotFeatureDependent,
  kExcluded,
};

struct DetectionResult {
  std::string website;
  CookieRecord cookie;  // as seen in the initial crawl
  DetectionStatus status = DetectionStatus::kExcluded;
  ExclusionReason exclusion = ExclusionReason::kNotReappearing;

  // Populated when the permutation stage ran.
  FeatureSet features;  // { f : p_values[f] < alpha }
  std::map<FeatureId, double> p_values;
  // Optional extra verdict: every control crawl carried the initial value
  // back (the restoration check of the other protocol revision).
  bool control_restored = false;

  friend bool operator==(const DetectionResult&, const DetectionResult&) = default;
};

// Cookies whose full (host, key, value) triple occurs in both crawls, in
// initial-crawl order. Errors when the records are for different websites.
std::vector<CookieRecord> candidate_respawned(const CrawlRecord& initial,
                                              const CrawlRecord& reappearance);

struct UserSpecificFilter {
  std::vector<CookieRecord> kept;
  std::vector<std::pair<CookieRecord, ExclusionReason>> removed;
};

// Drops candidates that carry the identical triple on machine B
// (kNotUserSpecific) or whose (host, key) is absent from machine B's crawl
// (kAbsentFromUserSpecific, the conservative rule).
UserSpecificFilter filter_user_specific(const std::vector<CookieRecord>& candidates,
                                        const CrawlRecord& initial_a,
                                        const CrawlRecord& user_specific_b);

// nullopt when any crawl lacks the (host, key) entirely; such cookies are
// excluded as kNotInAllTestCrawls.
std::optional<std::vector<std::uint8_t>> observation_vector(
    const CookieRecord& initial_cookie, const std::vector<CrawlRecord>& crawls);

std::optional<ObservationSet> observation_set(const CrawlBundle& bundle,
                                              const CookieRecord& initial_cookie);

struct PermutationOutcome {
  double t0 = 0.0;  // mean(spoof) - mean(control)
  double p = 1.0;   // (1 + #{t* >= t0}) / (1 + n_perm)
  int spoof_ones = 0;
  int control_ones = 0;
};

// One-sided Monte-Carlo permutation test over the pooled bits. Ties count as
// extreme and the observed statistic joins the reference set, so p never
// reaches 0 and lies in [1/(n_perm+1), 1].
PermutationOutcome permutation_test(const std::vector<std::uint8_t>& spoof_obs,
                                    const std::vector<std::uint8_t>& control_obs,
                                    int n_perm, Rng& rng);

struct DetectionParams {
  double alpha = 0.05;
  int n_perm = 10000;
  std::uint64_t seed = 0;
};

// Full per-cookie pipeline over one bundle: candidate set, user-specific
// filter, observation vectors, All0/All1/absence exclusions, then one
// permutation test per feature against the shared control vector. RNG streams
// split per (cookie, feature) from the seed, so parallel and serial runs
// produce identical p-values.
std::vector<DetectionResult> detect_feature_dependencies(
    const CrawlBundle& bundle, const DetectionParams& params);

}  // namespace respawn
