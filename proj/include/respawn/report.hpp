#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "respawn/attribution.hpp"
#include "respawn/detection.hpp"

namespace respawn {

// One cell of the consent-requirement table keyed by purpose, duration class
// and party context.
struct ConsentRule {
  CookiePurpose purpose = CookiePurpose::kUnknown;
  bool persistent = false;
  CookieParty party = CookieParty::kFirstParty;
  bool requires_consent = false;
};

// First-party cookies need consent only for targeting; third-party session
// cookies for targeting, performance and strictly-necessary; third-party
// persistent cookies for all four purposes.
bool consent_required(CookiePurpose purpose, bool persistent, CookieParty party);

// All 16 cells (4 purposes x 2 durations x 2 contexts) in a fixed order.
std::array<ConsentRule, 16> consent_rule_table();

enum class ConsentOutcome : std::uint8_t {
  kRequiresConsent,
  kExempt,
  kUnclassifiable,  // purpose unknown
};

struct ConsentClassification {
  ConsentOutcome outcome = ConsentOutcome::kUnclassifiable;
  ConsentRule rule;  // valid unless unclassifiable
};

ConsentClassification consent_classification(const CookieRecord& cookie);

struct FeatureUsageStats {
  std::map<FeatureId, int> per_feature;  // dependent results containing f
  std::map<FeatureSet, int> per_set;     // exact dependent-set occurrences
};

FeatureUsageStats feature_usage_stats(const std::vector<DetectionResult>& results);

// Third-party feature-dependent cookie hosts ranked by the number of distinct
// websites they were detected on; ties break lexicographically.
std::vector<std::pair<std::string, int>> third_party_ranking(
    const std::vector<DetectionResult>& results);

struct CrossSiteGroup {
  std::string owner;
  std::string key;
  std::string value;
  std::vector<std::string> websites;  // sorted, always >= 2
};

// First-party feature-dependent cookies with one (owner, key, value) spanning
// several websites; ordered by descending website count, then owner/key/value.
std::vector<CrossSiteGroup> first_party_cross_site(
    const std::vector<DetectionResult>& results);

// Static stand-in for rank / category / country lookups.
struct SiteMetadata {
  struct Entry {
    std::optional<int> rank;
    std::optional<std::string> category;
    std::optional<std::string> country;
  };
  std::map<std::string, Entry> entries;
};

// Offline stand-in for the purpose database: cookie key -> purpose. Fills in
// purposes only for cookies that carry none of their own.
using PurposeOverrides = std::map<std::string, CookiePurpose>;

void apply_purpose_overrides(std::vector<DetectionResult>& results,
                             const PurposeOverrides& overrides);

struct FunnelRow {
  int cookies = 0;
  int websites = 0;
};

struct ConsentTableEntry {
  std::string website;
  std::string host;
  std::string key;
  std::string owner;
  CookieParty party = CookieParty::kFirstParty;
  bool persistent = false;
  CookiePurpose purpose = CookiePurpose::kUnknown;
  ConsentOutcome outcome = ConsentOutcome::kUnclassifiable;
};

struct RankBucket {
  std::string label;
  int websites = 0;
  int owners = 0;
};

struct Report {
  std::string run_id;
  double alpha = 0.05;
  int n_perm = 10000;

  FunnelRow collected;
  FunnelRow reappearing;
  FunnelRow user_specific;
  FunnelRow feature_dependent;
  std::map<std::string, int> exclusions;  // reason name -> count, all reasons

  std::map<FeatureId, int> per_feature;
  std::map<FeatureSet, int> per_set;
  HostOwnerOverlap overlap;
  std::map<std::string, int> respawner_classes;  // verdict name -> count

  std::vector<std::pair<std::string, int>> third_party;
  std::vector<CrossSiteGroup> cross_site;

  std::vector<ConsentTableEntry> consent_entries;  // feature-dependent cookies
  int consent_required_count = 0;
  int consent_exempt_count = 0;
  int consent_unclassifiable_count = 0;

  bool has_metadata = false;
  std::array<RankBucket, 3> rank_buckets;  // 0-1k, 1k-10k, 10k+
  std::map<std::string, int> category_counts;       // respawning sites
  std::map<std::string, int> owner_country_counts;  // respawned-cookie owners

  std::vector<std::string> limitations;
};

struct ReportContext {
  std::string run_id;
  double alpha = 0.05;
  int n_perm = 10000;
};

Report build_report(const std::vector<DetectionResult>& results,
                    const std::vector<CrawlBundle>& bundles,
                    const std::optional<SiteMetadata>& metadata,
                    const ReportContext& context);

}  // namespace respawn
