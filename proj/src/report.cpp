#include "respawn/report.hpp"

#include <algorithm>
#include <tuple>

#include "respawn/errors.hpp"

namespace respawn {

bool consent_required(CookiePurpose purpose, bool persistent, CookieParty party) {
  if (purpose == CookiePurpose::kUnknown) {
    throw ConfigError("consent_required is undefined for unknown purposes");
  }
  if (party == CookieParty::kFirstParty) {
    return purpose == CookiePurpose::kTargeting;
  }
  if (!persistent) {
    return purpose == CookiePurpose::kTargeting ||
           purpose == CookiePurpose::kPerformance ||
           purpose == CookiePurpose::kStrictlyNecessary;
  }
  return true;  // third-party persistent: all four purposes
}

std::array<ConsentRule, 16> consent_rule_table() {
  std::array<ConsentRule, 16> table;
  std::size_t i = 0;
  for (CookieParty party : {CookieParty::kFirstParty, CookieParty::kThirdParty}) {
    for (bool persistent : {false, true}) {
      for (CookiePurpose purpose :
           {CookiePurpose::kStrictlyNecessary, CookiePurpose::kPerformance,
            CookiePurpose::kFunctionality, CookiePurpose::kTargeting}) {
        table[i++] = {purpose, persistent, party,
                      consent_required(purpose, persistent, party)};
      }
    }
  }
  return table;
}

ConsentClassification consent_classification(const CookieRecord& cookie) {
  ConsentClassification out;
  if (cookie.purpose == CookiePurpose::kUnknown) {
    out.outcome = ConsentOutcome::kUnclassifiable;
    return out;
  }
  out.rule = {cookie.purpose, cookie.duration.persistent, cookie.party,
              consent_required(cookie.purpose, cookie.duration.persistent,
                               cookie.party)};
  out.outcome = out.rule.requires_consent ? ConsentOutcome::kRequiresConsent
                                          : ConsentOutcome::kExempt;
  return out;
}

FeatureUsageStats feature_usage_stats(const std::vector<DetectionResult>& results) {
  FeatureUsageStats stats;
  for (const DetectionResult& r : results) {
    if (r.status != DetectionStatus::kFeatureDependent) continue;
    for (FeatureId f : kAllFeatures) {
      if (r.features.contains(f)) ++stats.per_feature[f];
    }
    ++stats.per_set[r.features];
  }
  return stats;
}

std::vector<std::pair<std::string, int>> third_party_ranking(
    const std::vector<DetectionResult>& results) {
  std::map<std::string, std::set<std::string>> websites_by_host;
  for (const DetectionResult& r : results) {
    if (r.status != DetectionStatus::kFeatureDependent) continue;
    if (r.cookie.party != CookieParty::kThirdParty) continue;
    websites_by_host[r.cookie.host].insert(r.website);
  }
  std::vector<std::pair<std::string, int>> out;
  out.reserve(websites_by_host.size());
  for (const auto& [host, sites] : websites_by_host) {
    out.emplace_back(host, static_cast<int>(sites.size()));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return out;
}

std::vector<CrossSiteGroup> first_party_cross_site(
    const std::vector<DetectionResult>& results) {
  std::map<std::tuple<std::string, std::string, std::string>,
           std::set<std::string>>
      groups;
  for (const DetectionResult& r : results) {
    if (r.status != DetectionStatus::kFeatureDependent) continue;
    if (r.cookie.party != CookieParty::kFirstParty) continue;
    groups[{resolve_owner(r.cookie), r.cookie.key, r.cookie.value}].insert(
        r.website);
  }
  std::vector<CrossSiteGroup> out;
  for (const auto& [key, sites] : groups) {
    if (sites.size() < 2) continue;
    CrossSiteGroup g;
    g.owner = std::get<0>(key);
    g.key = std::get<1>(key);
    g.value = std::get<2>(key);
    g.websites.assign(sites.begin(), sites.end());
    out.push_back(std::move(g));
  }
  std::sort(out.begin(), out.end(), [](const CrossSiteGroup& a,
                                       const CrossSiteGroup& b) {
    if (a.websites.size() != b.websites.size()) {
      return a.websites.size() > b.websites.size();
    }
    return std::tie(a.owner, a.key, a.value) < std::tie(b.owner, b.key, b.value);
  });
  return out;
}

void apply_purpose_overrides(std::vector<DetectionResult>& results,
                             const PurposeOverrides& overrides) {
  for (DetectionResult& r : results) {
    if (r.cookie.purpose != CookiePurpose::kUnknown) continue;
    auto it = overrides.find(r.cookie.key);
    if (it != overrides.end()) r.cookie.purpose = it->second;
  }
}

namespace {

bool survives_reappearance(const DetectionResult& r) {
  return !(r.status == DetectionStatus::kExcluded &&
           r.exclusion == ExclusionReason::kNotReappearing);
}

bool survives_user_specific(const DetectionResult& r) {
  if (!survives_reappearance(r)) return false;
  if (r.status != DetectionStatus::kExcluded) return true;
  return r.exclusion != ExclusionReason::kNotUserSpecific &&
         r.exclusion != ExclusionReason::kAbsentFromUserSpecific;
}

}  // namespace

Report build_report(const std::vector<DetectionResult>& results,
                    const std::vector<CrawlBundle>& bundles,
                    const std::optional<SiteMetadata>& metadata,
                    const ReportContext& context) {
  Report report;
  report.run_id = context.run_id;
  report.alpha = context.alpha;
  report.n_perm = context.n_perm;

  std::set<std::string> collected_sites, reappearing_sites, specific_sites,
      dependent_sites;
  for (const DetectionResult& r : results) {
    ++report.collected.cookies;
    collected_sites.insert(r.website);
    if (survives_reappearance(r)) {
      ++report.reappearing.cookies;
      reappearing_sites.insert(r.website);
    }
    if (survives_user_specific(r)) {
      ++report.user_specific.cookies;
      specific_sites.insert(r.website);
    }
    if (r.status == DetectionStatus::kFeatureDependent) {
      ++report.feature_dependent.cookies;
      dependent_sites.insert(r.website);
    }
    if (r.status == DetectionStatus::kExcluded) {
      ++report.exclusions[std::string(exclusion_reason_name(r.exclusion))];
    }
  }
  for (ExclusionReason reason :
       {ExclusionReason::kNotUserSpecific, ExclusionReason::kAbsentFromUserSpecific,
        ExclusionReason::kNotReappearing, ExclusionReason::kNotInAllTestCrawls,
        ExclusionReason::kAllOne, ExclusionReason::kAllZero}) {
    report.exclusions.try_emplace(std::string(exclusion_reason_name(reason)), 0);
  }
  report.collected.websites = static_cast<int>(collected_sites.size());
  report.reappearing.websites = static_cast<int>(reappearing_sites.size());
  report.user_specific.websites = static_cast<int>(specific_sites.size());
  report.feature_dependent.websites = static_cast<int>(dependent_sites.size());

  const FeatureUsageStats stats = feature_usage_stats(results);
  report.per_feature = stats.per_feature;
  report.per_set = stats.per_set;
  for (FeatureId f : kAllFeatures) report.per_feature.try_emplace(f, 0);

  report.overlap = host_owner_overlap(results);
  report.third_party = third_party_ranking(results);
  report.cross_site = first_party_cross_site(results);

  std::map<std::string, const CrawlBundle*> bundle_by_site;
  for (const CrawlBundle& b : bundles) bundle_by_site.emplace(b.website, &b);

  for (std::string_view verdict : {"owner_self", "collaboration", "unknown",
                                   "inapplicable"}) {
    report.respawner_classes.try_emplace(std::string(verdict), 0);
  }
  for (const DetectionResult& r : results) {
    if (r.status != DetectionStatus::kFeatureDependent) continue;
    auto it = bundle_by_site.find(r.website);
    if (it == bundle_by_site.end()) {
      throw DataError("no bundle for website '" + r.website +
                      "' named by the detection results");
    }
    const RespawnerClass cls = classify_respawner(r, *it->second);
    ++report.respawner_classes[std::string(respawner_verdict_name(cls.verdict))];

    ConsentTableEntry entry;
    entry.website = r.website;
    entry.host = r.cookie.host;
    entry.key = r.cookie.key;
    entry.owner = resolve_owner(r.cookie);
    entry.party = r.cookie.party;
    entry.persistent = r.cookie.duration.persistent;
    entry.purpose = r.cookie.purpose;
    entry.outcome = consent_classification(r.cookie).outcome;
    report.consent_entries.push_back(std::move(entry));
    switch (report.consent_entries.back().outcome) {
      case ConsentOutcome::kRequiresConsent: ++report.consent_required_count; break;
      case ConsentOutcome::kExempt: ++report.consent_exempt_count; break;
      case ConsentOutcome::kUnclassifiable: ++report.consent_unclassifiable_count; break;
    }
  }
  std::sort(report.consent_entries.begin(), report.consent_entries.end(),
            [](const ConsentTableEntry& a, const ConsentTableEntry& b) {
              return std::tie(a.website, a.host, a.key) <
                     std::tie(b.website, b.host, b.key);
            });

  report.limitations = {
      "p-values are not corrected for testing eight features against one "
      "shared control vector",
  };

  if (metadata) {
    report.has_metadata = true;
    report.rank_buckets = {{{"0-1k", 0, 0}, {"1k-10k", 0, 0}, {"10k+", 0, 0}}};
    std::array<std::set<std::string>, 3> bucket_owners;
    std::map<std::string, std::set<std::string>> owners_by_site;
    for (const DetectionResult& r : results) {
      if (r.status != DetectionStatus::kFeatureDependent) continue;
      owners_by_site[r.website].insert(resolve_owner(r.cookie));
    }
    for (const auto& [site, owners] : owners_by_site) {
      auto meta = metadata->entries.find(site);
      if (meta != metadata->entries.end() && meta->second.rank) {
        const int rank = *meta->second.rank;
        const std::size_t bucket = rank <= 1000 ? 0 : rank <= 10000 ? 1 : 2;
        ++report.rank_buckets[bucket].websites;
        bucket_owners[bucket].insert(owners.begin(), owners.end());
      }
      if (meta != metadata->entries.end() && meta->second.category) {
        ++report.category_counts[*meta->second.category];
      }
      for (const std::string& owner : owners) {
        auto owner_meta = metadata->entries.find(owner);
        if (owner_meta != metadata->entries.end() && owner_meta->second.country) {
          ++report.owner_country_counts[*owner_meta->second.country];
        }
      }
    }
    for (std::size_t i = 0; i < 3; ++i) {
      report.rank_buckets[i].owners = static_cast<int>(bucket_owners[i].size());
    }
  }

  return report;
}

}  // namespace respawn
