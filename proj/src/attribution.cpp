#include "respawn/attribution.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <map>

#include "respawn/errors.hpp"

namespace respawn {

namespace {

// Minimal public-suffix subset, enough for the simulated domains and the
// common real-world ones appearing in analyses. Longest listed suffix wins.
constexpr std::array<std::string_view, 34> kPublicSuffixes = {
    "com",    "net",    "org",    "edu",   "gov",    "mil",   "int",
    "io",     "ai",     "app",    "dev",   "info",   "biz",   "xyz",
    "uk",     "co.uk",  "org.uk", "ac.uk", "gov.uk", "fr",    "de",
    "nl",     "ru",     "jp",     "co.jp", "cn",     "com.cn", "au",
    "com.au", "br",     "com.br", "us",    "example", "test",
};

bool is_public_suffix(std::string_view labels) {
  return std::find(kPublicSuffixes.begin(), kPublicSuffixes.end(), labels) !=
         kPublicSuffixes.end();
}

}  // namespace

std::string etld_plus_one(std::string_view hostname) {
  std::string name(hostname);
  std::transform(name.begin(), name.end(), name.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  while (!name.empty() && name.back() == '.') name.pop_back();

  std::vector<std::string_view> labels;
  std::string_view rest = name;
  while (!rest.empty()) {
    const std::size_t dot = rest.find('.');
    if (dot == std::string_view::npos) {
      labels.push_back(rest);
      break;
    }
    if (dot == 0) throw DataError("malformed hostname '" + std::string(hostname) + "'");
    labels.push_back(rest.substr(0, dot));
    rest = rest.substr(dot + 1);
  }
  if (labels.size() < 2 || is_public_suffix(name)) {
    throw DataError("hostname '" + std::string(hostname) +
                    "' has no registrable domain");
  }

  // Longest known suffix; unknown TLDs fall back to the last label.
  std::size_t suffix_labels = 1;
  for (std::size_t take = labels.size() - 1; take >= 1; --take) {
    std::string candidate;
    for (std::size_t i = labels.size() - take; i < labels.size(); ++i) {
      if (!candidate.empty()) candidate += '.';
      candidate += labels[i];
    }
    if (is_public_suffix(candidate)) {
      suffix_labels = take;
      break;
    }
  }

  std::string out;
  for (std::size_t i = labels.size() - suffix_labels - 1; i < labels.size(); ++i) {
    if (!out.empty()) out += '.';
    out += labels[i];
  }
  return out;
}

std::string resolve_owner(const CookieRecord& cookie) {
  if (cookie.set_mechanism.kind == SetMechanismKind::kHeader) {
    return etld_plus_one(cookie.host);
  }
  return etld_plus_one(cookie.set_mechanism.script_host);
}

HostOwnerOverlap host_owner_overlap(const std::vector<DetectionResult>& results) {
  std::set<std::string> hosts;
  std::set<std::string> owners;
  for (const DetectionResult& r : results) {
    if (r.status != DetectionStatus::kFeatureDependent) continue;
    hosts.insert(r.cookie.host);
    owners.insert(resolve_owner(r.cookie));
  }
  HostOwnerOverlap out;
  for (const std::string& h : hosts) {
    (owners.contains(h) ? out.both : out.host_only).insert(h);
  }
  for (const std::string& o : owners) {
    if (!hosts.contains(o)) out.owner_only.insert(o);
  }
  return out;
}

std::string_view respawner_verdict_name(RespawnerVerdict v) {
  switch (v) {
    case RespawnerVerdict::kOwnerSelf: return "owner_self";
    case RespawnerVerdict::kCollaboration: return "collaboration";
    case RespawnerVerdict::kUnknown: return "unknown";
    case RespawnerVerdict::kInapplicable: return "inapplicable";
  }
  return "";
}

RespawnerClass classify_respawner(const DetectionResult& result,
                                  const CrawlBundle& bundle,
                                  FeatureSet observable_active) {
  if (result.status != DetectionStatus::kFeatureDependent) {
    throw DataError("classify_respawner requires a feature-dependent result");
  }

  RespawnerClass out;
  const FeatureSet dependent_active = result.features & kActiveOnlyFeatures;
  if (dependent_active.empty()) {
    out.verdict = RespawnerVerdict::kInapplicable;
    out.reason = InapplicableReason::kNoActiveFeatures;
    return out;
  }
  if (!dependent_active.subset_of(observable_active)) {
    out.verdict = RespawnerVerdict::kInapplicable;
    out.reason = InapplicableReason::kUnobservedActiveFeatures;
    return out;
  }

  std::map<FeatureId, std::set<std::string>> accessed_by;
  auto collect = [&](const CrawlRecord& rec) {
    for (const JsAccessEvent& ev : rec.js_access_events) {
      accessed_by[ev.feature].insert(etld_plus_one(ev.script_host));
    }
  };
  collect(bundle.initial);
  collect(bundle.user_specific);
  collect(bundle.reappearance);
  for (const auto& [f, crawls] : bundle.spoof) {
    for (const CrawlRecord& rec : crawls) collect(rec);
  }
  for (const CrawlRecord& rec : bundle.control) collect(rec);

  const std::string owner = resolve_owner(result.cookie);
  bool owner_covers_all = true;
  bool events_cover_all = true;
  for (FeatureId f : kAllFeatures) {
    if (!dependent_active.contains(f)) continue;
    auto it = accessed_by.find(f);
    if (it == accessed_by.end() || it->second.empty()) {
      events_cover_all = false;
      owner_covers_all = false;
      out.missing_features.insert(f);
      continue;
    }
    if (!it->second.contains(owner)) {
      owner_covers_all = false;
      for (const std::string& d : it->second) out.collaborators.insert(d);
    } else if (it->second.size() > 1) {
      out.shared_access = true;
    }
  }

  if (owner_covers_all) {
    out.verdict = RespawnerVerdict::kOwnerSelf;
    out.collaborators.clear();
    out.missing_features = {};
    return out;
  }
  if (events_cover_all) {
    out.verdict = RespawnerVerdict::kCollaboration;
    out.missing_features = {};
    out.shared_access = false;
    return out;
  }
  out.verdict = RespawnerVerdict::kUnknown;
  out.collaborators.clear();
  out.shared_access = false;
  return out;
}

}  // namespace respawn
