#include "respawn/ecosystem.hpp"

#include <set>

#include "respawn/attribution.hpp"
#include "respawn/errors.hpp"
#include "respawn/hash.hpp"

namespace respawn {

std::string_view purpose_name(CookiePurpose p) {
  switch (p) {
    case CookiePurpose::kStrictlyNecessary: return "strictly_necessary";
    case CookiePurpose::kPerformance: return "performance";
    case CookiePurpose::kFunctionality: return "functionality";
    case CookiePurpose::kTargeting: return "targeting";
    case CookiePurpose::kUnknown: return "unknown";
  }
  return "unknown";
}

std::optional<CookiePurpose> purpose_from_name(std::string_view name) {
  for (CookiePurpose p :
       {CookiePurpose::kStrictlyNecessary, CookiePurpose::kPerformance,
        CookiePurpose::kFunctionality, CookiePurpose::kTargeting,
        CookiePurpose::kUnknown}) {
    if (purpose_name(p) == name) return p;
  }
  return std::nullopt;
}

const WebsiteSpec* Ecosystem::find_website(std::string_view domain) const {
  for (const WebsiteSpec& site : websites) {
    if (site.domain == domain) return &site;
  }
  return nullptr;
}

namespace {

void require_registrable(const std::string& domain, const std::string& what) {
  if (etld_plus_one(domain) != domain) {
    throw ConfigError(what + " '" + domain + "' is not a registrable domain");
  }
}

}  // namespace

void validate_ecosystem(const Ecosystem& eco) {
  std::set<std::string> seen_sites;
  for (const auto& [domain, spec] : eco.trackers) {
    if (domain != spec.domain) {
      throw ConfigError("tracker map key '" + domain +
                        "' does not match tracker domain '" + spec.domain + "'");
    }
    require_registrable(spec.domain, "tracker domain");
    if (spec.noise_prob < 0.0 || spec.noise_prob > 1.0) {
      throw ConfigError("tracker '" + spec.domain + "' has noise_prob " +
                        std::to_string(spec.noise_prob) +
                        " outside [0, 1]");
    }
    if (spec.feature_subset.empty() && !spec.use_unstudied_feature) {
      throw ConfigError("tracker '" + spec.domain +
                        "' has an empty feature subset");
    }
    if (spec.cookie_key.empty()) {
      throw ConfigError("tracker '" + spec.domain + "' has an empty cookie key");
    }
    if (spec.delivery == DeliveryKind::kEmbeddedScript && spec.script_path.empty()) {
      throw ConfigError("tracker '" + spec.domain +
                        "' delivers via script but has no script_path");
    }
  }

  for (const WebsiteSpec& site : eco.websites) {
    require_registrable(site.domain, "website domain");
    if (!seen_sites.insert(site.domain).second) {
      throw ConfigError("duplicate website domain '" + site.domain + "'");
    }
    for (const Resource& res : site.resources) {
      const bool is_script = res.kind == ResourceKind::kFirstPartyScript ||
                             res.kind == ResourceKind::kThirdPartyScript ||
                             res.kind == ResourceKind::kThirdPartyIframeScript;
      if (is_script && !res.accesses.subset_of(kActiveOnlyFeatures)) {
        throw ConfigError("script resource on '" + site.domain +
                          "' declares non-active feature accesses");
      }
      if (res.kind == ResourceKind::kBeacon &&
          !res.covert_accesses.subset_of(kActiveOnlyFeatures)) {
        throw ConfigError("beacon on '" + site.domain +
                          "' declares non-active covert accesses");
      }
      if (res.kind != ResourceKind::kFirstPartyScript &&
          res.kind != ResourceKind::kBeacon && res.host.empty()) {
        throw ConfigError("third-party resource on '" + site.domain +
                          "' has no host");
      }
      if (res.kind == ResourceKind::kBeacon && res.host.empty()) {
        throw ConfigError("beacon on '" + site.domain + "' has no host");
      }
      if (res.kind != ResourceKind::kFirstPartyScript) {
        const std::string owner = etld_plus_one(res.host);
        if (!eco.trackers.contains(owner)) {
          throw ConfigError("website '" + site.domain +
                            "' references undeclared tracker '" + owner + "'");
        }
      }
    }
  }
}

FingerprintId compute_fingerprint(const TrackerSpec& spec,
                                  const PartialFeatureVector& observed,
                                  const std::optional<std::string>& unstudied) {
  Fnv1a64 digest;
  for (FeatureId f : kAllFeatures) {
    if (!spec.feature_subset.contains(f)) continue;
    digest.absorb(feature_name(f)).absorb("=");
    digest.absorb(observed[f] ? std::string_view(*observed[f]) : kUnobservedValue);
    digest.absorb("\x1e");
  }
  if (spec.use_unstudied_feature) {
    digest.absorb("unstudied=");
    digest.absorb(unstudied ? std::string_view(*unstudied) : kUnobservedValue);
    digest.absorb("\x1e");
  }
  return digest.value();
}

namespace {

std::string derived_value(const TrackerSpec& spec, FingerprintId table_key) {
  return to_hex(Fnv1a64()
                    .absorb("value\x1f")
                    .absorb(spec.domain)
                    .absorb("\x1f")
                    .absorb(spec.cookie_key)
                    .absorb("\x1f")
                    .absorb_u64(table_key)
                    .value());
}

}  // namespace

std::optional<ServedCookie> serve_request(const TrackerSpec& spec,
                                          TrackerState& state,
                                          const TrackerRequest& request) {
  const FingerprintId fp =
      compute_fingerprint(spec, request.features, request.unstudied);
  FingerprintId table_key = fp;
  if (spec.rotate_every_visits > 0) {
    const std::uint64_t epoch = state.visits / spec.rotate_every_visits;
    table_key = Fnv1a64().absorb_u64(fp).absorb("epoch").absorb_u64(epoch).value();
  }
  ++state.visits;

  // Fingerprint update: a returning cookie re-keys the stored value under the
  // fingerprint seen now; the browser keeps its cookie, so no Set-Cookie.
  if (request.attached_cookie &&
      request.attached_cookie->first == spec.cookie_key) {
    state.table.entries.insert_or_assign(table_key,
                                         request.attached_cookie->second);
    return std::nullopt;
  }

  auto it = state.table.entries.find(table_key);
  if (it != state.table.entries.end() &&
      state.rng.uniform01() >= spec.noise_prob) {
    return ServedCookie{spec.cookie_key, it->second, spec.duration};
  }

  std::string value = spec.value_policy == ValuePolicy::kFingerprintDerived
                          ? derived_value(spec, table_key)
                          : to_hex(state.rng.next());
  state.table.entries.insert_or_assign(table_key, value);
  return ServedCookie{spec.cookie_key, std::move(value), spec.duration};
}

}  // namespace respawn
