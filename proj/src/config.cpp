#include "respawn/config.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include "respawn/errors.hpp"
#include "respawn/serialize.hpp"

namespace respawn {

namespace {

constexpr std::string_view kEcosystemFormat = "respawnlab-ecosystem/1";

const json& field(const json& j, const char* key, const std::string& what) {
  auto it = j.find(key);
  if (it == j.end()) throw DataError(what + ": missing field '" + key + "'");
  return *it;
}

FeatureSet feature_set_from_json(const json& j, const std::string& what) {
  FeatureSet set;
  for (const json& name : j) {
    const auto f = feature_from_name(name.get<std::string>());
    if (!f) {
      throw DataError(what + ": unknown feature '" + name.get<std::string>() + "'");
    }
    set.insert(*f);
  }
  return set;
}

json feature_set_to_json(FeatureSet set) {
  json out = json::array();
  for (FeatureId f : kAllFeatures) {
    if (set.contains(f)) out.push_back(std::string(feature_name(f)));
  }
  return out;
}

json duration_to_json(const CookieDuration& d) {
  if (d.persistent) return {{"days", d.lifetime_days}, {"kind", "persistent"}};
  return {{"kind", "session"}};
}

CookieDuration duration_from_json(const json& j, const std::string& what) {
  const std::string kind = field(j, "kind", what).get<std::string>();
  if (kind == "session") return CookieDuration::session();
  if (kind == "persistent") {
    return CookieDuration::persistent_for(field(j, "days", what).get<int>());
  }
  throw DataError(what + ": unknown duration kind '" + kind + "'");
}

json tracker_to_json(const TrackerSpec& t) {
  json delivery;
  if (t.delivery == DeliveryKind::kHttpHeader) {
    delivery = {{"kind", "http_header"}};
  } else {
    delivery = {{"kind", "embedded_script"}, {"script_path", t.script_path}};
  }
  return {{"cookie_key", t.cookie_key},
          {"delivery", delivery},
          {"duration", duration_to_json(t.duration)},
          {"feature_subset", feature_set_to_json(t.feature_subset)},
          {"noise_prob", t.noise_prob},
          {"purpose", std::string(purpose_name(t.purpose))},
          {"rotate_every_visits", t.rotate_every_visits},
          {"use_unstudied_feature", t.use_unstudied_feature},
          {"value_policy", t.value_policy == ValuePolicy::kFingerprintDerived
                               ? "fingerprint_derived"
                               : "random_per_fingerprint"}};
}

TrackerSpec tracker_from_json(const std::string& domain, const json& j) {
  const std::string what = "tracker '" + domain + "'";
  TrackerSpec t;
  t.domain = domain;
  t.feature_subset = feature_set_from_json(field(j, "feature_subset", what), what);
  const json& delivery = field(j, "delivery", what);
  const std::string delivery_kind = field(delivery, "kind", what).get<std::string>();
  if (delivery_kind == "http_header") {
    t.delivery = DeliveryKind::kHttpHeader;
  } else if (delivery_kind == "embedded_script") {
    t.delivery = DeliveryKind::kEmbeddedScript;
    t.script_path = field(delivery, "script_path", what).get<std::string>();
  } else {
    throw DataError(what + ": unknown delivery kind '" + delivery_kind + "'");
  }
  const std::string policy = field(j, "value_policy", what).get<std::string>();
  if (policy == "fingerprint_derived") {
    t.value_policy = ValuePolicy::kFingerprintDerived;
  } else if (policy == "random_per_fingerprint") {
    t.value_policy = ValuePolicy::kRandomPerFingerprint;
  } else {
    throw DataError(what + ": unknown value policy '" + policy + "'");
  }
  t.noise_prob = field(j, "noise_prob", what).get<double>();
  t.cookie_key = field(j, "cookie_key", what).get<std::string>();
  t.duration = duration_from_json(field(j, "duration", what), what);
  const auto purpose = purpose_from_name(field(j, "purpose", what).get<std::string>());
  if (!purpose) throw DataError(what + ": unknown purpose");
  t.purpose = *purpose;
  if (j.contains("use_unstudied_feature")) {
    t.use_unstudied_feature = j["use_unstudied_feature"].get<bool>();
  }
  if (j.contains("rotate_every_visits")) {
    t.rotate_every_visits = j["rotate_every_visits"].get<std::uint32_t>();
  }
  return t;
}

json resource_to_json(const Resource& r) {
  switch (r.kind) {
    case ResourceKind::kFirstPartyScript:
      return {{"accesses", feature_set_to_json(r.accesses)},
              {"kind", "first_party_script"},
              {"path", r.path}};
    case ResourceKind::kThirdPartyScript:
      return {{"accesses", feature_set_to_json(r.accesses)},
              {"host", r.host},
              {"kind", "third_party_script"}};
    case ResourceKind::kThirdPartyIframeScript:
      return {{"accesses", feature_set_to_json(r.accesses)},
              {"host", r.host},
              {"kind", "third_party_iframe_script"}};
    case ResourceKind::kBeacon:
      return {{"covert_accesses", feature_set_to_json(r.covert_accesses)},
              {"host", r.host},
              {"kind", "beacon"}};
  }
  throw DataError("resource: unknown kind");
}

Resource resource_from_json(const json& j, const std::string& site) {
  const std::string what = "resource on '" + site + "'";
  Resource r;
  const std::string kind = field(j, "kind", what).get<std::string>();
  if (kind == "first_party_script") {
    r.kind = ResourceKind::kFirstPartyScript;
    r.path = field(j, "path", what).get<std::string>();
    r.accesses = feature_set_from_json(field(j, "accesses", what), what);
  } else if (kind == "third_party_script" || kind == "third_party_iframe_script") {
    r.kind = kind == "third_party_script" ? ResourceKind::kThirdPartyScript
                                          : ResourceKind::kThirdPartyIframeScript;
    r.host = field(j, "host", what).get<std::string>();
    r.accesses = feature_set_from_json(field(j, "accesses", what), what);
  } else if (kind == "beacon") {
    r.kind = ResourceKind::kBeacon;
    r.host = field(j, "host", what).get<std::string>();
    if (j.contains("covert_accesses")) {
      r.covert_accesses = feature_set_from_json(j["covert_accesses"], what);
    }
  } else {
    throw DataError(what + ": unknown kind '" + kind + "'");
  }
  return r;
}

json spoof_values_to_json(const SpoofValues& s) {
  json out = json::object();
  for (FeatureId f : kAllFeatures) {
    out[std::string(feature_name(f))] = s[f] ? json(*s[f]) : json(nullptr);
  }
  return out;
}

SpoofValues spoof_values_from_json(const json& j) {
  SpoofValues s = default_spoof_values();
  for (const auto& [name, value] : j.items()) {
    const auto f = feature_from_name(name);
    if (!f) throw DataError("spoof_values: unknown feature '" + name + "'");
    s[*f] = value.is_null() ? std::optional<std::string>{}
                            : std::optional<std::string>{value.get<std::string>()};
  }
  return s;
}

void validate_scenario(const Scenario& scenario) {
  validate_ecosystem(scenario.ecosystem);
  for (FeatureId f : kAllFeatures) {
    if (f == FeatureId::kCanvas && !scenario.spoof_values[f]) continue;
    if (!scenario.spoof_values[f]) {
      throw ConfigError(std::string("no spoof value for feature '") +
                        std::string(feature_name(f)) + "'");
    }
    if (*scenario.spoof_values[f] == scenario.machine_a.features[f]) {
      throw ConfigError(std::string("spoof value for feature '") +
                        std::string(feature_name(f)) +
                        "' equals machine A's baseline");
    }
  }
}

}  // namespace

json scenario_to_json(const Scenario& scenario) {
  json websites = json::array();
  for (const WebsiteSpec& site : scenario.ecosystem.websites) {
    json resources = json::array();
    for (const Resource& r : site.resources) resources.push_back(resource_to_json(r));
    websites.push_back({{"domain", site.domain}, {"resources", resources}});
  }
  json trackers = json::object();
  for (const auto& [domain, spec] : scenario.ecosystem.trackers) {
    trackers[domain] = tracker_to_json(spec);
  }
  return {{"format", std::string(kEcosystemFormat)},
          {"machine_a", profile_to_json(scenario.machine_a)},
          {"machine_b", profile_to_json(scenario.machine_b)},
          {"seed", scenario.ecosystem.seed},
          {"spoof_values", spoof_values_to_json(scenario.spoof_values)},
          {"trackers", trackers},
          {"websites", websites}};
}

Scenario scenario_from_json(const json& j) {
  if (field(j, "format", "ecosystem file").get<std::string>() != kEcosystemFormat) {
    throw DataError("ecosystem file: unexpected format tag");
  }
  Scenario scenario;
  scenario.ecosystem.seed = field(j, "seed", "ecosystem file").get<std::uint64_t>();
  scenario.machine_a = j.contains("machine_a") && !j["machine_a"].is_null()
                           ? profile_from_json(j["machine_a"])
                           : default_machine_a();
  scenario.machine_b = j.contains("machine_b") && !j["machine_b"].is_null()
                           ? profile_from_json(j["machine_b"])
                           : default_machine_b();
  scenario.spoof_values = j.contains("spoof_values") && !j["spoof_values"].is_null()
                              ? spoof_values_from_json(j["spoof_values"])
                              : default_spoof_values();
  for (const json& site_json : field(j, "websites", "ecosystem file")) {
    WebsiteSpec site;
    site.domain = field(site_json, "domain", "website").get<std::string>();
    for (const json& res : field(site_json, "resources", "website")) {
      site.resources.push_back(resource_from_json(res, site.domain));
    }
    scenario.ecosystem.websites.push_back(std::move(site));
  }
  for (const auto& [domain, spec] : field(j, "trackers", "ecosystem file").items()) {
    scenario.ecosystem.trackers.emplace(domain, tracker_from_json(domain, spec));
  }
  validate_scenario(scenario);
  return scenario;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw DataError("'" + path + "' is not valid JSON");
  return scenario_from_json(j);
}

void write_scenario(const std::string& path, const Scenario& scenario) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << scenario_to_json(scenario).dump(2) << '\n';
}

Scenario random_scenario(std::uint64_t seed, const RandomEcosystemOptions& options) {
  if (options.sites < 1) throw ConfigError("--sites must be at least 1");
  if (options.respawn_frac < 0.0 || options.respawn_frac > 1.0) {
    throw ConfigError("--respawn-frac must lie in [0, 1]");
  }

  Scenario scenario;
  scenario.ecosystem.seed = seed;
  scenario.machine_a = default_machine_a();
  scenario.machine_b = default_machine_b();
  scenario.spoof_values = default_spoof_values();

  Rng rng = Rng(seed).split("gen");
  const int n_sites = options.sites;
  const int n_respawn =
      static_cast<int>(std::ceil(options.respawn_frac * n_sites));

  std::vector<int> order(static_cast<std::size_t>(n_sites));
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  std::vector<bool> respawning(static_cast<std::size_t>(n_sites), false);
  for (int i = 0; i < n_respawn; ++i) {
    respawning[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = true;
  }

  for (int i = 0; i < n_sites; ++i) {
    WebsiteSpec site;
    site.domain = "site" + std::to_string(i) + ".example";

    // occasional first-party script reading a couple of active features
    if (rng.below(3) == 0) {
      Resource fp;
      fp.kind = ResourceKind::kFirstPartyScript;
      fp.path = "/js/app.js";
      fp.accesses = {FeatureId::kTimeZone};
      if (rng.below(2) == 0) fp.accesses.insert(FeatureId::kWebGl);
      site.resources.push_back(fp);
    }

    const bool has_tracker = respawning[static_cast<std::size_t>(i)] || rng.below(2) == 0;
    if (has_tracker) {
      TrackerSpec tracker;
      tracker.domain = "trk" + std::to_string(i) + ".example";
      tracker.cookie_key = "uid";
      if (respawning[static_cast<std::size_t>(i)]) {
        tracker.feature_subset = FeatureSet::from_bits(
            static_cast<std::uint8_t>(1 + rng.below(255)));
        tracker.value_policy = ValuePolicy::kFingerprintDerived;
        tracker.noise_prob = 0.0;
      } else {
        // fresh value on every visit: reappearance never matches
        tracker.feature_subset = FeatureSet::from_bits(
            static_cast<std::uint8_t>(1 + rng.below(255)));
        tracker.value_policy = ValuePolicy::kRandomPerFingerprint;
        tracker.noise_prob = 1.0;
      }
      switch (rng.below(4)) {
        case 0: tracker.purpose = CookiePurpose::kTargeting; break;
        case 1: tracker.purpose = CookiePurpose::kPerformance; break;
        case 2: tracker.purpose = CookiePurpose::kFunctionality; break;
        default: tracker.purpose = CookiePurpose::kStrictlyNecessary; break;
      }
      tracker.duration = rng.below(3) == 0
                             ? CookieDuration::session()
                             : CookieDuration::persistent_for(
                                   30 + static_cast<int>(rng.below(370)));

      const std::string host = rng.below(2) == 0
                                   ? tracker.domain
                                   : "cdn." + tracker.domain;
      Resource res;
      res.accesses = tracker.feature_subset & kActiveOnlyFeatures;
      const std::uint64_t embed = rng.below(3);
      if (embed == 0) {
        tracker.delivery = DeliveryKind::kHttpHeader;
        res.kind = res.accesses.empty() ? ResourceKind::kBeacon
                                        : ResourceKind::kThirdPartyScript;
        res.host = host;
      } else {
        tracker.delivery = DeliveryKind::kEmbeddedScript;
        tracker.script_path = "/t.js";
        res.kind = embed == 1 ? ResourceKind::kThirdPartyScript
                              : ResourceKind::kThirdPartyIframeScript;
        res.host = host;
      }
      site.resources.push_back(res);
      scenario.ecosystem.trackers.emplace(tracker.domain, tracker);
    }
    scenario.ecosystem.websites.push_back(std::move(site));
  }

  validate_scenario(scenario);
  return scenario;
}

}  // namespace respawn
