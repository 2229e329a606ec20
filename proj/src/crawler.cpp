#include "respawn/crawler.hpp"

#include <algorithm>

#include "respawn/attribution.hpp"
#include "respawn/errors.hpp"
#include "respawn/hash.hpp"

namespace respawn {

BrowserProfile default_machine_a() {
  BrowserProfile p;
  p.profile_id = "machine-a";
  p.features[FeatureId::kIp] = "193.51.224.17";
  p.features[FeatureId::kUserAgent] =
      "Mozilla/5.0 (X11; Fedora; Linux x86_64; rv:68.0) Gecko/20100101 "
      "Firefox/68.0";
  p.features[FeatureId::kAcceptLanguage] = "en-US";
  p.features[FeatureId::kDnt] = "null";
  p.features[FeatureId::kCanvas] = "cv-a-f52c33d1";
  p.features[FeatureId::kGeolocation] = "43.7034,7.2663";
  p.features[FeatureId::kWebGl] = "Mesa DRI Intel(R) HD Graphics 520";
  p.features[FeatureId::kTimeZone] = "Europe/Paris";
  p.unstudied = "machine-a-4f1a";
  return p;
}

BrowserProfile default_machine_b() {
  BrowserProfile p;
  p.profile_id = "machine-b";
  p.features[FeatureId::kIp] = "138.96.64.51";
  p.features[FeatureId::kUserAgent] =
      "Mozilla/5.0 (X11; Fedora; Linux x86_64; rv:45.0) Gecko/20100101 "
      "Firefox/45.0.1";
  p.features[FeatureId::kAcceptLanguage] = "de-DE";
  p.features[FeatureId::kDnt] = "1";
  p.features[FeatureId::kCanvas] = "cv-b-09ae77c4";
  p.features[FeatureId::kGeolocation] = "61.2181,-149.9003";
  p.features[FeatureId::kWebGl] = "NVIDIA GeForce GT 710/PCIe/SSE2";
  p.features[FeatureId::kTimeZone] = "America/Anchorage";
  p.unstudied = "machine-b-802d";
  return p;
}

SpoofValues default_spoof_values() {
  SpoofValues s;
  s[FeatureId::kIp] = "185.104.120.4";  // static Netherlands address
  s[FeatureId::kUserAgent] =
      "Mozilla/5.0 (Windows NT 6.1; WOW64; Trident/7.0; AS; rv:11.0) like "
      "Gecko";
  s[FeatureId::kAcceptLanguage] = "ar";
  s[FeatureId::kDnt] = "1";
  // canvas left unset: a fresh noise token is drawn per protocol run
  s[FeatureId::kGeolocation] = "40.7590,-73.9845";
  s[FeatureId::kWebGl] = "GeForce GTX 650 Ti/PCIe/SSE2";
  s[FeatureId::kTimeZone] = "America/Adak";
  return s;
}

std::array<std::string, kFeatureCount> resolve_spoof_values(
    const SpoofValues& spoof, const BrowserProfile& baseline, Rng rng) {
  std::array<std::string, kFeatureCount> out;
  for (FeatureId f : kAllFeatures) {
    const std::size_t i = feature_index(f);
    if (spoof[f]) {
      out[i] = *spoof[f];
    } else if (f == FeatureId::kCanvas) {
      do {
        out[i] = "cv-noise-" + to_hex(rng.next());
      } while (out[i] == baseline.features[f]);
    } else {
      throw ConfigError(std::string("no spoof value configured for feature '") +
                        std::string(feature_name(f)) + "'");
    }
    if (out[i] == baseline.features[f]) {
      throw ConfigError(std::string("spoof value for feature '") +
                        std::string(feature_name(f)) +
                        "' equals the profile baseline");
    }
  }
  return out;
}

BrowserProfile spoof_feature(const BrowserProfile& profile, FeatureId feature,
                             const std::string& value) {
  if (profile.features[feature] == value) {
    throw ConfigError(std::string("spoof value for feature '") +
                      std::string(feature_name(feature)) +
                      "' equals the profile baseline");
  }
  BrowserProfile out = profile;
  out.features[feature] = value;
  out.spoofed.insert(feature);
  return out;
}

const CookieRecord* CrawlRecord::find_cookie(const std::string& host,
                                             const std::string& key) const {
  for (const CookieRecord& c : cookies) {
    if (c.host == host && c.key == key) return &c;
  }
  return nullptr;
}

TrackerState& TrackerStateStore::state_for(const std::string& tracker_domain) {
  auto it = states_.find(tracker_domain);
  if (it == states_.end()) {
    it = states_
             .emplace(tracker_domain,
                      TrackerState(base_.split("tracker")
                                       .split(tracker_domain)
                                       .split_index(epoch_)))
             .first;
  }
  return it->second;
}

namespace {

struct ScriptContext {
  std::string context_host;
  std::string script_host;
};

}  // namespace

CrawlRecord stateless_crawl(const Ecosystem& eco, const WebsiteSpec& site,
                            const BrowserProfile& profile, CrawlLabel label,
                            TrackerStateStore& servers) {
  CrawlRecord rec;
  rec.website = site.domain;
  rec.profile_snapshot = profile;
  rec.label = label;

  std::vector<std::string> contact_order;  // distinct full hosts
  auto contact = [&](const std::string& host) {
    if (std::find(contact_order.begin(), contact_order.end(), host) ==
        contact_order.end()) {
      contact_order.push_back(host);
    }
  };

  std::vector<std::string> tracker_order;            // first-contact order
  std::map<std::string, std::string> first_host;     // tracker -> host contacted
  std::map<std::string, std::vector<ScriptContext>> script_contexts;
  std::map<std::string, FeatureSet> covert;          // tracker -> covert features
  FeatureSet pool;  // active values read by any script on the page

  auto note_tracker = [&](const std::string& domain, const std::string& via) {
    if (!eco.trackers.contains(domain)) return;
    if (!first_host.contains(domain)) {
      tracker_order.push_back(domain);
      first_host.emplace(domain, via);
    }
  };

  auto add_context = [&](const std::string& tracker,
                         const std::string& context_host,
                         const std::string& script_host) {
    auto& contexts = script_contexts[tracker];
    for (const ScriptContext& c : contexts) {
      if (c.context_host == context_host) return;
    }
    contexts.push_back({context_host, script_host});
  };

  auto record_accesses = [&](const std::string& script_host,
                             const std::string& context_host,
                             FeatureSet accesses) {
    for (FeatureId f : kAllFeatures) {
      if (!accesses.contains(f)) continue;
      rec.js_access_events.push_back({script_host, context_host, f});
      pool.insert(f);
    }
  };

  contact(site.domain);
  note_tracker(site.domain, site.domain);

  for (const Resource& res : site.resources) {
    switch (res.kind) {
      case ResourceKind::kFirstPartyScript:
        record_accesses(site.domain, site.domain, res.accesses);
        if (eco.trackers.contains(site.domain)) {
          add_context(site.domain, site.domain, site.domain);
        }
        break;
      case ResourceKind::kThirdPartyScript: {
        contact(res.host);
        const std::string tracker = etld_plus_one(res.host);
        note_tracker(tracker, res.host);
        record_accesses(res.host, site.domain, res.accesses);
        add_context(tracker, site.domain, res.host);
        break;
      }
      case ResourceKind::kThirdPartyIframeScript: {
        // SOP: the script runs in the iframe document's origin, so both the
        // access context and any cookie it sets belong to the iframe host.
        contact(res.host);
        const std::string tracker = etld_plus_one(res.host);
        note_tracker(tracker, res.host);
        record_accesses(res.host, res.host, res.accesses);
        add_context(tracker, res.host, res.host);
        break;
      }
      case ResourceKind::kBeacon: {
        contact(res.host);
        const std::string tracker = etld_plus_one(res.host);
        note_tracker(tracker, res.host);
        if (auto it = covert.find(tracker); it != covert.end()) {
          it->second = it->second | res.covert_accesses;
        } else {
          covert.emplace(tracker, res.covert_accesses);
        }
        break;
      }
    }
  }

  for (const std::string& host : contact_order) {
    rec.http_events.push_back({host, profile.features[FeatureId::kIp],
                               profile.features[FeatureId::kUserAgent],
                               profile.features[FeatureId::kAcceptLanguage],
                               profile.features[FeatureId::kDnt]});
  }

  // Cookie jar of this load: (host, key) unique, insertion ordered.
  std::vector<CookieRecord> jar;
  auto jar_find = [&](const std::string& host,
                      const std::string& key) -> CookieRecord* {
    for (CookieRecord& c : jar) {
      if (c.host == host && c.key == key) return &c;
    }
    return nullptr;
  };
  auto jar_set = [&](CookieRecord cookie) {
    if (CookieRecord* existing = jar_find(cookie.host, cookie.key)) {
      *existing = std::move(cookie);
    } else {
      jar.push_back(std::move(cookie));
    }
  };

  for (const std::string& tracker : tracker_order) {
    const TrackerSpec& spec = eco.trackers.at(tracker);
    TrackerState& state = servers.state_for(tracker);

    TrackerRequest req;
    const FeatureSet covert_features =
        covert.contains(tracker) ? covert.at(tracker) : FeatureSet{};
    for (FeatureId f : kAllFeatures) {
      const bool available = is_passively_visible(f) || pool.contains(f) ||
                             covert_features.contains(f);
      if (available) req.features[f] = profile.features[f];
    }
    if (spec.use_unstudied_feature) req.unstudied = profile.unstudied;

    // The cookie the browser would present back: request cookies for header
    // trackers, document.cookie in the first script context otherwise.
    std::string attach_host;
    if (spec.delivery == DeliveryKind::kHttpHeader) {
      attach_host = tracker;
    } else if (auto it = script_contexts.find(tracker);
               it != script_contexts.end() && !it->second.empty()) {
      attach_host = etld_plus_one(it->second.front().context_host);
    }
    if (!attach_host.empty()) {
      if (const CookieRecord* c = jar_find(attach_host, spec.cookie_key)) {
        req.attached_cookie = {c->key, c->value};
      }
    }

    const auto served = serve_request(spec, state, req);
    if (!served) continue;

    if (spec.delivery == DeliveryKind::kHttpHeader) {
      CookieRecord c;
      c.host = tracker;
      c.key = served->key;
      c.value = served->value;
      c.set_mechanism = {SetMechanismKind::kHeader, first_host.at(tracker), "", ""};
      c.owner = tracker;
      c.party = c.host == site.domain ? CookieParty::kFirstParty
                                      : CookieParty::kThirdParty;
      c.duration = served->duration;
      c.purpose = spec.purpose;
      jar_set(std::move(c));
    } else {
      auto it = script_contexts.find(tracker);
      if (it == script_contexts.end()) continue;  // script never executed
      for (const ScriptContext& ctx : it->second) {
        CookieRecord c;
        c.host = etld_plus_one(ctx.context_host);
        c.key = served->key;
        c.value = served->value;
        c.set_mechanism = {SetMechanismKind::kScript, "", ctx.script_host,
                           ctx.context_host};
        c.owner = etld_plus_one(ctx.script_host);
        c.party = c.host == site.domain ? CookieParty::kFirstParty
                                        : CookieParty::kThirdParty;
        c.duration = served->duration;
        c.purpose = spec.purpose;
        jar_set(std::move(c));
      }
    }
  }

  rec.cookies = std::move(jar);
  return rec;
}

CrawlRecord stateless_crawl(const Ecosystem& eco, const std::string& website,
                            const BrowserProfile& profile, CrawlLabel label,
                            TrackerStateStore& servers) {
  const WebsiteSpec* site = eco.find_website(website);
  if (site == nullptr) throw DataError("unknown website '" + website + "'");
  return stateless_crawl(eco, *site, profile, label, servers);
}

namespace {

bool any_triple_respawned(const CrawlRecord& initial,
                          const CrawlRecord& reappearance) {
  for (const CookieRecord& c : initial.cookies) {
    const CookieRecord* again = reappearance.find_cookie(c.host, c.key);
    if (again != nullptr && again->value == c.value) return true;
  }
  return false;
}

}  // namespace

CrawlBundle run_protocol(const Ecosystem& eco, const WebsiteSpec& site,
                         const BrowserProfile& machine_a,
                         const BrowserProfile& machine_b,
                         const SpoofValues& spoof_values,
                         std::uint64_t run_seed, int reps) {
  if (reps < 1) throw ConfigError("reps must be at least 1");
  Rng run_rng(run_seed);
  TrackerStateStore servers(run_rng.split("trackers"));
  const auto spoof_resolved = resolve_spoof_values(
      spoof_values, machine_a, run_rng.split("canvas-noise"));

  CrawlBundle bundle;
  bundle.website = site.domain;
  bundle.initial = stateless_crawl(eco, site, machine_a,
                                   {CrawlLabelKind::kInitial}, servers);
  bundle.user_specific = stateless_crawl(
      eco, site, machine_b, {CrawlLabelKind::kUserSpecific}, servers);
  bundle.reappearance = stateless_crawl(
      eco, site, machine_a, {CrawlLabelKind::kReappearance}, servers);

  if (!any_triple_respawned(bundle.initial, bundle.reappearance)) {
    return bundle;  // nothing can respawn here, skip the test phase
  }

  std::vector<CrawlLabel> slots;
  for (FeatureId f : kAllFeatures) {
    for (int rep = 1; rep <= reps; ++rep) {
      slots.push_back({CrawlLabelKind::kSpoof, f, rep});
    }
  }
  for (int rep = 1; rep <= reps; ++rep) {
    slots.push_back({CrawlLabelKind::kControl, FeatureId::kAcceptLanguage, rep});
  }
  Rng order_rng = run_rng.split("order");
  order_rng.shuffle(slots);

  for (FeatureId f : kAllFeatures) {
    bundle.spoof[f].resize(static_cast<std::size_t>(reps));
  }
  bundle.control.resize(static_cast<std::size_t>(reps));

  for (const CrawlLabel& slot : slots) {
    if (slot.kind == CrawlLabelKind::kControl) {
      bundle.control[static_cast<std::size_t>(slot.rep - 1)] =
          stateless_crawl(eco, site, machine_a, slot, servers);
    } else {
      const BrowserProfile spoofed = spoof_feature(
          machine_a, slot.feature, spoof_resolved[feature_index(slot.feature)]);
      bundle.spoof[slot.feature][static_cast<std::size_t>(slot.rep - 1)] =
          stateless_crawl(eco, site, spoofed, slot, servers);
    }
  }
  return bundle;
}

}  // namespace respawn
