#include <set>
#include <sstream>

#include "../support/scenarios.hpp"
#include "doctest.h"
#include "respawn/config.hpp"
#include "respawn/crawler.hpp"
#include "respawn/errors.hpp"
#include "respawn/serialize.hpp"

using namespace respawn;
using testsup::base_scenario;
using testsup::make_tracker;

namespace {

std::string bundle_bytes(const CrawlBundle& bundle) {
  std::ostringstream out;
  write_bundle(out, bundle, {"run", 0, 0, bundle.website, 0});
  return out.str();
}

}  // namespace

TEST_CASE("site without trackers yields no cookies and only its own server") {
  Scenario s = base_scenario(1);
  s.ecosystem.websites.push_back({"plain.example", {}});
  TrackerStateStore servers{Rng(1)};
  const CrawlRecord rec = stateless_crawl(s.ecosystem, s.ecosystem.websites[0],
                                          s.machine_a,
                                          {CrawlLabelKind::kInitial}, servers);
  CHECK(rec.cookies.empty());
  REQUIRE(rec.http_events.size() == 1);
  CHECK(rec.http_events[0].server == "plain.example");
}

TEST_CASE("unknown website errors") {
  Scenario s = base_scenario(1);
  s.ecosystem.websites.push_back({"plain.example", {}});
  TrackerStateStore servers{Rng(1)};
  CHECK_THROWS_AS(stateless_crawl(s.ecosystem, "nope.example", s.machine_a,
                                  {CrawlLabelKind::kInitial}, servers),
                  DataError);
}

TEST_CASE("directly embedded third-party script sets a first-party-hosted cookie") {
  // SOP: script from tracker.com embedded on site.com -> host site.com,
  // owner tracker.com
  Scenario s = base_scenario(2);
  WebsiteSpec site;
  site.domain = "site.example";
  site.resources.push_back({ResourceKind::kThirdPartyScript, "tracker.example",
                            "", {FeatureId::kCanvas}, {}});
  s.ecosystem.websites.push_back(site);
  s.ecosystem.trackers.emplace(
      "tracker.example",
      make_tracker("tracker.example", {FeatureId::kCanvas},
                   DeliveryKind::kEmbeddedScript,
                   ValuePolicy::kFingerprintDerived, 0.0, "uid"));

  TrackerStateStore servers{Rng(2)};
  const CrawlRecord rec = stateless_crawl(s.ecosystem, site, s.machine_a,
                                          {CrawlLabelKind::kInitial}, servers);
  REQUIRE(rec.cookies.size() == 1);
  const CookieRecord& c = rec.cookies[0];
  CHECK(c.host == "site.example");
  CHECK(c.owner == "tracker.example");
  CHECK(c.set_mechanism.kind == SetMechanismKind::kScript);
  CHECK(c.party == CookieParty::kFirstParty);
}

TEST_CASE("the same script inside a third-party iframe keeps the tracker's origin") {
  Scenario s = base_scenario(3);
  WebsiteSpec site;
  site.domain = "site.example";
  site.resources.push_back({ResourceKind::kThirdPartyIframeScript,
                            "tracker.example", "", {FeatureId::kCanvas}, {}});
  s.ecosystem.websites.push_back(site);
  s.ecosystem.trackers.emplace(
      "tracker.example",
      make_tracker("tracker.example", {FeatureId::kCanvas},
                   DeliveryKind::kEmbeddedScript,
                   ValuePolicy::kFingerprintDerived, 0.0, "uid"));

  TrackerStateStore servers{Rng(3)};
  const CrawlRecord rec = stateless_crawl(s.ecosystem, site, s.machine_a,
                                          {CrawlLabelKind::kInitial}, servers);
  REQUIRE(rec.cookies.size() == 1);
  CHECK(rec.cookies[0].host == "tracker.example");
  CHECK(rec.cookies[0].owner == "tracker.example");
  CHECK(rec.cookies[0].party == CookieParty::kThirdParty);
  REQUIRE(rec.js_access_events.size() == 1);
  CHECK(rec.js_access_events[0].context_host == "tracker.example");
}

TEST_CASE("header cookies carry the responding server's registrable domain") {
  Scenario s = base_scenario(4);
  WebsiteSpec site;
  site.domain = "site.example";
  site.resources.push_back(
      {ResourceKind::kBeacon, "pixel.ads.example", "", {}, {}});
  s.ecosystem.websites.push_back(site);
  s.ecosystem.trackers.emplace(
      "ads.example", make_tracker("ads.example", {FeatureId::kIp},
                                  DeliveryKind::kHttpHeader,
                                  ValuePolicy::kFingerprintDerived, 0.0, "uid"));

  TrackerStateStore servers{Rng(4)};
  const CrawlRecord rec = stateless_crawl(s.ecosystem, site, s.machine_a,
                                          {CrawlLabelKind::kInitial}, servers);
  REQUIRE(rec.cookies.size() == 1);
  CHECK(rec.cookies[0].host == "ads.example");
  CHECK(rec.cookies[0].owner == "ads.example");
  CHECK(rec.cookies[0].set_mechanism.kind == SetMechanismKind::kHeader);
  CHECK(rec.cookies[0].set_mechanism.server == "pixel.ads.example");
  CHECK(rec.cookies[0].party == CookieParty::kThirdParty);
}

TEST_CASE("passive headers reach every contacted server; actives only via scripts") {
  Scenario s = testsup::owner_self_scenario();
  TrackerStateStore servers{Rng(5)};
  const CrawlRecord rec =
      stateless_crawl(s.ecosystem, s.ecosystem.websites[0], s.machine_a,
                      {CrawlLabelKind::kInitial}, servers);
  CHECK(rec.http_events.size() == 2);  // site + script host
  for (const HttpEvent& ev : rec.http_events) {
    CHECK(ev.ip == s.machine_a.features[FeatureId::kIp]);
    CHECK(ev.user_agent == s.machine_a.features[FeatureId::kUserAgent]);
    CHECK(ev.accept_language == s.machine_a.features[FeatureId::kAcceptLanguage]);
    CHECK(ev.dnt == s.machine_a.features[FeatureId::kDnt]);
  }
  for (const JsAccessEvent& ev : rec.js_access_events) {
    CHECK(is_active_only(ev.feature));
  }
}

TEST_CASE("spoof_feature swaps exactly one value") {
  const BrowserProfile a = default_machine_a();
  const auto spoof =
      resolve_spoof_values(default_spoof_values(), a, Rng(1));

  SUBCASE("user agent becomes the Windows/Trident string") {
    const BrowserProfile p =
        spoof_feature(a, FeatureId::kUserAgent,
                      spoof[feature_index(FeatureId::kUserAgent)]);
    CHECK(p.features[FeatureId::kUserAgent] ==
          "Mozilla/5.0 (Windows NT 6.1; WOW64; Trident/7.0; AS; rv:11.0) like "
          "Gecko");
    CHECK(p.spoofed == FeatureSet{FeatureId::kUserAgent});
    CHECK(p.features[FeatureId::kIp] == a.features[FeatureId::kIp]);
  }
  SUBCASE("geolocation points at Times Square") {
    const BrowserProfile p =
        spoof_feature(a, FeatureId::kGeolocation,
                      spoof[feature_index(FeatureId::kGeolocation)]);
    CHECK(p.features[FeatureId::kGeolocation] == "40.7590,-73.9845");
  }
  SUBCASE("time zone moves to America/Adak") {
    const BrowserProfile p = spoof_feature(
        a, FeatureId::kTimeZone, spoof[feature_index(FeatureId::kTimeZone)]);
    CHECK(p.features[FeatureId::kTimeZone] == "America/Adak");
  }
  SUBCASE("spoofing to the baseline value is a config error") {
    CHECK_THROWS_AS(
        spoof_feature(a, FeatureId::kIp, a.features[FeatureId::kIp]),
        ConfigError);
  }
}

TEST_CASE("canvas spoof token is drawn per run and differs from baseline") {
  const BrowserProfile a = default_machine_a();
  const auto one = resolve_spoof_values(default_spoof_values(), a, Rng(10));
  const auto two = resolve_spoof_values(default_spoof_values(), a, Rng(11));
  const auto one_again = resolve_spoof_values(default_spoof_values(), a, Rng(10));
  CHECK(one[feature_index(FeatureId::kCanvas)] !=
        two[feature_index(FeatureId::kCanvas)]);
  CHECK(one[feature_index(FeatureId::kCanvas)] ==
        one_again[feature_index(FeatureId::kCanvas)]);
  CHECK(one[feature_index(FeatureId::kCanvas)] != a.features[FeatureId::kCanvas]);
}

TEST_CASE("non-respawning tracker skips the test phase") {
  Scenario s = base_scenario(20);
  WebsiteSpec site;
  site.domain = "short.example";
  site.resources.push_back({ResourceKind::kBeacon, "fresh.example", "", {}, {}});
  s.ecosystem.websites.push_back(site);
  s.ecosystem.trackers.emplace(
      "fresh.example",
      make_tracker("fresh.example", {FeatureId::kIp}, DeliveryKind::kHttpHeader,
                   ValuePolicy::kRandomPerFingerprint, 1.0, "uid"));
  const CrawlBundle bundle = testsup::run_single_site(s);
  CHECK_FALSE(bundle.test_phase_present());
  CHECK(bundle.spoof.empty());
  CHECK(bundle.control.empty());
  CHECK_FALSE(bundle.initial.cookies.empty());
}

TEST_CASE("ip-keyed respawner changes in every ip-spoof crawl and no control") {
  Scenario s = base_scenario(21);
  WebsiteSpec site;
  site.domain = "ipland.example";
  site.resources.push_back({ResourceKind::kBeacon, "ipkey.example", "", {}, {}});
  s.ecosystem.websites.push_back(site);
  s.ecosystem.trackers.emplace(
      "ipkey.example",
      make_tracker("ipkey.example", {FeatureId::kIp}, DeliveryKind::kHttpHeader,
                   ValuePolicy::kFingerprintDerived, 0.0, "uid"));

  const CrawlBundle bundle = testsup::run_single_site(s);
  REQUIRE(bundle.test_phase_present());
  REQUIRE(bundle.initial.cookies.size() == 1);
  const std::string initial_value = bundle.initial.cookies[0].value;

  for (const CrawlRecord& rec : bundle.spoof.at(FeatureId::kIp)) {
    REQUIRE(rec.cookies.size() == 1);
    CHECK(rec.cookies[0].value != initial_value);
  }
  for (const CrawlRecord& rec : bundle.control) {
    REQUIRE(rec.cookies.size() == 1);
    CHECK(rec.cookies[0].value == initial_value);
  }
  for (FeatureId f : kAllFeatures) {
    if (f == FeatureId::kIp) continue;
    for (const CrawlRecord& rec : bundle.spoof.at(f)) {
      CHECK(rec.cookies[0].value == initial_value);
    }
  }
}

TEST_CASE("bundle shape: 8 spoof features x reps plus reps controls") {
  const CrawlBundle bundle = testsup::run_single_site(testsup::owner_self_scenario(), 5);
  CHECK(bundle.reps() == 5);
  CHECK(bundle.spoof.size() == kFeatureCount);
  for (const auto& [f, crawls] : bundle.spoof) CHECK(crawls.size() == 5);
  CHECK(bundle.control.size() == 5);
}

TEST_CASE("control crawls run the unmodified profile") {
  const CrawlBundle bundle = testsup::run_single_site(testsup::owner_self_scenario());
  for (const CrawlRecord& rec : bundle.control) {
    CHECK(rec.profile_snapshot.spoofed.empty());
    CHECK(rec.profile_snapshot.features == default_machine_a().features);
  }
  for (const auto& [f, crawls] : bundle.spoof) {
    for (const CrawlRecord& rec : crawls) {
      CHECK(rec.profile_snapshot.spoofed == FeatureSet{f});
    }
  }
}

TEST_CASE("identical seeds yield byte-identical bundles") {
  const Scenario s = testsup::collaboration_scenario();
  const CrawlBundle one = testsup::run_single_site(s);
  const CrawlBundle two = testsup::run_single_site(s);
  CHECK(one == two);
  CHECK(bundle_bytes(one) == bundle_bytes(two));
}

TEST_CASE("statelessness: fresh-value trackers never share cookie values across crawls") {
  Scenario s = base_scenario(22);
  WebsiteSpec site;
  site.domain = "fresh.example";
  site.resources.push_back({ResourceKind::kBeacon, "rnd.example", "", {}, {}});
  s.ecosystem.websites.push_back(site);
  s.ecosystem.trackers.emplace(
      "rnd.example",
      make_tracker("rnd.example", {FeatureId::kIp}, DeliveryKind::kHttpHeader,
                   ValuePolicy::kRandomPerFingerprint, 1.0, "uid"));

  TrackerStateStore servers{Rng(7)};
  const CrawlRecord one = stateless_crawl(s.ecosystem, site, s.machine_a,
                                          {CrawlLabelKind::kInitial}, servers);
  const CrawlRecord two = stateless_crawl(s.ecosystem, site, s.machine_a,
                                          {CrawlLabelKind::kReappearance}, servers);
  REQUIRE(one.cookies.size() == 1);
  REQUIRE(two.cookies.size() == 1);
  CHECK(one.cookies[0].value != two.cookies[0].value);

  // deterministic respawners share all tracker cookie values instead
  Scenario d = base_scenario(23);
  d.ecosystem.websites.push_back(site);
  d.ecosystem.trackers.emplace(
      "rnd.example",
      make_tracker("rnd.example", {FeatureId::kIp}, DeliveryKind::kHttpHeader,
                   ValuePolicy::kFingerprintDerived, 0.0, "uid"));
  TrackerStateStore det_servers{Rng(8)};
  const CrawlRecord three = stateless_crawl(d.ecosystem, site, d.machine_a,
                                            {CrawlLabelKind::kInitial}, det_servers);
  const CrawlRecord four = stateless_crawl(d.ecosystem, site, d.machine_a,
                                           {CrawlLabelKind::kReappearance}, det_servers);
  CHECK(three.cookies[0].value == four.cookies[0].value);
}

TEST_CASE("harness mode: clearing server state between visits breaks all continuity") {
  Scenario s = base_scenario(24);
  WebsiteSpec site;
  site.domain = "wiped.example";
  site.resources.push_back({ResourceKind::kBeacon, "det.example", "", {}, {}});
  s.ecosystem.websites.push_back(site);
  s.ecosystem.trackers.emplace(
      "det.example",
      make_tracker("det.example", {FeatureId::kIp}, DeliveryKind::kHttpHeader,
                   ValuePolicy::kRandomPerFingerprint, 0.0, "uid"));

  TrackerStateStore servers{Rng(9)};
  const CrawlRecord one = stateless_crawl(s.ecosystem, site, s.machine_a,
                                          {CrawlLabelKind::kInitial}, servers);
  servers.clear();  // fresh-ID harness mode: no matching table survives
  const CrawlRecord two = stateless_crawl(s.ecosystem, site, s.machine_a,
                                          {CrawlLabelKind::kReappearance}, servers);
  REQUIRE(one.cookies.size() == 1);
  REQUIRE(two.cookies.size() == 1);
  CHECK(one.cookies[0].value != two.cookies[0].value);
}

TEST_CASE("SOP invariants hold across random ecosystems") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    RandomEcosystemOptions options;
    options.sites = 4;
    options.respawn_frac = 0.5;
    const Scenario s = random_scenario(seed, options);
    TrackerStateStore servers{Rng(seed)};
    for (const WebsiteSpec& site : s.ecosystem.websites) {
      const CrawlRecord rec = stateless_crawl(
          s.ecosystem, site, s.machine_a, {CrawlLabelKind::kInitial}, servers);
      for (const CookieRecord& c : rec.cookies) {
        if (c.set_mechanism.kind == SetMechanismKind::kHeader) {
          CHECK(c.owner == c.host);
        } else {
          CHECK(c.host == etld_plus_one(c.set_mechanism.context_host));
          CHECK(c.owner == etld_plus_one(c.set_mechanism.script_host));
        }
        CHECK((c.party == CookieParty::kFirstParty) == (c.host == site.domain));
      }
    }
  }
}
