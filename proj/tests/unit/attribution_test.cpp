#include "../support/scenarios.hpp"
#include "doctest.h"
#include "respawn/attribution.hpp"
#include "respawn/errors.hpp"

using namespace respawn;

namespace {

DetectionResult first_dependent(const std::vector<DetectionResult>& results) {
  for (const DetectionResult& r : results) {
    if (r.status == DetectionStatus::kFeatureDependent) return r;
  }
  throw std::runtime_error("no feature-dependent result");
}

std::pair<CrawlBundle, std::vector<DetectionResult>> run_and_detect(
    const Scenario& s) {
  CrawlBundle bundle = testsup::run_single_site(s);
  DetectionParams params;
  params.seed = s.ecosystem.seed;
  auto results = detect_feature_dependencies(bundle, params);
  return {std::move(bundle), std::move(results)};
}

}  // namespace

TEST_CASE("etld_plus_one") {
  CHECK(etld_plus_one("a.adtng.com") == "adtng.com");
  CHECK(etld_plus_one("tracker.com") == "tracker.com");
  CHECK(etld_plus_one(etld_plus_one("a.adtng.com")) == "adtng.com");  // idempotent
  CHECK(etld_plus_one("shop.example.co.uk") == "example.co.uk");
  CHECK(etld_plus_one("example.co.uk") == "example.co.uk");
  CHECK(etld_plus_one("CDN.Tracker.COM") == "tracker.com");
  // unknown TLDs fall back to the last label as suffix
  CHECK(etld_plus_one("deep.sub.name.unknowntld") == "name.unknowntld");

  CHECK_THROWS_AS(etld_plus_one(""), DataError);
  CHECK_THROWS_AS(etld_plus_one("localhost"), DataError);
  CHECK_THROWS_AS(etld_plus_one("co.uk"), DataError);
}

TEST_CASE("resolve_owner for header and script cookies") {
  CookieRecord header;
  header.host = "rubiconproject.com";
  header.set_mechanism = {SetMechanismKind::kHeader, "pixel.rubiconproject.com",
                          "", ""};
  CHECK(resolve_owner(header) == "rubiconproject.com");

  CookieRecord scripted;
  scripted.host = "site.com";
  scripted.set_mechanism = {SetMechanismKind::kScript, "", "tracker.com",
                            "site.com"};
  CHECK(resolve_owner(scripted) == "tracker.com");

  scripted.set_mechanism.script_host = "cdn.tracker.com";
  CHECK(resolve_owner(scripted) == "tracker.com");
}

TEST_CASE("host/owner partition of feature-dependent cookies") {
  auto dependent = [](const std::string& host, const std::string& owner,
                      SetMechanismKind kind) {
    DetectionResult r;
    r.status = DetectionStatus::kFeatureDependent;
    r.features = {FeatureId::kIp};
    r.website = "site.com";
    r.cookie.host = host;
    r.cookie.owner = owner;
    r.cookie.key = "uid";
    r.cookie.set_mechanism =
        kind == SetMechanismKind::kHeader
            ? SetMechanism{kind, host, "", ""}
            : SetMechanism{kind, "", owner, host};
    return r;
  };

  SUBCASE("host equals owner") {
    const auto overlap = host_owner_overlap(
        {dependent("d.com", "d.com", SetMechanismKind::kHeader)});
    CHECK(overlap.both == std::set<std::string>{"d.com"});
    CHECK(overlap.host_only.empty());
    CHECK(overlap.owner_only.empty());
  }
  SUBCASE("script-set cookie splits host and owner") {
    const auto overlap = host_owner_overlap(
        {dependent("site.com", "tracker.com", SetMechanismKind::kScript)});
    CHECK(overlap.host_only == std::set<std::string>{"site.com"});
    CHECK(overlap.owner_only == std::set<std::string>{"tracker.com"});
    CHECK(overlap.both.empty());
  }
  SUBCASE("excluded results do not contribute") {
    DetectionResult excluded;
    excluded.status = DetectionStatus::kExcluded;
    excluded.cookie.host = "x.com";
    const auto overlap = host_owner_overlap({excluded});
    CHECK(overlap.host_only.empty());
    CHECK(overlap.owner_only.empty());
    CHECK(overlap.both.empty());
  }
}

TEST_CASE("worked scenario partitions hosts and owners as enumerated") {
  const Scenario s = load_scenario(std::string(RESPAWN_SOURCE_DIR) +
                                   "/docs/scenario.json");
  std::vector<DetectionResult> all;
  for (const WebsiteSpec& site : s.ecosystem.websites) {
    const CrawlBundle bundle =
        run_protocol(s.ecosystem, site, s.machine_a, s.machine_b,
                     s.spoof_values, s.ecosystem.seed);
    DetectionParams params;
    params.seed = s.ecosystem.seed;
    for (auto& r : detect_feature_dependencies(bundle, params)) {
      all.push_back(std::move(r));
    }
  }
  const auto overlap = host_owner_overlap(all);
  CHECK(overlap.host_only ==
        std::set<std::string>{"news.example", "shoes.example"});
  CHECK(overlap.owner_only == std::set<std::string>{"trackset.example"});
  CHECK(overlap.both.empty());
}

TEST_CASE("case 1: the owner's own script covers the dependent features") {
  const auto [bundle, results] = run_and_detect(testsup::owner_self_scenario());
  const DetectionResult r = first_dependent(results);
  CHECK(r.features == FeatureSet{FeatureId::kCanvas});
  const RespawnerClass cls = classify_respawner(r, bundle);
  CHECK(cls.verdict == RespawnerVerdict::kOwnerSelf);
  CHECK_FALSE(cls.shared_access);
}

TEST_CASE("case 2: a non-owner script alone covers canvas") {
  const auto [bundle, results] = run_and_detect(testsup::collaboration_scenario());
  DetectionResult dependent;
  bool found = false;
  for (const DetectionResult& r : results) {
    if (r.status == DetectionStatus::kFeatureDependent) {
      CHECK(r.cookie.owner == "rubiconads.example");  // the collaborator's own
      dependent = r;                                  // cookie never respawns
      found = true;
    }
  }
  REQUIRE(found);
  const RespawnerClass cls = classify_respawner(dependent, bundle);
  CHECK(cls.verdict == RespawnerVerdict::kCollaboration);
  CHECK(cls.collaborators == std::set<std::string>{"syndico.example"});
}

TEST_CASE("case 3: no access event for the dependent geolocation") {
  const auto [bundle, results] = run_and_detect(testsup::unknown_scenario());
  const DetectionResult r = first_dependent(results);
  CHECK(r.features == FeatureSet{FeatureId::kGeolocation});
  const RespawnerClass cls = classify_respawner(r, bundle);
  CHECK(cls.verdict == RespawnerVerdict::kUnknown);
  CHECK(cls.missing_features == FeatureSet{FeatureId::kGeolocation});
}

TEST_CASE("owner access wins over shared access and is flagged") {
  Scenario s = testsup::owner_self_scenario();
  // a second, unrelated domain also reads canvas
  s.ecosystem.websites[0].resources.push_back(
      {ResourceKind::kThirdPartyScript, "js.other.example", "",
       {FeatureId::kCanvas}, {}});
  s.ecosystem.trackers.emplace(
      "other.example",
      testsup::make_tracker("other.example", {FeatureId::kIp},
                            DeliveryKind::kHttpHeader,
                            ValuePolicy::kRandomPerFingerprint, 1.0, "oid"));
  const auto [bundle, results] = run_and_detect(s);
  for (const DetectionResult& r : results) {
    if (r.status != DetectionStatus::kFeatureDependent) continue;
    if (r.cookie.owner != "trackset.example") continue;
    const RespawnerClass cls = classify_respawner(r, bundle);
    CHECK(cls.verdict == RespawnerVerdict::kOwnerSelf);
    CHECK(cls.shared_access);
  }
}

TEST_CASE("passive-only and unobservable dependencies are inapplicable") {
  const auto [bundle, results] = run_and_detect(testsup::mixed_scenario());
  const DetectionResult r = first_dependent(results);  // {ip, user_agent}
  const RespawnerClass cls = classify_respawner(r, bundle);
  CHECK(cls.verdict == RespawnerVerdict::kInapplicable);
  CHECK(cls.reason == InapplicableReason::kNoActiveFeatures);

  DetectionResult webgl_dependent = r;
  webgl_dependent.features = {FeatureId::kWebGl};
  const RespawnerClass gl = classify_respawner(webgl_dependent, bundle);
  CHECK(gl.verdict == RespawnerVerdict::kInapplicable);
  CHECK(gl.reason == InapplicableReason::kUnobservedActiveFeatures);

  // the simulator logs every call, so widening the observable set makes the
  // same result classifiable
  const RespawnerClass widened = classify_respawner(
      webgl_dependent, bundle, kActiveOnlyFeatures);
  CHECK(widened.verdict != RespawnerVerdict::kInapplicable);
}

TEST_CASE("classify_respawner rejects non-dependent results") {
  const auto [bundle, results] = run_and_detect(testsup::mixed_scenario());
  for (const DetectionResult& r : results) {
    if (r.status == DetectionStatus::kExcluded) {
      CHECK_THROWS_AS(classify_respawner(r, bundle), DataError);
      break;
    }
  }
}

TEST_CASE("verdicts are mutually exclusive and exhaustive over applicable inputs") {
  for (const Scenario& s :
       {testsup::owner_self_scenario(), testsup::collaboration_scenario(),
        testsup::unknown_scenario()}) {
    const auto [bundle, results] = run_and_detect(s);
    for (const DetectionResult& r : results) {
      if (r.status != DetectionStatus::kFeatureDependent) continue;
      const RespawnerClass cls = classify_respawner(r, bundle);
      const bool applicable =
          !(r.features & kActiveOnlyFeatures).empty() &&
          (r.features & kActiveOnlyFeatures)
              .subset_of({FeatureId::kCanvas, FeatureId::kGeolocation});
      if (!applicable) {
        CHECK(cls.verdict == RespawnerVerdict::kInapplicable);
        continue;
      }
      CHECK(cls.verdict != RespawnerVerdict::kInapplicable);
      CHECK(!cls.collaborators.contains(r.cookie.owner));
      if (cls.verdict != RespawnerVerdict::kCollaboration) {
        CHECK(cls.collaborators.empty());
      }
      if (cls.verdict != RespawnerVerdict::kUnknown) {
        CHECK(cls.missing_features.empty());
      }
    }
  }
}
