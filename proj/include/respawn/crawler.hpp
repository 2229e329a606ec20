#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "respawn/ecosystem.hpp"
#include "respawn/features.hpp"
#include "respawn/rng.hpp"

namespace respawn {

// One simulated machine. `unstudied` is a stable attribute outside the eight
// studied features (never touched by spoofing).
struct BrowserProfile {
  std::string profile_id;
  FeatureVector features;
  FeatureSet spoofed;
  std::string unstudied;

  friend bool operator==(const BrowserProfile&, const BrowserProfile&) = default;
};

// Machine A: the profile every crawl except the user-specific one runs from.
BrowserProfile default_machine_a();
// Machine B: differs from A in every studied feature.
BrowserProfile default_machine_b();

// Per-feature spoof targets. An unset canvas value means "draw a fresh noise
// token per protocol run" (canvas spoofing adds noise rather than a fixed
// string).
struct SpoofValues {
  std::array<std::optional<std::string>, kFeatureCount> values;

  std::optional<std::string>& operator[](FeatureId id) {
    return values[feature_index(id)];
  }
  const std::optional<std::string>& operator[](FeatureId id) const {
    return values[feature_index(id)];
  }

  friend bool operator==(const SpoofValues&, const SpoofValues&) = default;
};

SpoofValues default_spoof_values();

// Fills the canvas slot from `rng` when unset and checks every spoof value
// against the profile baseline.
std::array<std::string, kFeatureCount> resolve_spoof_values(
    const SpoofValues& spoof, const BrowserProfile& baseline, Rng rng);

// Copy of `profile` with one feature overridden. Errors if the spoof value
// equals the profile's current value.
BrowserProfile spoof_feature(const BrowserProfile& profile, FeatureId feature,
                             const std::string& value);

enum class SetMechanismKind : std::uint8_t { kHeader, kScript };

struct SetMechanism {
  SetMechanismKind kind = SetMechanismKind::kHeader;
  std::string server;        // header: responding server host
  std::string script_host;   // script: host the script was served from
  std::string context_host;  // script: execution context host

  friend bool operator==(const SetMechanism&, const SetMechanism&) = default;
};

enum class CookieParty : std::uint8_t { kFirstParty, kThirdParty };

struct CookieRecord {
  std::string host;  // registrable domain the browser files the cookie under
  std::string key;
  std::string value;
  SetMechanism set_mechanism;
  std::string owner;  // registrable domain responsible for setting it
  CookieParty party = CookieParty::kThirdParty;
  CookieDuration duration;
  CookiePurpose purpose = CookiePurpose::kUnknown;

  friend bool operator==(const CookieRecord&, const CookieRecord&) = default;
};

enum class CrawlLabelKind : std::uint8_t {
  kInitial,
  kUserSpecific,
  kReappearance,
  kSpoof,
  kControl,
};

struct CrawlLabel {
  CrawlLabelKind kind = CrawlLabelKind::kInitial;
  FeatureId feature = FeatureId::kAcceptLanguage;  // spoof only
  int rep = 0;                                     // spoof/control, 1-based

  friend bool operator==(const CrawlLabel&, const CrawlLabel&) = default;
};

struct JsAccessEvent {
  std::string script_host;
  std::string context_host;
  FeatureId feature = FeatureId::kCanvas;

  friend bool operator==(const JsAccessEvent&, const JsAccessEvent&) = default;
};

struct HttpEvent {
  std::string server;  // full host contacted
  std::string ip;
  std::string user_agent;
  std::string accept_language;
  std::string dnt;

  friend bool operator==(const HttpEvent&, const HttpEvent&) = default;
};

struct CrawlRecord {
  std::string website;
  BrowserProfile profile_snapshot;
  CrawlLabel label;
  std::vector<CookieRecord> cookies;
  std::vector<JsAccessEvent> js_access_events;
  std::vector<HttpEvent> http_events;

  // First cookie matching (host, key), if any.
  const CookieRecord* find_cookie(const std::string& host,
                                  const std::string& key) const;

  friend bool operator==(const CrawlRecord&, const CrawlRecord&) = default;
};

// The full per-website protocol output: 3 setup crawls plus, when a candidate
// respawned cookie exists, reps spoofing crawls per feature and reps controls.
struct CrawlBundle {
  std::string website;
  CrawlRecord initial;
  CrawlRecord user_specific;
  CrawlRecord reappearance;
  std::map<FeatureId, std::vector<CrawlRecord>> spoof;
  std::vector<CrawlRecord> control;

  bool test_phase_present() const { return !control.empty(); }
  int reps() const { return static_cast<int>(control.size()); }

  friend bool operator==(const CrawlBundle&, const CrawlBundle&) = default;
};

// Server-side state shared by all crawls of one protocol run. Tracker streams
// split off the store's seed on first contact. clear() models wiping every
// server between visits (test-harness mode); recreated states draw from a new
// epoch of the stream rather than replaying the old one.
class TrackerStateStore {
 public:
  explicit TrackerStateStore(Rng base) : base_(base) {}

  TrackerState& state_for(const std::string& tracker_domain);

  void clear() {
    states_.clear();
    ++epoch_;
  }

 private:
  Rng base_;
  std::uint64_t epoch_ = 0;
  std::map<std::string, TrackerState> states_;
};

// One stateless page load: the cookie jar starts empty and is discarded
// afterwards; only `servers` persists across crawls.
CrawlRecord stateless_crawl(const Ecosystem& eco, const WebsiteSpec& site,
                            const BrowserProfile& profile, CrawlLabel label,
                            TrackerStateStore& servers);

// Overload resolving the website by domain; throws DataError when unknown.
CrawlRecord stateless_crawl(const Ecosystem& eco, const std::string& website,
                            const BrowserProfile& profile, CrawlLabel label,
                            TrackerStateStore& servers);

// Initial(A) and UserSpecific(B), then Reappearance(A); if any (host, key,
// value) triple survived into the reappearance crawl, the seed-shuffled
// 8*reps spoofing + reps control crawls follow. Otherwise the test phase is
// skipped and the bundle carries only the three setup crawls.
CrawlBundle run_protocol(const Ecosystem& eco, const WebsiteSpec& site,
                         const BrowserProfile& machine_a,
                         const BrowserProfile& machine_b,
                         const SpoofValues& spoof_values,
                         std::uint64_t run_seed, int reps = 11);

}  // namespace respawn
