#include "respawn/serialize.hpp"

#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "respawn/errors.hpp"

namespace respawn {

namespace {

constexpr std::string_view kBundleFormat = "respawnlab-bundle/1";
constexpr std::string_view kDetectionFormat = "respawnlab-detection/1";

json parse_line(const std::string& line, const char* what) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded()) {
    throw DataError(std::string("malformed JSON in ") + what);
  }
  return j;
}

const json& field(const json& j, const char* key, const char* what) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw DataError(std::string(what) + ": missing field '" + key + "'");
  }
  return *it;
}

FeatureId feature_field(const json& j, const char* what) {
  const auto id = feature_from_name(j.get<std::string>());
  if (!id) {
    throw DataError(std::string(what) + ": unknown feature '" +
                    j.get<std::string>() + "'");
  }
  return *id;
}

json feature_set_to_json(FeatureSet set) {
  json out = json::array();
  for (FeatureId f : kAllFeatures) {
    if (set.contains(f)) out.push_back(std::string(feature_name(f)));
  }
  return out;
}

FeatureSet feature_set_from_json(const json& j, const char* what) {
  FeatureSet set;
  for (const json& name : j) set.insert(feature_field(name, what));
  return set;
}

json duration_to_json(const CookieDuration& d) {
  if (d.persistent) return {{"days", d.lifetime_days}, {"kind", "persistent"}};
  return {{"kind", "session"}};
}

CookieDuration duration_from_json(const json& j) {
  const std::string kind = field(j, "kind", "duration").get<std::string>();
  if (kind == "session") return CookieDuration::session();
  if (kind == "persistent") {
    return CookieDuration::persistent_for(field(j, "days", "duration").get<int>());
  }
  throw DataError("duration: unknown kind '" + kind + "'");
}

}  // namespace

json profile_to_json(const BrowserProfile& p) {
  json features = json::object();
  for (FeatureId f : kAllFeatures) {
    features[std::string(feature_name(f))] = p.features[f];
  }
  return {{"features", features},
          {"profile_id", p.profile_id},
          {"spoofed", feature_set_to_json(p.spoofed)},
          {"unstudied", p.unstudied}};
}

BrowserProfile profile_from_json(const json& j) {
  BrowserProfile p;
  p.profile_id = field(j, "profile_id", "profile").get<std::string>();
  const json& features = field(j, "features", "profile");
  for (FeatureId f : kAllFeatures) {
    p.features[f] = field(features, std::string(feature_name(f)).c_str(),
                          "profile.features")
                        .get<std::string>();
  }
  p.spoofed = feature_set_from_json(field(j, "spoofed", "profile"), "profile");
  p.unstudied = field(j, "unstudied", "profile").get<std::string>();
  return p;
}

json cookie_to_json(const CookieRecord& c) {
  json mechanism;
  if (c.set_mechanism.kind == SetMechanismKind::kHeader) {
    mechanism = {{"kind", "header"}, {"server", c.set_mechanism.server}};
  } else {
    mechanism = {{"context_host", c.set_mechanism.context_host},
                 {"kind", "script"},
                 {"script_host", c.set_mechanism.script_host}};
  }
  return {{"duration", duration_to_json(c.duration)},
          {"host", c.host},
          {"key", c.key},
          {"mechanism", mechanism},
          {"owner", c.owner},
          {"party", c.party == CookieParty::kFirstParty ? "first_party"
                                                        : "third_party"},
          {"purpose", std::string(purpose_name(c.purpose))},
          {"value", c.value}};
}

CookieRecord cookie_from_json(const json& j) {
  CookieRecord c;
  c.host = field(j, "host", "cookie").get<std::string>();
  c.key = field(j, "key", "cookie").get<std::string>();
  c.value = field(j, "value", "cookie").get<std::string>();
  const json& mech = field(j, "mechanism", "cookie");
  const std::string kind = field(mech, "kind", "cookie.mechanism").get<std::string>();
  if (kind == "header") {
    c.set_mechanism = {SetMechanismKind::kHeader,
                       field(mech, "server", "cookie.mechanism").get<std::string>(),
                       "", ""};
  } else if (kind == "script") {
    c.set_mechanism = {
        SetMechanismKind::kScript, "",
        field(mech, "script_host", "cookie.mechanism").get<std::string>(),
        field(mech, "context_host", "cookie.mechanism").get<std::string>()};
  } else {
    throw DataError("cookie.mechanism: unknown kind '" + kind + "'");
  }
  c.owner = field(j, "owner", "cookie").get<std::string>();
  const std::string party = field(j, "party", "cookie").get<std::string>();
  if (party == "first_party") {
    c.party = CookieParty::kFirstParty;
  } else if (party == "third_party") {
    c.party = CookieParty::kThirdParty;
  } else {
    throw DataError("cookie: unknown party '" + party + "'");
  }
  c.duration = duration_from_json(field(j, "duration", "cookie"));
  const auto purpose =
      purpose_from_name(field(j, "purpose", "cookie").get<std::string>());
  if (!purpose) throw DataError("cookie: unknown purpose");
  c.purpose = *purpose;
  return c;
}

namespace {

json label_to_json(const CrawlLabel& label) {
  switch (label.kind) {
    case CrawlLabelKind::kInitial: return {{"kind", "initial"}};
    case CrawlLabelKind::kUserSpecific: return {{"kind", "user_specific"}};
    case CrawlLabelKind::kReappearance: return {{"kind", "reappearance"}};
    case CrawlLabelKind::kSpoof:
      return {{"feature", std::string(feature_name(label.feature))},
              {"kind", "spoof"},
              {"rep", label.rep}};
    case CrawlLabelKind::kControl:
      return {{"kind", "control"}, {"rep", label.rep}};
  }
  throw DataError("crawl label: unknown kind");
}

CrawlLabel label_from_json(const json& j) {
  const std::string kind = field(j, "kind", "label").get<std::string>();
  if (kind == "initial") return {CrawlLabelKind::kInitial};
  if (kind == "user_specific") return {CrawlLabelKind::kUserSpecific};
  if (kind == "reappearance") return {CrawlLabelKind::kReappearance};
  if (kind == "spoof") {
    return {CrawlLabelKind::kSpoof,
            feature_field(field(j, "feature", "label"), "label"),
            field(j, "rep", "label").get<int>()};
  }
  if (kind == "control") {
    return {CrawlLabelKind::kControl, FeatureId::kAcceptLanguage,
            field(j, "rep", "label").get<int>()};
  }
  throw DataError("label: unknown kind '" + kind + "'");
}

}  // namespace

json crawl_record_to_json(const CrawlRecord& r) {
  json cookies = json::array();
  for (const CookieRecord& c : r.cookies) cookies.push_back(cookie_to_json(c));
  json js_events = json::array();
  for (const JsAccessEvent& ev : r.js_access_events) {
    js_events.push_back({{"context_host", ev.context_host},
                         {"feature", std::string(feature_name(ev.feature))},
                         {"script_host", ev.script_host}});
  }
  json http_events = json::array();
  for (const HttpEvent& ev : r.http_events) {
    http_events.push_back({{"headers",
                            {{"accept_language", ev.accept_language},
                             {"dnt", ev.dnt},
                             {"ip", ev.ip},
                             {"user_agent", ev.user_agent}}},
                           {"server", ev.server}});
  }
  return {{"cookies", cookies},
          {"http_events", http_events},
          {"js_access_events", js_events},
          {"label", label_to_json(r.label)},
          {"profile", profile_to_json(r.profile_snapshot)},
          {"website", r.website}};
}

CrawlRecord crawl_record_from_json(const json& j) {
  CrawlRecord r;
  r.website = field(j, "website", "crawl record").get<std::string>();
  r.profile_snapshot = profile_from_json(field(j, "profile", "crawl record"));
  r.label = label_from_json(field(j, "label", "crawl record"));
  for (const json& c : field(j, "cookies", "crawl record")) {
    r.cookies.push_back(cookie_from_json(c));
  }
  for (const json& ev : field(j, "js_access_events", "crawl record")) {
    r.js_access_events.push_back(
        {field(ev, "script_host", "js event").get<std::string>(),
         field(ev, "context_host", "js event").get<std::string>(),
         feature_field(field(ev, "feature", "js event"), "js event")});
  }
  for (const json& ev : field(j, "http_events", "crawl record")) {
    const json& headers = field(ev, "headers", "http event");
    r.http_events.push_back(
        {field(ev, "server", "http event").get<std::string>(),
         field(headers, "ip", "http event").get<std::string>(),
         field(headers, "user_agent", "http event").get<std::string>(),
         field(headers, "accept_language", "http event").get<std::string>(),
         field(headers, "dnt", "http event").get<std::string>()});
  }
  return r;
}

void write_bundle(std::ostream& out, const CrawlBundle& bundle,
                  const BundleHeader& header) {
  const json head = {{"format", std::string(kBundleFormat)},
                     {"reps", bundle.reps()},
                     {"root_seed", header.root_seed},
                     {"run_id", header.run_id},
                     {"website", bundle.website},
                     {"website_seed", header.website_seed}};
  out << head.dump() << '\n';
  out << crawl_record_to_json(bundle.initial).dump() << '\n';
  out << crawl_record_to_json(bundle.user_specific).dump() << '\n';
  out << crawl_record_to_json(bundle.reappearance).dump() << '\n';
  for (FeatureId f : kAllFeatures) {
    auto it = bundle.spoof.find(f);
    if (it == bundle.spoof.end()) continue;
    for (const CrawlRecord& r : it->second) {
      out << crawl_record_to_json(r).dump() << '\n';
    }
  }
  for (const CrawlRecord& r : bundle.control) {
    out << crawl_record_to_json(r).dump() << '\n';
  }
}

std::pair<CrawlBundle, BundleHeader> read_bundle(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("bundle file is empty");
  const json head = parse_line(line, "bundle header");
  if (field(head, "format", "bundle header").get<std::string>() != kBundleFormat) {
    throw DataError("bundle header: unexpected format tag");
  }
  BundleHeader header;
  header.run_id = field(head, "run_id", "bundle header").get<std::string>();
  header.root_seed = field(head, "root_seed", "bundle header").get<std::uint64_t>();
  header.website_seed =
      field(head, "website_seed", "bundle header").get<std::uint64_t>();
  header.website = field(head, "website", "bundle header").get<std::string>();
  header.reps = field(head, "reps", "bundle header").get<int>();

  CrawlBundle bundle;
  bundle.website = header.website;
  if (header.reps > 0) {
    for (FeatureId f : kAllFeatures) {
      bundle.spoof[f].resize(static_cast<std::size_t>(header.reps));
    }
    bundle.control.resize(static_cast<std::size_t>(header.reps));
  }

  bool have_initial = false, have_user_specific = false, have_reappearance = false;
  std::vector<bool> seen_control(static_cast<std::size_t>(header.reps), false);
  std::map<FeatureId, std::vector<bool>> seen_spoof;
  for (FeatureId f : kAllFeatures) {
    seen_spoof[f].assign(static_cast<std::size_t>(header.reps), false);
  }

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    CrawlRecord record = crawl_record_from_json(parse_line(line, "bundle record"));
    if (record.website != header.website) {
      throw DataError("bundle record website '" + record.website +
                      "' does not match header '" + header.website + "'");
    }
    switch (record.label.kind) {
      case CrawlLabelKind::kInitial:
        if (have_initial) throw DataError("bundle: duplicate initial crawl");
        bundle.initial = std::move(record);
        have_initial = true;
        break;
      case CrawlLabelKind::kUserSpecific:
        if (have_user_specific) {
          throw DataError("bundle: duplicate user-specific crawl");
        }
        bundle.user_specific = std::move(record);
        have_user_specific = true;
        break;
      case CrawlLabelKind::kReappearance:
        if (have_reappearance) {
          throw DataError("bundle: duplicate reappearance crawl");
        }
        bundle.reappearance = std::move(record);
        have_reappearance = true;
        break;
      case CrawlLabelKind::kSpoof: {
        const int rep = record.label.rep;
        if (header.reps == 0 || rep < 1 || rep > header.reps) {
          throw DataError("bundle: spoof record with out-of-range rep");
        }
        const FeatureId f = record.label.feature;
        if (seen_spoof[f][static_cast<std::size_t>(rep - 1)]) {
          throw DataError("bundle: duplicate spoof crawl");
        }
        bundle.spoof[f][static_cast<std::size_t>(rep - 1)] = std::move(record);
        seen_spoof[f][static_cast<std::size_t>(rep - 1)] = true;
        break;
      }
      case CrawlLabelKind::kControl: {
        const int rep = record.label.rep;
        if (header.reps == 0 || rep < 1 || rep > header.reps) {
          throw DataError("bundle: control record with out-of-range rep");
        }
        if (seen_control[static_cast<std::size_t>(rep - 1)]) {
          throw DataError("bundle: duplicate control crawl");
        }
        bundle.control[static_cast<std::size_t>(rep - 1)] = std::move(record);
        seen_control[static_cast<std::size_t>(rep - 1)] = true;
        break;
      }
    }
  }

  if (!have_initial || !have_user_specific || !have_reappearance) {
    throw DataError("bundle for '" + header.website + "' is missing setup crawls");
  }
  for (FeatureId f : kAllFeatures) {
    for (bool seen : seen_spoof[f]) {
      if (!seen) {
        throw DataError("bundle for '" + header.website +
                        "' is missing spoof crawls for feature '" +
                        std::string(feature_name(f)) + "'");
      }
    }
  }
  for (bool seen : seen_control) {
    if (!seen) {
      throw DataError("bundle for '" + header.website +
                      "' is missing control crawls");
    }
  }
  return {std::move(bundle), std::move(header)};
}

json detection_result_to_json(const DetectionResult& r) {
  json status;
  switch (r.status) {
    case DetectionStatus::kExcluded:
      status = {{"kind", "excluded"},
                {"reason", std::string(exclusion_reason_name(r.exclusion))}};
      break;
    case DetectionStatus::kFeatureDependent:
    case DetectionStatus::kNotFeatureDependent: {
      json p_values = json::object();
      for (const auto& [f, p] : r.p_values) {
        p_values[std::string(feature_name(f))] = p;
      }
      status = {{"control_restored", r.control_restored},
                {"features", feature_set_to_json(r.features)},
                {"kind", r.status == DetectionStatus::kFeatureDependent
                             ? "feature_dependent"
                             : "not_feature_dependent"},
                {"p_values", p_values}};
      break;
    }
  }
  return {{"cookie", cookie_to_json(r.cookie)},
          {"status", status},
          {"website", r.website}};
}

DetectionResult detection_result_from_json(const json& j) {
  DetectionResult r;
  r.website = field(j, "website", "detection result").get<std::string>();
  r.cookie = cookie_from_json(field(j, "cookie", "detection result"));
  const json& status = field(j, "status", "detection result");
  const std::string kind = field(status, "kind", "status").get<std::string>();
  if (kind == "excluded") {
    r.status = DetectionStatus::kExcluded;
    const auto reason = exclusion_reason_from_name(
        field(status, "reason", "status").get<std::string>());
    if (!reason) throw DataError("detection result: unknown exclusion reason");
    r.exclusion = *reason;
    return r;
  }
  if (kind != "feature_dependent" && kind != "not_feature_dependent") {
    throw DataError("detection result: unknown status kind '" + kind + "'");
  }
  r.status = kind == "feature_dependent" ? DetectionStatus::kFeatureDependent
                                         : DetectionStatus::kNotFeatureDependent;
  r.features = feature_set_from_json(field(status, "features", "status"), "status");
  for (const auto& [name, p] : field(status, "p_values", "status").items()) {
    const auto f = feature_from_name(name);
    if (!f) throw DataError("detection result: unknown feature in p_values");
    r.p_values.emplace(*f, p.get<double>());
  }
  r.control_restored = field(status, "control_restored", "status").get<bool>();
  return r;
}

void write_detection(std::ostream& out,
                     const std::vector<DetectionResult>& results,
                     const DetectionHeader& header) {
  const json head = {{"alpha", header.alpha},
                     {"format", std::string(kDetectionFormat)},
                     {"n_perm", header.n_perm},
                     {"run_id", header.run_id},
                     {"seed", header.seed}};
  out << head.dump() << '\n';
  for (const DetectionResult& r : results) {
    out << detection_result_to_json(r).dump() << '\n';
  }
}

std::pair<std::vector<DetectionResult>, DetectionHeader> read_detection(
    std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("detection file is empty");
  const json head = parse_line(line, "detection header");
  if (field(head, "format", "detection header").get<std::string>() !=
      kDetectionFormat) {
    throw DataError("detection header: unexpected format tag");
  }
  DetectionHeader header;
  header.run_id = field(head, "run_id", "detection header").get<std::string>();
  header.seed = field(head, "seed", "detection header").get<std::uint64_t>();
  header.alpha = field(head, "alpha", "detection header").get<double>();
  header.n_perm = field(head, "n_perm", "detection header").get<int>();

  std::vector<DetectionResult> results;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    results.push_back(
        detection_result_from_json(parse_line(line, "detection record")));
  }
  return {std::move(results), std::move(header)};
}

json report_to_json(const Report& report) {
  auto funnel_row = [](const FunnelRow& row) {
    return json{{"cookies", row.cookies}, {"websites", row.websites}};
  };
  json per_feature = json::object();
  for (const auto& [f, count] : report.per_feature) {
    per_feature[std::string(feature_name(f))] = count;
  }
  json per_set = json::array();
  {
    std::vector<std::pair<FeatureSet, int>> sets(report.per_set.begin(),
                                                 report.per_set.end());
    std::sort(sets.begin(), sets.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return feature_set_name(a.first) < feature_set_name(b.first);
    });
    for (const auto& [set, count] : sets) {
      per_set.push_back({{"count", count}, {"features", feature_set_name(set)}});
    }
  }
  auto domain_set = [](const std::set<std::string>& s) {
    return json(std::vector<std::string>(s.begin(), s.end()));
  };
  json third_party = json::array();
  for (const auto& [host, count] : report.third_party) {
    third_party.push_back({{"host", host}, {"websites", count}});
  }
  json cross_site = json::array();
  for (const CrossSiteGroup& g : report.cross_site) {
    cross_site.push_back({{"key", g.key},
                          {"owner", g.owner},
                          {"value", g.value},
                          {"websites", g.websites}});
  }
  json consent_entries = json::array();
  for (const ConsentTableEntry& e : report.consent_entries) {
    std::string outcome = e.outcome == ConsentOutcome::kRequiresConsent
                              ? "requires_consent"
                              : e.outcome == ConsentOutcome::kExempt
                                    ? "exempt"
                                    : "unclassifiable";
    consent_entries.push_back(
        {{"duration", e.persistent ? "persistent" : "session"},
         {"host", e.host},
         {"key", e.key},
         {"outcome", outcome},
         {"owner", e.owner},
         {"party", e.party == CookieParty::kFirstParty ? "first_party"
                                                       : "third_party"},
         {"purpose", std::string(purpose_name(e.purpose))},
         {"website", e.website}});
  }

  json out = {
      {"alpha", report.alpha},
      {"consent",
       {{"entries", consent_entries},
        {"exempt", report.consent_exempt_count},
        {"requires_consent", report.consent_required_count},
        {"unclassifiable", report.consent_unclassifiable_count}}},
      {"exclusions", report.exclusions},
      {"feature_sets", per_set},
      {"features", per_feature},
      {"first_party_cross_site", cross_site},
      {"format", "respawnlab-report/1"},
      {"funnel",
       {{"collected", funnel_row(report.collected)},
        {"feature_dependent", funnel_row(report.feature_dependent)},
        {"reappearing", funnel_row(report.reappearing)},
        {"user_specific", funnel_row(report.user_specific)}}},
      {"host_owner_overlap",
       {{"both", domain_set(report.overlap.both)},
        {"host_only", domain_set(report.overlap.host_only)},
        {"owner_only", domain_set(report.overlap.owner_only)}}},
      {"limitations", report.limitations},
      {"n_perm", report.n_perm},
      {"respawner_classes", report.respawner_classes},
      {"run_id", report.run_id},
      {"third_party_ranking", third_party},
  };
  if (report.has_metadata) {
    json buckets = json::array();
    for (const RankBucket& b : report.rank_buckets) {
      buckets.push_back(
          {{"label", b.label}, {"owners", b.owners}, {"websites", b.websites}});
    }
    out["metadata"] = {{"categories", report.category_counts},
                       {"owner_countries", report.owner_country_counts},
                       {"rank_buckets", buckets}};
  } else {
    out["metadata"] = nullptr;
  }
  return out;
}

namespace {

std::string csv_escape(const std::string& value) {
  if (value.find_first_of(",\"\n") == std::string::npos) return value;
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::ofstream open_csv(const std::string& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  std::ofstream out(std::filesystem::path(dir) / name, std::ios::binary);
  if (!out) throw DataError("cannot write " + dir + "/" + name);
  return out;
}

}  // namespace

void write_report_csv(const Report& report, const std::string& dir) {
  {
    auto out = open_csv(dir, "funnel.csv");
    out << "stage,cookies,websites\n";
    out << "collected," << report.collected.cookies << ','
        << report.collected.websites << '\n';
    out << "reappearing," << report.reappearing.cookies << ','
        << report.reappearing.websites << '\n';
    out << "user_specific," << report.user_specific.cookies << ','
        << report.user_specific.websites << '\n';
    out << "feature_dependent," << report.feature_dependent.cookies << ','
        << report.feature_dependent.websites << '\n';
  }
  {
    auto out = open_csv(dir, "exclusions.csv");
    out << "reason,count\n";
    for (const auto& [reason, count] : report.exclusions) {
      out << reason << ',' << count << '\n';
    }
  }
  {
    auto out = open_csv(dir, "features.csv");
    out << "feature,count\n";
    for (const auto& [f, count] : report.per_feature) {
      out << feature_name(f) << ',' << count << '\n';
    }
  }
  {
    auto out = open_csv(dir, "feature_sets.csv");
    out << "feature_set,count\n";
    std::vector<std::pair<FeatureSet, int>> sets(report.per_set.begin(),
                                                 report.per_set.end());
    std::sort(sets.begin(), sets.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return feature_set_name(a.first) < feature_set_name(b.first);
    });
    for (const auto& [set, count] : sets) {
      out << feature_set_name(set) << ',' << count << '\n';
    }
  }
  {
    auto out = open_csv(dir, "host_owner_overlap.csv");
    out << "domain,appears_as\n";
    for (const std::string& d : report.overlap.host_only) out << d << ",host_only\n";
    for (const std::string& d : report.overlap.owner_only) out << d << ",owner_only\n";
    for (const std::string& d : report.overlap.both) out << d << ",both\n";
  }
  {
    auto out = open_csv(dir, "respawner_classes.csv");
    out << "verdict,count\n";
    for (const auto& [verdict, count] : report.respawner_classes) {
      out << verdict << ',' << count << '\n';
    }
  }
  {
    auto out = open_csv(dir, "third_party_ranking.csv");
    out << "host,websites\n";
    for (const auto& [host, count] : report.third_party) {
      out << host << ',' << count << '\n';
    }
  }
  {
    auto out = open_csv(dir, "first_party_cross_site.csv");
    out << "owner,key,value,websites\n";
    for (const CrossSiteGroup& g : report.cross_site) {
      std::string sites;
      for (const std::string& s : g.websites) {
        if (!sites.empty()) sites += ';';
        sites += s;
      }
      out << csv_escape(g.owner) << ',' << csv_escape(g.key) << ','
          << csv_escape(g.value) << ',' << csv_escape(sites) << '\n';
    }
  }
  {
    auto out = open_csv(dir, "consent.csv");
    out << "website,host,key,owner,party,duration,purpose,outcome\n";
    for (const ConsentTableEntry& e : report.consent_entries) {
      const std::string outcome = e.outcome == ConsentOutcome::kRequiresConsent
                                      ? "requires_consent"
                                      : e.outcome == ConsentOutcome::kExempt
                                            ? "exempt"
                                            : "unclassifiable";
      out << csv_escape(e.website) << ',' << csv_escape(e.host) << ','
          << csv_escape(e.key) << ',' << csv_escape(e.owner) << ','
          << (e.party == CookieParty::kFirstParty ? "first_party" : "third_party")
          << ',' << (e.persistent ? "persistent" : "session") << ','
          << purpose_name(e.purpose) << ',' << outcome << '\n';
    }
  }
  if (report.has_metadata) {
    {
      auto out = open_csv(dir, "rank_buckets.csv");
      out << "bucket,websites,owners\n";
      for (const RankBucket& b : report.rank_buckets) {
        out << b.label << ',' << b.websites << ',' << b.owners << '\n';
      }
    }
    {
      auto out = open_csv(dir, "categories.csv");
      out << "category,websites\n";
      for (const auto& [category, count] : report.category_counts) {
        out << csv_escape(category) << ',' << count << '\n';
      }
    }
    {
      auto out = open_csv(dir, "owner_countries.csv");
      out << "country,owners\n";
      for (const auto& [country, count] : report.owner_country_counts) {
        out << csv_escape(country) << ',' << count << '\n';
      }
    }
  }
}

SiteMetadata read_site_metadata(std::istream& in) {
  SiteMetadata metadata;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) fields.push_back(cell);
    fields.resize(4);
    if (first) {
      first = false;
      if (fields[0] == "domain") continue;  // header row
    }
    SiteMetadata::Entry entry;
    if (!fields[1].empty()) {
      try {
        entry.rank = std::stoi(fields[1]);
      } catch (const std::exception&) {
        throw DataError("metadata: bad rank '" + fields[1] + "' for domain '" +
                        fields[0] + "'");
      }
    }
    if (!fields[2].empty()) entry.category = fields[2];
    if (!fields[3].empty()) entry.country = fields[3];
    metadata.entries[fields[0]] = std::move(entry);
  }
  return metadata;
}

PurposeOverrides read_purpose_overrides(std::istream& in) {
  PurposeOverrides overrides;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::size_t comma = line.find(',');
    if (comma == std::string::npos) {
      throw DataError("purpose map: expected key,purpose but got '" + line + "'");
    }
    const std::string key = line.substr(0, comma);
    const std::string purpose_text = line.substr(comma + 1);
    if (first) {
      first = false;
      if (key == "key") continue;  // header row
    }
    const auto purpose = purpose_from_name(purpose_text);
    if (!purpose) {
      throw DataError("purpose map: unknown purpose '" + purpose_text +
                      "' for key '" + key + "'");
    }
    overrides[key] = *purpose;
  }
  return overrides;
}

}  // namespace respawn
