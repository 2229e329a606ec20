#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "respawn/crawler.hpp"
#include "respawn/detection.hpp"
#include "respawn/report.hpp"

// File formats are documented in docs/formats.md. JSON objects serialize with
// alphabetically ordered keys, so identical inputs always produce identical
// bytes.

namespace respawn {

using json = nlohmann::json;

json profile_to_json(const BrowserProfile& p);
BrowserProfile profile_from_json(const json& j);

json cookie_to_json(const CookieRecord& c);
CookieRecord cookie_from_json(const json& j);

json crawl_record_to_json(const CrawlRecord& r);
CrawlRecord crawl_record_from_json(const json& j);

struct BundleHeader {
  std::string run_id;
  std::uint64_t root_seed = 0;
  std::uint64_t website_seed = 0;
  std::string website;
  int reps = 0;  // 0 when the test phase was skipped
};

// One header object, then one CrawlRecord object per line in canonical order
// (initial, user_specific, reappearance, spoof crawls per feature, controls).
void write_bundle(std::ostream& out, const CrawlBundle& bundle,
                  const BundleHeader& header);
std::pair<CrawlBundle, BundleHeader> read_bundle(std::istream& in);

json detection_result_to_json(const DetectionResult& r);
DetectionResult detection_result_from_json(const json& j);

struct DetectionHeader {
  std::string run_id;
  std::uint64_t seed = 0;
  double alpha = 0.05;
  int n_perm = 10000;
};

void write_detection(std::ostream& out,
                     const std::vector<DetectionResult>& results,
                     const DetectionHeader& header);
std::pair<std::vector<DetectionResult>, DetectionHeader> read_detection(
    std::istream& in);

json report_to_json(const Report& report);

// One CSV per report table, written into `dir` with fixed headers and field
// order; metadata tables only when present.
void write_report_csv(const Report& report, const std::string& dir);

// domain,rank,category,country with an optional header row; empty fields mean
// absent.
SiteMetadata read_site_metadata(std::istream& in);

// key,purpose rows with an optional header; purposes use the serialized
// purpose names.
PurposeOverrides read_purpose_overrides(std::istream& in);

}  // namespace respawn
