#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "respawn/config.hpp"
#include "respawn/detection.hpp"
#include "respawn/report.hpp"

namespace respawn {

struct RunManifest {
  std::string run_id;
  std::uint64_t seed = 0;
  std::string ecosystem_path;
  std::string output_dir;
  double alpha = 0.05;
  int n_perm = 10000;
  int reps = 11;
};

void write_manifest(const std::string& path, const RunManifest& manifest);
RunManifest read_manifest(const std::string& path);

// Validates the scenario and writes the canonical ecosystem file plus the run
// manifest into `output_dir`.
void gen_stage(const Scenario& scenario, const RunManifest& manifest);

// One bundle file per website under <out>/bundles/. Existing bundles are kept
// unless `force`; per-website seeds split off the ecosystem seed, so any
// subset can be re-crawled independently and `parallel` workers produce the
// same bytes as a serial run.
struct CrawlOptions {
  int reps = 11;
  int parallel = 1;
  bool force = false;
};
std::vector<std::string> crawl_stage(const std::string& ecosystem_path,
                                     const std::string& out_dir,
                                     const std::string& run_id,
                                     const CrawlOptions& options);

// Runs detection over every bundle in the directory (sorted by filename) and
// writes one detection file. Seed defaults to the bundles' root seed.
struct DetectOptions {
  double alpha = 0.05;
  int n_perm = 10000;
  std::optional<std::uint64_t> seed;
  int parallel = 1;
};
std::vector<DetectionResult> detect_stage(const std::string& bundle_dir,
                                          const std::string& detection_path,
                                          const DetectOptions& options);

enum class ReportFormat : std::uint8_t { kJson, kCsv, kBoth };

// Builds the report from a detection file plus its bundles; errors when the
// run ids disagree. Writes report.json and/or the CSV tables into `out_dir`.
// `purposes_path` optionally names a key,purpose CSV that fills in purposes
// for cookies carrying none.
Report report_stage(const std::string& detection_path,
                    const std::string& bundle_dir,
                    const std::optional<std::string>& metadata_path,
                    const std::string& out_dir, ReportFormat format,
                    const std::optional<std::string>& purposes_path = {});

}  // namespace respawn
