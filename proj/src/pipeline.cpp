#include "respawn/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>

#include "respawn/errors.hpp"
#include "respawn/serialize.hpp"

namespace respawn {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kManifestFormat = "respawnlab-manifest/1";

void run_parallel(int workers, int jobs, const std::function<void(int)>& fn) {
  if (workers <= 1 || jobs <= 1) {
    for (int i = 0; i < jobs; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const int n_threads = std::min(workers, jobs);
  pool.reserve(static_cast<std::size_t>(n_threads));
  for (int t = 0; t < n_threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= jobs) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          return;
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::string sanitize_filename(const std::string& domain) {
  std::string out = domain;
  for (char& c : out) {
    if (c == '/' || c == '\\') c = '_';
  }
  return out;
}

}  // namespace

void write_manifest(const std::string& path, const RunManifest& manifest) {
  const json j = {{"alpha", manifest.alpha},
                  {"ecosystem", manifest.ecosystem_path},
                  {"format", std::string(kManifestFormat)},
                  {"n_perm", manifest.n_perm},
                  {"output_dir", manifest.output_dir},
                  {"reps", manifest.reps},
                  {"run_id", manifest.run_id},
                  {"seed", manifest.seed}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

RunManifest read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw DataError("'" + path + "' is not valid JSON");
  auto get = [&](const char* key) -> const json& {
    auto it = j.find(key);
    if (it == j.end()) {
      throw DataError("manifest: missing field '" + std::string(key) + "'");
    }
    return *it;
  };
  if (get("format").get<std::string>() != kManifestFormat) {
    throw DataError("manifest: unexpected format tag");
  }
  RunManifest m;
  m.run_id = get("run_id").get<std::string>();
  m.seed = get("seed").get<std::uint64_t>();
  m.ecosystem_path = get("ecosystem").get<std::string>();
  m.output_dir = get("output_dir").get<std::string>();
  m.alpha = get("alpha").get<double>();
  m.n_perm = get("n_perm").get<int>();
  m.reps = get("reps").get<int>();
  return m;
}

void gen_stage(const Scenario& scenario, const RunManifest& manifest) {
  fs::create_directories(manifest.output_dir);
  write_scenario(manifest.ecosystem_path, scenario);
  // paths inside the manifest are relative to its own directory, so rerunning
  // the same seed elsewhere produces identical bytes
  RunManifest stored = manifest;
  stored.ecosystem_path =
      fs::relative(manifest.ecosystem_path, manifest.output_dir).string();
  stored.output_dir = ".";
  write_manifest((fs::path(manifest.output_dir) / "manifest.json").string(),
                 stored);
}

std::vector<std::string> crawl_stage(const std::string& ecosystem_path,
                                     const std::string& out_dir,
                                     const std::string& run_id,
                                     const CrawlOptions& options) {
  const Scenario scenario = load_scenario(ecosystem_path);
  const fs::path bundle_dir = fs::path(out_dir) / "bundles";
  fs::create_directories(bundle_dir);

  const Rng root(scenario.ecosystem.seed);
  std::vector<std::string> paths(scenario.ecosystem.websites.size());

  run_parallel(options.parallel,
               static_cast<int>(scenario.ecosystem.websites.size()),
               [&](int i) {
    const WebsiteSpec& site =
        scenario.ecosystem.websites[static_cast<std::size_t>(i)];
    const fs::path path =
        bundle_dir / (sanitize_filename(site.domain) + ".jsonl");
    paths[static_cast<std::size_t>(i)] = path.string();
    if (!options.force && fs::exists(path)) return;  // resumable

    const std::uint64_t website_seed =
        root.split("website").split(site.domain).seed();
    const CrawlBundle bundle =
        run_protocol(scenario.ecosystem, site, scenario.machine_a,
                     scenario.machine_b, scenario.spoof_values, website_seed,
                     options.reps);
    BundleHeader header;
    header.run_id = run_id;
    header.root_seed = scenario.ecosystem.seed;
    header.website_seed = website_seed;
    header.website = site.domain;

    std::ostringstream buffer;
    write_bundle(buffer, bundle, header);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << buffer.str();
  });

  std::sort(paths.begin(), paths.end());
  return paths;
}

namespace {

std::vector<std::string> list_bundle_files(const std::string& bundle_dir) {
  std::vector<std::string> files;
  if (!fs::is_directory(bundle_dir)) {
    throw DataError("bundle directory '" + bundle_dir + "' does not exist");
  }
  for (const auto& entry : fs::directory_iterator(bundle_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
      files.push_back(entry.path().string());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::pair<CrawlBundle, BundleHeader> load_bundle(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  try {
    return read_bundle(in);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

}  // namespace

std::vector<DetectionResult> detect_stage(const std::string& bundle_dir,
                                          const std::string& detection_path,
                                          const DetectOptions& options) {
  const std::vector<std::string> files = list_bundle_files(bundle_dir);

  std::vector<std::vector<DetectionResult>> per_bundle(files.size());
  std::vector<std::string> run_ids(files.size());
  std::vector<std::uint64_t> root_seeds(files.size());

  run_parallel(options.parallel, static_cast<int>(files.size()), [&](int i) {
    auto [bundle, header] = load_bundle(files[static_cast<std::size_t>(i)]);
    run_ids[static_cast<std::size_t>(i)] = header.run_id;
    root_seeds[static_cast<std::size_t>(i)] = header.root_seed;
    DetectionParams params;
    params.alpha = options.alpha;
    params.n_perm = options.n_perm;
    params.seed = options.seed.value_or(header.root_seed);
    per_bundle[static_cast<std::size_t>(i)] =
        detect_feature_dependencies(bundle, params);
  });

  for (std::size_t i = 1; i < files.size(); ++i) {
    if (run_ids[i] != run_ids[0]) {
      throw DataError("bundles carry mixed run ids ('" + run_ids[0] + "' vs '" +
                      run_ids[i] + "')");
    }
  }

  std::vector<DetectionResult> results;
  for (auto& chunk : per_bundle) {
    results.insert(results.end(), std::make_move_iterator(chunk.begin()),
                   std::make_move_iterator(chunk.end()));
  }

  DetectionHeader header;
  header.run_id = files.empty() ? "" : run_ids[0];
  header.seed = options.seed.value_or(files.empty() ? 0 : root_seeds[0]);
  header.alpha = options.alpha;
  header.n_perm = options.n_perm;

  std::ostringstream buffer;
  write_detection(buffer, results, header);
  std::ofstream out(detection_path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + detection_path + "'");
  out << buffer.str();
  return results;
}

Report report_stage(const std::string& detection_path,
                    const std::string& bundle_dir,
                    const std::optional<std::string>& metadata_path,
                    const std::string& out_dir, ReportFormat format,
                    const std::optional<std::string>& purposes_path) {
  std::ifstream in(detection_path);
  if (!in) throw DataError("cannot open '" + detection_path + "'");
  auto [results, detection_header] = read_detection(in);

  if (purposes_path) {
    std::ifstream purposes_in(*purposes_path);
    if (!purposes_in) throw ConfigError("cannot open '" + *purposes_path + "'");
    apply_purpose_overrides(results, read_purpose_overrides(purposes_in));
  }

  std::vector<CrawlBundle> bundles;
  for (const std::string& file : list_bundle_files(bundle_dir)) {
    auto [bundle, header] = load_bundle(file);
    if (!detection_header.run_id.empty() &&
        header.run_id != detection_header.run_id) {
      throw DataError("run id mismatch: detection file is '" +
                      detection_header.run_id + "' but bundle '" + file +
                      "' is '" + header.run_id + "'");
    }
    bundles.push_back(std::move(bundle));
  }

  std::optional<SiteMetadata> metadata;
  if (metadata_path) {
    std::ifstream meta_in(*metadata_path);
    if (!meta_in) throw ConfigError("cannot open '" + *metadata_path + "'");
    metadata = read_site_metadata(meta_in);
  }

  ReportContext context;
  context.run_id = detection_header.run_id;
  context.alpha = detection_header.alpha;
  context.n_perm = detection_header.n_perm;
  const Report report = build_report(results, bundles, metadata, context);

  fs::create_directories(out_dir);
  if (format == ReportFormat::kJson || format == ReportFormat::kBoth) {
    std::ofstream out(fs::path(out_dir) / "report.json", std::ios::binary);
    if (!out) throw DataError("cannot write report.json");
    out << report_to_json(report).dump(2) << '\n';
  }
  if (format == ReportFormat::kCsv || format == ReportFormat::kBoth) {
    write_report_csv(report, out_dir);
  }
  return report;
}

}  // namespace respawn
