// respawnlab: simulate a fingerprint-respawning web ecosystem, run the
// sequential crawling protocol against it, and detect which features each
// respawned cookie depends on. See README.md for a walkthrough.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "respawn/config.hpp"
#include "respawn/errors.hpp"
#include "respawn/pipeline.hpp"

namespace fs = std::filesystem;

using namespace respawn;

namespace {

std::string default_run_id(std::uint64_t seed) {
  return "run-" + std::to_string(seed);
}

int cmd_gen(const std::string& config_path, std::optional<int> sites,
            double respawn_frac, std::optional<std::uint64_t> seed,
            std::string run_id, const std::string& out_dir) {
  Scenario scenario;
  if (sites) {
    RandomEcosystemOptions options;
    options.sites = *sites;
    options.respawn_frac = respawn_frac;
    scenario = random_scenario(seed.value_or(0), options);
  } else {
    if (config_path.empty()) {
      throw ConfigError("gen needs either --config or --sites");
    }
    scenario = load_scenario(config_path);
    if (seed) scenario.ecosystem.seed = *seed;  // else keep the config's seed
  }
  if (run_id.empty()) run_id = default_run_id(scenario.ecosystem.seed);

  RunManifest manifest;
  manifest.run_id = run_id;
  manifest.seed = scenario.ecosystem.seed;
  manifest.output_dir = out_dir;
  manifest.ecosystem_path = (fs::path(out_dir) / "ecosystem.json").string();
  gen_stage(scenario, manifest);
  std::cout << "wrote " << manifest.ecosystem_path << " ("
            << scenario.ecosystem.websites.size() << " websites, "
            << scenario.ecosystem.trackers.size() << " trackers)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cookie-respawning simulation and detection pipeline"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "validate a config or generate a random ecosystem");
  std::string gen_config;
  std::optional<int> gen_sites;
  double gen_respawn_frac = 0.25;
  std::optional<std::uint64_t> gen_seed;
  std::string gen_run_id;
  std::string gen_out = "out";
  gen->add_option("--config", gen_config, "ecosystem config file");
  gen->add_option("--sites", gen_sites, "randomized mode: number of websites");
  gen->add_option("--respawn-frac", gen_respawn_frac,
                  "randomized mode: fraction of sites with a respawning tracker");
  gen->add_option("--seed", gen_seed,
                  "root seed (default: the config file's seed)")
      ->envname("RESPAWNLAB_SEED");
  gen->add_option("--run-id", gen_run_id, "run identifier (default run-<seed>)");
  gen->add_option("--out", gen_out, "output directory");

  // crawl
  auto* crawl = app.add_subcommand("crawl", "run the sequential crawling protocol per website");
  std::string crawl_ecosystem;
  std::string crawl_out = "out";
  std::string crawl_run_id;
  int crawl_reps = 11;
  int crawl_parallel = 1;
  bool crawl_force = false;
  crawl->add_option("--ecosystem", crawl_ecosystem, "ecosystem file")->required();
  crawl->add_option("--out", crawl_out, "output directory (bundles/ inside)");
  crawl->add_option("--run-id", crawl_run_id, "run identifier");
  crawl->add_option("--reps", crawl_reps, "crawls per configuration")
      ->check(CLI::PositiveNumber);
  crawl->add_option("--parallel", crawl_parallel, "parallel website workers")
      ->check(CLI::PositiveNumber);
  crawl->add_flag("--force", crawl_force, "re-crawl websites with existing bundles");

  // detect
  auto* detect = app.add_subcommand("detect", "run the per-cookie detection pipeline");
  std::string detect_bundles;
  std::string detect_out = "out/detection.jsonl";
  double detect_alpha = 0.05;
  int detect_n_perm = 10000;
  std::optional<std::uint64_t> detect_seed;
  int detect_parallel = 1;
  detect->add_option("--bundles", detect_bundles, "bundle directory")->required();
  detect->add_option("--out", detect_out, "detection output file");
  detect->add_option("--alpha", detect_alpha, "significance threshold");
  detect->add_option("--n-perm", detect_n_perm, "permutation count")
      ->check(CLI::PositiveNumber);
  detect->add_option("--seed", detect_seed, "seed for the permutation streams")
      ->envname("RESPAWNLAB_SEED");
  detect->add_option("--parallel", detect_parallel, "parallel bundle workers")
      ->check(CLI::PositiveNumber);

  // report
  auto* report = app.add_subcommand("report", "aggregate detection results into the report tables");
  std::string report_detection;
  std::string report_bundles;
  std::string report_out = "out/report";
  std::optional<std::string> report_metadata;
  std::optional<std::string> report_purposes;
  std::string report_format = "both";
  report->add_option("--detection", report_detection, "detection file")->required();
  report->add_option("--bundles", report_bundles, "bundle directory")->required();
  report->add_option("--out", report_out, "report output directory");
  report->add_option("--metadata", report_metadata,
                     "site metadata CSV (domain,rank,category,country)");
  report->add_option("--purposes", report_purposes,
                     "cookie key to purpose CSV for cookies without one");
  report->add_option("--format", report_format, "output format")
      ->check(CLI::IsMember({"json", "csv", "both"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // usage errors exit 1
  }

  try {
    if (gen->parsed()) {
      return cmd_gen(gen_config, gen_sites, gen_respawn_frac, gen_seed,
                     gen_run_id, gen_out);
    }
    if (crawl->parsed()) {
      if (crawl_run_id.empty()) {
        const Scenario scenario = load_scenario(crawl_ecosystem);
        crawl_run_id = default_run_id(scenario.ecosystem.seed);
      }
      CrawlOptions options;
      options.reps = crawl_reps;
      options.parallel = crawl_parallel;
      options.force = crawl_force;
      const auto paths = crawl_stage(crawl_ecosystem, crawl_out, crawl_run_id, options);
      std::cout << "wrote " << paths.size() << " bundle files under "
                << crawl_out << "/bundles\n";
      return 0;
    }
    if (detect->parsed()) {
      DetectOptions options;
      options.alpha = detect_alpha;
      options.n_perm = detect_n_perm;
      options.seed = detect_seed;
      options.parallel = detect_parallel;
      const auto results = detect_stage(detect_bundles, detect_out, options);
      int dependent = 0;
      for (const DetectionResult& r : results) {
        if (r.status == DetectionStatus::kFeatureDependent) ++dependent;
      }
      std::cout << "wrote " << detect_out << " (" << results.size()
                << " cookies, " << dependent << " feature dependent)\n";
      return 0;
    }
    if (report->parsed()) {
      const ReportFormat format = report_format == "json" ? ReportFormat::kJson
                                  : report_format == "csv" ? ReportFormat::kCsv
                                                           : ReportFormat::kBoth;
      report_stage(report_detection, report_bundles, report_metadata,
                   report_out, format, report_purposes);
      std::cout << "wrote report under " << report_out << '\n';
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
