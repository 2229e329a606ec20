#pragma once

#include <cstdint>
#include <string>

#include "json.hpp"
#include "respawn/crawler.hpp"
#include "respawn/ecosystem.hpp"

namespace respawn {

// Everything a run needs: the ecosystem plus the two machine profiles and the
// per-feature spoof targets. Profiles and spoof values fall back to the
// built-in machine A/B defaults when a config omits them.
struct Scenario {
  Ecosystem ecosystem;
  BrowserProfile machine_a;
  BrowserProfile machine_b;
  SpoofValues spoof_values;
};

nlohmann::json scenario_to_json(const Scenario& scenario);
Scenario scenario_from_json(const nlohmann::json& j);

// Parses and fully validates; throws ConfigError / DataError.
Scenario load_scenario(const std::string& path);
void write_scenario(const std::string& path, const Scenario& scenario);

// Randomized generator mode: `sites` websites of which exactly
// ceil(respawn_frac * sites) carry a deterministic respawning tracker
// (fingerprint-derived, noise 0) with a feature subset drawn uniformly from
// the nonempty subsets; the rest carry fresh-value trackers or none.
struct RandomEcosystemOptions {
  int sites = 20;
  double respawn_frac = 0.25;
};

Scenario random_scenario(std::uint64_t seed, const RandomEcosystemOptions& options);

}  // namespace respawn
