#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "minimano/orchestrator.hpp"

namespace minimano {

// Replays a JSON scenario: a world description followed by a list of steps.
//
//   {"seed": 42, "world": {"hosts": [...]}, "steps": [{"op": "...", ...}, ...]}
//
// Instance arguments accept selectors: "group/<name>/<index>" names a group
// member, "stack/<stack>/<resource>" names the physical id of a stack resource.
struct ScenarioOptions {
  std::optional<std::uint64_t> seed;  // overrides the file's seed
  std::vector<std::filesystem::path> template_dirs;
  identity::Policy policy = identity::Policy::default_policy();
};

struct ScenarioResult {
  std::unique_ptr<Orchestrator> world;
  std::map<std::string, std::string> tokens;  // session name -> token id
  std::string events_jsonl;
  nlohmann::ordered_json snapshot;
};

WorldConfig world_config_from_json(const nlohmann::ordered_json& json);

ScenarioResult run_scenario(const nlohmann::ordered_json& scenario, const std::filesystem::path& base_dir,
                            const ScenarioOptions& options = {});
ScenarioResult run_scenario_file(const std::filesystem::path& path, const ScenarioOptions& options = {});

// Resolves a selector (see above) to an instance or resource id.
std::string resolve_selector(const Orchestrator& world, const std::string& tenant, const std::string& selector);

}  // namespace minimano
