#pragma once

#include <string>
#include <vector>

#include "minimano/hot/template.hpp"

namespace minimano::engine {

// Topological stratification of a template's resources. Wave k holds every
// resource whose longest dependency chain has length k; within a wave the
// order is declaration order.
struct DeploymentPlan {
  std::vector<std::vector<std::string>> waves;
  std::vector<hot::DependencyEdge> edges;

  // Index of the wave holding `resource`, or waves.size() if absent.
  std::size_t wave_of(const std::string& resource) const;

  friend bool operator==(const DeploymentPlan&, const DeploymentPlan&) = default;
};

// Throws Error(dependency_cycle) naming one cycle, e.g. "a -> b -> a".
DeploymentPlan build_plan(const hot::TemplateDoc& doc);

}  // namespace minimano::engine
