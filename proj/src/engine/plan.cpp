#include "minimano/engine/plan.hpp"

#include <algorithm>
#include <map>

#include "minimano/common/error.hpp"

namespace minimano::engine {

std::size_t DeploymentPlan::wave_of(const std::string& resource) const {
  for (std::size_t i = 0; i < waves.size(); ++i)
    if (std::find(waves[i].begin(), waves[i].end(), resource) != waves[i].end()) return i;
  return waves.size();
}

namespace {

std::string describe_cycle(const std::vector<std::string>& names,
                           const std::vector<std::vector<std::size_t>>& providers,
                           const std::vector<bool>& unresolved) {
  // Walk provider links from any unresolved node; every unresolved node has
  // an unresolved provider, so the walk must revisit a node.
  std::size_t start = 0;
  while (!unresolved[start]) ++start;
  std::vector<std::size_t> path;
  std::vector<int> seen(names.size(), -1);
  std::size_t cur = start;
  while (seen[cur] < 0) {
    seen[cur] = static_cast<int>(path.size());
    path.push_back(cur);
    for (std::size_t p : providers[cur]) {
      if (unresolved[p]) {
        cur = p;
        break;
      }
    }
  }
  // path[seen[cur]..] is the cycle in consumer->provider order; print it in
  // provider->consumer (deployment) order.
  std::vector<std::size_t> cycle(path.begin() + seen[cur], path.end());
  std::reverse(cycle.begin(), cycle.end());
  std::string out;
  for (std::size_t n : cycle) out += names[n] + " -> ";
  out += names[cycle.front()];
  return out;
}

}  // namespace

DeploymentPlan build_plan(const hot::TemplateDoc& doc) {
  DeploymentPlan plan;
  plan.edges = hot::extract_dependencies(doc);
  const std::vector<std::string> names = doc.resources.keys();
  const std::size_t n = names.size();
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) index[names[i]] = i;

  std::vector<std::vector<std::size_t>> providers(n);
  for (const auto& e : plan.edges) providers[index.at(e.consumer)].push_back(index.at(e.provider));

  std::vector<long> level(n, -1);
  std::vector<bool> unresolved(n, true);
  std::size_t remaining = n;
  bool progressed = true;
  while (remaining > 0 && progressed) {
    progressed = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (!unresolved[i]) continue;
      long lvl = 0;
      bool ready = true;
      for (std::size_t p : providers[i]) {
        if (unresolved[p]) {
          ready = false;
          break;
        }
        lvl = std::max(lvl, level[p] + 1);
      }
      if (!ready) continue;
      level[i] = lvl;
      unresolved[i] = false;
      --remaining;
      progressed = true;
    }
  }
  if (remaining > 0)
    throw Error(ErrorKind::dependency_cycle, "dependency cycle: " + describe_cycle(names, providers, unresolved));

  long depth = 0;
  for (long l : level) depth = std::max(depth, l + 1);
  plan.waves.resize(static_cast<std::size_t>(depth));
  for (std::size_t i = 0; i < n; ++i) plan.waves[static_cast<std::size_t>(level[i])].push_back(names[i]);
  return plan;
}

}  // namespace minimano::engine
