#pragma once

#include <algorithm>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "minimano/hot/template.hpp"

namespace testsupport {

// A random template whose only content is its reference graph. Resource i is
// declared at position decl[i]; each edge (p, c) is expressed by the consumer
// c through get_attr, get_resource or depends_on.
struct RandomGraph {
  int n = 0;
  std::vector<std::pair<int, int>> edges;  // provider, consumer
  minimano::hot::TemplateDoc doc;
};

inline std::string res_name(int i) { return "r" + std::to_string(i); }

inline minimano::hot::TemplateDoc graph_doc(int n, const std::vector<std::pair<int, int>>& edges,
                                            const std::vector<int>& declaration, std::mt19937_64& rng) {
  using minimano::hot::Expr;
  minimano::hot::TemplateDoc doc;
  doc.version = "2013-05-23";
  for (int pos = 0; pos < n; ++pos) {
    const int i = declaration[pos];
    minimano::hot::ResourceDef def;
    def.name = res_name(i);
    def.type = "OS::Heat::RandomString";
    Expr::ListOf refs;
    for (const auto& [p, c] : edges) {
      if (c != i) continue;
      switch (rng() % 3) {
        case 0: refs.items.push_back(Expr::get_attr(res_name(p), "value")); break;
        case 1: refs.items.push_back(Expr::get_resource(res_name(p))); break;
        default: def.depends_on.push_back(res_name(p)); break;
      }
    }
    if (!refs.items.empty()) def.properties.insert("refs", Expr{refs});
    doc.resources.insert(def.name, std::move(def));
  }
  return doc;
}

// DAG when `acyclic`: edges only go from lower to higher topological rank.
inline RandomGraph random_graph(std::mt19937_64& rng, int max_n, bool acyclic) {
  RandomGraph g;
  g.n = 1 + static_cast<int>(rng() % static_cast<unsigned>(max_n));
  std::vector<int> rank(g.n);
  for (int i = 0; i < g.n; ++i) rank[i] = i;
  std::shuffle(rank.begin(), rank.end(), rng);
  std::bernoulli_distribution coin(0.35);
  for (int a = 0; a < g.n; ++a)
    for (int b = 0; b < g.n; ++b)
      if (rank[a] < rank[b] && coin(rng)) g.edges.push_back({a, b});
  if (!acyclic) {
    // Close a cycle: pick a path start -> ... -> end and add end -> start, or
    // a self-loop-free 2-cycle when the graph has no edges.
    if (g.n < 2) g.n = 2;
    if (g.edges.empty()) g.edges.push_back({0, 1});
    const auto e = g.edges[rng() % g.edges.size()];
    g.edges.push_back({e.second, e.first});
  }
  std::vector<int> declaration(g.n);
  for (int i = 0; i < g.n; ++i) declaration[i] = i;
  std::shuffle(declaration.begin(), declaration.end(), rng);
  g.doc = graph_doc(g.n, g.edges, declaration, rng);
  return g;
}

// Every topological order of the graph, by brute force over permutations.
inline std::set<std::vector<std::string>> all_topological_orders(const RandomGraph& g) {
  std::vector<int> perm(g.n);
  for (int i = 0; i < g.n; ++i) perm[i] = i;
  std::set<std::vector<std::string>> out;
  do {
    std::vector<int> pos(g.n);
    for (int i = 0; i < g.n; ++i) pos[perm[i]] = i;
    bool ok = true;
    for (const auto& [p, c] : g.edges)
      if (pos[p] >= pos[c]) ok = false;
    if (!ok) continue;
    std::vector<std::string> names;
    for (int i : perm) names.push_back(res_name(i));
    out.insert(names);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

// Length of the longest provider chain ending at each node, by exhaustive
// path enumeration.
inline std::vector<int> longest_chain(const RandomGraph& g) {
  std::vector<int> best(g.n, 0);
  std::vector<std::vector<int>> paths;
  for (int s = 0; s < g.n; ++s) paths.push_back({s});
  while (!paths.empty()) {
    std::vector<std::vector<int>> next;
    for (const auto& path : paths) {
      const int last = path.back();
      best[last] = std::max(best[last], static_cast<int>(path.size()) - 1);
      for (const auto& [p, c] : g.edges)
        if (p == last) {
          auto longer = path;
          longer.push_back(c);
          next.push_back(std::move(longer));
        }
    }
    paths = std::move(next);
  }
  return best;
}

}  // namespace testsupport
