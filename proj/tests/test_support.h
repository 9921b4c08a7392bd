//
// Project molgnn
// SPDX-License-Identifier: Apache-2.0
//

// Reference implementations used as test oracles. They favour obviously
// correct enumeration over speed and share no code with the library.

#ifndef MOLGNN_TESTS_TEST_SUPPORT_H_
#define MOLGNN_TESTS_TEST_SUPPORT_H_

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <ostream>
#include <tuple>
#include <string>
#include <vector>

#include "molgnn/graph.h"
#include "molgnn/random.h"
#include "molgnn/serialize.h"

namespace molgnn {

inline void PrintTo(const MolecularGraph &g, std::ostream *os) {
  *os << graph_to_json(g).dump();
}

} // namespace molgnn

namespace molgnn::test {

inline std::string data_path(const std::string &name) {
  return std::string(MOLGNN_TEST_DATA_DIR) + "/" + name;
}

inline MolecularGraph make_graph(int vtypes, int etypes,
                                 const std::vector<int> &types,
                                 const std::vector<Edge> &edges) {
  MolecularGraph g(vtypes, etypes);
  for (int t: types)
    g.add_vertex(t);
  for (const Edge &e: edges)
    g.add_edge(e.u, e.v, e.type);
  return g;
}

inline std::vector<Edge> sorted_edges(const MolecularGraph &g) {
  std::vector<Edge> e(g.edges().begin(), g.edges().end());
  std::sort(e.begin(), e.end(), [](const Edge &a, const Edge &b) {
    return std::tie(a.u, a.v, a.type) < std::tie(b.u, b.v, b.type);
  });
  return e;
}

// Same labels and edge set under the identity vertex map.
inline bool same_labeled_graph(const MolecularGraph &a, const MolecularGraph &b) {
  return std::equal(a.vertex_types().begin(), a.vertex_types().end(),
                    b.vertex_types().begin(), b.vertex_types().end())
         && sorted_edges(a) == sorted_edges(b);
}

// Random spanning tree plus extra edges with probability extra.
inline MolecularGraph random_connected(int n, int vtypes, int etypes, Rng &rng,
                                       double extra = 0.2) {
  MolecularGraph g(vtypes, etypes);
  for (int v = 0; v < n; ++v)
    g.add_vertex(static_cast<int>(rng.below(vtypes)));
  for (int v = 1; v < n; ++v)
    g.add_edge(static_cast<int>(rng.below(v)), v,
               static_cast<int>(rng.below(etypes)));
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v)
      if (!g.has_edge(u, v) && rng.uniform() < extra)
        g.add_edge(u, v, static_cast<int>(rng.below(etypes)));
  return g;
}

inline std::vector<std::vector<int>> adjacency_lists(const MolecularGraph &g) {
  std::vector<std::vector<int>> adj(g.num_vertices());
  for (const Edge &e: g.edges()) {
    adj[e.u].push_back(e.v);
    adj[e.v].push_back(e.u);
  }
  return adj;
}

// Every simple path from s to t, as vertex sequences.
inline void simple_paths(const std::vector<std::vector<int>> &adj, int at, int t,
                         std::vector<int> &path, std::vector<char> &used,
                         std::vector<std::vector<int>> &out) {
  if (at == t) {
    out.push_back(path);
    return;
  }
  for (int w: adj[at]) {
    if (used[w])
      continue;
    used[w] = 1;
    path.push_back(w);
    simple_paths(adj, w, t, path, used, out);
    path.pop_back();
    used[w] = 0;
  }
}

// Freeman betweenness by enumerating all simple paths of every pair and
// keeping the shortest ones; normalized by the number of pairs not
// containing v.
inline std::vector<double> brute_betweenness(const MolecularGraph &g) {
  const int n = g.num_vertices();
  std::vector<double> score(n, 0.0);
  if (n < 3)
    return score;
  auto adj = adjacency_lists(g);
  for (int s = 0; s < n; ++s) {
    for (int t = s + 1; t < n; ++t) {
      std::vector<std::vector<int>> paths;
      std::vector<int> path { s };
      std::vector<char> used(n, 0);
      used[s] = 1;
      simple_paths(adj, s, t, path, used, paths);
      if (paths.empty())
        continue;
      std::size_t shortest = paths.front().size();
      for (const auto &p: paths)
        shortest = std::min(shortest, p.size());
      std::vector<double> through(n, 0.0);
      double count = 0;
      for (const auto &p: paths) {
        if (p.size() != shortest)
          continue;
        count += 1;
        for (std::size_t k = 1; k + 1 < p.size(); ++k)
          through[p[k]] += 1;
      }
      for (int v = 0; v < n; ++v)
        score[v] += through[v] / count;
    }
  }
  const double pairs = (n - 1.0) * (n - 2.0) / 2.0;
  for (double &x: score)
    x /= pairs;
  return score;
}

// Tries every vertex bijection.
inline bool brute_isomorphic(const MolecularGraph &a, const MolecularGraph &b) {
  const int n = a.num_vertices();
  if (n != b.num_vertices() || a.num_edges() != b.num_edges())
    return false;
  std::vector<int> p(n);
  std::iota(p.begin(), p.end(), 0);
  do {
    bool ok = true;
    for (int v = 0; v < n && ok; ++v)
      ok = a.vertex_type(v) == b.vertex_type(p[v]);
    for (const Edge &e: a.edges()) {
      if (!ok)
        break;
      auto t = b.edge_type(p[e.u], p[e.v]);
      ok = t && *t == e.type;
    }
    if (ok)
      return true;
  } while (std::next_permutation(p.begin(), p.end()));
  return false;
}

// All connected graphs on n unlabeled vertices, as edge subsets of K_n.
inline std::vector<MolecularGraph> all_connected_graphs(int n) {
  std::vector<std::pair<int, int>> pairs;
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v)
      pairs.emplace_back(u, v);
  std::vector<MolecularGraph> out;
  const unsigned long subsets = 1UL << pairs.size();
  for (unsigned long mask = 0; mask < subsets; ++mask) {
    if (static_cast<int>(__builtin_popcountl(mask)) < n - 1)
      continue;
    MolecularGraph g(1, 1);
    for (int v = 0; v < n; ++v)
      g.add_vertex(0);
    for (std::size_t k = 0; k < pairs.size(); ++k)
      if (mask & (1UL << k))
        g.add_edge(pairs[k].first, pairs[k].second, 0);
    if (g.is_connected())
      out.push_back(std::move(g));
  }
  return out;
}

inline std::vector<int> random_permutation(int n, Rng &rng) {
  std::vector<int> p(n);
  std::iota(p.begin(), p.end(), 0);
  rng.shuffle(std::span(p));
  return p;
}

// |a - b| / max(|a|, |b|, floor)
inline double relative_error(double a, double b, double floor = 1e-8) {
  return std::abs(a - b) / std::max({ std::abs(a), std::abs(b), floor });
}

inline double total_variation(const std::vector<double> &p,
                              const std::vector<double> &q) {
  double tv = 0;
  for (std::size_t i = 0; i < p.size(); ++i)
    tv += std::abs(p[i] - q[i]);
  return tv / 2;
}

} // namespace molgnn::test

#endif // MOLGNN_TESTS_TEST_SUPPORT_H_
