//
// Project molgnn
// SPDX-License-Identifier: Apache-2.0
//

#include "molgnn/graph.h"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <queue>
#include <utility>

namespace molgnn {

MolecularGraph::MolecularGraph(int num_vertex_types, int num_edge_types)
    : num_vertex_types_(num_vertex_types), num_edge_types_(num_edge_types) {
  if (num_vertex_types <= 0 || num_edge_types <= 0)
    throw GraphError("type tables must be nonempty");
}

int MolecularGraph::add_vertex(int type) {
  if (type < 0 || type >= num_vertex_types_)
    throw GraphError("vertex type " + std::to_string(type)
                     + " outside the type table");
  vertex_types_.push_back(type);
  adjacency_.emplace_back();
  return num_vertices() - 1;
}

void MolecularGraph::add_edge(int u, int v, int type) {
  check(u);
  check(v);
  if (u == v)
    throw GraphError("self-loop at vertex " + std::to_string(u));
  if (type < 0 || type >= num_edge_types_)
    throw GraphError("edge type " + std::to_string(type)
                     + " outside the type table");
  if (has_edge(u, v))
    throw GraphError("duplicate edge " + std::to_string(u) + "-"
                     + std::to_string(v));
  if (u > v)
    std::swap(u, v);
  edges_.push_back({ u, v, type });

  auto insert = [](std::vector<Neighbor> &adj, Neighbor n) {
    auto it = std::lower_bound(
        adj.begin(), adj.end(), n,
        [](const Neighbor &a, const Neighbor &b) { return a.vertex < b.vertex; });
    adj.insert(it, n);
  };
  insert(adjacency_[u], { v, type });
  insert(adjacency_[v], { u, type });
}

std::optional<int> MolecularGraph::edge_type(int u, int v) const {
  auto adj = adjacency(u);
  check(v);
  auto it = std::lower_bound(
      adj.begin(), adj.end(), v,
      [](const Neighbor &a, int x) { return a.vertex < x; });
  if (it == adj.end() || it->vertex != v)
    return std::nullopt;
  return it->edge_type;
}

bool MolecularGraph::is_connected() const {
  if (num_vertices() <= 1)
    return true;
  std::vector<bool> seen(num_vertices(), false);
  std::vector<int> stack { 0 };
  seen[0] = true;
  int count = 1;
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    for (const Neighbor &n: adjacency_[u]) {
      if (!seen[n.vertex]) {
        seen[n.vertex] = true;
        ++count;
        stack.push_back(n.vertex);
      }
    }
  }
  return count == num_vertices();
}

MolecularGraph MolecularGraph::permuted(std::span<const int> new_index) const {
  const int n = num_vertices();
  if (static_cast<int>(new_index.size()) != n)
    throw GraphError("permutation size mismatch");
  std::vector<int> old_of(n, -1);
  for (int old = 0; old < n; ++old) {
    int k = new_index[old];
    if (k < 0 || k >= n || old_of[k] != -1)
      throw GraphError("not a permutation");
    old_of[k] = old;
  }
  MolecularGraph out(num_vertex_types_, num_edge_types_);
  for (int k = 0; k < n; ++k)
    out.add_vertex(vertex_types_[old_of[k]]);
  std::vector<Edge> relabeled;
  relabeled.reserve(edges_.size());
  for (const Edge &e: edges_) {
    int a = new_index[e.u], b = new_index[e.v];
    relabeled.push_back({ std::min(a, b), std::max(a, b), e.type });
  }
  std::sort(relabeled.begin(), relabeled.end(),
            [](const Edge &x, const Edge &y) {
              return std::pair(x.v, x.u) < std::pair(y.v, y.u);
            });
  for (const Edge &e: relabeled)
    out.add_edge(e.u, e.v, e.type);
  return out;
}

MolecularGraph MolecularGraph::prefix(int n) const {
  if (n < 0 || n > num_vertices())
    throw GraphError("prefix length out of range");
  MolecularGraph out(num_vertex_types_, num_edge_types_);
  for (int k = 0; k < n; ++k)
    out.add_vertex(vertex_types_[k]);
  for (const Edge &e: edges_)
    if (e.v < n)
      out.add_edge(e.u, e.v, e.type);
  return out;
}

TypePriority::TypePriority(int num_types): rank_(num_types) {
  std::iota(rank_.begin(), rank_.end(), 0);
}

TypePriority TypePriority::from_scores(std::span<const double> scores) {
  std::vector<int> types(scores.size());
  std::iota(types.begin(), types.end(), 0);
  std::stable_sort(types.begin(), types.end(),
                   [&](int a, int b) { return scores[a] < scores[b]; });
  TypePriority p;
  p.rank_.assign(scores.size(), 0);
  for (int r = 0; r < static_cast<int>(types.size()); ++r)
    p.rank_[types[r]] = r;
  return p;
}

std::vector<int> neighbors(const MolecularGraph &g, int v) {
  std::vector<int> out;
  for (const Neighbor &n: g.adjacency(v))
    out.push_back(n.vertex);
  return out;
}

std::vector<double> betweenness(const MolecularGraph &g) {
  const int n = g.num_vertices();
  std::vector<double> score(n, 0.0);
  if (n < 3)
    return score;

  std::vector<int> stack, dist(n);
  std::vector<double> sigma(n), delta(n);
  std::vector<std::vector<int>> pred(n);
  for (int s = 0; s < n; ++s) {
    stack.clear();
    std::fill(dist.begin(), dist.end(), -1);
    std::fill(sigma.begin(), sigma.end(), 0.0);
    std::fill(delta.begin(), delta.end(), 0.0);
    for (auto &p: pred)
      p.clear();

    std::queue<int> queue;
    dist[s] = 0;
    sigma[s] = 1.0;
    queue.push(s);
    while (!queue.empty()) {
      int v = queue.front();
      queue.pop();
      stack.push_back(v);
      for (const Neighbor &nb: g.adjacency(v)) {
        int w = nb.vertex;
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          queue.push(w);
        }
        if (dist[w] == dist[v] + 1) {
          sigma[w] += sigma[v];
          pred[w].push_back(v);
        }
      }
    }
    while (!stack.empty()) {
      int w = stack.back();
      stack.pop_back();
      for (int v: pred[w])
        delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
      if (w != s)
        score[w] += delta[w];
    }
  }

  // Every unordered pair was counted from both endpoints.
  const double norm = static_cast<double>(n - 1) * (n - 2);
  for (double &x: score)
    x /= norm;
  return score;
}

std::vector<int> bfs_order(const MolecularGraph &g, int start,
                           const TypePriority &prio, Rng &rng) {
  const int n = g.num_vertices();
  if (start < 0 || start >= n)
    throw GraphError("start vertex out of range");
  if (!g.is_connected())
    throw GraphError("bfs_order requires a connected graph");

  std::vector<bool> visited(n, false);
  std::vector<int> order { start };
  order.reserve(n);
  visited[start] = true;
  std::vector<int> children;
  for (std::size_t head = 0; head < order.size(); ++head) {
    children.clear();
    for (const Neighbor &nb: g.adjacency(order[head]))
      if (!visited[nb.vertex])
        children.push_back(nb.vertex);
    rng.shuffle(std::span(children));
    std::stable_sort(children.begin(), children.end(), [&](int a, int b) {
      return prio.rank(g.vertex_type(a)) < prio.rank(g.vertex_type(b));
    });
    for (int c: children) {
      visited[c] = true;
      order.push_back(c);
    }
  }
  return order;
}

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t combine(std::uint64_t seed, std::uint64_t value) {
  return mix(seed ^ mix(value));
}

// Color refinement (1-WL) with edge labels.
class ColorRefinement {
public:
  explicit ColorRefinement(const MolecularGraph &g): g_(&g) {
    colors_.resize(g.num_vertices());
    for (int v = 0; v < g.num_vertices(); ++v)
      colors_[v] = combine(mix(g.vertex_type(v)), g.degree(v));
  }

  void refine() {
    std::vector<std::uint64_t> next(colors_.size());
    std::vector<std::uint64_t> incoming;
    for (int v = 0; v < g_->num_vertices(); ++v) {
      incoming.clear();
      for (const Neighbor &nb: g_->adjacency(v))
        incoming.push_back(combine(mix(nb.edge_type), colors_[nb.vertex]));
      std::sort(incoming.begin(), incoming.end());
      std::uint64_t h = colors_[v];
      for (auto x: incoming)
        h = combine(h, x);
      next[v] = h;
    }
    colors_ = std::move(next);
  }

  std::vector<std::uint64_t> sorted_colors() const {
    auto out = colors_;
    std::sort(out.begin(), out.end());
    return out;
  }

  int num_classes() const {
    auto s = sorted_colors();
    return static_cast<int>(std::unique(s.begin(), s.end()) - s.begin());
  }

  const std::vector<std::uint64_t> &colors() const { return colors_; }

private:
  const MolecularGraph *g_;
  std::vector<std::uint64_t> colors_;
};

class IsomorphismSearch {
public:
  IsomorphismSearch(const MolecularGraph &a, const MolecularGraph &b,
                    const std::vector<std::uint64_t> &color_a,
                    const std::vector<std::uint64_t> &color_b)
      : a_(a), b_(b), color_a_(color_a), color_b_(color_b),
        map_ab_(a.num_vertices(), -1), map_ba_(b.num_vertices(), -1) {
    build_order();
  }

  bool run() { return extend(0); }

private:
  // Connected-first order, each component seeded by its rarest color.
  void build_order() {
    const int n = a_.num_vertices();
    std::vector<int> freq_rank(n);
    auto sorted = color_a_;
    std::sort(sorted.begin(), sorted.end());
    for (int v = 0; v < n; ++v)
      freq_rank[v] = static_cast<int>(
          std::upper_bound(sorted.begin(), sorted.end(), color_a_[v])
          - std::lower_bound(sorted.begin(), sorted.end(), color_a_[v]));

    std::vector<bool> placed(n, false);
    while (static_cast<int>(order_.size()) < n) {
      int seed = -1;
      for (int v = 0; v < n; ++v)
        if (!placed[v] && (seed < 0 || freq_rank[v] < freq_rank[seed]))
          seed = v;
      std::queue<int> queue;
      queue.push(seed);
      placed[seed] = true;
      while (!queue.empty()) {
        int u = queue.front();
        queue.pop();
        order_.push_back(u);
        for (const Neighbor &nb: a_.adjacency(u))
          if (!placed[nb.vertex]) {
            placed[nb.vertex] = true;
            queue.push(nb.vertex);
          }
      }
    }
  }

  bool feasible(int x, int y) const {
    if (color_a_[x] != color_b_[y])
      return false;
    int mapped_x = 0, mapped_y = 0;
    for (const Neighbor &nb: a_.adjacency(x)) {
      int image = map_ab_[nb.vertex];
      if (image < 0)
        continue;
      ++mapped_x;
      auto t = b_.edge_type(y, image);
      if (!t || *t != nb.edge_type)
        return false;
    }
    for (const Neighbor &nb: b_.adjacency(y))
      if (map_ba_[nb.vertex] >= 0)
        ++mapped_y;
    return mapped_x == mapped_y;
  }

  bool extend(std::size_t depth) {
    if (depth == order_.size())
      return true;
    int x = order_[depth];
    for (int y = 0; y < b_.num_vertices(); ++y) {
      if (map_ba_[y] >= 0 || !feasible(x, y))
        continue;
      map_ab_[x] = y;
      map_ba_[y] = x;
      if (extend(depth + 1))
        return true;
      map_ab_[x] = -1;
      map_ba_[y] = -1;
    }
    return false;
  }

  const MolecularGraph &a_;
  const MolecularGraph &b_;
  const std::vector<std::uint64_t> &color_a_;
  const std::vector<std::uint64_t> &color_b_;
  std::vector<int> map_ab_, map_ba_, order_;
};

} // namespace

bool is_isomorphic(const MolecularGraph &a, const MolecularGraph &b) {
  if (a.num_vertices() != b.num_vertices() || a.num_edges() != b.num_edges()
      || a.num_vertex_types() != b.num_vertex_types()
      || a.num_edge_types() != b.num_edge_types())
    return false;

  ColorRefinement ra(a), rb(b);
  if (ra.sorted_colors() != rb.sorted_colors())
    return false;
  int classes = ra.num_classes();
  for (int round = 0; round < a.num_vertices(); ++round) {
    ra.refine();
    rb.refine();
    if (ra.sorted_colors() != rb.sorted_colors())
      return false;
    int next = ra.num_classes();
    if (next == classes)
      break;
    classes = next;
  }

  return IsomorphismSearch(a, b, ra.colors(), rb.colors()).run();
}

std::string canonical_key(const MolecularGraph &g) {
  ColorRefinement r(g);
  int classes = r.num_classes();
  for (int round = 0; round < g.num_vertices(); ++round) {
    r.refine();
    int next = r.num_classes();
    if (next == classes)
      break;
    classes = next;
  }
  std::uint64_t h = combine(mix(g.num_vertex_types()), g.num_edge_types());
  for (auto c: r.sorted_colors())
    h = combine(h, c);

  char buf[64];
  std::snprintf(buf, sizeof(buf), "%d:%d:%016llx", g.num_vertices(),
                g.num_edges(), static_cast<unsigned long long>(h));
  return buf;
}

} // namespace molgnn
