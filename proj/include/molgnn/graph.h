//
// Project molgnn
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MOLGNN_GRAPH_H_
#define MOLGNN_GRAPH_H_

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "molgnn/random.h"

namespace molgnn {

class GraphError: public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct Edge {
  int u; // u < v
  int v;
  int type;

  friend bool operator==(const Edge &, const Edge &) = default;
};

struct Neighbor {
  int vertex;
  int edge_type;
};

/**
 * Undirected graph with categorical vertex and edge labels.
 *
 * Labels are stored as indices into the vertex type table T_v and the edge
 * type table T_e; the one-hot encoding used by the networks is derived from
 * them, so every label is one-hot by construction. Each edge is stored once
 * with u < v and is visible from both endpoints. Self-loops and parallel
 * edges are rejected.
 */
class MolecularGraph {
public:
  MolecularGraph() = default;
  MolecularGraph(int num_vertex_types, int num_edge_types);

  int add_vertex(int type);
  void add_edge(int u, int v, int type);

  int num_vertices() const { return static_cast<int>(vertex_types_.size()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  bool empty() const { return vertex_types_.empty(); }

  int num_vertex_types() const { return num_vertex_types_; }
  int num_edge_types() const { return num_edge_types_; }

  int vertex_type(int v) const { return vertex_types_[check(v)]; }
  std::span<const int> vertex_types() const { return vertex_types_; }
  std::span<const Edge> edges() const { return edges_; }

  // Incident edges of v, sorted by neighbor index.
  std::span<const Neighbor> adjacency(int v) const {
    return adjacency_[check(v)];
  }
  int degree(int v) const { return static_cast<int>(adjacency(v).size()); }

  std::optional<int> edge_type(int u, int v) const;
  bool has_edge(int u, int v) const { return edge_type(u, v).has_value(); }

  bool is_connected() const;

  // Graph with vertex old renumbered to new_index[old].
  MolecularGraph permuted(std::span<const int> new_index) const;

  // Subgraph induced by vertices 0..n-1.
  MolecularGraph prefix(int n) const;

  friend bool operator==(const MolecularGraph &a, const MolecularGraph &b) {
    return a.num_vertex_types_ == b.num_vertex_types_
           && a.num_edge_types_ == b.num_edge_types_
           && a.vertex_types_ == b.vertex_types_ && a.edges_ == b.edges_;
  }

private:
  int check(int v) const {
    if (v < 0 || v >= num_vertices())
      throw GraphError("vertex index " + std::to_string(v) + " out of range");
    return v;
  }

  int num_vertex_types_ = 0;
  int num_edge_types_ = 0;
  std::vector<int> vertex_types_;
  std::vector<Edge> edges_;
  std::vector<std::vector<Neighbor>> adjacency_;
};

// Expansion order of vertex types; lower rank is expanded first.
class TypePriority {
public:
  TypePriority() = default;
  // Identity ranking over n types.
  explicit TypePriority(int num_types);
  // Ranks types by ascending score, ties broken by type index.
  static TypePriority from_scores(std::span<const double> scores);

  int rank(int type) const { return rank_.at(type); }
  int size() const { return static_cast<int>(rank_.size()); }
  std::span<const int> ranks() const { return rank_; }

private:
  std::vector<int> rank_;
};

std::vector<int> neighbors(const MolecularGraph &g, int v);

// Normalized Freeman betweenness per vertex (Brandes). Scores are in [0, 1];
// graphs with fewer than three vertices score zero everywhere.
std::vector<double> betweenness(const MolecularGraph &g);

// Breadth-first permutation from start. Unvisited neighbors of the vertex
// being expanded are enqueued by type rank, equal ranks in random order.
// Throws GraphError if g is disconnected.
std::vector<int> bfs_order(const MolecularGraph &g, int start,
                           const TypePriority &prio, Rng &rng);

bool is_isomorphic(const MolecularGraph &a, const MolecularGraph &b);

// Permutation-invariant digest. Isomorphic graphs always share a key;
// different keys imply non-isomorphic graphs.
std::string canonical_key(const MolecularGraph &g);

} // namespace molgnn

#endif // MOLGNN_GRAPH_H_
