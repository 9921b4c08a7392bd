//
// Project molgnn
// SPDX-License-Identifier: Apache-2.0
//

#include "molgnn/chem.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <unordered_map>

#include <fmt/format.h>

namespace molgnn {
namespace {

const std::array<ElementInfo, 10> &element_table() {
  static const std::array<ElementInfo, 10> table { {
      { "H", 1.008, { 1 } },
      { "C", 12.011, { 4 } },
      { "N", 14.007, { 3 } },
      { "O", 15.999, { 2 } },
      { "F", 18.998, { 1 } },
      { "P", 30.974, { 3, 5 } },
      { "S", 32.067, { 2, 4, 6 } },
      { "Cl", 35.453, { 1 } },
      { "Br", 79.904, { 1 } },
      { "I", 126.904, { 1 } },
  } };
  return table;
}

double order_sum(const MolecularGraph &g, int v) {
  double s = 0;
  for (const Neighbor &nb: g.adjacency(v))
    s += bond_order(nb.edge_type);
  return s;
}

bool has_aromatic_bond(const MolecularGraph &g, int v) {
  for (const Neighbor &nb: g.adjacency(v))
    if (nb.edge_type == bond::kAromatic)
      return true;
  return false;
}

// Whether u and v stay connected through aromatic edges other than (u, v).
bool on_aromatic_cycle(const MolecularGraph &g, int u, int v) {
  std::vector<bool> seen(g.num_vertices(), false);
  std::vector<int> stack { u };
  seen[u] = true;
  while (!stack.empty()) {
    int x = stack.back();
    stack.pop_back();
    for (const Neighbor &nb: g.adjacency(x)) {
      if (nb.edge_type != bond::kAromatic || seen[nb.vertex])
        continue;
      if (x == u && nb.vertex == v)
        continue;
      if (nb.vertex == v)
        return true;
      seen[nb.vertex] = true;
      stack.push_back(nb.vertex);
    }
  }
  return false;
}

// Hydrogens for valence v given bond-order sum s, or -1 when s exceeds every
// allowed valence.
int hydrogens_to_fill(const ElementInfo &e, int s) {
  for (int val: e.valences)
    if (val >= s)
      return val - s;
  return -1;
}

// Largest matching over the eligible vertices of one component. Vertices are
// indexed locally; adj lists local indices.
class ComponentMatcher {
public:
  explicit ComponentMatcher(std::vector<std::vector<int>> adj)
    : adj_(std::move(adj)) {}

  int solve() {
    if (adj_.size() <= 64)
      return exact(0);
    return greedy();
  }

private:
  int exact(std::uint64_t covered) {
    const int n = static_cast<int>(adj_.size());
    int x = 0;
    while (x < n && (covered >> x & 1))
      ++x;
    if (x == n)
      return 0;
    auto it = memo_.find(covered);
    if (it != memo_.end())
      return it->second;
    const std::uint64_t with_x = covered | (std::uint64_t { 1 } << x);
    int best = exact(with_x);
    for (int y: adj_[x])
      if (!(covered >> y & 1))
        best = std::max(best, 1 + exact(with_x | (std::uint64_t { 1 } << y)));
    memo_.emplace(covered, best);
    return best;
  }

  int greedy() const {
    std::vector<bool> used(adj_.size(), false);
    int pairs = 0;
    for (std::size_t x = 0; x < adj_.size(); ++x) {
      if (used[x])
        continue;
      for (int y: adj_[x]) {
        if (!used[y]) {
          used[x] = used[y] = true;
          ++pairs;
          break;
        }
      }
    }
    return pairs;
  }

  std::vector<std::vector<int>> adj_;
  std::unordered_map<std::uint64_t, int> memo_;
};

// Implicit hydrogens of a heavy-atom graph. Aromatic bonds are resolved to
// the Kekule form needing the fewest hydrogens: each aromatic atom either
// takes one ring double bond or none, and an atom left without one when it
// could take one carries an extra hydrogen (pyrrole-type nitrogen, CH2).
int implicit_hydrogen_total(const MolecularGraph &g, const DatasetSpec &spec) {
  const int n = g.num_vertices();
  int total = 0;
  // Local index of vertices for which taking a ring double bond saves one
  // hydrogen.
  std::vector<int> local(n, -1);
  std::vector<int> eligible;
  for (int v = 0; v < n; ++v) {
    const ElementInfo &e = element_info(spec, g.vertex_type(v));
    if (!has_aromatic_bond(g, v)) {
      total += implicit_hydrogens(e, order_sum(g, v), false);
      continue;
    }
    int base = 0;
    for (const Neighbor &nb: g.adjacency(v))
      base += nb.edge_type == bond::kAromatic ? 1
                                              : static_cast<int>(bond_order(nb.edge_type));
    const int lone = hydrogens_to_fill(e, base);
    const int paired = hydrogens_to_fill(e, base + 1);
    if (lone < 0) {
      total += implicit_hydrogens(e, order_sum(g, v), true);
      continue;
    }
    total += lone;
    if (paired >= 0 && paired == lone - 1) {
      local[v] = static_cast<int>(eligible.size());
      eligible.push_back(v);
    }
  }

  std::vector<bool> done(n, false);
  for (int root: eligible) {
    if (done[root])
      continue;
    std::vector<int> members { root };
    done[root] = true;
    for (std::size_t k = 0; k < members.size(); ++k)
      for (const Neighbor &nb: g.adjacency(members[k]))
        if (nb.edge_type == bond::kAromatic && local[nb.vertex] >= 0
            && !done[nb.vertex]) {
          done[nb.vertex] = true;
          members.push_back(nb.vertex);
        }
    std::vector<int> index(n, -1);
    for (std::size_t k = 0; k < members.size(); ++k)
      index[members[k]] = static_cast<int>(k);
    std::vector<std::vector<int>> adj(members.size());
    for (std::size_t k = 0; k < members.size(); ++k)
      for (const Neighbor &nb: g.adjacency(members[k]))
        if (nb.edge_type == bond::kAromatic && index[nb.vertex] >= 0)
          adj[k].push_back(index[nb.vertex]);
    total -= 2 * ComponentMatcher(std::move(adj)).solve();
  }
  return total;
}

} // namespace

const ElementInfo &element_info(std::string_view symbol) {
  for (const ElementInfo &e: element_table())
    if (e.symbol == symbol)
      return e;
  throw DataError("no element data for '" + std::string(symbol) + "'");
}

const ElementInfo &element_info(const DatasetSpec &spec, int vertex_type) {
  return element_info(spec.vertex_symbols.at(vertex_type));
}

double bond_order(int edge_type) {
  switch (edge_type) {
  case bond::kSingle:
    return 1.0;
  case bond::kDouble:
    return 2.0;
  case bond::kTriple:
    return 3.0;
  case bond::kAromatic:
    return 1.5;
  default:
    throw DataError("unknown edge type " + std::to_string(edge_type));
  }
}

int implicit_hydrogens(const ElementInfo &element, double order_sum,
                       bool aromatic) {
  double effective = order_sum;
  if (aromatic && effective > element.valences.front()) {
    int snapped = element.valences.front();
    for (int val: element.valences) {
      if (val > effective)
        break;
      snapped = val;
    }
    if (effective - snapped <= 1.5)
      effective = snapped;
  }
  int explicit_valence = static_cast<int>(std::lround(effective + 0.1));
  for (int val: element.valences)
    if (val >= explicit_valence)
      return val - explicit_valence;
  return 0;
}

ValenceReport check_valence(const MolecularGraph &g, const DatasetSpec &spec) {
  ValenceReport report;
  auto flag = [&](int v, std::string reason) {
    report.valid = false;
    report.violations.push_back({ v, std::move(reason) });
  };

  for (int v = 0; v < g.num_vertices(); ++v) {
    const ElementInfo &e = element_info(spec, g.vertex_type(v));
    const double s = order_sum(g, v);
    if (spec.explicit_hydrogens) {
      bool allowed = false;
      for (int val: e.valences)
        allowed = allowed || s == val;
      if (!allowed)
        flag(v, fmt::format("{} has bond-order sum {:g}, not an allowed "
                            "valence",
                            e.symbol, s));
    } else if (std::floor(s) > e.valences.back()) {
      flag(v, fmt::format("{} has bond-order sum {:g}, exceeding valence {}",
                          e.symbol, s, e.valences.back()));
    }
  }

  if (!spec.explicit_hydrogens) {
    for (const Edge &edge: g.edges())
      if (edge.type == bond::kAromatic && !on_aromatic_cycle(g, edge.u, edge.v))
        flag(edge.u, fmt::format("aromatic bond {}-{} is not on an aromatic "
                                 "cycle",
                                 edge.u, edge.v));
  }
  return report;
}

double molecular_weight(const MolecularGraph &g, const DatasetSpec &spec) {
  double total = 0;
  for (int v = 0; v < g.num_vertices(); ++v)
    total += element_info(spec, g.vertex_type(v)).weight;
  if (!spec.explicit_hydrogens)
    total += element_info("H").weight * implicit_hydrogen_total(g, spec);
  return total;
}

} // namespace molgnn
