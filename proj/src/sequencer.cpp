//
// Project molgnn
// SPDX-License-Identifier: Apache-2.0
//

#include "molgnn/sequencer.h"

#include <algorithm>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>

#include "molgnn/ingest.h"
#include "molgnn/serialize.h"

namespace molgnn {

std::string_view module_name(ModuleKind kind) {
  switch (kind) {
  case ModuleKind::kM1:
    return "m1";
  case ModuleKind::kM2:
    return "m2";
  default:
    return "m3";
  }
}

ModuleKind parse_module_kind(std::string_view name) {
  if (name == "m1" || name == "M1")
    return ModuleKind::kM1;
  if (name == "m2" || name == "M2")
    return ModuleKind::kM2;
  if (name == "m3" || name == "M3")
    return ModuleKind::kM3;
  throw DataError("unknown module '" + std::string(name) + "'");
}

int class_count(ModuleKind kind, const DatasetSpec &spec) {
  switch (kind) {
  case ModuleKind::kM1:
    return 1 + spec.num_vertex_types();
  case ModuleKind::kM2:
    return spec.num_edge_types();
  default:
    return 1 + spec.num_edge_types();
  }
}

std::vector<double> mean_centrality_by_type(
    std::span<const MolecularGraph> train, int num_vertex_types) {
  std::vector<double> sum(num_vertex_types, 0.0);
  std::vector<long> count(num_vertex_types, 0);
  for (const MolecularGraph &g: train) {
    auto score = betweenness(g);
    for (int v = 0; v < g.num_vertices(); ++v) {
      sum[g.vertex_type(v)] += score[v];
      ++count[g.vertex_type(v)];
    }
  }
  for (int t = 0; t < num_vertex_types; ++t)
    sum[t] = count[t] > 0 ? sum[t] / count[t] : 0.0;
  return sum;
}

TypePriority type_priority_from_centrality(
    std::span<const MolecularGraph> train, int num_vertex_types) {
  if (train.empty())
    throw DataError("type priority needs a nonempty training set");
  auto means = mean_centrality_by_type(train, num_vertex_types);
  return TypePriority::from_scores(means);
}

MolecularGraph reorder(const MolecularGraph &g, const TypePriority &prio,
                       Rng &rng) {
  auto order = bfs_order(g, 0, prio, rng);
  std::vector<int> new_index(order.size());
  for (int k = 0; k < static_cast<int>(order.size()); ++k)
    new_index[order[k]] = k;
  return g.permuted(new_index);
}

Decomposition decompose(const MolecularGraph &g, int molecule) {
  const int n = g.num_vertices();
  if (n == 0)
    throw DataError("cannot decompose an empty graph");

  std::vector<int> parent(n, -1);
  for (int j = 1; j < n; ++j) {
    auto adj = g.adjacency(j);
    if (adj.empty() || adj.front().vertex >= j)
      throw DataError("vertex " + std::to_string(j)
                      + " has no earlier neighbor; graph is not in BFS order");
    parent[j] = adj.front().vertex;
    if (j > 1 && parent[j] < parent[j - 1])
      throw DataError("vertex " + std::to_string(j)
                      + " breaks the breadth-first expansion order");
  }

  Decomposition out;
  out.m1.reserve(2 * n - 1);
  out.m2.reserve(n - 1);
  int next = 1;
  for (int i = 0; i < n; ++i) {
    for (; next < n && parent[next] == i; ++next) {
      const int j = next;
      const int edge = *g.edge_type(i, j);

      StepExample grow;
      grow.molecule = molecule;
      grow.graph = g.prefix(j);
      grow.focus = i;
      grow.supervision = 1 + g.vertex_type(j);
      out.m1.push_back(grow);

      StepExample label;
      label.molecule = molecule;
      label.graph = std::move(grow.graph);
      label.graph.add_vertex(g.vertex_type(j));
      label.focus = i;
      label.target = j;
      label.supervision = edge;
      label.candidates = { { i, j, edge } };

      StepExample link;
      link.molecule = molecule;
      link.graph = label.graph;
      link.graph.add_edge(i, j, edge);
      link.focus = i;
      link.target = j;
      for (int k = 0; k < j; ++k) {
        if (k == i)
          continue;
        auto t = g.edge_type(k, j);
        link.candidates.push_back({ k, j, t ? 1 + *t : kDisconnectedClass });
      }

      out.m2.push_back(std::move(label));
      if (!link.candidates.empty())
        out.m3.push_back(std::move(link));
    }

    StepExample stop;
    stop.molecule = molecule;
    stop.graph = g.prefix(next);
    stop.focus = i;
    stop.supervision = kStopClass;
    out.m1.push_back(std::move(stop));
  }
  return out;
}

std::vector<int> TrainingSet::example_indices(ModuleKind kind,
                                              const Batch &batch) const {
  const auto &off = offsets[static_cast<int>(kind)];
  std::vector<int> out;
  for (int m: batch.molecules)
    for (int e = off[m]; e < off[m + 1]; ++e)
      out.push_back(e);
  return out;
}

namespace {

std::vector<int> offsets_of(std::span<const StepExample> examples,
                            int molecules) {
  std::vector<int> off(molecules + 1, 0);
  int prev = -1;
  for (const StepExample &ex: examples) {
    if (ex.molecule < prev || ex.molecule >= molecules)
      throw DataError("step examples are not grouped by molecule");
    prev = ex.molecule;
    ++off[ex.molecule + 1];
  }
  std::partial_sum(off.begin(), off.end(), off.begin());
  return off;
}

Batch all_molecules(int molecules) {
  Batch b;
  b.molecules.resize(molecules);
  std::iota(b.molecules.begin(), b.molecules.end(), 0);
  return b;
}

} // namespace

TrainingSet assemble_training_set(DatasetMode mode, int molecules,
                                  std::vector<StepExample> m1,
                                  std::vector<StepExample> m2,
                                  std::vector<StepExample> m3) {
  TrainingSet ts;
  ts.mode = mode;
  ts.molecules = molecules;
  ts.steps.m1 = std::move(m1);
  ts.steps.m2 = std::move(m2);
  ts.steps.m3 = std::move(m3);
  for (ModuleKind k: { ModuleKind::kM1, ModuleKind::kM2, ModuleKind::kM3 })
    ts.offsets[static_cast<int>(k)] = offsets_of(ts.examples(k), molecules);
  ts.batches = { all_molecules(molecules) };
  return ts;
}

TrainingSet build_training_set(std::span<const MolecularGraph> ordered,
                               DatasetMode mode) {
  std::vector<StepExample> m1, m2, m3;
  for (int m = 0; m < static_cast<int>(ordered.size()); ++m) {
    Decomposition d = decompose(ordered[m], m);
    std::move(d.m1.begin(), d.m1.end(), std::back_inserter(m1));
    std::move(d.m2.begin(), d.m2.end(), std::back_inserter(m2));
    std::move(d.m3.begin(), d.m3.end(), std::back_inserter(m3));
  }
  return assemble_training_set(mode, static_cast<int>(ordered.size()),
                               std::move(m1), std::move(m2), std::move(m3));
}

std::vector<Batch> make_batches(const TrainingSet &ts, int batch_count,
                                Rng &rng) {
  if (batch_count < 1 || batch_count > std::max(ts.molecules, 1))
    throw DataError("batch count " + std::to_string(batch_count)
                    + " must be in [1, molecule count]");
  std::vector<int> ids = all_molecules(ts.molecules).molecules;
  rng.shuffle(std::span(ids));
  std::vector<Batch> out(batch_count);
  const int base = ts.molecules / batch_count;
  const int extra = ts.molecules % batch_count;
  auto it = ids.begin();
  for (int b = 0; b < batch_count; ++b) {
    int size = base + (b < extra ? 1 : 0);
    out[b].molecules.assign(it, it + size);
    it += size;
  }
  return out;
}

void write_step_cache(std::ostream &os, DatasetMode mode, ModuleKind kind,
                      std::span<const StepExample> examples, const Json &meta) {
  Json header = make_header("molgnn-steps", kStepCacheVersion, mode);
  header.update(meta);
  header["module"] = module_name(kind);
  os << dump_line(header) << '\n';
  for (const StepExample &ex: examples) {
    Json j = graph_to_json(ex.graph);
    j["molecule"] = ex.molecule;
    j["focus"] = ex.focus;
    j["target"] = ex.target;
    j["supervision"] = ex.supervision;
    Json cands = Json::array();
    for (const CandidateEdge &c: ex.candidates)
      cands.push_back({ c.k, c.j, c.supervision });
    j["candidates"] = std::move(cands);
    os << dump_line(j) << '\n';
  }
}

std::vector<StepExample> read_step_cache(std::istream &is, ModuleKind kind) {
  Json header = read_header(is, "molgnn-steps", kStepCacheVersion);
  if (header.value("module", "") != module_name(kind))
    throw DataError("step cache holds module "
                    + header.value("module", std::string("?")) + ", expected "
                    + std::string(module_name(kind)));
  const DatasetSpec &spec = dataset_spec(parse_mode(header.at("mode").get<std::string>()));
  std::vector<StepExample> out;
  std::string line;
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty())
      continue;
    try {
      Json j = Json::parse(line);
      StepExample ex;
      ex.graph = graph_from_json(j, spec);
      ex.molecule = j.at("molecule").get<int>();
      ex.focus = j.at("focus").get<int>();
      ex.target = j.at("target").get<int>();
      ex.supervision = j.at("supervision").get<int>();
      for (const Json &c: j.at("candidates"))
        ex.candidates.push_back({ c.at(0).get<int>(), c.at(1).get<int>(),
                                  c.at(2).get<int>() });
      out.push_back(std::move(ex));
    } catch (const Json::exception &err) {
      throw ParseError(err.what(), line_no);
    }
  }
  return out;
}

} // namespace molgnn
