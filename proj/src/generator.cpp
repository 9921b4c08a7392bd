//
// Project molgnn
// SPDX-License-Identifier: Apache-2.0
//

#include "molgnn/generator.h"

#include <istream>
#include <ostream>
#include <string>

#include "molgnn/ingest.h"

namespace molgnn {

int SeedDistribution::sample(Rng &rng) const {
  if (probabilities.empty())
    throw DataError("empty seed distribution");
  double u = rng.uniform();
  int last = 0;
  for (int t = 0; t < static_cast<int>(probabilities.size()); ++t) {
    if (probabilities[t] <= 0)
      continue;
    last = t;
    if (u < probabilities[t])
      return t;
    u -= probabilities[t];
  }
  return last;
}

SeedDistribution estimate_d0(std::span<const MolecularGraph> train,
                             int num_vertex_types) {
  if (train.empty())
    throw DataError("seed distribution needs a nonempty training set");
  SeedDistribution d0 { std::vector<double>(num_vertex_types, 0.0) };
  for (const MolecularGraph &g: train) {
    if (g.empty())
      throw DataError("empty graph in training set");
    d0.probabilities.at(g.vertex_type(0)) += 1.0;
  }
  for (double &p: d0.probabilities)
    p /= static_cast<double>(train.size());
  return d0;
}

ModelDecisions::ModelDecisions(DecisionModule &m1, DecisionModule &m2,
                               DecisionModule &m3, double tau)
    : m1_(m1), m2_(m2), m3_(m3), tau_(tau) {
  if (m1.kind != ModuleKind::kM1 || m2.kind != ModuleKind::kM2
      || m3.kind != ModuleKind::kM3)
    throw GnnError("decision modules must be given as M1, M2, M3");
  if (m1.mode != m2.mode || m1.mode != m3.mode)
    throw GnnError("decision modules were trained on different datasets");
}

int ModelDecisions::node(const MolecularGraph &g, int focus, Rng &rng) {
  return m1_decide(m1_, g, focus, tau_, rng);
}

int ModelDecisions::first_edge(const MolecularGraph &g, int i, int j,
                               Rng &rng) {
  return m2_decide(m2_, g, i, j, tau_, rng);
}

std::vector<std::pair<int, int>> ModelDecisions::links(const MolecularGraph &g,
                                                       int i, int j, Rng &rng) {
  return m3_decide(m3_, g, i, j, tau_, rng);
}

ReplayDecisions::ReplayDecisions(Decomposition steps)
    : steps_(std::move(steps)) { }

bool ReplayDecisions::exhausted() const {
  return m1_next_ == static_cast<int>(steps_.m1.size())
         && m2_next_ == static_cast<int>(steps_.m2.size())
         && m3_next_ == static_cast<int>(steps_.m3.size());
}

int ReplayDecisions::node(const MolecularGraph &g, int focus, Rng &) {
  if (m1_next_ >= static_cast<int>(steps_.m1.size()))
    throw DataError("replay ran past the recorded node decisions");
  const StepExample &ex = steps_.m1[m1_next_++];
  if (ex.focus != focus || ex.graph.num_vertices() != g.num_vertices())
    throw DataError("replay diverged at a node decision");
  return ex.supervision;
}

int ReplayDecisions::first_edge(const MolecularGraph &g, int i, int j, Rng &) {
  if (m2_next_ >= static_cast<int>(steps_.m2.size()))
    throw DataError("replay ran past the recorded edge decisions");
  const StepExample &ex = steps_.m2[m2_next_++];
  if (ex.focus != i || ex.target != j
      || ex.graph.num_vertices() != g.num_vertices())
    throw DataError("replay diverged at an edge decision");
  return ex.supervision;
}

std::vector<std::pair<int, int>> ReplayDecisions::links(const MolecularGraph &,
                                                        int i, int j, Rng &) {
  std::vector<std::pair<int, int>> out;
  if (m3_next_ >= static_cast<int>(steps_.m3.size())
      || steps_.m3[m3_next_].target != j)
    return out; // no candidates were recorded for j
  const StepExample &ex = steps_.m3[m3_next_++];
  if (ex.focus != i)
    throw DataError("replay diverged at a linking decision");
  for (const CandidateEdge &c: ex.candidates)
    if (c.supervision != kDisconnectedClass)
      out.emplace_back(c.k, c.supervision - 1);
  return out;
}

GenerationOutcome generate_from(DecisionSource &source, int seed_type,
                                const DatasetSpec &spec, int vmax, Rng &rng,
                                bool keep_trace) {
  if (vmax < 1)
    throw DataError("vmax must be at least 1");
  GenerationOutcome out;
  out.graph = spec.empty_graph();
  out.graph.add_vertex(seed_type);
  MolecularGraph &g = out.graph;

  for (int i = 0; i < g.num_vertices(); ++i) {
    for (;;) {
      const int gd = source.node(g, i, rng);
      if (keep_trace)
        out.trace.push_back({ ModuleKind::kM1, i, -1, g.num_vertices(), gd, {} });
      if (gd == kStopClass)
        break;
      if (gd < 0 || gd > spec.num_vertex_types())
        throw GnnError("node decision outside the class range");
      if (g.num_vertices() == vmax)
        return out; // cap reached with expansion pending

      const int j = g.add_vertex(gd - 1);
      const int bond = source.first_edge(g, i, j, rng);
      if (keep_trace)
        out.trace.push_back({ ModuleKind::kM2, i, j, g.num_vertices(), bond, {} });
      g.add_edge(i, j, bond);

      auto links = source.links(g, i, j, rng);
      for (auto [k, type]: links)
        g.add_edge(k, j, type);
      if (keep_trace)
        out.trace.push_back({ ModuleKind::kM3, i, j, g.num_vertices(),
                              static_cast<int>(links.size()),
                              std::move(links) });
    }
  }
  out.complete = true;
  return out;
}

GenerationOutcome generate(DecisionSource &source, const SeedDistribution &d0,
                           const DatasetSpec &spec, int vmax, Rng &rng,
                           bool keep_trace) {
  const int seed_type = d0.sample(rng);
  return generate_from(source, seed_type, spec, vmax, rng, keep_trace);
}

std::vector<GenerationOutcome> generate_batch(int n, DecisionSource &source,
                                              const SeedDistribution &d0,
                                              const DatasetSpec &spec, int vmax,
                                              Rng &rng, bool keep_trace) {
  if (n < 1)
    throw DataError("batch size must be at least 1");
  std::vector<Rng> streams;
  streams.reserve(n);
  for (int b = 0; b < n; ++b)
    streams.push_back(rng.split());
  std::vector<GenerationOutcome> out;
  out.reserve(n);
  for (int b = 0; b < n; ++b)
    out.push_back(generate(source, d0, spec, vmax, streams[b], keep_trace));
  return out;
}

void write_generated_batch(std::ostream &os, const DatasetSpec &spec,
                           std::span<const GenerationOutcome> batch,
                           const Json &meta) {
  Json header = make_header("molgnn-graphs", kGraphCacheVersion, spec.mode);
  header.update(meta);
  header["generated"] = true;
  os << dump_line(header) << '\n';
  for (const GenerationOutcome &o: batch) {
    Json j = graph_to_json(o.graph);
    j["complete"] = o.complete;
    os << dump_line(j) << '\n';
  }
}

std::vector<GenerationOutcome> read_generated_batch(std::istream &is,
                                                    DatasetMode &mode) {
  Json header = read_header(is, "molgnn-graphs", kGraphCacheVersion);
  mode = parse_mode(header.at("mode").get<std::string>());
  const DatasetSpec &spec = dataset_spec(mode);
  std::vector<GenerationOutcome> out;
  std::string line;
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty())
      continue;
    try {
      Json j = Json::parse(line);
      GenerationOutcome o;
      o.graph = graph_from_json(j, spec);
      // Dataset graphs carry no flag and count as complete.
      o.complete = j.value("complete", true);
      out.push_back(std::move(o));
    } catch (const Json::exception &err) {
      throw ParseError(err.what(), line_no);
    }
  }
  return out;
}

Json trace_to_json(const GenerationOutcome &outcome) {
  Json steps = Json::array();
  for (const TraceStep &s: outcome.trace) {
    Json step = { { "module", module_name(s.module) },
                  { "focus", s.focus },
                  { "vertices", s.vertices },
                  { "decision", s.decision } };
    if (s.target >= 0)
      step["target"] = s.target;
    if (s.module == ModuleKind::kM3) {
      Json links = Json::array();
      for (auto [k, t]: s.links)
        links.push_back({ k, t });
      step["links"] = std::move(links);
    }
    steps.push_back(std::move(step));
  }
  return { { "complete", outcome.complete },
           { "graph", graph_to_json(outcome.graph) },
           { "steps", std::move(steps) } };
}

} // namespace molgnn
