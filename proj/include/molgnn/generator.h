//
// Project molgnn
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MOLGNN_GENERATOR_H_
#define MOLGNN_GENERATOR_H_

#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "molgnn/dataset.h"
#include "molgnn/graph.h"
#include "molgnn/modules.h"
#include "molgnn/random.h"
#include "molgnn/sequencer.h"
#include "molgnn/serialize.h"

namespace molgnn {

// Categorical distribution of the type of the first generated vertex.
struct SeedDistribution {
  std::vector<double> probabilities;

  int sample(Rng &rng) const;
};

// Empirical frequency of the type of vertex 0 in the (reordered) training
// graphs. Throws DataError on an empty set.
SeedDistribution estimate_d0(std::span<const MolecularGraph> train,
                             int num_vertex_types);

// The three decisions the construction loop asks for.
class DecisionSource {
public:
  virtual ~DecisionSource() = default;

  // kStopClass or 1 + vertex type of a new neighbor of focus.
  virtual int node(const MolecularGraph &g, int focus, Rng &rng) = 0;
  // Bond type of (i, j); g holds j but not the edge.
  virtual int first_edge(const MolecularGraph &g, int i, int j, Rng &rng) = 0;
  // (k, bond type) links of j besides i.
  virtual std::vector<std::pair<int, int>> links(const MolecularGraph &g, int i,
                                                 int j, Rng &rng) = 0;
};

class ModelDecisions: public DecisionSource {
public:
  // Throws GnnError unless the modules are M1, M2, M3 of one dataset mode.
  ModelDecisions(DecisionModule &m1, DecisionModule &m2, DecisionModule &m3,
                 double tau = 1.0);

  int node(const MolecularGraph &g, int focus, Rng &rng) override;
  int first_edge(const MolecularGraph &g, int i, int j, Rng &rng) override;
  std::vector<std::pair<int, int>> links(const MolecularGraph &g, int i, int j,
                                         Rng &rng) override;

private:
  DecisionModule &m1_;
  DecisionModule &m2_;
  DecisionModule &m3_;
  double tau_;
};

// Answers with the supervisions of a decomposition, in order. Throws
// DataError when asked more than the decomposition holds or when the
// request does not match the recorded step.
class ReplayDecisions: public DecisionSource {
public:
  explicit ReplayDecisions(Decomposition steps);

  int node(const MolecularGraph &g, int focus, Rng &rng) override;
  int first_edge(const MolecularGraph &g, int i, int j, Rng &rng) override;
  std::vector<std::pair<int, int>> links(const MolecularGraph &g, int i, int j,
                                         Rng &rng) override;

  int m1_calls() const { return m1_next_; }
  int m2_calls() const { return m2_next_; }
  bool exhausted() const;

private:
  Decomposition steps_;
  int m1_next_ = 0;
  int m2_next_ = 0;
  int m3_next_ = 0;
};

struct TraceStep {
  ModuleKind module;
  int focus;
  int target;   // new vertex for M2/M3, -1 for M1
  int vertices; // |V| when the decision was requested
  int decision; // M1 class, M2 bond type, or M3 link count
  std::vector<std::pair<int, int>> links;
};

struct GenerationOutcome {
  MolecularGraph graph;
  bool complete = false;
  std::vector<TraceStep> trace;
};

/**
 * Builds one molecule: a seed vertex from d0, then each vertex in index
 * order is expanded until the node decision says stop. Every new vertex is
 * linked to the focus and then optionally to earlier vertices. When a new
 * vertex is requested while |V| == vmax, construction stops with
 * complete == false.
 */
GenerationOutcome generate(DecisionSource &source, const SeedDistribution &d0,
                           const DatasetSpec &spec, int vmax, Rng &rng,
                           bool keep_trace = true);

// Variant with a fixed seed vertex type.
GenerationOutcome generate_from(DecisionSource &source, int seed_type,
                                const DatasetSpec &spec, int vmax, Rng &rng,
                                bool keep_trace = true);

// n generations, each on its own child stream split from rng in order.
std::vector<GenerationOutcome> generate_batch(int n, DecisionSource &source,
                                              const SeedDistribution &d0,
                                              const DatasetSpec &spec, int vmax,
                                              Rng &rng, bool keep_trace = false);

// Graph cache layout with a per-line "complete" flag; readable by
// read_graph_cache.
void write_generated_batch(std::ostream &os, const DatasetSpec &spec,
                           std::span<const GenerationOutcome> batch,
                           const Json &meta = Json::object());
std::vector<GenerationOutcome> read_generated_batch(std::istream &is,
                                                    DatasetMode &mode);

Json trace_to_json(const GenerationOutcome &outcome);

} // namespace molgnn

#endif // MOLGNN_GENERATOR_H_
