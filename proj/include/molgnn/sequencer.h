//
// Project molgnn
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MOLGNN_SEQUENCER_H_
#define MOLGNN_SEQUENCER_H_

#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "molgnn/dataset.h"
#include "molgnn/graph.h"
#include "molgnn/random.h"
#include "molgnn/serialize.h"

namespace molgnn {

// M1 generates nodes, M2 labels the first edge of a new node, M3 links the
// new node to earlier ones.
enum class ModuleKind { kM1, kM2, kM3 };

std::string_view module_name(ModuleKind kind);
ModuleKind parse_module_kind(std::string_view name);

// M1 classes are {stop} ∪ T_v, M2 classes T_e, M3 classes {disconnected} ∪ T_e.
int class_count(ModuleKind kind, const DatasetSpec &spec);

inline constexpr int kStopClass = 0;
inline constexpr int kDisconnectedClass = 0;

// An edge (k, j) whose label is being predicted. It is fed to the networks
// with the reserved "candidate" edge label.
struct CandidateEdge {
  int k;
  int j;
  int supervision;

  friend bool operator==(const CandidateEdge &, const CandidateEdge &) = default;
};

/**
 * One supervised generation step.
 *
 * M1: graph is the partial molecule, focus the vertex being expanded,
 *     supervision kStopClass or 1 + type of the next neighbor.
 * M2: graph contains the new vertex target without its first edge;
 *     candidates holds (focus, target) and supervision its bond type.
 * M3: graph contains target linked to focus; candidates are all (k, target)
 *     with k < target, k != focus, supervised with kDisconnectedClass or
 *     1 + bond type.
 */
struct StepExample {
  int molecule = 0;
  MolecularGraph graph;
  int focus = 0;
  int target = -1;
  int supervision = -1;
  std::vector<CandidateEdge> candidates;
};

struct Decomposition {
  std::vector<StepExample> m1, m2, m3;

  std::span<const StepExample> of(ModuleKind kind) const {
    switch (kind) {
    case ModuleKind::kM1:
      return m1;
    case ModuleKind::kM2:
      return m2;
    default:
      return m3;
    }
  }
};

// Mean normalized betweenness of each vertex type over the training graphs;
// types that never occur score 0.
std::vector<double> mean_centrality_by_type(
    std::span<const MolecularGraph> train, int num_vertex_types);

// Types with lower mean centrality are expanded first.
TypePriority type_priority_from_centrality(
    std::span<const MolecularGraph> train, int num_vertex_types);

// Renumbers vertices by bfs_order from vertex 0.
MolecularGraph reorder(const MolecularGraph &g, const TypePriority &prio,
                       Rng &rng);

// Throws DataError unless g is numbered in a breadth-first order from
// vertex 0 (each vertex's lowest-index neighbor precedes it, and those
// parents are nondecreasing).
Decomposition decompose(const MolecularGraph &g, int molecule = 0);

struct Batch {
  std::vector<int> molecules;
};

/**
 * Step examples of a set of molecules. Examples are stored grouped by
 * molecule so that every batch holds complete generation sequences.
 */
struct TrainingSet {
  DatasetMode mode = DatasetMode::kQm9;
  int molecules = 0;
  Decomposition steps;
  // offsets[kind][m] .. offsets[kind][m + 1] index molecule m's examples.
  std::vector<int> offsets[3];
  std::vector<Batch> batches;

  std::span<const StepExample> examples(ModuleKind kind) const {
    return steps.of(kind);
  }
  std::vector<int> example_indices(ModuleKind kind, const Batch &batch) const;
};

// Decomposes already reordered graphs; molecule ids are positions in the
// input. All examples start in a single batch.
TrainingSet build_training_set(std::span<const MolecularGraph> ordered,
                               DatasetMode mode);

// Shuffles molecule ids and deals them into batch_count contiguous groups
// whose sizes differ by at most one.
std::vector<Batch> make_batches(const TrainingSet &ts, int batch_count,
                                Rng &rng);

inline constexpr int kStepCacheVersion = 1;

void write_step_cache(std::ostream &os, DatasetMode mode, ModuleKind kind,
                      std::span<const StepExample> examples,
                      const Json &meta = Json::object());
std::vector<StepExample> read_step_cache(std::istream &is, ModuleKind kind);

// Rebuilds offsets from the molecule ids of loaded examples.
TrainingSet assemble_training_set(DatasetMode mode, int molecules,
                                  std::vector<StepExample> m1,
                                  std::vector<StepExample> m2,
                                  std::vector<StepExample> m3);

} // namespace molgnn

#endif // MOLGNN_SEQUENCER_H_
