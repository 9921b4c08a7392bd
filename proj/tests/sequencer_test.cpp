//
// Project molgnn
// SPDX-License-Identifier: Apache-2.0
//

#include "molgnn/sequencer.h"

#include <set>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "molgnn/ingest.h"

#include "test_support.h"

namespace molgnn {
namespace {
using test::make_graph;

const DatasetSpec &qm9() {
  return dataset_spec(DatasetMode::kQm9);
}

// QM9 types: H 0, C 1, N 2, O 3, F 4.
MolecularGraph water() {
  return make_graph(5, 3, { 3, 0, 0 }, { { 0, 1, 0 }, { 0, 2, 0 } });
}

MolecularGraph methane() {
  return make_graph(5, 3, { 1, 0, 0, 0, 0 },
                    { { 0, 1, 0 }, { 0, 2, 0 }, { 0, 3, 0 }, { 0, 4, 0 } });
}

std::vector<MolecularGraph> qm9_like(int count) {
  auto parsed = parse_smiles_lines(read_file(test::data_path("qm9_like.smi")),
                                   qm9());
  parsed.graphs.resize(count);
  return parsed.graphs;
}

TEST(ClassCountTest, MatchesTypeTables) {
  EXPECT_EQ(class_count(ModuleKind::kM1, qm9()), 6);
  EXPECT_EQ(class_count(ModuleKind::kM2, qm9()), 3);
  EXPECT_EQ(class_count(ModuleKind::kM3, qm9()), 4);
  const DatasetSpec &zinc = dataset_spec(DatasetMode::kZinc);
  EXPECT_EQ(class_count(ModuleKind::kM1, zinc), 10);
  EXPECT_EQ(class_count(ModuleKind::kM2, zinc), 4);
  EXPECT_EQ(class_count(ModuleKind::kM3, zinc), 5);
}

TEST(DecomposeTest, Water) {
  auto d = decompose(water());
  EXPECT_EQ(d.m1.size(), 5);
  EXPECT_EQ(d.m2.size(), 2);
  // The second hydrogen has one candidate (the first one), disconnected.
  ASSERT_EQ(d.m3.size(), 1);
  ASSERT_EQ(d.m3[0].candidates.size(), 1);
  EXPECT_EQ(d.m3[0].candidates[0], (CandidateEdge { 1, 2, kDisconnectedClass }));
}

TEST(DecomposeTest, SingleVertex) {
  auto d = decompose(make_graph(5, 3, { 1 }, {}));
  ASSERT_EQ(d.m1.size(), 1);
  EXPECT_EQ(d.m1[0].supervision, kStopClass);
  EXPECT_TRUE(d.m2.empty());
  EXPECT_TRUE(d.m3.empty());
}

TEST(DecomposeTest, MethaneStepByStep) {
  auto d = decompose(methane());
  ASSERT_EQ(d.m1.size(), 9);
  // Carbon adds four hydrogens and stops, then each hydrogen stops.
  const std::vector<int> want_focus { 0, 0, 0, 0, 0, 1, 2, 3, 4 };
  const std::vector<int> want_sup { 1, 1, 1, 1, 0, 0, 0, 0, 0 };
  for (int s = 0; s < 9; ++s) {
    EXPECT_EQ(d.m1[s].focus, want_focus[s]) << s;
    EXPECT_EQ(d.m1[s].supervision, want_sup[s]) << s;
  }
  EXPECT_EQ(d.m1[0].graph.num_vertices(), 1);
  EXPECT_EQ(d.m1[4].graph.num_vertices(), 5);

  ASSERT_EQ(d.m2.size(), 4);
  for (int s = 0; s < 4; ++s) {
    EXPECT_EQ(d.m2[s].target, s + 1);
    EXPECT_EQ(d.m2[s].supervision, bond::kSingle);
    EXPECT_FALSE(d.m2[s].graph.has_edge(0, s + 1));
  }

  // Hydrogen 1 has no candidates; 2, 3, 4 have 1, 2, 3.
  ASSERT_EQ(d.m3.size(), 3);
  for (int s = 0; s < 3; ++s) {
    EXPECT_EQ(d.m3[s].target, s + 2);
    EXPECT_EQ(d.m3[s].candidates.size(), s + 1);
    EXPECT_TRUE(d.m3[s].graph.has_edge(0, s + 2));
    for (const CandidateEdge &c: d.m3[s].candidates)
      EXPECT_EQ(c.supervision, kDisconnectedClass);
  }
}

TEST(DecomposeTest, RingClosureIsSupervised) {
  // Cyclopropane carbons with the closing edge 1-2.
  auto ring = make_graph(5, 3, { 1, 1, 1 }, { { 0, 1, 0 }, { 0, 2, 0 }, { 1, 2, 0 } });
  auto d = decompose(ring);
  ASSERT_EQ(d.m3.size(), 1);
  ASSERT_EQ(d.m3[0].candidates.size(), 1);
  EXPECT_EQ(d.m3[0].candidates[0],
            (CandidateEdge { 1, 2, 1 + bond::kSingle }));
}

TEST(DecomposeTest, RejectsUnorderedInput) {
  // Vertex 2 is attached to 1 only, but 1's parent is 0 and 2 precedes the
  // children of 0 listed later.
  auto bad = make_graph(5, 3, { 1, 1, 1, 1 },
                        { { 0, 1, 0 }, { 1, 2, 0 }, { 0, 3, 0 } });
  EXPECT_THROW(decompose(bad), DataError);
}

TEST(DecomposeTest, CountsAndConnectivityOnCorpus) {
  auto graphs = qm9_like(200);
  auto prio = type_priority_from_centrality(graphs, 5);
  Rng rng(9);
  for (const auto &raw: graphs) {
    auto g = reorder(raw, prio, rng);
    auto d = decompose(g);
    const int n = g.num_vertices();
    EXPECT_EQ(static_cast<int>(d.m1.size()), 2 * n - 1);
    EXPECT_EQ(static_cast<int>(d.m2.size()), n - 1);
    EXPECT_LE(static_cast<int>(d.m3.size()), n - 1);
    for (const auto *list: { &d.m1, &d.m2, &d.m3 })
      for (const StepExample &s: *list)
        ASSERT_TRUE(s.graph.num_vertices() == 1 || s.graph.is_connected()
                    || list == &d.m2);
    for (const StepExample &s: d.m1)
      EXPECT_LT(s.supervision, 6);
    for (const StepExample &s: d.m2) {
      EXPECT_LT(s.supervision, 3);
      // Without its first edge the new vertex is the only loose one.
      EXPECT_TRUE(s.graph.prefix(s.target).is_connected());
    }
    for (const StepExample &s: d.m3) {
      EXPECT_FALSE(s.candidates.empty());
      for (const CandidateEdge &c: s.candidates) {
        EXPECT_LT(c.supervision, 4);
        EXPECT_NE(c.k, s.focus);
        EXPECT_LT(c.k, c.j);
      }
    }
  }
}

TEST(ReorderTest, AlreadyOrderedPathIsUnchanged) {
  auto path = make_graph(5, 3, { 1, 1, 1 }, { { 0, 1, 0 }, { 1, 2, 0 } });
  Rng rng(4);
  EXPECT_TRUE(test::same_labeled_graph(reorder(path, TypePriority(5), rng), path));
}

TEST(ReorderTest, IsomorphicAndDeterministic) {
  auto graphs = qm9_like(50);
  auto prio = type_priority_from_centrality(graphs, 5);
  for (const auto &g: graphs) {
    Rng a(77), b(77);
    auto ra = reorder(g, prio, a);
    EXPECT_TRUE(is_isomorphic(ra, g));
    EXPECT_EQ(ra, reorder(g, prio, b));
    EXPECT_EQ(ra.vertex_type(0), g.vertex_type(0));
    EXPECT_NO_THROW(decompose(ra));
  }
}

TEST(ReorderTest, GoldenPermutation) {
  // Ethanol with explicit hydrogens. Under the identity ranking hydrogens
  // are expanded before carbon, so each level lists its hydrogens first.
  auto g = parse_smiles("CCO", qm9());
  Rng rng(2026);
  auto r = reorder(g, TypePriority(5), rng);
  EXPECT_EQ(std::vector<int>(r.vertex_types().begin(), r.vertex_types().end()),
            (std::vector<int> { 1, 0, 0, 0, 1, 0, 0, 3, 0 }));
  EXPECT_TRUE(is_isomorphic(r, g));
}

TEST(CentralityTest, HydrogenBeforeCarbonOnPaths) {
  // H-C-H
  std::vector<MolecularGraph> train(3, make_graph(5, 3, { 0, 1, 0 },
                                                  { { 0, 1, 0 }, { 1, 2, 0 } }));
  auto means = mean_centrality_by_type(train, 5);
  EXPECT_DOUBLE_EQ(means[0], 0.0);
  EXPECT_DOUBLE_EQ(means[1], 1.0);
  EXPECT_DOUBLE_EQ(means[2], 0.0);
  auto prio = type_priority_from_centrality(train, 5);
  EXPECT_LT(prio.rank(0), prio.rank(1));
}

TEST(CentralityTest, SingleGraphEqualsItsMeans) {
  auto g = parse_smiles("CCO", qm9());
  auto scores = betweenness(g);
  std::vector<double> sum(5, 0.0), count(5, 0.0);
  for (int v = 0; v < g.num_vertices(); ++v) {
    sum[g.vertex_type(v)] += scores[v];
    count[g.vertex_type(v)] += 1;
  }
  auto means = mean_centrality_by_type(std::span(&g, 1), 5);
  for (int t = 0; t < 5; ++t)
    EXPECT_NEAR(means[t], count[t] ? sum[t] / count[t] : 0.0, 1e-12) << t;
}

TEST(BatchTest, MoleculesStayTogether) {
  std::vector<MolecularGraph> six(6, methane());
  TrainingSet ts = build_training_set(six, DatasetMode::kQm9);
  Rng rng(1);
  auto batches = make_batches(ts, 2, rng);
  ASSERT_EQ(batches.size(), 2);
  std::set<int> seen;
  for (const Batch &b: batches) {
    EXPECT_EQ(b.molecules.size(), 3);
    seen.insert(b.molecules.begin(), b.molecules.end());
    for (int k: ts.example_indices(ModuleKind::kM1, b))
      EXPECT_TRUE(std::count(b.molecules.begin(), b.molecules.end(),
                             ts.examples(ModuleKind::kM1)[k].molecule));
  }
  EXPECT_EQ(seen.size(), 6);

  auto one = make_batches(ts, 1, rng);
  ASSERT_EQ(one.size(), 1);
  EXPECT_EQ(ts.example_indices(ModuleKind::kM1, one[0]).size(), 6 * 9);
  EXPECT_EQ(ts.example_indices(ModuleKind::kM3, one[0]).size(), 6 * 3);
}

TEST(StepCacheTest, RoundTrip) {
  auto d = decompose(methane());
  for (ModuleKind kind: { ModuleKind::kM1, ModuleKind::kM2, ModuleKind::kM3 }) {
    std::ostringstream os;
    write_step_cache(os, DatasetMode::kQm9, kind, d.of(kind));
    std::istringstream is(os.str());
    auto back = read_step_cache(is, kind);
    auto want = d.of(kind);
    ASSERT_EQ(back.size(), want.size());
    for (std::size_t s = 0; s < back.size(); ++s) {
      EXPECT_EQ(back[s].graph, want[s].graph);
      EXPECT_EQ(back[s].focus, want[s].focus);
      EXPECT_EQ(back[s].target, want[s].target);
      EXPECT_EQ(back[s].supervision, want[s].supervision);
      EXPECT_EQ(back[s].candidates, want[s].candidates);
    }
  }
  std::ostringstream os;
  write_step_cache(os, DatasetMode::kQm9, ModuleKind::kM1, d.m1);
  std::istringstream is(os.str());
  EXPECT_THROW(read_step_cache(is, ModuleKind::kM2), DataError);
}

} // namespace
} // namespace molgnn
