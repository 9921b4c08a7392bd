//
// Project molgnn
// SPDX-License-Identifier: Apache-2.0
//

#include "molgnn/ingest.h"

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <gtest/gtest.h>

#include "molgnn/chem.h"
#include "molgnn/serialize.h"

#include "test_support.h"

namespace molgnn {
namespace {

const DatasetSpec &qm9() {
  return dataset_spec(DatasetMode::kQm9);
}

const DatasetSpec &zinc() {
  return dataset_spec(DatasetMode::kZinc);
}

struct Bond {
  int a, b, order; // 1-based atoms
};

std::string molfile(const std::string &name,
                    const std::vector<std::string> &atoms,
                    const std::vector<Bond> &bonds) {
  std::string s = name + "\n  test\n\n";
  s += fmt::format("{:>3}{:>3}  0  0  0  0  0  0  0  0999 V2000\n",
                   atoms.size(), bonds.size());
  for (const auto &sym: atoms)
    s += fmt::format("    0.0000    0.0000    0.0000 {:<3} 0  0  0  0  0  0"
                     "  0  0  0  0  0  0\n",
                     sym);
  for (const Bond &b: bonds)
    s += fmt::format("{:>3}{:>3}{:>3}  0\n", b.a, b.b, b.order);
  s += "M  END\n$$$$\n";
  return s;
}

std::string methane_record() {
  return molfile("methane", { "C", "H", "H", "H", "H" },
                 { { 1, 2, 1 }, { 1, 3, 1 }, { 1, 4, 1 }, { 1, 5, 1 } });
}

TEST(ParseSdfTest, Methane) {
  auto parsed = parse_sdf(methane_record(), qm9());
  ASSERT_EQ(parsed.graphs.size(), 1);
  const auto &g = parsed.graphs[0];
  EXPECT_EQ(g.num_vertices(), 5);
  EXPECT_EQ(g.num_edges(), 4);
  EXPECT_EQ(g.degree(0), 4);
  EXPECT_EQ(g.vertex_type(0), *qm9().vertex_type_of("C"));

  auto heavy = parse_sdf(methane_record(), zinc());
  ASSERT_EQ(heavy.graphs.size(), 1);
  EXPECT_EQ(heavy.graphs[0].num_vertices(), 1);
}

TEST(ParseSdfTest, RejectsElementOutsideTable) {
  auto silane = molfile("silane", { "Si", "H", "H", "H", "H" },
                        { { 1, 2, 1 }, { 1, 3, 1 }, { 1, 4, 1 }, { 1, 5, 1 } });
  auto parsed = parse_sdf(silane, qm9());
  EXPECT_TRUE(parsed.graphs.empty());
  ASSERT_EQ(parsed.rejected.size(), 1);
  EXPECT_NE(parsed.rejected[0].reason.find("element outside type table"),
            std::string::npos);
}

TEST(ParseSdfTest, MalformedRecordIsIsolated) {
  std::string broken = "broken\n  test\n\n  2  1  0  0  0  0  0  0  0  0999 V2000\n"
                       "    0.0000    0.0000    0.0000 C   0  0\n"
                       "M  END\n$$$$\n";
  auto parsed = parse_sdf(methane_record() + broken + methane_record(), qm9());
  EXPECT_EQ(parsed.records, 3);
  EXPECT_EQ(parsed.graphs.size(), 2);
  ASSERT_EQ(parsed.rejected.size(), 1);
  EXPECT_EQ(parsed.rejected[0].record, 1);
  EXPECT_EQ(parsed.record_index, (std::vector<int> { 0, 2 }));
}

TEST(ParseSdfTest, RejectsChargesAndDisconnected) {
  std::string charged = molfile("ammonium", { "N", "H", "H", "H", "H" },
                                { { 1, 2, 1 }, { 1, 3, 1 }, { 1, 4, 1 },
                                  { 1, 5, 1 } });
  charged.insert(charged.find("M  END"), "M  CHG  1   1   1\n");
  auto two = molfile("two", { "C", "C" }, {});
  auto parsed = parse_sdf(charged + two, zinc());
  EXPECT_TRUE(parsed.graphs.empty());
  EXPECT_EQ(parsed.rejected.size(), 2);
}

TEST(ParseSmilesTest, Examples) {
  auto c = parse_smiles("C", zinc());
  EXPECT_EQ(c.num_vertices(), 1);
  EXPECT_EQ(c.num_edges(), 0);

  auto co = parse_smiles("C=O", zinc());
  ASSERT_EQ(co.num_edges(), 1);
  EXPECT_EQ(co.edges()[0].type, bond::kDouble);

  auto benzene = parse_smiles("c1ccccc1", zinc());
  EXPECT_EQ(benzene.num_vertices(), 6);
  EXPECT_EQ(benzene.num_edges(), 6);
  for (const Edge &e: benzene.edges())
    EXPECT_EQ(e.type, bond::kAromatic);
  for (int v = 0; v < 6; ++v)
    EXPECT_EQ(benzene.degree(v), 2);
}

TEST(ParseSmilesTest, ExplicitHydrogensInQm9Mode) {
  auto ethanol = parse_smiles("CCO", qm9());
  EXPECT_EQ(ethanol.num_vertices(), 9);
  EXPECT_EQ(ethanol.num_edges(), 8);
  EXPECT_TRUE(check_valence(ethanol, qm9()).valid);
  auto bracket = parse_smiles("[CH3][NH2]", qm9());
  EXPECT_EQ(bracket.num_vertices(), 7);
}

TEST(ParseSmilesTest, Errors) {
  EXPECT_THROW(parse_smiles("C1CC", zinc()), ParseError);
  EXPECT_THROW(parse_smiles("C(", zinc()), ParseError);
  EXPECT_THROW(parse_smiles("[NH4+]", zinc()), DataError);
  EXPECT_THROW(parse_smiles("[13CH4]", zinc()), DataError);
  EXPECT_THROW(parse_smiles("C.C", zinc()), DataError);
  EXPECT_THROW(parse_smiles("[Si]", zinc()), DataError);
  EXPECT_THROW(parse_smiles("c1ccccc1", qm9()), DataError);
}

TEST(ParseSmilesTest, StereoMarksAreIgnored) {
  auto a = parse_smiles("C[C@@H](O)F", zinc());
  auto b = parse_smiles("CC(O)F", zinc());
  EXPECT_TRUE(is_isomorphic(a, b));
  EXPECT_TRUE(is_isomorphic(parse_smiles("F/C=C/F", zinc()),
                            parse_smiles("FC=CF", zinc())));
}

// Graphs written by a reference toolkit from the same SMILES, without
// kekulization, in atom order as written.
TEST(ParseSmilesTest, MatchesReferenceToolkitOnZincSample) {
  std::ifstream in(test::data_path("zinc_roundtrip.jsonl"));
  ASSERT_TRUE(in);
  std::string line;
  int count = 0;
  while (std::getline(in, line)) {
    Json j = Json::parse(line);
    const std::string smiles = j["smiles"];
    MolecularGraph want(9, 4);
    for (const auto &sym: j["symbols"])
      want.add_vertex(*zinc().vertex_type_of(sym.get<std::string>()));
    for (const auto &e: j["edges"])
      want.add_edge(e[0], e[1], e[2]);

    MolecularGraph got = parse_smiles(smiles, zinc());
    EXPECT_TRUE(test::same_labeled_graph(got, want))
        << smiles << "\n got " << testing::PrintToString(got) << "\n want "
        << testing::PrintToString(want);
    EXPECT_NEAR(molecular_weight(got, zinc()), j["mol_wt"].get<double>(), 0.01)
        << smiles;
    ++count;
  }
  EXPECT_EQ(count, 300);
}

TEST(ParseSdfTest, AgreesWithSmilesOnQm9LikeSample) {
  const std::string text = read_file(test::data_path("qm9_like_200.sdf"));
  auto parsed = parse_sdf(text, qm9());
  ASSERT_EQ(parsed.graphs.size(), 200);
  EXPECT_TRUE(parsed.rejected.empty());
  std::istringstream smi(read_file(test::data_path("qm9_like.smi")));
  std::string line;
  for (const auto &g: parsed.graphs) {
    ASSERT_TRUE(std::getline(smi, line));
    auto h = parse_smiles(line, qm9());
    EXPECT_TRUE(is_isomorphic(g, h)) << line;
    EXPECT_TRUE(check_valence(g, qm9()).valid) << line;
  }
}

TEST(SplitTest, DeterministicPartition) {
  SplitSpec spec { 8, 1, 1, 42 };
  auto a = split_indices(10, spec);
  auto b = split_indices(10, spec);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.test, b.test);
  EXPECT_EQ(a.validation, b.validation);
  EXPECT_EQ(a.train.size(), 8);
  std::vector<int> all = a.train;
  all.insert(all.end(), a.test.begin(), a.test.end());
  all.insert(all.end(), a.validation.begin(), a.validation.end());
  std::sort(all.begin(), all.end());
  for (int i = 0; i < 10; ++i)
    EXPECT_EQ(all[i], i);
  EXPECT_THROW(split_indices(10, SplitSpec { 8, 1, 2, 42 }), DataError);
}

TEST(GraphCacheTest, RoundTrip) {
  auto parsed = parse_smiles_lines("smiles\nCCO\nC=O\nc1ccccc1\n", zinc());
  ASSERT_EQ(parsed.graphs.size(), 3);
  std::ostringstream os;
  write_graph_cache(os, zinc(), parsed.graphs);
  std::istringstream is(os.str());
  GraphCache cache = read_graph_cache(is);
  EXPECT_EQ(cache.mode, DatasetMode::kZinc);
  EXPECT_EQ(cache.graphs, parsed.graphs);

  std::istringstream wrong("{\"format\":\"other\",\"version\":1}\n");
  EXPECT_THROW(read_graph_cache(wrong), DataError);
}

} // namespace
} // namespace molgnn
