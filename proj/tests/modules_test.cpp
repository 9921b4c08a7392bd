//
// Project molgnn
// SPDX-License-Identifier: Apache-2.0
//

#include "molgnn/modules.h"

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "test_support.h"

namespace molgnn {
namespace {
using test::make_graph;

const DatasetSpec &qm9() {
  return dataset_spec(DatasetMode::kQm9);
}

ModuleConfig small_config(ModuleKind kind) {
  ModuleConfig c;
  c.kind = kind;
  c.k_max = 3;
  c.hidden_state = 8;
  c.hidden_out = 8;
  c.state_dim = 6;
  c.seed = 5;
  return c;
}

DecisionModule untrained(ModuleKind kind, std::uint64_t seed = 1) {
  DecisionModule m;
  m.kind = kind;
  Rng rng(seed);
  m.model = init_model(module_shape(small_config(kind), qm9()), rng);
  return m;
}

// Makes the output network ignore its input and always favour one class.
void saturate(DecisionModule &m, int cls) {
  m.model.output_net.w2.setZero();
  m.model.output_net.b2.setConstant(-30);
  m.model.output_net.b2(cls) = 30;
}

TEST(PresetTest, TableValues) {
  struct Row {
    const char *id;
    ModuleKind kind;
    Aggregation agg;
    int epochs;
    double lr;
    int k_max, hs, ho;
    bool weighted;
    DatasetMode mode;
  };
  const auto sum = Aggregation::kSum;
  const auto avg = Aggregation::kAvg;
  const auto q = DatasetMode::kQm9;
  const auto z = DatasetMode::kZinc;
  const Row rows[] = {
    { "M1-I", ModuleKind::kM1, sum, 700, 4e-3, 5, 30, 50, false, q },
    { "M1-II", ModuleKind::kM1, sum, 1500, 2e-3, 6, 100, 60, false, q },
    { "M1-III", ModuleKind::kM1, sum, 2000, 1e-5, 6, 100, 60, false, q },
    { "M2-I", ModuleKind::kM2, avg, 500, 2e-3, 3, 20, 50, false, q },
    { "M2-II", ModuleKind::kM2, avg, 1000, 1e-3, 4, 40, 60, false, q },
    { "M3-I", ModuleKind::kM3, avg, 500, 2e-3, 6, 20, 50, false, q },
    { "M3-II", ModuleKind::kM3, sum, 500, 2e-3, 6, 20, 50, false, q },
    { "M3-III", ModuleKind::kM3, avg, 500, 2e-3, 6, 20, 50, true, q },
    { "M3-IV", ModuleKind::kM3, sum, 500, 2e-3, 6, 20, 50, true, q },
    { "M1-Zinc", ModuleKind::kM1, sum, 2000, 1e-3, 6, 150, 80, false, z },
    { "M2-Zinc", ModuleKind::kM2, avg, 1000, 1e-3, 4, 50, 70, false, z },
    { "M3-Zinc", ModuleKind::kM3, avg, 500, 2e-3, 6, 20, 50, false, z },
  };
  EXPECT_EQ(presets().size(), std::size(rows));
  for (const Row &r: rows) {
    const NamedPreset &p = find_preset(r.id);
    EXPECT_EQ(p.mode, r.mode) << r.id;
    EXPECT_EQ(p.config.kind, r.kind) << r.id;
    EXPECT_EQ(p.config.aggregation, r.agg) << r.id;
    EXPECT_EQ(p.config.epochs, r.epochs) << r.id;
    EXPECT_DOUBLE_EQ(p.config.learning_rate, r.lr) << r.id;
    EXPECT_EQ(p.config.k_max, r.k_max) << r.id;
    EXPECT_EQ(p.config.hidden_state, r.hs) << r.id;
    EXPECT_EQ(p.config.hidden_out, r.ho) << r.id;
    EXPECT_EQ(p.config.class_weighted, r.weighted) << r.id;
    EXPECT_DOUBLE_EQ(p.config.tau_max, 5.0);
    EXPECT_DOUBLE_EQ(p.config.tau_min, 1.0);
  }
  EXPECT_THROW(find_preset("M4-I"), DataError);
}

TEST(ModuleShapeTest, ClassCounts) {
  const DatasetSpec &zinc = dataset_spec(DatasetMode::kZinc);
  const int qm9_want[] = { 6, 3, 4 };
  const int zinc_want[] = { 10, 4, 5 };
  int k = 0;
  // Nine ZINC vertex labels need a wider state.
  auto wide = [](ModuleKind kind) {
    ModuleConfig c = small_config(kind);
    c.state_dim = 10;
    return c;
  };
  for (ModuleKind kind: { ModuleKind::kM1, ModuleKind::kM2, ModuleKind::kM3 }) {
    EXPECT_EQ(module_shape(small_config(kind), qm9()).classes, qm9_want[k]);
    EXPECT_EQ(module_shape(wide(kind), zinc).classes, zinc_want[k]);
    ++k;
  }
  EXPECT_EQ(module_shape(small_config(ModuleKind::kM1), qm9()).head_kind,
            HeadKind::kNode);
  EXPECT_EQ(module_shape(wide(ModuleKind::kM3), zinc).edge_label_dim, 5);
}

TEST(ConfigTest, JsonRoundTripAndValidation) {
  ModuleConfig c = find_preset("M3-IV").config;
  c.seed = 99;
  EXPECT_EQ(config_from_json(Json::parse(config_to_json(c).dump()),
                             ModuleConfig {}),
            c);
  ModuleConfig partial = config_from_json(Json { { "epochs", 3 } }, c);
  EXPECT_EQ(partial.epochs, 3);
  EXPECT_EQ(partial.hidden_out, c.hidden_out);
  EXPECT_THROW(config_from_json(Json { { "k_max", 0 } }, c), DataError);
  EXPECT_THROW(config_from_json(Json { { "aggregation", "max" } }, c),
               std::exception);
}

TEST(DecideTest, SaturatedM1Stops) {
  DecisionModule m = untrained(ModuleKind::kM1);
  saturate(m, kStopClass);
  Rng rng(1);
  auto g = make_graph(5, 3, { 1, 0 }, { { 0, 1, 0 } });
  for (int rep = 0; rep < 20; ++rep)
    EXPECT_EQ(m1_decide(m, g, 0, 1.0, rng), kStopClass);
}

TEST(DecideTest, M1IsTotalOnSingleVertex) {
  DecisionModule m = untrained(ModuleKind::kM1);
  Rng rng(2);
  auto g = make_graph(5, 3, { 1 }, {});
  for (int rep = 0; rep < 50; ++rep) {
    int c = m1_decide(m, g, 0, 1.0, rng);
    EXPECT_GE(c, 0);
    EXPECT_LT(c, 6);
  }
  EXPECT_EQ(m.relaxations, 50);
}

TEST(DecideTest, SaturatedM2ChoosesSingle) {
  DecisionModule m = untrained(ModuleKind::kM2);
  saturate(m, bond::kSingle);
  Rng rng(3);
  auto g = make_graph(5, 3, { 1, 0 }, {});
  EXPECT_EQ(m2_decide(m, g, 0, 1, 1.0, rng), bond::kSingle);
  auto linked = make_graph(5, 3, { 1, 0 }, { { 0, 1, 0 } });
  EXPECT_THROW(m2_decide(m, linked, 0, 1, 1.0, rng), GnnError);
  EXPECT_THROW(m2_decide(m, g, 0, 2, 1.0, rng), GnnError);
}

TEST(DecideTest, DecisionsAreReproducible) {
  DecisionModule m = untrained(ModuleKind::kM1, 7);
  auto g = make_graph(5, 3, { 1, 0, 1 }, { { 0, 1, 0 }, { 0, 2, 0 } });
  Rng a(11), b(11);
  for (int rep = 0; rep < 30; ++rep)
    EXPECT_EQ(m1_decide(m, g, 2, 1.0, a), m1_decide(m, g, 2, 1.0, b));
}

TEST(DecideTest, M3CandidatesAndSingleRelaxation) {
  DecisionModule m = untrained(ModuleKind::kM3);
  Rng rng(4);
  // Only i and j: nothing to classify.
  auto two = make_graph(5, 3, { 1, 1 }, { { 0, 1, 0 } });
  EXPECT_TRUE(m3_decide(m, two, 0, 1, 1.0, rng).empty());

  // Four vertices: candidates (1, 3) and (2, 3).
  saturate(m, 1 + bond::kDouble);
  auto four = make_graph(5, 3, { 1, 1, 1, 1 },
                         { { 0, 1, 0 }, { 0, 2, 0 }, { 0, 3, 0 } });
  const long before = m.relaxations;
  auto links = m3_decide(m, four, 0, 3, 1.0, rng);
  EXPECT_EQ(m.relaxations - before, 1);
  EXPECT_EQ(links, (std::vector<std::pair<int, int>> { { 1, bond::kDouble },
                                                       { 2, bond::kDouble } }));

  // A larger graph still costs one relaxation.
  Rng grng(8);
  auto big = test::random_connected(12, 5, 3, grng, 0.0);
  const int j = 11;
  const int i = neighbors(big, j).front();
  const long mid = m.relaxations;
  m3_decide(m, big, i, j, 1.0, rng);
  EXPECT_EQ(m.relaxations - mid, 1);

  saturate(m, kDisconnectedClass);
  EXPECT_TRUE(m3_decide(m, four, 0, 3, 1.0, rng).empty());
  EXPECT_TRUE(m3_decide(m, big, i, j, 1.0, rng).empty());
}

TEST(PriorsTest, ReMultipliedProbabilitiesAreNormalized) {
  DecisionModule m = untrained(ModuleKind::kM3);
  m.class_weighted = true;
  m.priors = { 0.97, 0.02, 0.008, 0.002 };
  Eigen::VectorXd y(4);
  y << 0.2, 1.0, -0.3, 0.5;
  Eigen::VectorXd p = decision_probabilities(m, y);
  Eigen::VectorXd s = softmax(y);
  double norm = 0;
  for (int c = 0; c < 4; ++c)
    norm += s(c) * m.priors[c];
  for (int c = 0; c < 4; ++c)
    EXPECT_NEAR(p(c), s(c) * m.priors[c] / norm, 1e-12);
  EXPECT_NEAR(p.sum(), 1.0, 1e-12);

  m.class_weighted = false;
  EXPECT_LT((decision_probabilities(m, y) - s).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(PriorsTest, WeightsAreInversePriors) {
  const double priors[] = { 0.97, 0.03, 0.0 };
  auto w = class_weights(priors);
  EXPECT_NEAR(w[0], 1 / (3 * 0.97), 1e-12);
  EXPECT_NEAR(w[1], 1 / (3 * 0.03), 1e-12);
  EXPECT_EQ(w[2], 0.0);
}

// Single-vertex M1 examples whose supervision depends on the vertex type
// only: carbon continues with a hydrogen, oxygen stops, or a fixed mix.
StepExample lone(int type, int supervision, int molecule) {
  StepExample ex;
  ex.molecule = molecule;
  ex.graph = make_graph(5, 3, { type }, {});
  ex.focus = 0;
  ex.supervision = supervision;
  return ex;
}

TrainingSet synthetic(const std::vector<StepExample> &m1, int batches) {
  TrainingSet ts = assemble_training_set(DatasetMode::kQm9,
                                         static_cast<int>(m1.size()), m1, {}, {});
  Rng rng(3);
  ts.batches = make_batches(ts, batches, rng);
  return ts;
}

TEST(TrainTest, ZeroEpochsReturnsInitialModel) {
  std::vector<StepExample> ex { lone(1, 1, 0), lone(3, 0, 1) };
  TrainingSet ts = synthetic(ex, 1);
  ModuleConfig c = small_config(ModuleKind::kM1);
  c.epochs = 0;
  TrainingResult r = train_module(c, ts, ex);
  EXPECT_EQ(r.best_epoch, -1);
  EXPECT_TRUE(r.log.empty());

  // Same initialization as the first epoch of a real run.
  c.epochs = 1;
  c.learning_rate = 0;
  TrainingResult one = train_module(c, ts, ex);
  auto a = r.module.model.parameters();
  auto b = one.module.model.parameters();
  for (int k = 0; k < GnnModel::kBlocks; ++k)
    for (std::size_t i = 0; i < a[k].size(); ++i)
      ASSERT_EQ(a[k][i], b[k][i]);
}

TEST(TrainTest, LearnsSeparableTask) {
  std::vector<StepExample> train, val;
  for (int k = 0; k < 40; ++k)
    train.push_back(k % 2 ? lone(1, 1, k) : lone(3, 0, k));
  for (int k = 0; k < 10; ++k)
    val.push_back(k % 2 ? lone(1, 1, k) : lone(3, 0, k));
  TrainingSet ts = synthetic(train, 4);
  ModuleConfig c = small_config(ModuleKind::kM1);
  c.epochs = 200;
  c.learning_rate = 1e-2;
  std::vector<double> taus;
  TrainingResult r = train_module(c, ts, val, "synthetic",
                                  [&](const EpochLog &e) { taus.push_back(e.tau); });
  EXPECT_GE(r.best_accuracy, 0.95);
  EXPECT_EQ(r.log.size(), 200);
  EXPECT_DOUBLE_EQ(taus.front(), 5.0);
  EXPECT_DOUBLE_EQ(taus.back(), 1.0);
  EXPECT_DOUBLE_EQ(r.majority_baseline, 0.5);
  EXPECT_EQ(r.module.preset, "synthetic");
  EXPECT_GE(step_accuracy(r.module, val).value(), 0.95);
}

TEST(TrainTest, RejectsMismatchedExamples) {
  std::vector<StepExample> ex { lone(1, 1, 0) };
  TrainingSet ts = synthetic(ex, 1);
  ModuleConfig c = small_config(ModuleKind::kM1);
  c.epochs = 1;
  std::vector<StepExample> wrong { lone(1, 1, 0) };
  wrong[0].candidates.push_back({ 0, 0, 0 });
  wrong[0].supervision = 9;
  EXPECT_THROW(train_module(c, ts, wrong), DataError);
}

// Class-weighted training with priors re-applied at inference recovers the
// posterior of a noisy two-class task.
TEST(TrainTest, WeightedTrainingRecoversPosterior) {
  std::vector<StepExample> train;
  int id = 0;
  // Carbon: 70% continue. Oxygen: 20% continue. Overall prior 45% continue.
  for (int k = 0; k < 100; ++k)
    train.push_back(lone(1, k < 70 ? 1 : 0, id++));
  for (int k = 0; k < 100; ++k)
    train.push_back(lone(3, k < 20 ? 1 : 0, id++));
  TrainingSet ts = synthetic(train, 1);
  ModuleConfig c = small_config(ModuleKind::kM1);
  c.epochs = 400;
  c.learning_rate = 2e-2;
  c.class_weighted = true;
  c.training_output = TrainingOutput::kPlain;
  TrainingResult r = train_module(c, ts, {});
  DecisionModule &m = r.module;
  EXPECT_NEAR(m.priors[0], 0.55, 1e-12);
  EXPECT_NEAR(m.priors[1], 0.45, 1e-12);

  auto prob = [&](int type) {
    auto g = make_graph(5, 3, { type }, {});
    GnnInput in = make_input(g, {}, 0);
    auto s = state_relax(in, m.model).final_states();
    return decision_probabilities(m, node_head(s, 0, m.model).logits);
  };
  Eigen::VectorXd pc = prob(1);
  Eigen::VectorXd po = prob(3);
  EXPECT_NEAR(pc(1) / (pc(0) + pc(1)), 0.7, 0.02);
  EXPECT_NEAR(po(1) / (po(0) + po(1)), 0.2, 0.02);
}

TEST(MajorityBaselineTest, UsesReferenceMajority) {
  std::vector<StepExample> ref { lone(1, 1, 0), lone(1, 1, 1), lone(3, 0, 2) };
  std::vector<StepExample> eval { lone(1, 0, 0), lone(1, 0, 1), lone(1, 1, 2),
                                  lone(1, 0, 3) };
  EXPECT_DOUBLE_EQ(majority_baseline(ModuleKind::kM1, qm9(), ref, eval), 0.25);
}

TEST(ModuleJsonTest, RoundTrip) {
  DecisionModule m = untrained(ModuleKind::kM3, 4);
  m.preset = "M3-III";
  m.class_weighted = true;
  m.priors = { 0.9, 0.05, 0.03, 0.02 };
  DecisionModule back = module_from_json(Json::parse(module_to_json(m).dump()));
  EXPECT_EQ(back.kind, m.kind);
  EXPECT_EQ(back.mode, m.mode);
  EXPECT_EQ(back.preset, m.preset);
  EXPECT_EQ(back.class_weighted, true);
  EXPECT_EQ(back.priors, m.priors);
  EXPECT_EQ(back.model.shape, m.model.shape);
  EXPECT_EQ(back.model.output_net.w1, m.model.output_net.w1);

  Json j = module_to_json(m);
  j["mode"] = "zinc";
  EXPECT_THROW(module_from_json(j), DataError);
}

} // namespace
} // namespace molgnn
