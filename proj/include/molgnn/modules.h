//
// Project molgnn
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MOLGNN_MODULES_H_
#define MOLGNN_MODULES_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "molgnn/dataset.h"
#include "molgnn/gnn.h"
#include "molgnn/graph.h"
#include "molgnn/random.h"
#include "molgnn/sequencer.h"
#include "molgnn/serialize.h"

namespace molgnn {

// What the loss is computed on during training. kGumbel perturbs the logits
// with Gumbel noise and divides by the annealed temperature; kPlain uses the
// logits directly.
enum class TrainingOutput { kGumbel, kPlain };

std::string_view training_output_name(TrainingOutput out);
TrainingOutput parse_training_output(std::string_view name);

struct ModuleConfig {
  ModuleKind kind = ModuleKind::kM1;
  Aggregation aggregation = Aggregation::kSum;
  int epochs = 0;
  double learning_rate = 1e-3;
  int k_max = 5;
  int hidden_state = 30;
  int hidden_out = 50;
  bool class_weighted = false;
  double tau_max = 5.0;
  double tau_min = 1.0;
  int state_dim = 10;
  std::uint64_t seed = 0;
  double epsilon = 1e-3;
  TrainingOutput training_output = TrainingOutput::kGumbel;
  bool focus_flag = false;

  friend bool operator==(const ModuleConfig &, const ModuleConfig &) = default;
};

Json config_to_json(const ModuleConfig &config);
// Missing keys keep the values of base.
ModuleConfig config_from_json(const Json &j, const ModuleConfig &base);

struct NamedPreset {
  std::string_view id;
  DatasetMode mode;
  ModuleConfig config;
};

std::span<const NamedPreset> presets();
// Throws DataError for unknown ids.
const NamedPreset &find_preset(std::string_view id);

GnnShape module_shape(const ModuleConfig &config, const DatasetSpec &spec);

/**
 * A trained module ready for inference. With class_weighted set, output
 * probabilities are multiplied by priors and renormalized before sampling.
 */
struct DecisionModule {
  ModuleKind kind = ModuleKind::kM1;
  DatasetMode mode = DatasetMode::kQm9;
  std::string preset;
  GnnModel model;
  std::vector<double> priors;
  bool class_weighted = false;
  long relaxations = 0;
};

// Relative class frequencies of the supervisions of examples. Every class
// of kind gets an entry.
std::vector<double> class_priors(ModuleKind kind, const DatasetSpec &spec,
                                 std::span<const StepExample> examples);

// 1 / (classes * prior); 0 for classes that never occur.
std::vector<double> class_weights(std::span<const double> priors);

// Probabilities used for inference decisions.
Eigen::VectorXd decision_probabilities(const DecisionModule &module,
                                       const Eigen::VectorXd &logits);

// Returns kStopClass or 1 + vertex type.
int m1_decide(DecisionModule &module, const MolecularGraph &g, int focus,
              double tau, Rng &rng);

// g holds j without the (i, j) edge, which is fed as a candidate. Throws
// GnnError if (i, j) is out of range or already decided.
int m2_decide(DecisionModule &module, const MolecularGraph &g, int i, int j,
              double tau, Rng &rng);

// Classifies every (k, j) with k not in {i, j} and k not yet linked to j in
// one relaxation. Returns the (k, bond type) pairs not sampled as
// disconnected, in increasing k.
std::vector<std::pair<int, int>> m3_decide(DecisionModule &module,
                                           const MolecularGraph &g, int i,
                                           int j, double tau, Rng &rng);

struct EpochLog {
  int epoch;
  double tau;
  double train_loss;
  double validation_accuracy;
};

struct TrainingResult {
  DecisionModule module;
  std::vector<EpochLog> log;
  int best_epoch = -1; // -1 when no epoch ran
  double best_accuracy = 0;
  double majority_baseline = 0;
};

struct Accuracy {
  long correct = 0;
  long total = 0;
  double value() const {
    return total > 0 ? static_cast<double>(correct) / total : 0.0;
  }
};

// Argmax single-step accuracy of module over examples; M3 counts each
// candidate edge as one output.
Accuracy step_accuracy(DecisionModule &module,
                       std::span<const StepExample> examples);

// Accuracy of always answering the most frequent class of reference.
double majority_baseline(ModuleKind kind, const DatasetSpec &spec,
                         std::span<const StepExample> reference,
                         std::span<const StepExample> evaluated);

using EpochCallback = std::function<void(const EpochLog &)>;

/**
 * Trains one module on its step examples. Each epoch anneals the
 * temperature, visits train.batches in order and takes one Adam step per
 * batch on the mean loss of its outputs. The model of the epoch with the best
 * validation accuracy is returned; with 0 epochs the initialized model is.
 *
 * Throws DataError if an example does not match kind.
 */
TrainingResult train_module(const ModuleConfig &config, const TrainingSet &train,
                            std::span<const StepExample> validation,
                            std::string_view preset = "",
                            const EpochCallback &on_epoch = {});

inline constexpr int kModuleManifestVersion = 1;

Json module_to_json(const DecisionModule &module);
DecisionModule module_from_json(const Json &j);

} // namespace molgnn

#endif // MOLGNN_MODULES_H_
