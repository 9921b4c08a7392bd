//
// Project molgnn
// SPDX-License-Identifier: Apache-2.0
//

#include "molgnn/modules.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

namespace molgnn {

std::string_view training_output_name(TrainingOutput out) {
  return out == TrainingOutput::kGumbel ? "gumbel" : "plain";
}

TrainingOutput parse_training_output(std::string_view name) {
  if (name == "gumbel")
    return TrainingOutput::kGumbel;
  if (name == "plain")
    return TrainingOutput::kPlain;
  throw DataError("unknown training output '" + std::string(name) + "'");
}

Json config_to_json(const ModuleConfig &c) {
  return {
    { "kind", module_name(c.kind) },
    { "aggregation", aggregation_name(c.aggregation) },
    { "epochs", c.epochs },
    { "learning_rate", c.learning_rate },
    { "k_max", c.k_max },
    { "hidden_state", c.hidden_state },
    { "hidden_out", c.hidden_out },
    { "class_weighted", c.class_weighted },
    { "tau_max", c.tau_max },
    { "tau_min", c.tau_min },
    { "state_dim", c.state_dim },
    { "seed", c.seed },
    { "epsilon", c.epsilon },
    { "training_output", training_output_name(c.training_output) },
    { "focus_flag", c.focus_flag },
  };
}

ModuleConfig config_from_json(const Json &j, const ModuleConfig &base) {
  ModuleConfig c = base;
  try {
    if (j.contains("kind"))
      c.kind = parse_module_kind(j["kind"].get<std::string>());
    if (j.contains("aggregation"))
      c.aggregation = parse_aggregation(j["aggregation"].get<std::string>());
    c.epochs = j.value("epochs", c.epochs);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.k_max = j.value("k_max", c.k_max);
    c.hidden_state = j.value("hidden_state", c.hidden_state);
    c.hidden_out = j.value("hidden_out", c.hidden_out);
    c.class_weighted = j.value("class_weighted", c.class_weighted);
    c.tau_max = j.value("tau_max", c.tau_max);
    c.tau_min = j.value("tau_min", c.tau_min);
    c.state_dim = j.value("state_dim", c.state_dim);
    c.seed = j.value("seed", c.seed);
    c.epsilon = j.value("epsilon", c.epsilon);
    if (j.contains("training_output"))
      c.training_output =
          parse_training_output(j["training_output"].get<std::string>());
    c.focus_flag = j.value("focus_flag", c.focus_flag);
  } catch (const Json::exception &err) {
    throw DataError(std::string("bad module config: ") + err.what());
  } catch (const GnnError &err) {
    throw DataError(err.what());
  }
  if (c.epochs < 0 || !(c.learning_rate > 0) || c.k_max < 1
      || c.hidden_state < 1 || c.hidden_out < 1 || c.state_dim < 1
      || !(c.epsilon >= 0) || !(c.tau_min > 0) || c.tau_max < c.tau_min)
    throw DataError("module config out of range");
  return c;
}

namespace {

ModuleConfig preset(ModuleKind kind, Aggregation agg, int epochs, double lr,
                    int k_max, int hu_state, int hu_out, bool weighted = false) {
  ModuleConfig c;
  c.kind = kind;
  c.aggregation = agg;
  c.epochs = epochs;
  c.learning_rate = lr;
  c.k_max = k_max;
  c.hidden_state = hu_state;
  c.hidden_out = hu_out;
  c.class_weighted = weighted;
  return c;
}

constexpr auto kSum = Aggregation::kSum;
constexpr auto kAvg = Aggregation::kAvg;
constexpr auto kM1 = ModuleKind::kM1;
constexpr auto kM2 = ModuleKind::kM2;
constexpr auto kM3 = ModuleKind::kM3;
constexpr auto kQm9 = DatasetMode::kQm9;
constexpr auto kZinc = DatasetMode::kZinc;

const std::vector<NamedPreset> &preset_table() {
  static const std::vector<NamedPreset> table = {
    { "M1-I", kQm9, preset(kM1, kSum, 700, 4e-3, 5, 30, 50) },
    { "M1-II", kQm9, preset(kM1, kSum, 1500, 2e-3, 6, 100, 60) },
    { "M1-III", kQm9, preset(kM1, kSum, 2000, 1e-5, 6, 100, 60) },
    { "M2-I", kQm9, preset(kM2, kAvg, 500, 2e-3, 3, 20, 50) },
    { "M2-II", kQm9, preset(kM2, kAvg, 1000, 1e-3, 4, 40, 60) },
    { "M3-I", kQm9, preset(kM3, kAvg, 500, 2e-3, 6, 20, 50) },
    { "M3-II", kQm9, preset(kM3, kSum, 500, 2e-3, 6, 20, 50) },
    { "M3-III", kQm9, preset(kM3, kAvg, 500, 2e-3, 6, 20, 50, true) },
    { "M3-IV", kQm9, preset(kM3, kSum, 500, 2e-3, 6, 20, 50, true) },
    { "M1-Zinc", kZinc, preset(kM1, kSum, 2000, 1e-3, 6, 150, 80) },
    { "M2-Zinc", kZinc, preset(kM2, kAvg, 1000, 1e-3, 4, 50, 70) },
    { "M3-Zinc", kZinc, preset(kM3, kAvg, 500, 2e-3, 6, 20, 50) },
  };
  return table;
}

} // namespace

std::span<const NamedPreset> presets() {
  return preset_table();
}

const NamedPreset &find_preset(std::string_view id) {
  for (const NamedPreset &p: preset_table())
    if (p.id == id)
      return p;
  throw DataError("unknown preset '" + std::string(id) + "'");
}

GnnShape module_shape(const ModuleConfig &config, const DatasetSpec &spec) {
  GnnShape s;
  s.head_kind = config.kind == ModuleKind::kM1 ? HeadKind::kNode
                                               : HeadKind::kEdge;
  s.aggregation = config.aggregation;
  s.k_max = config.k_max;
  s.epsilon = config.epsilon;
  s.state_dim = config.state_dim;
  s.vertex_label_dim = spec.num_vertex_types();
  s.edge_label_dim = spec.num_edge_types() + 1;
  s.hidden_state = config.hidden_state;
  s.hidden_out = config.hidden_out;
  s.classes = class_count(config.kind, spec);
  s.focus_flag = config.focus_flag;
  s.validate();
  return s;
}

std::vector<double> class_priors(ModuleKind kind, const DatasetSpec &spec,
                                 std::span<const StepExample> examples) {
  std::vector<double> count(class_count(kind, spec), 0.0);
  double total = 0;
  auto add = [&](int cls) {
    if (cls < 0 || cls >= static_cast<int>(count.size()))
      throw DataError("supervision outside the module's classes");
    count[cls] += 1;
    total += 1;
  };
  for (const StepExample &ex: examples) {
    if (kind == ModuleKind::kM3)
      for (const CandidateEdge &c: ex.candidates)
        add(c.supervision);
    else
      add(ex.supervision);
  }
  if (total > 0)
    for (double &c: count)
      c /= total;
  return count;
}

std::vector<double> class_weights(std::span<const double> priors) {
  std::vector<double> w(priors.size(), 0.0);
  for (std::size_t c = 0; c < priors.size(); ++c)
    if (priors[c] > 0)
      w[c] = 1.0 / (static_cast<double>(priors.size()) * priors[c]);
  return w;
}

Eigen::VectorXd decision_probabilities(const DecisionModule &module,
                                       const Eigen::VectorXd &logits) {
  Eigen::VectorXd p = softmax(logits);
  if (!module.class_weighted)
    return p;
  if (static_cast<Eigen::Index>(module.priors.size()) != p.size())
    throw GnnError("prior vector does not match the class count");
  Eigen::VectorXd q = p.cwiseProduct(
      Eigen::Map<const Eigen::VectorXd>(module.priors.data(), p.size()));
  const double sum = q.sum();
  return sum > 0 ? Eigen::VectorXd(q / sum) : p;
}

namespace {

int sample_decision(const DecisionModule &module, const Eigen::VectorXd &logits,
                    double tau, Rng &rng) {
  if (!module.class_weighted)
    return gumbel_sample(logits, tau, rng).hard;
  Eigen::VectorXd p = decision_probabilities(module, logits);
  Eigen::VectorXd logp(p.size());
  for (Eigen::Index c = 0; c < p.size(); ++c)
    logp(c) = p(c) > 0 ? std::log(p(c))
                       : -std::numeric_limits<double>::infinity();
  return gumbel_sample(logp, tau, rng).hard;
}

void require_kind(const DecisionModule &module, ModuleKind kind) {
  if (module.kind != kind)
    throw GnnError("module " + std::string(module_name(module.kind))
                   + " used as " + std::string(module_name(kind)));
}

int candidate_label(const MolecularGraph &g) {
  return g.num_edge_types();
}

} // namespace

int m1_decide(DecisionModule &module, const MolecularGraph &g, int focus,
              double tau, Rng &rng) {
  require_kind(module, ModuleKind::kM1);
  if (focus < 0 || focus >= g.num_vertices())
    throw GnnError("focus out of range");
  GnnInput in = make_input(g, {}, focus);
  Trajectory t = state_relax(in, module.model);
  ++module.relaxations;
  HeadOutput out = node_head(t.final_states(), focus, module.model);
  return sample_decision(module, out.logits, tau, rng);
}

int m2_decide(DecisionModule &module, const MolecularGraph &g, int i, int j,
              double tau, Rng &rng) {
  require_kind(module, ModuleKind::kM2);
  const std::pair<int, int> cand[] = { { i, j } };
  GnnInput in = make_input(g, cand, i);
  Trajectory t = state_relax(in, module.model);
  ++module.relaxations;
  HeadOutput out = edge_head(t.final_states(), i, j, candidate_label(g),
                             module.model);
  return sample_decision(module, out.logits, tau, rng);
}

std::vector<std::pair<int, int>> m3_decide(DecisionModule &module,
                                           const MolecularGraph &g, int i,
                                           int j, double tau, Rng &rng) {
  require_kind(module, ModuleKind::kM3);
  if (i < 0 || j < 0 || i >= g.num_vertices() || j >= g.num_vertices())
    throw GnnError("linking vertices out of range");
  std::vector<std::pair<int, int>> cands;
  for (int k = 0; k < g.num_vertices(); ++k)
    if (k != i && k != j && !g.has_edge(k, j))
      cands.emplace_back(k, j);
  std::vector<std::pair<int, int>> links;
  if (cands.empty())
    return links;

  GnnInput in = make_input(g, cands, i);
  Trajectory t = state_relax(in, module.model);
  ++module.relaxations;
  const Eigen::MatrixXd &states = t.final_states();
  for (auto [k, jj]: cands) {
    HeadOutput out = edge_head(states, k, jj, candidate_label(g), module.model);
    int cls = sample_decision(module, out.logits, tau, rng);
    if (cls != kDisconnectedClass)
      links.emplace_back(k, cls - 1);
  }
  return links;
}

namespace {

struct Forward {
  GnnInput input;
  Trajectory trajectory;
  std::vector<HeadOutput> heads;
  std::vector<int> targets;
};

void check_example(ModuleKind kind, const StepExample &ex) {
  const int n = ex.graph.num_vertices();
  bool ok = ex.focus >= 0 && ex.focus < n;
  switch (kind) {
  case ModuleKind::kM1:
    ok = ok && ex.candidates.empty();
    break;
  case ModuleKind::kM2:
    ok = ok && ex.candidates.size() == 1 && ex.candidates[0].k == ex.focus
         && ex.candidates[0].j == ex.target;
    break;
  case ModuleKind::kM3:
    ok = ok && !ex.candidates.empty();
    break;
  }
  if (!ok)
    throw DataError("step example does not match module "
                    + std::string(module_name(kind)));
}

Forward forward(const GnnModel &model, ModuleKind kind, const StepExample &ex) {
  Forward f;
  std::vector<std::pair<int, int>> cands;
  for (const CandidateEdge &c: ex.candidates)
    cands.emplace_back(c.k, c.j);
  f.input = make_input(ex.graph, cands, ex.focus);
  f.trajectory = state_relax(f.input, model);
  const Eigen::MatrixXd &states = f.trajectory.final_states();
  if (kind == ModuleKind::kM1) {
    f.heads.push_back(node_head(states, ex.focus, model));
    f.targets.push_back(ex.supervision);
  } else {
    const int label = candidate_label(ex.graph);
    for (const CandidateEdge &c: ex.candidates) {
      f.heads.push_back(edge_head(states, c.k, c.j, label, model));
      f.targets.push_back(c.supervision);
    }
  }
  return f;
}

void scale(GnnModel &m, double factor) {
  for (auto block: m.parameters())
    for (double &x: block)
      x *= factor;
}

void zero(GnnModel &m) {
  scale(m, 0.0);
}

} // namespace

Accuracy step_accuracy(DecisionModule &module,
                       std::span<const StepExample> examples) {
  Accuracy acc;
  for (const StepExample &ex: examples) {
    check_example(module.kind, ex);
    Forward f = forward(module.model, module.kind, ex);
    ++module.relaxations;
    for (std::size_t h = 0; h < f.heads.size(); ++h) {
      Eigen::Index best;
      decision_probabilities(module, f.heads[h].logits).maxCoeff(&best);
      acc.correct += best == f.targets[h] ? 1 : 0;
      ++acc.total;
    }
  }
  return acc;
}

double majority_baseline(ModuleKind kind, const DatasetSpec &spec,
                         std::span<const StepExample> reference,
                         std::span<const StepExample> evaluated) {
  auto ref = class_priors(kind, spec, reference);
  auto eval = class_priors(kind, spec, evaluated);
  auto top = std::max_element(ref.begin(), ref.end()) - ref.begin();
  return eval[top];
}

TrainingResult train_module(const ModuleConfig &config, const TrainingSet &train,
                            std::span<const StepExample> validation,
                            std::string_view preset,
                            const EpochCallback &on_epoch) {
  const DatasetSpec &spec = dataset_spec(train.mode);
  const ModuleKind kind = config.kind;
  auto examples = train.examples(kind);
  for (const StepExample &ex: examples)
    check_example(kind, ex);
  for (const StepExample &ex: validation)
    check_example(kind, ex);

  Rng rng(config.seed);
  Rng init_rng = rng.split();
  Rng noise_rng = rng.split();

  TrainingResult result;
  DecisionModule &module = result.module;
  module.kind = kind;
  module.mode = train.mode;
  module.preset = std::string(preset);
  module.model = init_model(module_shape(config, spec), init_rng);
  module.priors = class_priors(kind, spec, examples);
  module.class_weighted = config.class_weighted;
  result.majority_baseline =
      majority_baseline(kind, spec, examples, validation);
  if (config.epochs == 0 || train.molecules == 0)
    return result;

  const std::vector<double> weights =
      config.class_weighted ? class_weights(module.priors)
                            : std::vector<double> {};
  std::vector<std::vector<int>> batch_examples;
  for (const Batch &b: train.batches)
    batch_examples.push_back(train.example_indices(kind, b));

  AdamState opt = make_adam(module.model, config.learning_rate);
  GnnModel grads = zeros_like(module.model);
  GnnModel best = module.model;
  result.best_accuracy = -1;
  const AnnealSchedule schedule { config.tau_max, config.tau_min,
                                  config.epochs };

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double tau = anneal_tau(epoch, schedule);
    double loss_sum = 0;
    long outputs_seen = 0;
    for (const auto &ids: batch_examples) {
      zero(grads);
      long outputs = 0;
      for (int e: ids) {
        Forward f = forward(module.model, kind, examples[e]);
        std::vector<Eigen::VectorXd> dlogits;
        for (std::size_t h = 0; h < f.heads.size(); ++h) {
          const Eigen::VectorXd &z = f.heads[h].logits;
          if (config.training_output == TrainingOutput::kGumbel) {
            Eigen::VectorXd perturbed = (z + gumbel_noise(z.size(), noise_rng))
                                        / tau;
            LossResult r = xent(perturbed, f.targets[h], weights);
            loss_sum += r.value;
            dlogits.push_back(r.grad / tau);
          } else {
            LossResult r = xent(z, f.targets[h], weights);
            loss_sum += r.value;
            dlogits.push_back(std::move(r.grad));
          }
        }
        outputs += static_cast<long>(f.heads.size());
        backward(f.input, f.trajectory, f.heads, dlogits, module.model, grads);
      }
      if (outputs == 0)
        continue;
      outputs_seen += outputs;
      scale(grads, 1.0 / static_cast<double>(outputs));
      adam_step(module.model, grads, opt);
    }

    EpochLog entry { epoch, tau,
                     outputs_seen > 0 ? loss_sum / outputs_seen : 0.0, 0.0 };
    const long before = module.relaxations;
    entry.validation_accuracy = step_accuracy(module, validation).value();
    module.relaxations = before;
    result.log.push_back(entry);
    if (on_epoch)
      on_epoch(entry);

    // Without validation data the last epoch is kept.
    if (validation.empty() || entry.validation_accuracy > result.best_accuracy) {
      result.best_accuracy = entry.validation_accuracy;
      result.best_epoch = epoch;
      best = module.model;
    }
  }
  module.model = std::move(best);
  return result;
}

Json module_to_json(const DecisionModule &module) {
  return {
    { "format", "molgnn-module" },
    { "version", kModuleManifestVersion },
    { "kind", module_name(module.kind) },
    { "mode", mode_name(module.mode) },
    { "preset", module.preset },
    { "class_weighted", module.class_weighted },
    { "priors", module.priors },
    { "model", model_to_json(module.model) },
  };
}

DecisionModule module_from_json(const Json &j) {
  try {
    if (j.at("format").get<std::string>() != "molgnn-module")
      throw DataError("not a module checkpoint");
    if (j.at("version").get<int>() != kModuleManifestVersion)
      throw DataError("unsupported module checkpoint version");
    DecisionModule m;
    m.kind = parse_module_kind(j.at("kind").get<std::string>());
    m.mode = parse_mode(j.at("mode").get<std::string>());
    m.preset = j.at("preset").get<std::string>();
    m.class_weighted = j.at("class_weighted").get<bool>();
    m.priors = j.at("priors").get<std::vector<double>>();
    m.model = model_from_json(j.at("model"));
    const DatasetSpec &spec = dataset_spec(m.mode);
    if (m.model.shape.classes != class_count(m.kind, spec)
        || static_cast<int>(m.priors.size()) != m.model.shape.classes
        || m.model.shape.vertex_label_dim != spec.num_vertex_types()
        || m.model.shape.edge_label_dim != spec.num_edge_types() + 1
        || (m.model.shape.head_kind == HeadKind::kNode)
               != (m.kind == ModuleKind::kM1))
      throw DataError("module checkpoint does not match its dataset mode");
    return m;
  } catch (const Json::exception &err) {
    throw DataError(std::string("malformed module checkpoint: ") + err.what());
  } catch (const GnnError &err) {
    throw DataError(err.what());
  }
}

} // namespace molgnn
