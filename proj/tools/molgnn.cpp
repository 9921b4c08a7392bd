//
// Project molgnn
// SPDX-License-Identifier: Apache-2.0
//

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "molgnn/chem.h"
#include "molgnn/dataset.h"
#include "molgnn/evaluator.h"
#include "molgnn/generator.h"
#include "molgnn/ingest.h"
#include "molgnn/modules.h"
#include "molgnn/sequencer.h"
#include "molgnn/serialize.h"

namespace fs = std::filesystem;
using namespace molgnn;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInternal = 3;

class ConfigError: public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct Flags {
  std::string config_path;
  std::optional<std::string> mode, input, out;
  std::optional<std::uint64_t> seed;
  // train
  std::string module;
  std::optional<std::string> preset;
  std::optional<int> epochs;
  // generate
  std::optional<int> n, vmax;
  bool traces = false;
  // evaluate
  std::optional<std::string> batch;
  // inspect
  std::string file;
  int index = 0;
};

fs::path data_dir() {
  const char *env = std::getenv("MOLGNN_DATA_DIR");
  return env != nullptr ? fs::path(env) : fs::path();
}

fs::path resolve_input(const std::string &p) {
  fs::path path(p);
  if (path.is_relative() && !data_dir().empty() && !fs::exists(path))
    path = data_dir() / path;
  return path;
}

// Effective config: file values overridden by flags.
Json load_config(const Flags &f) {
  Json cfg = Json::object();
  if (!f.config_path.empty()) {
    if (!fs::exists(f.config_path))
      throw ConfigError("config file not found: " + f.config_path);
    try {
      cfg = Json::parse(read_file(f.config_path));
    } catch (const Json::exception &err) {
      throw ConfigError(std::string("unreadable config: ") + err.what());
    }
    if (!cfg.is_object())
      throw ConfigError("config must be an object");
  }
  if (f.mode)
    cfg["mode"] = *f.mode;
  if (f.input)
    cfg["input"] = *f.input;
  if (f.out)
    cfg["output_dir"] = *f.out;
  if (f.seed)
    cfg["seed"] = *f.seed;
  if (f.vmax)
    cfg["vmax"] = *f.vmax;
  if (f.n)
    cfg["generate_count"] = *f.n;
  if (!f.module.empty()) {
    Json &m = cfg["modules"][f.module];
    if (f.preset)
      m["preset"] = *f.preset;
    if (f.epochs)
      m["epochs"] = *f.epochs;
  }

  if (!cfg.contains("seed") || !cfg["seed"].is_number_unsigned())
    throw ConfigError("a nonnegative integer seed is required");
  try {
    parse_mode(cfg.value("mode", "qm9"));
  } catch (const DataError &err) {
    throw ConfigError(err.what());
  }
  return cfg;
}

struct Run {
  Json config;
  std::string command;
  std::string config_hash;
  std::uint64_t seed;
  DatasetMode mode;
  fs::path out;
  Json outputs = Json::array();

  const DatasetSpec &spec() const { return dataset_spec(mode); }

  // Stamped into every artifact header.
  Json meta() const {
    return { { "config_hash", config_hash }, { "seed", seed } };
  }

  std::uint64_t derived_seed(std::string_view purpose) const {
    return fnv1a64(std::to_string(seed) + ":" + std::string(purpose));
  }

  fs::path path(const std::string &name) const { return out / name; }

  fs::path existing(const std::string &name) const {
    fs::path p = path(name);
    if (!fs::exists(p))
      throw ConfigError("missing artifact " + p.string()
                        + "; run the earlier pipeline stage first");
    return p;
  }

  void write(const std::string &name, const std::string &content) {
    write_file_atomic(path(name), content);
    outputs.push_back(name);
  }

  void write_manifest(const std::string &suffix, Json extra = Json::object()) {
    Json m = {
      { "format", "molgnn-manifest" },
      { "version", 1 },
      { "command", command },
      { "config", config },
      { "config_hash", config_hash },
      { "seed", seed },
      { "format_versions",
        { { "molgnn-graphs", kGraphCacheVersion },
          { "molgnn-steps", kStepCacheVersion },
          { "molgnn-checkpoint", kCheckpointVersion },
          { "molgnn-module", kModuleManifestVersion } } },
      { "outputs", outputs },
    };
    m.update(extra);
    write_file_atomic(path("manifest_" + suffix + ".json"), m.dump(2) + "\n");
  }
};

Run start_run(const std::string &command, const Flags &f) {
  Run r;
  r.command = command;
  r.config = load_config(f);
  r.config_hash = hex64(fnv1a64(r.config.dump()));
  r.seed = r.config["seed"].get<std::uint64_t>();
  r.mode = parse_mode(r.config.value("mode", "qm9"));
  r.out = r.config.value("output_dir", "molgnn_out");
  fs::create_directories(r.out);
  return r;
}

std::vector<MolecularGraph> load_graphs(const fs::path &p, DatasetMode mode) {
  std::istringstream is(read_file(p));
  GraphCache cache = read_graph_cache(is);
  if (cache.mode != mode)
    throw DataError(p.string() + " holds a different dataset mode");
  return std::move(cache.graphs);
}

std::string graphs_text(const Run &r, std::span<const MolecularGraph> graphs) {
  std::ostringstream os;
  write_graph_cache(os, r.spec(), graphs, r.meta());
  return os.str();
}

SplitSpec split_for(const Run &r, int size) {
  Json split = r.config.value("split", Json::object());
  SplitSpec s;
  s.seed = split.value("seed", r.derived_seed("split"));
  if (split.contains("train") && split["train"].is_number_integer()) {
    s.train = split["train"].get<int>();
    s.validation = split.value("validation", 0);
    s.test = split.value("test", 0);
    return s;
  }
  const double fv = split.value("validation_fraction", 0.1);
  const double ft = split.value("test_fraction", 0.1);
  if (fv < 0 || ft < 0 || fv + ft > 1)
    throw ConfigError("split fractions out of range");
  s.validation = static_cast<int>(fv * size);
  s.test = static_cast<int>(ft * size);
  s.train = size - s.validation - s.test;
  return s;
}

int cmd_ingest(const Flags &f) {
  Run r = start_run("ingest", f);
  if (!r.config.contains("input"))
    throw ConfigError("ingest needs an input file");
  fs::path input = resolve_input(r.config["input"].get<std::string>());
  if (!fs::exists(input))
    throw ConfigError("input not found: " + input.string());

  const std::string text = read_file(input);
  const auto ext = input.extension().string();
  ParsedDataset parsed = ext == ".sdf" || ext == ".mol"
                             ? parse_sdf(text, r.spec())
                             : parse_smiles_lines(text, r.spec());
  if (parsed.graphs.empty())
    throw DataError("no molecule of " + input.string() + " was accepted");

  const int limit = r.config.value("max_molecules", 0);
  if (limit > 0 && static_cast<int>(parsed.graphs.size()) > limit)
    parsed.graphs.resize(limit);

  SplitSpec split = split_for(r, static_cast<int>(parsed.graphs.size()));
  DatasetSplit parts = split_dataset(parsed.graphs, split);
  r.write("graphs_train.jsonl", graphs_text(r, parts.train));
  r.write("graphs_validation.jsonl", graphs_text(r, parts.validation));
  r.write("graphs_test.jsonl", graphs_text(r, parts.test));

  std::string rejected;
  for (const Diagnostic &d: parsed.rejected)
    rejected += dump_line({ { "record", d.record },
                            { "line", d.line },
                            { "reason", d.reason } })
                + "\n";
  r.write("ingest_rejected.jsonl", rejected);
  r.write_manifest("ingest",
                   { { "records", parsed.records },
                     { "accepted", parsed.graphs.size() },
                     { "rejected", parsed.rejected.size() },
                     { "split",
                       { { "train", split.train },
                         { "validation", split.validation },
                         { "test", split.test },
                         { "seed", split.seed } } } });
  std::cout << fmt::format("ingest: {} records, {} accepted, {} rejected; "
                           "split {}/{}/{}\n",
                           parsed.records, parsed.graphs.size(),
                           parsed.rejected.size(), split.train,
                           split.validation, split.test);
  return 0;
}

int cmd_prep(const Flags &f) {
  Run r = start_run("prep", f);
  auto train = load_graphs(r.existing("graphs_train.jsonl"), r.mode);
  auto validation = load_graphs(r.existing("graphs_validation.jsonl"), r.mode);
  if (train.empty())
    throw DataError("empty training split");

  auto scores = mean_centrality_by_type(train, r.spec().num_vertex_types());
  TypePriority prio = TypePriority::from_scores(scores);
  Rng rng(r.derived_seed("prep"));
  std::vector<MolecularGraph> ordered_train, ordered_validation;
  for (const MolecularGraph &g: train)
    ordered_train.push_back(reorder(g, prio, rng));
  for (const MolecularGraph &g: validation)
    ordered_validation.push_back(reorder(g, prio, rng));
  r.write("ordered_train.jsonl", graphs_text(r, ordered_train));
  r.write("ordered_validation.jsonl", graphs_text(r, ordered_validation));

  TrainingSet ts = build_training_set(ordered_train, r.mode);
  TrainingSet vs = build_training_set(ordered_validation, r.mode);
  const int batch_count = std::min(r.config.value("batch_count", 20),
                                   ts.molecules);
  if (batch_count < 1)
    throw ConfigError("batch_count must be positive");
  ts.batches = make_batches(ts, batch_count, rng);

  for (ModuleKind k: { ModuleKind::kM1, ModuleKind::kM2, ModuleKind::kM3 }) {
    const std::string name(module_name(k));
    std::ostringstream tr, va;
    write_step_cache(tr, r.mode, k, ts.examples(k), r.meta());
    write_step_cache(va, r.mode, k, vs.examples(k), r.meta());
    r.write("steps_" + name + "_train.jsonl", tr.str());
    r.write("steps_" + name + "_validation.jsonl", va.str());
  }

  SeedDistribution d0 = estimate_d0(ordered_train, r.spec().num_vertex_types());
  Json batches = Json::array();
  for (const Batch &b: ts.batches)
    batches.push_back(b.molecules);
  Json prep = {
    { "format", "molgnn-prep" },
    { "version", 1 },
    { "mode", mode_name(r.mode) },
    { "config_hash", r.config_hash },
    { "seed", r.seed },
    { "molecules", ts.molecules },
    { "mean_centrality", scores },
    { "type_rank", std::vector<int>(prio.ranks().begin(), prio.ranks().end()) },
    { "d0", d0.probabilities },
    { "batches", batches },
  };
  r.write("prep.json", prep.dump(2) + "\n");
  r.write_manifest("prep");
  std::cout << fmt::format("prep: {} training molecules, {} batches; "
                           "steps m1 {} m2 {} m3 {}\n",
                           ts.molecules, ts.batches.size(), ts.steps.m1.size(),
                           ts.steps.m2.size(), ts.steps.m3.size());
  return 0;
}

Json read_json(const fs::path &p) {
  try {
    return Json::parse(read_file(p));
  } catch (const Json::exception &err) {
    throw DataError(p.string() + ": " + err.what());
  }
}

std::vector<StepExample> load_steps(const fs::path &p, ModuleKind k) {
  std::istringstream is(read_file(p));
  return read_step_cache(is, k);
}

std::string default_preset(ModuleKind k, DatasetMode mode) {
  const std::string m = k == ModuleKind::kM1   ? "M1"
                        : k == ModuleKind::kM2 ? "M2"
                                               : "M3";
  return mode == DatasetMode::kZinc ? m + "-Zinc" : m + "-I";
}

int cmd_train(const Flags &f) {
  ModuleKind kind;
  try {
    kind = parse_module_kind(f.module);
  } catch (const DataError &err) {
    throw ConfigError(err.what());
  }
  Run r = start_run("train", f);
  const std::string name(module_name(kind));
  Json mcfg = r.config.value("modules", Json::object()).value(name, Json::object());
  const std::string preset_id = mcfg.value("preset", default_preset(kind, r.mode));
  ModuleConfig cfg;
  try {
    const NamedPreset &preset = find_preset(preset_id);
    if (preset.config.kind != kind)
      throw ConfigError("preset " + preset_id + " is not a " + name + " preset");
    if (preset.mode != r.mode)
      throw ConfigError("preset " + preset_id + " belongs to another dataset");
    ModuleConfig base = preset.config;
    base.seed = r.derived_seed("train:" + name);
    cfg = config_from_json(mcfg, base);
  } catch (const DataError &err) {
    throw ConfigError(err.what());
  }

  auto train_steps = load_steps(r.existing("steps_" + name + "_train.jsonl"), kind);
  auto val_steps =
      load_steps(r.existing("steps_" + name + "_validation.jsonl"), kind);
  Json prep = read_json(r.existing("prep.json"));
  const int molecules = prep.at("molecules").get<int>();

  std::vector<StepExample> none;
  TrainingSet ts = assemble_training_set(
      r.mode, molecules, kind == ModuleKind::kM1 ? train_steps : none,
      kind == ModuleKind::kM2 ? train_steps : none,
      kind == ModuleKind::kM3 ? train_steps : none);
  ts.batches.clear();
  for (const Json &b: prep.at("batches"))
    ts.batches.push_back({ b.get<std::vector<int>>() });

  std::string log = "epoch,tau,train_loss,validation_accuracy\n";
  TrainingResult result = train_module(
      cfg, ts, val_steps, preset_id, [&](const EpochLog &e) {
        log += fmt::format("{},{:.6f},{:.9g},{:.9g}\n", e.epoch, e.tau,
                           e.train_loss, e.validation_accuracy);
        std::cerr << fmt::format("{} epoch {}: loss {:.5f} val acc {:.4f}\n",
                                 name, e.epoch, e.train_loss,
                                 e.validation_accuracy);
      });

  Json ckpt = module_to_json(result.module);
  ckpt["config_hash"] = r.config_hash;
  ckpt["config"] = config_to_json(cfg);
  r.write("module_" + name + ".json", ckpt.dump() + "\n");
  r.write("train_log_" + name + ".csv", log);
  r.write_manifest("train_" + name,
                   { { "module", name },
                     { "preset", preset_id },
                     { "module_config", config_to_json(cfg) },
                     { "best_epoch", result.best_epoch },
                     { "best_validation_accuracy",
                       result.best_epoch >= 0 ? result.best_accuracy : 0.0 },
                     { "majority_baseline", result.majority_baseline } });
  std::cout << fmt::format("train {}: preset {}, {} epochs, best epoch {}, "
                           "validation accuracy {:.4f} (majority {:.4f})\n",
                           name, preset_id, cfg.epochs, result.best_epoch,
                           result.best_epoch >= 0 ? result.best_accuracy : 0.0,
                           result.majority_baseline);
  return 0;
}

DecisionModule load_module(const Run &r, ModuleKind k) {
  DecisionModule m = module_from_json(
      read_json(r.existing("module_" + std::string(module_name(k)) + ".json")));
  if (m.mode != r.mode)
    throw DataError("module " + std::string(module_name(k))
                    + " was trained on another dataset mode");
  return m;
}

int cmd_generate(const Flags &f) {
  Run r = start_run("generate", f);
  const int n = r.config.value("generate_count", 1000);
  const int vmax = r.config.value("vmax", r.spec().max_vertices);
  if (n < 1 || vmax < 1)
    throw ConfigError("generate needs n >= 1 and vmax >= 1");
  DecisionModule m1 = load_module(r, ModuleKind::kM1);
  DecisionModule m2 = load_module(r, ModuleKind::kM2);
  DecisionModule m3 = load_module(r, ModuleKind::kM3);
  Json prep = read_json(r.existing("prep.json"));
  SeedDistribution d0 { prep.at("d0").get<std::vector<double>>() };

  ModelDecisions source(m1, m2, m3, 1.0);
  Rng rng(r.derived_seed("generate"));
  auto batch = generate_batch(n, source, d0, r.spec(), vmax, rng, f.traces);

  std::ostringstream os;
  write_generated_batch(os, r.spec(), batch, r.meta());
  r.write("generated.jsonl", os.str());
  if (f.traces) {
    Json header = { { "format", "molgnn-traces" },
                    { "version", 1 },
                    { "mode", mode_name(r.mode) } };
    header.update(r.meta());
    std::string traces = dump_line(header) + "\n";
    for (const GenerationOutcome &o: batch)
      traces += dump_line(trace_to_json(o)) + "\n";
    r.write("traces.jsonl", traces);
  }
  long complete = 0;
  for (const GenerationOutcome &o: batch)
    complete += o.complete ? 1 : 0;
  r.write_manifest("generate", { { "generated", n },
                                 { "vmax", vmax },
                                 { "complete", complete } });
  std::cout << fmt::format("generate: {} graphs, {} complete (vmax {})\n", n,
                           complete, vmax);
  return 0;
}

int cmd_evaluate(const Flags &f) {
  Run r = start_run("evaluate", f);
  fs::path batch_path = f.batch ? fs::path(*f.batch) : r.existing("generated.jsonl");
  if (!fs::exists(batch_path))
    throw ConfigError("batch not found: " + batch_path.string());
  std::istringstream is(read_file(batch_path));
  DatasetMode batch_mode;
  auto batch = read_generated_batch(is, batch_mode);
  if (batch_mode != r.mode)
    throw DataError("batch holds a different dataset mode");

  std::vector<MolecularGraph> reference;
  for (const char *name: { "graphs_train.jsonl", "graphs_validation.jsonl",
                           "graphs_test.jsonl" }) {
    if (!fs::exists(r.path(name)))
      continue;
    auto part = load_graphs(r.path(name), r.mode);
    std::move(part.begin(), part.end(), std::back_inserter(reference));
  }

  EvalReport report = evaluate(batch, reference, r.spec());
  Json j = report_to_json(report, r.spec());
  j["config_hash"] = r.config_hash;
  j["reference_size"] = reference.size();
  r.write("report.json", j.dump(2) + "\n");
  if (report.has_descriptors) {
    r.write("hist_weight.csv", histogram_csv(report.descriptors.weight.histogram));
    r.write("hist_log_weight.csv",
            histogram_csv(report.descriptors.log_weight.histogram));
  }
  r.write_manifest("evaluate");
  std::cout << fmt::format("evaluate: validity {:.4f} uniqueness {:.4f} "
                           "novelty {:.4f} vun {:.4f}\n",
                           report.validity, report.uniqueness, report.novelty,
                           report.vun);
  return 0;
}

void print_graph(const Json &g, const DatasetSpec &spec) {
  const auto types = g.at("vertex_types").get<std::vector<int>>();
  std::cout << fmt::format("{} vertices, {} edges\n", types.size(),
                           g.at("edges").size());
  for (std::size_t v = 0; v < types.size(); ++v)
    std::cout << fmt::format("  {:>3} {}\n", v,
                             spec.vertex_symbols.at(types[v]));
  for (const Json &e: g.at("edges"))
    std::cout << fmt::format("  {:>3} - {:<3} {}\n", e.at(0).get<int>(),
                             e.at(1).get<int>(),
                             spec.edge_names.at(e.at(2).get<int>()));
}

int cmd_inspect(const Flags &f) {
  if (!fs::exists(f.file))
    throw ConfigError("file not found: " + f.file);
  std::istringstream is(read_file(f.file));
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(is, line))
    if (!line.empty())
      lines.push_back(line);
  if (lines.empty())
    throw DataError("empty file");

  // Caches and trace files start with a header line.
  Json first = Json::parse(lines.front());
  std::optional<DatasetMode> mode;
  std::size_t offset = 0;
  if (first.contains("format")) {
    mode = parse_mode(first.at("mode").get<std::string>());
    offset = 1;
  }
  const std::size_t at = offset + static_cast<std::size_t>(f.index);
  if (f.index < 0 || at >= lines.size())
    throw ConfigError("index out of range");
  Json item = Json::parse(lines[at]);
  const DatasetSpec &spec = dataset_spec(mode.value_or(
      parse_mode(f.mode.value_or("qm9"))));

  if (item.contains("steps")) {
    std::cout << fmt::format("trace, complete={}\n",
                             item.at("complete").get<bool>());
    for (const Json &s: item.at("steps"))
      std::cout << "  " << s.dump() << "\n";
    print_graph(item.at("graph"), spec);
    return 0;
  }
  if (item.contains("complete"))
    std::cout << fmt::format("complete={}\n", item["complete"].get<bool>());
  if (item.contains("supervision"))
    std::cout << fmt::format("focus={} target={} supervision={} "
                             "candidates={}\n",
                             item.at("focus").get<int>(),
                             item.at("target").get<int>(),
                             item.at("supervision").get<int>(),
                             item.at("candidates").dump());
  print_graph(item, spec);
  MolecularGraph g = graph_from_json(item, spec);
  auto valence = check_valence(g, spec);
  std::cout << fmt::format("valence {}; weight {:.3f}\n",
                           valence.valid ? "ok" : "violated",
                           molecular_weight(g, spec));
  for (const ValenceViolation &v: valence.violations)
    std::cout << fmt::format("  vertex {}: {}\n", v.vertex, v.reason);
  return 0;
}

void add_common(CLI::App *cmd, Flags &f) {
  cmd->add_option("-c,--config", f.config_path, "JSON config document");
  cmd->add_option("--mode", f.mode, "dataset mode: qm9 or zinc");
  cmd->add_option("--input", f.input, "SDF or SMILES file");
  cmd->add_option("-o,--out", f.out, "output directory");
  cmd->add_option("--seed", f.seed, "master seed");
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app { "Sequential molecular graph generation with GNN modules" };
  app.require_subcommand(1);
  Flags f;

  auto *ingest = app.add_subcommand("ingest", "parse, split and cache a dataset");
  add_common(ingest, f);
  auto *prep = app.add_subcommand("prep", "reorder, decompose and batch");
  add_common(prep, f);
  auto *train = app.add_subcommand("train", "train one decision module");
  add_common(train, f);
  train->add_option("--module", f.module, "m1, m2 or m3")->required();
  train->add_option("--preset", f.preset, "preset id, e.g. M1-I");
  train->add_option("--epochs", f.epochs, "override the preset epochs");
  auto *generate = app.add_subcommand("generate", "generate a batch");
  add_common(generate, f);
  generate->add_option("--n", f.n, "number of graphs");
  generate->add_option("--vmax", f.vmax, "vertex cap");
  generate->add_flag("--traces", f.traces, "write traces.jsonl");
  auto *evaluate = app.add_subcommand("evaluate", "score a generated batch");
  add_common(evaluate, f);
  evaluate->add_option("--batch", f.batch, "batch file (default: generated.jsonl)");
  auto *inspect = app.add_subcommand("inspect", "print a molecule or trace");
  inspect->add_option("file", f.file, "cache, batch or trace file")->required();
  inspect->add_option("--index", f.index, "0-based item index");
  inspect->add_option("--mode", f.mode, "dataset mode for header-less files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (ingest->parsed())
      return cmd_ingest(f);
    if (prep->parsed())
      return cmd_prep(f);
    if (train->parsed())
      return cmd_train(f);
    if (generate->parsed())
      return cmd_generate(f);
    if (evaluate->parsed())
      return cmd_evaluate(f);
    return cmd_inspect(f);
  } catch (const ConfigError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError &e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const GraphError &e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const Json::exception &e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception &e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}
