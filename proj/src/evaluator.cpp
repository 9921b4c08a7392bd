//
// Project molgnn
// SPDX-License-Identifier: Apache-2.0
//

#include "molgnn/evaluator.h"

#include <cmath>
#include <limits>
#include <map>

#include <fmt/format.h>

#include "molgnn/chem.h"

namespace molgnn {

Histogram::Histogram(double low, double high, int bins)
    : low(low), high(high), counts(bins, 0) {
  if (bins < 1 || !(high > low))
    throw DataError("bad histogram bin spec");
}

double Histogram::bin_width() const {
  return (high - low) / static_cast<double>(counts.size());
}

void Histogram::add(double x) {
  if (x < low) {
    ++underflow;
    return;
  }
  auto bin = static_cast<std::size_t>((x - low) / bin_width());
  if (x >= high || bin >= counts.size()) {
    ++overflow;
    return;
  }
  ++counts[bin];
}

namespace {

DescriptorStats stats_of(const std::vector<double> &xs, Histogram h) {
  DescriptorStats s;
  s.count = static_cast<long>(xs.size());
  double sum = 0;
  for (double x: xs)
    sum += x;
  s.mean = sum / static_cast<double>(xs.size());
  double sq = 0;
  for (double x: xs) {
    sq += (x - s.mean) * (x - s.mean);
    h.add(x);
  }
  s.stddev = std::sqrt(sq / static_cast<double>(xs.size()));
  s.histogram = std::move(h);
  return s;
}

// Representatives of isomorphism classes, bucketed by canonical key.
class ClassIndex {
public:
  // Returns true if g opened a new class.
  bool insert(const MolecularGraph &g) {
    if (contains(g))
      return false;
    buckets_[canonical_key(g)].push_back(g);
    return true;
  }

  bool contains(const MolecularGraph &g) const {
    auto it = buckets_.find(canonical_key(g));
    if (it == buckets_.end())
      return false;
    for (const MolecularGraph &rep: it->second)
      if (is_isomorphic(rep, g))
        return true;
    return false;
  }

private:
  std::map<std::string, std::vector<MolecularGraph>> buckets_;
};

} // namespace

DescriptorReport descriptor_report(std::span<const MolecularGraph> graphs,
                                   const DatasetSpec &spec) {
  if (graphs.empty())
    throw DataError("descriptor report of an empty set");
  DescriptorReport r;
  r.vertex_type_counts.assign(spec.num_vertex_types(), 0);
  r.edge_type_counts.assign(spec.num_edge_types(), 0);
  std::vector<double> w, logw;
  for (const MolecularGraph &g: graphs) {
    const double mw = molecular_weight(g, spec);
    w.push_back(mw);
    logw.push_back(std::log(mw));
    for (int v = 0; v < g.num_vertices(); ++v)
      ++r.vertex_type_counts[g.vertex_type(v)];
    for (const Edge &e: g.edges())
      ++r.edge_type_counts[e.type];
  }
  r.weight = stats_of(w, Histogram(0.0, 600.0, 60));
  r.log_weight = stats_of(logw, Histogram(0.0, 7.0, 70));
  return r;
}

double vun(double validity, double uniqueness, double novelty) {
  return validity * uniqueness * novelty;
}

EvalReport evaluate(std::span<const GenerationOutcome> batch,
                    std::span<const MolecularGraph> reference,
                    const DatasetSpec &spec) {
  if (batch.empty())
    throw DataError("evaluation of an empty batch");
  EvalReport r;
  r.generated = static_cast<long>(batch.size());

  std::vector<MolecularGraph> valid;
  for (const GenerationOutcome &o: batch) {
    if (!o.complete) {
      ++r.incomplete;
      continue;
    }
    if (!o.graph.empty() && o.graph.is_connected()
        && check_valence(o.graph, spec).valid)
      valid.push_back(o.graph);
  }
  r.valid = static_cast<long>(valid.size());
  r.validity = static_cast<double>(r.valid) / static_cast<double>(r.generated);

  if (valid.empty()) {
    r.degenerate = true;
    r.vun = vun(r.validity, r.uniqueness, r.novelty);
    return r;
  }

  ClassIndex classes;
  std::vector<const MolecularGraph *> reps;
  for (const MolecularGraph &g: valid)
    if (classes.insert(g))
      reps.push_back(&g);
  r.unique = static_cast<long>(reps.size());

  ClassIndex ref;
  for (const MolecularGraph &g: reference)
    ref.insert(g);
  for (const MolecularGraph *g: reps)
    if (!ref.contains(*g))
      ++r.novel;

  r.uniqueness = static_cast<double>(r.unique) / static_cast<double>(r.valid);
  r.novelty = static_cast<double>(r.novel) / static_cast<double>(r.unique);
  r.vun = vun(r.validity, r.uniqueness, r.novelty);
  r.descriptors = descriptor_report(valid, spec);
  r.has_descriptors = true;
  return r;
}

namespace {

Json histogram_json(const Histogram &h) {
  return { { "low", h.low },
           { "high", h.high },
           { "bins", h.counts.size() },
           { "counts", h.counts },
           { "underflow", h.underflow },
           { "overflow", h.overflow } };
}

Json stats_json(const DescriptorStats &s) {
  return { { "count", s.count },
           { "mean", s.mean },
           { "stddev", s.stddev },
           { "histogram", histogram_json(s.histogram) } };
}

} // namespace

Json report_to_json(const EvalReport &r, const DatasetSpec &spec) {
  Json j = {
    { "format", "molgnn-report" },
    { "version", 1 },
    { "mode", mode_name(spec.mode) },
    { "counts",
      { { "generated", r.generated },
        { "incomplete", r.incomplete },
        { "valid", r.valid },
        { "unique", r.unique },
        { "novel", r.novel } } },
    { "validity", r.validity },
    { "uniqueness", r.uniqueness },
    { "novelty", r.novelty },
    { "vun", r.vun },
    { "degenerate", r.degenerate },
    { "uniqueness_counts_valid_as_multiset", true },
    { "not_computed", { "logP", "QED" } },
  };
  if (r.has_descriptors) {
    Json vt, et;
    for (int t = 0; t < spec.num_vertex_types(); ++t)
      vt[spec.vertex_symbols[t]] = r.descriptors.vertex_type_counts[t];
    for (int t = 0; t < spec.num_edge_types(); ++t)
      et[spec.edge_names[t]] = r.descriptors.edge_type_counts[t];
    j["descriptors"] = { { "molecular_weight", stats_json(r.descriptors.weight) },
                         { "log_molecular_weight",
                           stats_json(r.descriptors.log_weight) },
                         { "atoms", vt },
                         { "bonds", et } };
  }
  return j;
}

std::string histogram_csv(const Histogram &h) {
  std::string out = "bin_low,bin_high,count\n";
  const double inf = std::numeric_limits<double>::infinity();
  out += fmt::format("{},{},{}\n", -inf, h.low, h.underflow);
  for (std::size_t b = 0; b < h.counts.size(); ++b)
    out += fmt::format("{},{},{}\n", h.low + b * h.bin_width(),
                       h.low + (b + 1) * h.bin_width(), h.counts[b]);
  out += fmt::format("{},{},{}\n", h.high, inf, h.overflow);
  return out;
}

} // namespace molgnn
