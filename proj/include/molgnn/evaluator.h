//
// Project molgnn
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MOLGNN_EVALUATOR_H_
#define MOLGNN_EVALUATOR_H_

#include <span>
#include <string>
#include <vector>

#include "molgnn/dataset.h"
#include "molgnn/generator.h"
#include "molgnn/graph.h"
#include "molgnn/serialize.h"

namespace molgnn {

// Fixed-width bins over [low, high); values outside land in underflow or
// overflow.
struct Histogram {
  double low = 0;
  double high = 1;
  std::vector<long> counts;
  long underflow = 0;
  long overflow = 0;

  Histogram() = default;
  Histogram(double low, double high, int bins);
  void add(double x);
  double bin_width() const;
};

struct DescriptorStats {
  long count = 0;
  double mean = 0;
  double stddev = 0; // population standard deviation
  Histogram histogram;
};

struct DescriptorReport {
  DescriptorStats weight;
  DescriptorStats log_weight;
  std::vector<long> vertex_type_counts;
  std::vector<long> edge_type_counts;
};

// Molecular weight bins: [0, 600) in 60 bins; natural log: [0, 7) in 70.
// Throws DataError on an empty input.
DescriptorReport descriptor_report(std::span<const MolecularGraph> graphs,
                                   const DatasetSpec &spec);

struct EvalReport {
  long generated = 0;
  long incomplete = 0;
  long valid = 0;
  long unique = 0; // isomorphism classes among valid graphs
  long novel = 0;  // unique classes absent from the reference
  double validity = 0;
  double uniqueness = 0;
  double novelty = 0;
  double vun = 0;
  // Set when no graph is valid; uniqueness and novelty are then 0.
  bool degenerate = false;
  bool has_descriptors = false;
  DescriptorReport descriptors; // over valid graphs
};

/**
 * Validity counts complete graphs that pass check_valence. Uniqueness is
 * |classes| / |valid| with valid counted as a multiset. Novelty is the share
 * of classes not isomorphic to any reference graph; an empty reference gives
 * novelty 1.
 *
 * Throws DataError on an empty batch.
 */
EvalReport evaluate(std::span<const GenerationOutcome> batch,
                    std::span<const MolecularGraph> reference,
                    const DatasetSpec &spec);

double vun(double validity, double uniqueness, double novelty);

Json report_to_json(const EvalReport &report, const DatasetSpec &spec);
// "bin_low,bin_high,count" rows, with underflow and overflow rows.
std::string histogram_csv(const Histogram &h);

} // namespace molgnn

#endif // MOLGNN_EVALUATOR_H_
