//
// Project molgnn
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MOLGNN_INGEST_H_
#define MOLGNN_INGEST_H_

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "molgnn/dataset.h"
#include "molgnn/graph.h"
#include "molgnn/serialize.h"

namespace molgnn {

class ParseError: public DataError {
public:
  ParseError(const std::string &what, int line = 0)
      : DataError(line > 0 ? "line " + std::to_string(line) + ": " + what
                           : what),
        line_(line) { }

  int line() const { return line_; }

private:
  int line_;
};

struct Diagnostic {
  int record; // 0-based record index in the input
  int line;   // 1-based line where the record starts or the error occurred
  std::string reason;
};

struct ParsedDataset {
  std::vector<MolecularGraph> graphs;
  std::vector<int> record_index; // input record of each accepted graph
  std::vector<Diagnostic> rejected;
  int records = 0;
};

/**
 * Reads V2000 connection tables. Coordinates are ignored. Records with atoms
 * outside the type table, charges, isotopes, disconnected structures, or too
 * many atoms are rejected individually; a malformed record yields a
 * diagnostic and parsing resumes at the next "$$$$". In implicit-hydrogen
 * modes hydrogen atoms are dropped.
 */
ParsedDataset parse_sdf(std::string_view text, const DatasetSpec &spec);

/**
 * Parses a SMILES subset: organic-subset and bracket atoms, the bonds
 * - = # : / \, branches, ring closures (digits and %nn), and aromatic
 * lowercase atoms. Stereo marks are ignored. Charged or isotopic atoms and
 * multi-fragment strings are rejected. In QM9 mode hydrogens are added as
 * explicit vertices after the heavy atoms.
 *
 * Throws ParseError on syntax errors and DataError on out-of-model input.
 */
MolecularGraph parse_smiles(std::string_view smiles, const DatasetSpec &spec);

// One SMILES per line; the first whitespace-separated token is used. A
// leading "smiles" header is skipped.
ParsedDataset parse_smiles_lines(std::string_view text,
                                 const DatasetSpec &spec);

struct SplitSpec {
  int train = 0;
  int test = 0;
  int validation = 0;
  std::uint64_t seed = 0;
};

struct SplitIndices {
  std::vector<int> train, test, validation;
};

// Seeded shuffle of 0..size-1, then partition. Throws DataError if the
// counts do not sum to size.
SplitIndices split_indices(int size, const SplitSpec &split);

struct DatasetSplit {
  std::vector<MolecularGraph> train, test, validation;
};

DatasetSplit split_dataset(std::span<const MolecularGraph> graphs,
                           const SplitSpec &split);

std::vector<MolecularGraph> select(std::span<const MolecularGraph> graphs,
                                   std::span<const int> indices);

// Line-delimited graph cache: a header object then one graph per line.
inline constexpr int kGraphCacheVersion = 1;

// Keys of meta are added to the header line.
void write_graph_cache(std::ostream &os, const DatasetSpec &spec,
                       std::span<const MolecularGraph> graphs,
                       const Json &meta = Json::object());

struct GraphCache {
  DatasetMode mode;
  std::vector<MolecularGraph> graphs;
};

GraphCache read_graph_cache(std::istream &is);

} // namespace molgnn

#endif // MOLGNN_INGEST_H_
