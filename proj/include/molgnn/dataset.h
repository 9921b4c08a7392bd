//
// Project molgnn
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MOLGNN_DATASET_H_
#define MOLGNN_DATASET_H_

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "molgnn/graph.h"

namespace molgnn {

// Raised on malformed or out-of-model input data.
class DataError: public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class DatasetMode { kQm9, kZinc };

// Edge type indices shared by both modes; kAromatic exists only in ZINC mode.
namespace bond {
inline constexpr int kSingle = 0;
inline constexpr int kDouble = 1;
inline constexpr int kTriple = 2;
inline constexpr int kAromatic = 3;
} // namespace bond

struct DatasetSpec {
  DatasetMode mode = DatasetMode::kQm9;
  std::vector<std::string> vertex_symbols;
  std::vector<std::string> edge_names;
  int max_vertices = 0;
  bool explicit_hydrogens = false;

  int num_vertex_types() const {
    return static_cast<int>(vertex_symbols.size());
  }
  int num_edge_types() const { return static_cast<int>(edge_names.size()); }
  std::optional<int> vertex_type_of(std::string_view symbol) const;
  MolecularGraph empty_graph() const {
    return MolecularGraph(num_vertex_types(), num_edge_types());
  }
};

// QM9: T_v = [H,C,N,O,F], T_e = [single,double,triple], up to 29 atoms with
// explicit hydrogens. ZINC: T_v = [C,O,N,F,P,S,Cl,I,Br], T_e adds aromatic,
// up to 38 heavy atoms.
const DatasetSpec &dataset_spec(DatasetMode mode);

std::string_view mode_name(DatasetMode mode);
DatasetMode parse_mode(std::string_view name);

} // namespace molgnn

#endif // MOLGNN_DATASET_H_
