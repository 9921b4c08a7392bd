//
// Project molgnn
// SPDX-License-Identifier: Apache-2.0
//

#include "molgnn/dataset.h"

#include <algorithm>
#include <cctype>

namespace molgnn {

std::optional<int> DatasetSpec::vertex_type_of(std::string_view symbol) const {
  auto it = std::find(vertex_symbols.begin(), vertex_symbols.end(), symbol);
  if (it == vertex_symbols.end())
    return std::nullopt;
  return static_cast<int>(it - vertex_symbols.begin());
}

const DatasetSpec &dataset_spec(DatasetMode mode) {
  static const DatasetSpec qm9 {
    DatasetMode::kQm9,
    { "H", "C", "N", "O", "F" },
    { "single", "double", "triple" },
    29,
    true,
  };
  static const DatasetSpec zinc {
    DatasetMode::kZinc,
    { "C", "O", "N", "F", "P", "S", "Cl", "I", "Br" },
    { "single", "double", "triple", "aromatic" },
    38,
    false,
  };
  return mode == DatasetMode::kQm9 ? qm9 : zinc;
}

std::string_view mode_name(DatasetMode mode) {
  return mode == DatasetMode::kQm9 ? "QM9" : "ZINC";
}

DatasetMode parse_mode(std::string_view name) {
  std::string upper(name);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return std::toupper(c); });
  if (upper == "QM9")
    return DatasetMode::kQm9;
  if (upper == "ZINC")
    return DatasetMode::kZinc;
  throw DataError("unknown dataset mode '" + std::string(name) + "'");
}

} // namespace molgnn
