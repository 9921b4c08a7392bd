//
// Project molgnn
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MOLGNN_SERIALIZE_H_
#define MOLGNN_SERIALIZE_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include <json.hpp>

#include "molgnn/dataset.h"
#include "molgnn/graph.h"

namespace molgnn {

using Json = nlohmann::json;

// {"vertex_types": [...], "edges": [[u, v, type], ...]}
Json graph_to_json(const MolecularGraph &g);
MolecularGraph graph_from_json(const Json &j, const DatasetSpec &spec);

// Header line of every line-delimited artifact.
Json make_header(std::string_view format, int version, DatasetMode mode);
// Reads and validates a header line; returns the parsed object.
Json read_header(std::istream &is, std::string_view format, int version);

// Compact single-line dump.
std::string dump_line(const Json &j);

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t x);

std::string read_file(const std::filesystem::path &path);
// Writes to a sibling temporary file and renames it into place, so a failed
// run never leaves a truncated artifact under the final name.
void write_file_atomic(const std::filesystem::path &path,
                       std::string_view content);

} // namespace molgnn

#endif // MOLGNN_SERIALIZE_H_
