//
// Project molgnn
// SPDX-License-Identifier: Apache-2.0
//

#include "molgnn/serialize.h"

#include <cstdio>
#include <fstream>
#include <istream>
#include <sstream>

namespace molgnn {

Json graph_to_json(const MolecularGraph &g) {
  Json edges = Json::array();
  for (const Edge &e: g.edges())
    edges.push_back({ e.u, e.v, e.type });
  return {
    { "vertex_types", std::vector<int>(g.vertex_types().begin(),
                                       g.vertex_types().end()) },
    { "edges", std::move(edges) },
  };
}

MolecularGraph graph_from_json(const Json &j, const DatasetSpec &spec) {
  MolecularGraph g = spec.empty_graph();
  try {
    for (int t: j.at("vertex_types").get<std::vector<int>>())
      g.add_vertex(t);
    for (const Json &e: j.at("edges")) {
      if (!e.is_array() || e.size() != 3)
        throw DataError("edge entries must be [u, v, type]");
      g.add_edge(e[0].get<int>(), e[1].get<int>(), e[2].get<int>());
    }
  } catch (const GraphError &err) {
    throw DataError(std::string("invalid graph: ") + err.what());
  } catch (const Json::exception &err) {
    throw DataError(std::string("invalid graph record: ") + err.what());
  }
  return g;
}

Json make_header(std::string_view format, int version, DatasetMode mode) {
  return {
    { "format", format },
    { "version", version },
    { "mode", mode_name(mode) },
  };
}

Json read_header(std::istream &is, std::string_view format, int version) {
  std::string line;
  if (!std::getline(is, line))
    throw DataError("missing header line");
  Json header;
  try {
    header = Json::parse(line);
  } catch (const Json::exception &err) {
    throw DataError(std::string("unreadable header: ") + err.what());
  }
  if (!header.is_object() || header.value("format", "") != format)
    throw DataError("expected a " + std::string(format) + " document");
  if (header.value("version", -1) != version)
    throw DataError("unsupported " + std::string(format) + " version "
                    + header.value("version", Json(-1)).dump());
  return header;
}

std::string dump_line(const Json &j) {
  return j.dump(-1, ' ', false, Json::error_handler_t::strict);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c: bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(x));
  return buf;
}

std::string read_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path &path,
                       std::string_view content) {
  auto tmp = path;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw DataError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out)
      throw DataError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

} // namespace molgnn
