//
// Project molgnn
// SPDX-License-Identifier: Apache-2.0
//

#include "molgnn/ingest.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>

#include "molgnn/chem.h"
#include "molgnn/random.h"
#include "molgnn/serialize.h"

namespace molgnn {
namespace {

// Record-level rejection: the input is well-formed but outside the model.
struct Rejection {
  std::string reason;
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos)
      end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r')
      line.remove_suffix(1);
    lines.push_back(line);
    pos = end + 1;
  }
  return lines;
}

std::string_view column(std::string_view line, std::size_t begin,
                        std::size_t width) {
  if (begin >= line.size())
    return {};
  return line.substr(begin, width);
}

std::optional<int> to_int(std::string_view field) {
  field = trim(field);
  if (field.empty())
    return std::nullopt;
  if (field.front() == '+')
    field.remove_prefix(1);
  int value = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(),
                                   value);
  if (ec != std::errc() || ptr != field.data() + field.size())
    return std::nullopt;
  return value;
}

int require_int(std::string_view field, int line, const char *what) {
  auto v = to_int(field);
  if (!v)
    throw ParseError(std::string("malformed ") + what + " '"
                         + std::string(trim(field)) + "'",
                     line);
  return *v;
}

void check_size(const MolecularGraph &g, const DatasetSpec &spec) {
  if (g.num_vertices() > spec.max_vertices)
    throw Rejection { "exceeds maximum vertex count "
                      + std::to_string(spec.max_vertices) };
  if (!g.is_connected())
    throw Rejection { "disconnected molecule" };
}

// lines[begin, end) hold one record without its "$$$$" terminator. line_base
// is the 1-based file line of lines[0].
MolecularGraph parse_molfile(std::span<const std::string_view> lines,
                             std::size_t begin, std::size_t end,
                             const DatasetSpec &spec) {
  auto line_no = [&](std::size_t idx) { return static_cast<int>(idx) + 1; };
  const std::size_t counts_at = begin + 3;
  if (counts_at >= end)
    throw ParseError("record too short for a counts line", line_no(begin));
  std::string_view counts = lines[counts_at];
  if (counts.find("V3000") != std::string_view::npos)
    throw ParseError("V3000 connection tables are not supported",
                     line_no(counts_at));
  const int num_atoms = require_int(column(counts, 0, 3), line_no(counts_at),
                                    "atom count");
  const int num_bonds = require_int(column(counts, 3, 3), line_no(counts_at),
                                    "bond count");
  if (num_atoms < 0 || num_bonds < 0)
    throw ParseError("negative counts", line_no(counts_at));
  const std::size_t atoms_at = counts_at + 1;
  const std::size_t bonds_at = atoms_at + num_atoms;
  if (bonds_at + num_bonds > end)
    throw ParseError("truncated atom or bond block", line_no(counts_at));

  std::vector<std::string> symbols;
  for (int a = 0; a < num_atoms; ++a) {
    std::string_view line = lines[atoms_at + a];
    std::string_view symbol = trim(column(line, 31, 3));
    if (symbol.empty())
      throw ParseError("missing atom symbol", line_no(atoms_at + a));
    if (auto iso = to_int(column(line, 34, 2)); iso && *iso != 0)
      throw Rejection { "isotope outside the modeled type space" };
    if (auto chg = to_int(column(line, 36, 3)); chg && *chg != 0)
      throw Rejection { "charged atom outside the modeled type space" };
    symbols.emplace_back(symbol);
  }

  for (std::size_t idx = bonds_at + num_bonds; idx < end; ++idx) {
    std::string_view line = lines[idx];
    if (line.starts_with("M  END"))
      break;
    if (line.starts_with("M  CHG") || line.starts_with("M  RAD")) {
      auto fields = trim(line.substr(6));
      // "nn aaa vvv aaa vvv ..."; any nonzero value disqualifies.
      std::vector<int> values;
      std::size_t pos = 0;
      while (pos < fields.size()) {
        while (pos < fields.size() && fields[pos] == ' ')
          ++pos;
        std::size_t stop = fields.find(' ', pos);
        if (stop == std::string_view::npos)
          stop = fields.size();
        values.push_back(require_int(fields.substr(pos, stop - pos),
                                     line_no(idx), "property field"));
        pos = stop;
      }
      for (std::size_t k = 2; k < values.size(); k += 2)
        if (values[k] != 0)
          throw Rejection { line.starts_with("M  CHG")
                                ? "charged atom outside the modeled type space"
                                : "radical outside the modeled type space" };
    } else if (line.starts_with("M  ISO")) {
      throw Rejection { "isotope outside the modeled type space" };
    }
  }

  MolecularGraph g = spec.empty_graph();
  std::vector<int> vertex_of(num_atoms, -1);
  for (int a = 0; a < num_atoms; ++a) {
    if (symbols[a] == "H" && !spec.explicit_hydrogens)
      continue;
    auto type = spec.vertex_type_of(symbols[a]);
    if (!type)
      throw Rejection { "element outside type table: " + symbols[a] };
    vertex_of[a] = g.add_vertex(*type);
  }
  for (int b = 0; b < num_bonds; ++b) {
    std::string_view line = lines[bonds_at + b];
    const int ln = line_no(bonds_at + b);
    int u = require_int(column(line, 0, 3), ln, "bond atom");
    int v = require_int(column(line, 3, 3), ln, "bond atom");
    int order = require_int(column(line, 6, 3), ln, "bond type");
    if (u < 1 || u > num_atoms || v < 1 || v > num_atoms || u == v)
      throw ParseError("bond references invalid atoms", ln);
    int type;
    switch (order) {
    case 1:
      type = bond::kSingle;
      break;
    case 2:
      type = bond::kDouble;
      break;
    case 3:
      type = bond::kTriple;
      break;
    case 4:
      if (spec.num_edge_types() <= bond::kAromatic)
        throw Rejection { "aromatic bond outside type table" };
      type = bond::kAromatic;
      break;
    default:
      throw Rejection { "bond type " + std::to_string(order)
                        + " outside type table" };
    }
    int gu = vertex_of[u - 1], gv = vertex_of[v - 1];
    if (gu < 0 || gv < 0)
      continue; // bond to a dropped hydrogen
    if (g.has_edge(gu, gv))
      throw ParseError("duplicate bond", ln);
    g.add_edge(gu, gv, type);
  }
  check_size(g, spec);
  return g;
}

bool is_terminator(std::string_view line) {
  return trim(line) == "$$$$";
}

// Two-letter element symbols recognized inside brackets.
bool two_letter_element(char a, char b) {
  static const std::string_view known[] = {
    "Cl", "Br", "Si", "Se", "Na", "Li", "Mg", "Al", "Ca", "Zn", "Fe", "Cu",
    "Co", "Ni", "Mn", "Sn", "As", "Te", "He", "Ne", "Ar", "Kr", "Xe", "Cs",
    "Rb", "Sr", "Ba", "Ag", "Au", "Pt", "Pd", "Hg", "Pb", "Bi", "Ge", "Ga",
    "Ti", "Cr", "Zr", "Mo", "Ru", "Rh", "Cd", "In", "Sb", "Be", "Ir", "Os",
  };
  const char s[2] = { a, b };
  for (auto k: known)
    if (k == std::string_view(s, 2))
      return true;
  return false;
}

class SmilesParser {
public:
  SmilesParser(std::string_view text, const DatasetSpec &spec)
      : s_(text), spec_(spec) { }

  MolecularGraph parse() {
    while (i_ < s_.size()) {
      const char c = s_[i_];
      if (c == '(') {
        if (prev_ < 0)
          error("branch before any atom");
        if (pending_)
          error("bond symbol before branch");
        branches_.push_back(prev_);
        ++i_;
      } else if (c == ')') {
        if (branches_.empty())
          error("unmatched ')'");
        if (pending_)
          error("dangling bond before ')'");
        prev_ = branches_.back();
        branches_.pop_back();
        ++i_;
      } else if (auto b = bond_symbol(c)) {
        if (pending_)
          error("consecutive bond symbols");
        pending_ = *b;
        ++i_;
      } else if (c == '.') {
        throw DataError("multi-fragment SMILES is not a connected molecule");
      } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '%') {
        ring_closure();
      } else if (c == '[') {
        bracket_atom();
      } else {
        organic_atom();
      }
    }
    if (atoms_.empty())
      error("empty SMILES");
    if (!branches_.empty())
      error("unmatched '('");
    if (!rings_.empty())
      error("unclosed ring " + std::to_string(rings_.begin()->first));
    if (pending_)
      error("dangling bond at end of string");
    return build();
  }

private:
  struct Atom {
    std::string symbol;
    bool aromatic;
    int hydrogens; // -1: implicit
  };
  struct Bond {
    int a, b, type;
  };
  struct OpenRing {
    int atom;
    std::optional<int> bond;
  };

  [[noreturn]] void error(const std::string &what) const {
    throw ParseError("SMILES '" + std::string(s_) + "' at position "
                     + std::to_string(i_) + ": " + what);
  }

  static std::optional<int> bond_symbol(char c) {
    switch (c) {
    case '-':
    case '/':
    case '\\':
      return bond::kSingle;
    case '=':
      return bond::kDouble;
    case '#':
      return bond::kTriple;
    case ':':
      return bond::kAromatic;
    case '$':
      throw DataError("quadruple bond outside type table");
    default:
      return std::nullopt;
    }
  }

  int resolve(int a, int b, std::optional<int> explicit_type) const {
    if (explicit_type)
      return *explicit_type;
    return atoms_[a].aromatic && atoms_[b].aromatic ? bond::kAromatic
                                                    : bond::kSingle;
  }

  void add_atom(Atom atom) {
    atoms_.push_back(std::move(atom));
    const int idx = static_cast<int>(atoms_.size()) - 1;
    if (prev_ >= 0)
      bonds_.push_back({ prev_, idx, resolve(prev_, idx, pending_) });
    else if (pending_)
      error("bond symbol before first atom");
    pending_.reset();
    prev_ = idx;
  }

  void organic_atom() {
    auto rest = s_.substr(i_);
    for (std::string_view two: { "Cl", "Br" }) {
      if (rest.starts_with(two)) {
        i_ += 2;
        add_atom({ std::string(two), false, -1 });
        return;
      }
    }
    const char c = s_[i_];
    if (std::string_view("BCNOPSFI").find(c) != std::string_view::npos) {
      ++i_;
      add_atom({ std::string(1, c), false, -1 });
      return;
    }
    if (std::string_view("bcnops").find(c) != std::string_view::npos) {
      ++i_;
      add_atom({ std::string(1, static_cast<char>(std::toupper(c))), true,
                 -1 });
      return;
    }
    error(std::string("unexpected character '") + c + "'");
  }

  void bracket_atom() {
    ++i_; // '['
    auto peek = [&]() -> char { return i_ < s_.size() ? s_[i_] : '\0'; };
    if (std::isdigit(static_cast<unsigned char>(peek())))
      throw DataError("isotope label outside the modeled type space");

    Atom atom { "", false, 0 };
    char c = peek();
    if (std::isupper(static_cast<unsigned char>(c))) {
      ++i_;
      char d = peek();
      if (std::islower(static_cast<unsigned char>(d)) && two_letter_element(c, d)) {
        atom.symbol = { c, d };
        ++i_;
      } else {
        atom.symbol = std::string(1, c);
      }
    } else if (std::islower(static_cast<unsigned char>(c))) {
      auto rest = s_.substr(i_);
      if (rest.starts_with("se") || rest.starts_with("as")) {
        atom.symbol = { static_cast<char>(std::toupper(c)), rest[1] };
        i_ += 2;
      } else if (std::string_view("bcnops").find(c) != std::string_view::npos) {
        atom.symbol = std::string(1, static_cast<char>(std::toupper(c)));
        ++i_;
      } else {
        error("unknown aromatic bracket atom");
      }
      atom.aromatic = true;
    } else {
      error("missing element in bracket atom");
    }

    // Chirality is ignored.
    if (peek() == '@') {
      while (peek() == '@')
        ++i_;
      auto rest = s_.substr(i_);
      for (std::string_view cls: { "TH", "AL", "SP", "TB", "OH" }) {
        if (rest.starts_with(cls)) {
          i_ += 2;
          while (std::isdigit(static_cast<unsigned char>(peek())))
            ++i_;
          break;
        }
      }
    }

    if (peek() == 'H') {
      ++i_;
      atom.hydrogens = 1;
      if (std::isdigit(static_cast<unsigned char>(peek()))) {
        atom.hydrogens = peek() - '0';
        ++i_;
      }
    }
    if (peek() == '+' || peek() == '-')
      throw DataError("charged atom outside the modeled type space");
    if (peek() == ':') {
      ++i_;
      while (std::isdigit(static_cast<unsigned char>(peek())))
        ++i_;
    }
    if (peek() != ']')
      error("unterminated bracket atom");
    ++i_;
    add_atom(std::move(atom));
  }

  void ring_closure() {
    if (prev_ < 0)
      error("ring closure before any atom");
    int number;
    if (s_[i_] == '%') {
      if (i_ + 2 >= s_.size() || !std::isdigit(static_cast<unsigned char>(s_[i_ + 1]))
          || !std::isdigit(static_cast<unsigned char>(s_[i_ + 2])))
        error("malformed %nn ring closure");
      number = (s_[i_ + 1] - '0') * 10 + (s_[i_ + 2] - '0');
      i_ += 3;
    } else {
      number = s_[i_] - '0';
      ++i_;
    }
    auto it = rings_.find(number);
    if (it == rings_.end()) {
      rings_[number] = { prev_, pending_ };
    } else {
      auto [other, open_bond] = it->second;
      if (open_bond && pending_ && *open_bond != *pending_)
        error("conflicting ring-closure bond symbols");
      if (other == prev_)
        error("ring closure to the same atom");
      auto type = pending_ ? pending_ : open_bond;
      bonds_.push_back({ other, prev_, resolve(other, prev_, type) });
      rings_.erase(it);
    }
    pending_.reset();
  }

  MolecularGraph build() const {
    MolecularGraph g = spec_.empty_graph();
    for (const Atom &a: atoms_) {
      if (a.aromatic && spec_.num_edge_types() <= bond::kAromatic)
        throw DataError("aromatic atom outside the "
                        + std::string(mode_name(spec_.mode)) + " type table");
      auto type = spec_.vertex_type_of(a.symbol);
      if (!type)
        throw DataError("element outside type table: " + a.symbol);
      g.add_vertex(*type);
    }
    for (const Bond &b: bonds_) {
      if (b.type >= spec_.num_edge_types())
        throw DataError("aromatic bond outside type table");
      if (g.has_edge(b.a, b.b))
        error("duplicate bond between atoms " + std::to_string(b.a) + " and "
              + std::to_string(b.b));
      g.add_edge(b.a, b.b, b.type);
    }

    if (spec_.explicit_hydrogens) {
      const int h = *spec_.vertex_type_of("H");
      const int heavy = g.num_vertices();
      for (int v = 0; v < heavy; ++v) {
        const Atom &a = atoms_[v];
        int count = a.hydrogens;
        if (count < 0) {
          double sum = 0;
          for (const Neighbor &nb: g.adjacency(v))
            sum += bond_order(nb.edge_type);
          count = a.symbol == "H" ? 0
                                  : implicit_hydrogens(element_info(a.symbol),
                                                       sum, a.aromatic);
        }
        for (int k = 0; k < count; ++k)
          g.add_edge(v, g.add_vertex(h), bond::kSingle);
      }
    }
    return g;
  }

  std::string_view s_;
  const DatasetSpec &spec_;
  std::size_t i_ = 0;
  int prev_ = -1;
  std::optional<int> pending_;
  std::vector<int> branches_;
  std::map<int, OpenRing> rings_;
  std::vector<Atom> atoms_;
  std::vector<Bond> bonds_;
};

} // namespace

ParsedDataset parse_sdf(std::string_view text, const DatasetSpec &spec) {
  const auto lines = split_lines(text);
  ParsedDataset out;
  std::size_t pos = 0;
  while (pos < lines.size()) {
    std::size_t first_content = pos;
    while (first_content < lines.size() && trim(lines[first_content]).empty())
      ++first_content;
    if (first_content == lines.size())
      break;
    std::size_t end = pos;
    while (end < lines.size() && !is_terminator(lines[end]))
      ++end;

    const int record = out.records++;
    try {
      out.graphs.push_back(parse_molfile(lines, pos, end, spec));
      out.record_index.push_back(record);
    } catch (const ParseError &err) {
      out.rejected.push_back({ record, err.line(), err.what() });
    } catch (const Rejection &rej) {
      out.rejected.push_back({ record, static_cast<int>(pos) + 1, rej.reason });
    }
    pos = end + 1;
  }
  return out;
}

MolecularGraph parse_smiles(std::string_view smiles, const DatasetSpec &spec) {
  MolecularGraph g = SmilesParser(trim(smiles), spec).parse();
  try {
    check_size(g, spec);
  } catch (const Rejection &rej) {
    throw DataError(rej.reason);
  }
  return g;
}

ParsedDataset parse_smiles_lines(std::string_view text,
                                 const DatasetSpec &spec) {
  ParsedDataset out;
  const auto lines = split_lines(text);
  for (std::size_t idx = 0; idx < lines.size(); ++idx) {
    std::string_view line = trim(lines[idx]);
    if (line.empty())
      continue;
    std::string_view token = line.substr(0, line.find_first_of(" \t,"));
    if (idx == 0 && (token == "smiles" || token == "SMILES"))
      continue;
    const int record = out.records++;
    try {
      out.graphs.push_back(parse_smiles(token, spec));
      out.record_index.push_back(record);
    } catch (const DataError &err) {
      out.rejected.push_back({ record, static_cast<int>(idx) + 1, err.what() });
    }
  }
  return out;
}

SplitIndices split_indices(int size, const SplitSpec &split) {
  if (split.train < 0 || split.test < 0 || split.validation < 0
      || split.train + split.test + split.validation != size)
    throw DataError("split sizes " + std::to_string(split.train) + "/"
                    + std::to_string(split.test) + "/"
                    + std::to_string(split.validation)
                    + " do not sum to the dataset size "
                    + std::to_string(size));
  std::vector<int> perm(size);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(split.seed);
  rng.shuffle(std::span(perm));

  SplitIndices out;
  auto it = perm.begin();
  out.train.assign(it, it + split.train);
  it += split.train;
  out.test.assign(it, it + split.test);
  it += split.test;
  out.validation.assign(it, perm.end());
  return out;
}

std::vector<MolecularGraph> select(std::span<const MolecularGraph> graphs,
                                   std::span<const int> indices) {
  std::vector<MolecularGraph> out;
  out.reserve(indices.size());
  for (int i: indices)
    out.push_back(graphs[i]);
  return out;
}

DatasetSplit split_dataset(std::span<const MolecularGraph> graphs,
                           const SplitSpec &split) {
  auto idx = split_indices(static_cast<int>(graphs.size()), split);
  return { select(graphs, idx.train), select(graphs, idx.test),
           select(graphs, idx.validation) };
}

void write_graph_cache(std::ostream &os, const DatasetSpec &spec,
                       std::span<const MolecularGraph> graphs,
                       const Json &meta) {
  Json header = make_header("molgnn-graphs", kGraphCacheVersion, spec.mode);
  header.update(meta);
  os << dump_line(header) << '\n';
  for (const MolecularGraph &g: graphs)
    os << dump_line(graph_to_json(g)) << '\n';
}

GraphCache read_graph_cache(std::istream &is) {
  Json header = read_header(is, "molgnn-graphs", kGraphCacheVersion);
  GraphCache cache { parse_mode(header.at("mode").get<std::string>()), {} };
  const DatasetSpec &spec = dataset_spec(cache.mode);
  std::string line;
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (trim(line).empty())
      continue;
    try {
      cache.graphs.push_back(graph_from_json(Json::parse(line), spec));
    } catch (const Json::exception &err) {
      throw ParseError(err.what(), line_no);
    }
  }
  return cache;
}

} // namespace molgnn
