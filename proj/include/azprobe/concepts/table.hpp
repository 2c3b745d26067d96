#pragma once

// Concept table CSV: header `fen,<name1>,<name2>,...`, one row per position.
// FEN strings never contain commas, so no quoting is needed.

#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "azprobe/csv.hpp"

namespace azprobe::concepts {

struct ConceptVector {
  std::string fen;
  std::map<std::string, double> values;
};

class TableError : public std::runtime_error {
 public:
  explicit TableError(const std::string& what) : std::runtime_error(what) {}
};

struct ExternalConcepts {
  std::vector<std::string> columns;  // concept names in file order
  std::map<std::string, ConceptVector> by_fen;
  std::vector<std::string> warnings;
};

namespace detail {

inline double parse_real(const std::string& cell, std::size_t line_no, const std::string& column) {
  double v = 0.0;
  if (!csv::parse(cell, v))
    throw TableError("line " + std::to_string(line_no) + ", column '" + column + "': non-numeric cell '" + cell + "'");
  return v;
}

}  // namespace detail

inline ExternalConcepts load_external_concepts(std::istream& in) {
  ExternalConcepts out;
  std::string line;
  if (!std::getline(in, line)) throw TableError("concept table is empty (no header row)");
  auto header = csv::split(line);
  if (header.empty() || header[0] != "fen") throw TableError("concept table must start with a 'fen' column");
  out.columns.assign(header.begin() + 1, header.end());

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto cells = csv::split(line);
    if (cells.size() != header.size())
      throw TableError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                       " cells, got " + std::to_string(cells.size()));
    ConceptVector v;
    v.fen = cells[0];
    for (std::size_t j = 1; j < cells.size(); ++j) v.values[header[j]] = detail::parse_real(cells[j], line_no, header[j]);
    if (out.by_fen.count(v.fen)) out.warnings.push_back("duplicate fen row (last wins): " + v.fen);
    out.by_fen[v.fen] = std::move(v);
  }
  if (in.bad()) throw TableError("I/O error while reading concept table");
  return out;
}

/// Writes rows in the given order with round-trip exact number formatting.
inline void export_concepts(std::ostream& out, const std::vector<std::string>& columns,
                            const std::vector<ConceptVector>& rows) {
  out << "fen";
  for (const auto& c : columns) out << ',' << c;
  out << '\n';
  for (const auto& row : rows) {
    out << row.fen;
    for (const auto& c : columns) {
      auto it = row.values.find(c);
      if (it == row.values.end()) throw TableError("row " + row.fen + " lacks concept '" + c + "'");
      out << ',' << csv::fmt(it->second);
    }
    out << '\n';
  }
}

/// Adds external values into existing vectors (keyed by FEN); unmatched FENs are ignored.
inline std::size_t merge_external(std::map<std::string, ConceptVector>& vectors, const ExternalConcepts& ext) {
  std::size_t matched = 0;
  for (auto& [fen, vec] : vectors) {
    auto it = ext.by_fen.find(fen);
    if (it == ext.by_fen.end()) continue;
    ++matched;
    for (const auto& [k, v] : it->second.values) vec.values[k] = v;
  }
  return matched;
}

}  // namespace azprobe::concepts
