#pragma once

// Small CSV helpers. Cells never need quoting in the formats written here
// (FENs, identifiers and numbers contain no commas).

#include <charconv>
#include <sstream>
#include <string>
#include <vector>

namespace azprobe::csv {

/// Shortest representation that reads back to the same double.
inline std::string fmt(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  for (auto& c : out) {
    while (!c.empty() && (c.back() == '\r' || c.back() == ' ')) c.pop_back();
    while (!c.empty() && c.front() == ' ') c.erase(c.begin());
  }
  return out;
}

/// Parses the whole cell as a double; false on any leftover characters.
inline bool parse(const std::string& cell, double& v) {
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  return !cell.empty() && ec == std::errc() && ptr == cell.data() + cell.size();
}

}  // namespace azprobe::csv
