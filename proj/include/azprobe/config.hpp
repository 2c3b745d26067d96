#pragma once

// Run configuration: plain text, `key = value` lines grouped under `[section]` headers.
// '#' and ';' start comment lines. Relative paths resolve against the config file's directory.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace azprobe::config {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A path named by the config that does not exist.
class MissingFile : public std::runtime_error {
 public:
  explicit MissingFile(const std::string& what) : std::runtime_error(what) {}
};

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/// Splits on `sep`, trimming items and dropping empty ones.
inline std::vector<std::string> split_list(const std::string& s, char sep = ',') {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, sep))
    if (auto t = trim(item); !t.empty()) out.push_back(t);
  return out;
}

class Config {
 public:
  std::filesystem::path base_dir = ".";
  std::map<std::string, std::map<std::string, std::string>> sections;
  std::map<std::string, std::uint64_t> seed_overrides;

  static Config parse(std::istream& in, const std::filesystem::path& base_dir = ".") {
    Config c;
    c.base_dir = base_dir;
    std::string line, section;
    for (int no = 1; std::getline(in, line); ++no) {
      const auto t = trim(line);
      if (t.empty() || t[0] == '#' || t[0] == ';') continue;
      if (t.front() == '[') {
        if (t.back() != ']' || t.size() < 3) throw ConfigError("config line " + std::to_string(no) + ": bad section header");
        section = trim(t.substr(1, t.size() - 2));
        c.sections[section];
        continue;
      }
      const auto eq = t.find('=');
      if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(no) + ": expected key = value");
      if (section.empty()) throw ConfigError("config line " + std::to_string(no) + ": key outside any [section]");
      const auto key = trim(t.substr(0, eq));
      if (key.empty()) throw ConfigError("config line " + std::to_string(no) + ": empty key");
      auto& sec = c.sections[section];
      if (sec.count(key)) throw ConfigError("config line " + std::to_string(no) + ": duplicate key " + section + "." + key);
      sec[key] = trim(t.substr(eq + 1));
    }
    return c;
  }

  static Config load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingFile("cannot open config " + path.string());
    return parse(in, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
  }

  bool has(const std::string& section, const std::string& key) const { return get(section, key).has_value(); }

  std::optional<std::string> get(const std::string& section, const std::string& key) const {
    auto s = sections.find(section);
    if (s == sections.end()) return std::nullopt;
    auto k = s->second.find(key);
    if (k == s->second.end()) return std::nullopt;
    return k->second;
  }

  std::string require(const std::string& section, const std::string& key) const {
    auto v = get(section, key);
    if (!v) throw ConfigError("config is missing " + section + "." + key);
    return *v;
  }

  std::string text(const std::string& section, const std::string& key, const std::string& fallback) const {
    return get(section, key).value_or(fallback);
  }

  long long integer(const std::string& section, const std::string& key) const {
    return to_integer(section, key, require(section, key));
  }
  long long integer(const std::string& section, const std::string& key, long long fallback) const {
    auto v = get(section, key);
    return v ? to_integer(section, key, *v) : fallback;
  }

  double real(const std::string& section, const std::string& key, double fallback) const {
    auto v = get(section, key);
    return v ? to_real(section, key, *v) : fallback;
  }

  std::vector<std::string> list(const std::string& section, const std::string& key) const {
    auto v = get(section, key);
    return v ? split_list(*v) : std::vector<std::string>{};
  }

  std::vector<int> int_list(const std::string& section, const std::string& key) const {
    std::vector<int> out;
    for (const auto& item : list(section, key)) out.push_back(static_cast<int>(to_integer(section, key, item)));
    return out;
  }

  std::vector<double> real_list(const std::string& section, const std::string& key) const {
    std::vector<double> out;
    for (const auto& item : list(section, key)) out.push_back(to_real(section, key, item));
    return out;
  }

  std::filesystem::path resolve(const std::string& p) const {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  }

  /// Resolved path that must exist.
  std::filesystem::path existing_path(const std::string& section, const std::string& key) const {
    const auto p = resolve(require(section, key));
    if (!std::filesystem::exists(p)) throw MissingFile(section + "." + key + ": no such file " + p.string());
    return p;
  }

  std::vector<std::filesystem::path> existing_paths(const std::string& section, const std::string& key) const {
    std::vector<std::filesystem::path> out;
    for (const auto& item : list(section, key)) {
      const auto p = resolve(item);
      if (!std::filesystem::exists(p)) throw MissingFile(section + "." + key + ": no such file " + p.string());
      out.push_back(p);
    }
    if (out.empty()) throw ConfigError("config is missing " + section + "." + key);
    return out;
  }

  /// Named seed from [seeds]; there is no default.
  std::uint64_t seed(const std::string& name) const {
    if (auto o = seed_overrides.find(name); o != seed_overrides.end()) return o->second;
    auto v = get("seeds", name);
    if (!v) throw ConfigError("config is missing seeds." + name + " (seeds have no default)");
    const auto n = to_integer("seeds", name, *v);
    if (n < 0) throw ConfigError("seeds." + name + " must be non-negative");
    return static_cast<std::uint64_t>(n);
  }

  /// Applies "name=value" overrides.
  void override_seeds(const std::vector<std::string>& items) {
    for (const auto& item : items) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw ConfigError("--seed-override expects name=value, got '" + item + "'");
      const auto name = trim(item.substr(0, eq));
      const auto n = to_integer("seed-override", name, trim(item.substr(eq + 1)));
      if (n < 0) throw ConfigError("--seed-override " + name + " must be non-negative");
      seed_overrides[name] = static_cast<std::uint64_t>(n);
    }
  }

 private:
  static long long to_integer(const std::string& section, const std::string& key, const std::string& v) {
    std::size_t used = 0;
    long long n = 0;
    try {
      n = std::stoll(v, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != v.size()) throw ConfigError(section + "." + key + ": expected an integer, got '" + v + "'");
    return n;
  }

  static double to_real(const std::string& section, const std::string& key, const std::string& v) {
    std::size_t used = 0;
    double d = 0;
    try {
      d = std::stod(v, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != v.size()) throw ConfigError(section + "." + key + ": expected a number, got '" + v + "'");
    return d;
  }
};

}  // namespace azprobe::config
