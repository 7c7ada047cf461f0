#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <string_view>

#include "lcmt/errors.hpp"
#include "lcmt/text.hpp"

namespace lcmt {

// Flat key=value configuration with one section per subcommand. Command-line
// flags are merged on top of the file (flag wins).

class Options {
 public:
  Options() = default;

  void set(const std::string& key, std::string value) { kv_[key] = std::move(value); }
  bool has(const std::string& key) const { return kv_.count(key) > 0; }

  std::string get(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) throw ConfigError("missing required option '" + key + "'");
    return it->second;
  }

  std::string get(const std::string& key, const std::string& fallback) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    try {
      return std::stod(it->second);
    } catch (const std::exception&) {
      throw ConfigError("option '" + key + "' is not a number: " + it->second);
    }
  }

  std::int64_t get_int(const std::string& key, std::int64_t fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    try {
      return std::stoll(it->second);
    } catch (const std::exception&) {
      throw ConfigError("option '" + key + "' is not an integer: " + it->second);
    }
  }

  std::uint64_t require_seed() const {
    // all randomized stages demand an explicit seed; no wall-clock default
    auto it = kv_.find("seed");
    if (it == kv_.end())
      throw ConfigError("an explicit --seed is required for randomized stages");
    try {
      return static_cast<std::uint64_t>(std::stoull(it->second));
    } catch (const std::exception&) {
      throw ConfigError("option 'seed' is not an integer: " + it->second);
    }
  }

  bool get_bool(const std::string& key, bool fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    const std::string& v = it->second;
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw ConfigError("option '" + key + "' is not a boolean: " + v);
  }

  const std::map<std::string, std::string>& items() const { return kv_; }

 private:
  std::map<std::string, std::string> kv_;
};

// INI-style file: `[section]` headers, `key = value` lines, `#` or `;`
// comments. Keys outside any section apply to every subcommand.
inline std::map<std::string, Options> parse_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::map<std::string, Options> sections;
  std::string line, section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[' && t.back() == ']') {
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + " has no '=': " + t);
    sections[section].set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return sections;
}

// File section (global, then subcommand) overlaid with flags.
inline Options resolve_options(const std::map<std::string, Options>& file_sections,
                               const std::string& subcommand, const Options& flags) {
  Options out;
  auto apply = [&](const std::string& name) {
    auto it = file_sections.find(name);
    if (it == file_sections.end()) return;
    for (const auto& [k, v] : it->second.items()) out.set(k, v);
  };
  apply("");
  apply(subcommand);
  for (const auto& [k, v] : flags.items()) out.set(k, v);
  return out;
}

}  // namespace lcmt
