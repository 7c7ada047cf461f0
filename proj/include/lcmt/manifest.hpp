#pragma once

#include <chrono>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "lcmt/config.hpp"
#include "lcmt/digest.hpp"
#include "lcmt/version.hpp"

namespace lcmt {

// Every CLI run emits a manifest: subcommand, fully resolved options, input
// and output digests, toolkit version, timestamps. Equal input digests plus
// equal options imply byte-identical outputs.

struct RunManifest {
  std::string subcommand;
  Options options;
  std::map<std::string, std::string> input_digests;
  std::map<std::string, std::string> output_digests;
  std::string started, finished;  // ISO-8601 UTC
};

inline std::string iso8601_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline nlohmann::json manifest_to_json(const RunManifest& m) {
  nlohmann::json j;
  j["subcommand"] = m.subcommand;
  j["toolkit_version"] = kVersion;
  nlohmann::json opts = nlohmann::json::object();
  for (const auto& [k, v] : m.options.items()) opts[k] = v;
  j["options"] = std::move(opts);
  j["inputs"] = m.input_digests;
  j["outputs"] = m.output_digests;
  j["started"] = m.started;
  j["finished"] = m.finished;
  return j;
}

inline void write_manifest(const RunManifest& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write manifest: " + path);
  out << manifest_to_json(m).dump(2) << '\n';
}

}  // namespace lcmt
