#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <string_view>

#include "lcmt/errors.hpp"

namespace lcmt {

// FNV-1a 64-bit content digests, used by run manifests to detect input or
// output drift between runs. Not cryptographic.

inline std::uint64_t fnv1a64(std::string_view data,
                             std::uint64_t h = 0xCBF29CE484222325ULL) {
  for (char c : data) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

inline std::string to_hex(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[v & 0xF];
    v >>= 4;
  }
  return out;
}

inline std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file for digest: " + path);
  std::uint64_t h = 0xCBF29CE484222325ULL;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    h = fnv1a64(std::string_view(buf, static_cast<std::size_t>(in.gcount())), h);
  }
  return to_hex(h);
}

inline std::string string_digest(std::string_view data) {
  return to_hex(fnv1a64(data));
}

}  // namespace lcmt
