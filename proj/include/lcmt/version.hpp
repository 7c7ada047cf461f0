#pragma once

namespace lcmt {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace lcmt
