#pragma once

namespace fsqkd {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kToolName = "fsqkd";

}  // namespace fsqkd
