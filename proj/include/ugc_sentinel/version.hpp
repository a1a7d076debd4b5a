#pragma once

namespace ugcs {

inline constexpr const char* kToolName = "ugc-sentinel";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace ugcs
