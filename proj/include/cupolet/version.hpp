#pragma once

namespace cupolet {

inline constexpr const char* kToolName = "cupolet-lab";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace cupolet
