#pragma once

namespace gazepred {

inline constexpr const char* kToolName = "gazepred";
inline constexpr const char* kToolVersion = "1.0.0";

} // namespace gazepred
