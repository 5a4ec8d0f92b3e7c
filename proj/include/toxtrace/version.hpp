#pragma once

namespace toxtrace {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace toxtrace
