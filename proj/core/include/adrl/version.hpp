#pragma once

namespace adrl {

inline constexpr const char* kVersion = "0.1.0";

} // namespace adrl
