#pragma once

namespace chs {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace chs
