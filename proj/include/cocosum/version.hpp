#pragma once

namespace cocosum {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace cocosum
