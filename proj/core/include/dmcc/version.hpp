#pragma once

namespace dmcc {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace dmcc
