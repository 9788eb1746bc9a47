#pragma once

namespace albench {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace albench
