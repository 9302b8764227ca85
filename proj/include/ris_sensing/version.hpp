#pragma once

namespace ris {

inline constexpr const char* kVersion = "0.1.0";

} // namespace ris
