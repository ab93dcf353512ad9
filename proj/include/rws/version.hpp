#pragma once

namespace rws {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace rws
