#pragma once

namespace herdlv {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace herdlv
