#pragma once

namespace cqnc {

inline constexpr const char* cqnc_version = "0.1.0";

}  // namespace cqnc
