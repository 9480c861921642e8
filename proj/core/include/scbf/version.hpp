#pragma once

namespace scbf {

inline constexpr const char* version_string = "scbf 0.1.0";

} // namespace scbf
