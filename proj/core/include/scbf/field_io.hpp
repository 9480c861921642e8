#pragma once

#include "scbf/domain.hpp"

#include <string>

namespace scbf {

/// Binary snapshot, little-endian:
///   magic "SCBF" | version u16 | nx u32 | ny u32 | h f64 | m f64 | Ly f64
/// followed by the x-face array ((nx+1)*ny doubles, row-major, j slow) and
/// the y-face array (nx*(ny+1) doubles, row-major).
inline constexpr std::uint16_t snapshot_version = 1;

void write_snapshot(const std::string& path, const VelocityField& v);
VelocityField read_snapshot(const std::string& path);

} // namespace scbf
