#pragma once

// Output of reconstructed node positions: CSV for any n, OBJ for surfaces.

#include "hsalg/hypersurface.hpp"

#include <string>
#include <vector>

namespace hsalg {

/// Header u0..u{n-1},x0..x{n}; one row per node in chart order.
std::string positions_csv(const Chart& chart, const std::vector<Vec>& positions);

/// Vertices in chart order, two triangles per grid cell. n = 2 only.
std::string positions_obj(const Chart& chart, const std::vector<Vec>& positions);

/// Writes text to a file; throws IoError.
void write_text_file(const std::string& path, const std::string& text);
/// Throws IoError.
std::string read_text_file(const std::string& path);

}  // namespace hsalg
