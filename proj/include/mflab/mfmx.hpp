#pragma once

#include <filesystem>

#include "mflab/matrix.hpp"

// MFMX: the on-disk matrix format. Fixed little-endian layout:
//
//   bytes 0..3   magic "MFMX"
//   bytes 4..7   u32 rows
//   bytes 8..11  u32 cols
//   byte  12     u8 lower-triangular flag (0 or 1)
//   bytes 13..   rows*cols f64, row-major
//
// Readers reject anything else with a format_error carrying the byte offset
// of the first problem.

namespace mflab {

void write_mfmx(const std::filesystem::path& path, const Matrix& m);
Matrix read_mfmx(const std::filesystem::path& path);

}  // namespace mflab
