#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mflab {

struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Operand dimensions do not line up.
struct shape_error : error {
    using error::error;
};

// Row or column index outside the matrix.
struct bounds_error : error {
    using error::error;
};

// Bad user-supplied value (config field, grid, flag).
struct param_error : error {
    using error::error;
};

// Operation not supported by this object (e.g. a problem without
// per-example gradients asked to produce them).
struct capability_error : error {
    using error::error;
};

// Noise stream read past its last increment.
struct stream_error : error {
    using error::error;
};

// Numerical failure: lost rank, non-finite values, failed decomposition.
struct numeric_error : error {
    using error::error;
};

// Triangular solve hit a (near-)zero pivot; remembers which one.
struct singular_error : numeric_error {
    singular_error(const std::string& msg, std::int64_t diag_index)
        : numeric_error(msg + " (diagonal index " + std::to_string(diag_index) + ")"),
          index(diag_index) {}
    std::int64_t index;
};

// Malformed file; offset points at the first offending byte.
struct format_error : error {
    format_error(const std::string& msg, std::uint64_t byte_offset)
        : error(msg + " at byte offset " + std::to_string(byte_offset)),
          offset(byte_offset) {}
    std::uint64_t offset;
};

}  // namespace mflab
