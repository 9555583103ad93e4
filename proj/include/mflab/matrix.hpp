#pragma once

#include <cstdint>
#include <vector>

#include "mflab/errors.hpp"

namespace mflab {

using index_t = std::int64_t;

// Dense row-major matrix of doubles. This is the one storage type the whole
// library runs on; triangular operands use the same dense layout and carry a
// flag instead of a packed format, so every kernel can assume contiguous rows.
// The flag is a promise ("entries above the diagonal are zero"), checked where
// it is produced, exploited where it is consumed.
struct Matrix {
    index_t rows = 0;
    index_t cols = 0;
    bool lower_triangular = false;
    std::vector<double> data;

    Matrix() = default;
    Matrix(index_t r, index_t c, bool lower = false)
        : rows(r), cols(c), lower_triangular(lower), data(static_cast<std::size_t>(r * c), 0.0) {
        if (r < 0 || c < 0) throw shape_error("matrix dimensions must be non-negative");
    }

    double& operator()(index_t i, index_t j) { return data[static_cast<std::size_t>(i * cols + j)]; }
    double operator()(index_t i, index_t j) const { return data[static_cast<std::size_t>(i * cols + j)]; }

    double& at(index_t i, index_t j) {
        check(i, j);
        return (*this)(i, j);
    }
    double at(index_t i, index_t j) const {
        check(i, j);
        return (*this)(i, j);
    }

    const double* row_ptr(index_t i) const { return data.data() + i * cols; }
    double* row_ptr(index_t i) { return data.data() + i * cols; }

    bool square() const { return rows == cols; }
    std::size_t size() const { return data.size(); }

  private:
    void check(index_t i, index_t j) const {
        if (i < 0 || i >= rows || j < 0 || j >= cols)
            throw bounds_error("matrix index (" + std::to_string(i) + ", " + std::to_string(j) +
                               ") outside " + std::to_string(rows) + "x" + std::to_string(cols));
    }
};

Matrix identity(index_t n);

// True if no entry above the diagonal is nonzero (the flag's promise).
bool strictly_lower(const Matrix& m);

}  // namespace mflab
