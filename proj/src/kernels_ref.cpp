#include <cmath>

#include "mflab/kernels.hpp"

// Serial reference kernels: the obvious textbook loops, no flag tricks, no
// pragmas. Deliberately independent of the tuned versions so tests can pit
// one against the other.

namespace mflab::ref {

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) throw shape_error("ref::matmul: inner dimensions differ");
    Matrix out(a.rows, b.cols);
    for (index_t i = 0; i < a.rows; ++i)
        for (index_t j = 0; j < b.cols; ++j) {
            double s = 0.0;
            for (index_t k = 0; k < a.cols; ++k) s += a(i, k) * b(k, j);
            out(i, j) = s;
        }
    out.lower_triangular = a.lower_triangular && b.lower_triangular && a.square() && b.square();
    return out;
}

Matrix invert_lower_triangular(const Matrix& l) {
    if (!l.square()) throw shape_error("ref::invert_lower_triangular: matrix is not square");
    const index_t n = l.rows;
    for (index_t i = 0; i < n; ++i)
        if (std::abs(l(i, i)) < 1e-14)
            throw singular_error("ref::invert_lower_triangular: zero pivot", i);
    Matrix out(n, n, true);
    for (index_t j = 0; j < n; ++j) {
        out(j, j) = 1.0 / l(j, j);
        for (index_t i = j + 1; i < n; ++i) {
            double s = 0.0;
            for (index_t k = j; k < i; ++k) s += l(i, k) * out(k, j);
            out(i, j) = -s / l(i, i);
        }
    }
    return out;
}

double frobenius_norm_sq(const Matrix& a) {
    double s = 0.0;
    for (double v : a.data) s += v * v;
    return s;
}

double max_column_norm(const Matrix& a) {
    double best = 0.0;
    for (index_t j = 0; j < a.cols; ++j) {
        double s = 0.0;
        for (index_t i = 0; i < a.rows; ++i) s += a(i, j) * a(i, j);
        best = std::max(best, s);
    }
    return std::sqrt(best);
}

}  // namespace mflab::ref
