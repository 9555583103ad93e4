#pragma once

#include <functional>
#include <vector>

#include "mflab/matrix.hpp"

// Small-scale spectral helpers: a one-sided Jacobi SVD for square dense
// matrices (used to manufacture test problems with a prescribed spectrum)
// and plain power iteration for measuring extreme eigenvalues of symmetric
// positive semi-definite operators. Desk-scale code: cubic is fine here.

namespace mflab {

struct Svd {
    Matrix u;                             // orthogonal, columns are left vectors
    std::vector<double> singular_values;  // descending
    Matrix v;                             // orthogonal, columns are right vectors
};

// a = u * diag(singular_values) * v^T. Requires a square and (numerically)
// full rank; throws numeric_error otherwise.
Svd jacobi_svd(const Matrix& a);

struct PowerIterationResult {
    double value = 0.0;
    std::vector<double> vector;
    int iterations = 0;
};

// Largest eigenvalue of the symmetric PSD operator given by apply(). The
// sign convention assumes a PSD spectrum; rel_tol bounds the change of the
// Rayleigh quotient between iterations.
PowerIterationResult power_iteration(
    const std::function<std::vector<double>(const std::vector<double>&)>& apply, index_t dim,
    std::uint64_t seed, double rel_tol = 1e-12, int max_iterations = 100000);

}  // namespace mflab
