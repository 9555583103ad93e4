#pragma once

#include "mflab/matrix.hpp"

// Compute kernels. The mflab:: versions are OpenMP-parallel and exploit the
// lower-triangular flag to skip structural zeros; mflab::ref:: holds the
// plain serial implementations that the tests use as oracles and the bench
// tool uses as a baseline. Both sides accumulate in a fixed order, so results
// do not depend on the number of threads.

namespace mflab {

Matrix matmul(const Matrix& a, const Matrix& b);
void matmul_into(Matrix& out, const Matrix& a, const Matrix& b);

// Forward substitution, one column per task. Throws singular_error when a
// diagonal entry is below 1e-14 in magnitude.
Matrix invert_lower_triangular(const Matrix& l);
void invert_lower_triangular_into(Matrix& out, const Matrix& l);

double frobenius_norm_sq(const Matrix& a);
double frobenius_inner(const Matrix& a, const Matrix& b);

// max_ij |a_ij - b_ij|; shapes must match.
double max_abs_diff(const Matrix& a, const Matrix& b);

// Largest column l2 norm (not squared).
double max_column_norm(const Matrix& a);

// Rows are addressed 1-based here, with index 0 standing for the virtual
// all-zero row in front of the matrix, so differences against "row zero"
// need no special casing at call sites.
double row_diff_norm_sq(const Matrix& a, index_t i, index_t j);
void copy_row(const Matrix& a, index_t i, double* out);

Matrix transpose(const Matrix& a);

// b^T b, returned as a full symmetric matrix. Exploits a lower-triangular b.
Matrix gram(const Matrix& b);
void gram_into(Matrix& out, const Matrix& b);

// Lower Cholesky factor of a symmetric positive definite matrix; throws
// numeric_error when a pivot is not positive.
Matrix cholesky(const Matrix& a);

// Scales every column to unit l2 norm in place; throws numeric_error on a
// zero column.
void normalize_columns(Matrix& a);

// y = A x and y = A^T x for plain vectors.
std::vector<double> matvec(const Matrix& a, const std::vector<double>& x);
std::vector<double> matvec_transposed(const Matrix& a, const std::vector<double>& x);

namespace ref {

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix invert_lower_triangular(const Matrix& l);
double frobenius_norm_sq(const Matrix& a);
double max_column_norm(const Matrix& a);

}  // namespace ref

}  // namespace mflab
