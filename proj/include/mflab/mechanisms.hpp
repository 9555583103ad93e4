#pragma once

#include <filesystem>
#include <string>

#include "mflab/matrix.hpp"

// Factorizations of the prefix-sum workload S (lower-triangular ones).
// A factorization B * C = A splits the workload into what the optimizer
// applies to gradients (A) and how injected noise is correlated across
// steps (B), with C's largest column norm setting the noise scale.
//
// Four fixed constructions live here, plus the weighting matrix used to
// target specific rows of B and the scalar diagnostics derived from a
// factorization. The numerically optimized factorizations come from
// solver.hpp; this header only defines what they must satisfy.

namespace mflab {

struct Factorization {
    std::string label;
    Matrix workload;     // A, t x t
    Matrix b;            // t x m
    Matrix c;            // m x t
    double sensitivity;  // max column l2 norm of c
    index_t tau = 0;     // weighting period the factorization was built for; 0 = none

    index_t t() const { return b.rows; }
    index_t m() const { return b.cols; }
};

// S: lower-triangular all-ones.
Matrix build_prefix_sum(index_t t);

// The restart weighting. Row t (1-based): diagonal 1 and entry -1 at column
// t - tau when t is a multiple of tau; otherwise diagonal 1/sqrt(tau) and
// entry -1/sqrt(tau) at column floor(t/tau)*tau when t > tau.
Matrix build_lambda(index_t t, index_t tau);

// B = S, C = I: independent noise each step.
Factorization pgd_factorization(index_t t);

// B = I, C = S: noise enters as successive differences.
Factorization anti_pgd_factorization(index_t t);

// B has sqrt(2) at (t, j) for j <= t with t - j even; C = B^-1 S.
Factorization chess_factorization(index_t t);

// Binary-tree aggregation matrix: h(1) = (1),
// h(k+1) = [[h(k), 0], [0, h(k)], [1 ... 1]], shape (2^k - 1) x 2^(k-1).
Matrix build_tree_matrix(int k);

// C = h(k), B = S * pinv(C) with the Moore-Penrose pseudo-inverse.
Factorization tree_factorization(int k);

// ||weight * b||_F^2.
double weighted_objective(const Matrix& weight, const Matrix& b);

// sens(C) * ||B||_F, the scale-invariant error proxy used to compare
// factorizations before running anything.
double prior_proxy(const Factorization& f);

// Directory layout: B.mfmx, C.mfmx, meta.txt (label, t, m, tau,
// sensitivity). The workload is not stored; load reconstructs it as B * C.
void save_factorization(const std::filesystem::path& dir, const Factorization& f);
Factorization load_factorization(const std::filesystem::path& dir);

// Reconstruction within recon_tol (max-abs), sensitivity consistent with C
// within sens_tol, m >= 1. Throws numeric_error on violation.
void validate_factorization(const Factorization& f, double recon_tol = 1e-8,
                            double sens_tol = 1e-12);

}  // namespace mflab
