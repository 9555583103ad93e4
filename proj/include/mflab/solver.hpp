#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mflab/matrix.hpp"
#include "mflab/mechanisms.hpp"

namespace mflab {

// Projected gradient descent on the factorization objective
//   phi(C) = ||M C^{-1}||_F^2   over lower-triangular C with unit l2 columns.
//
// The gradient is closed-form: with B = M C^{-1},
//   d phi / d C = -2 B^T B C^{-T},
// restricted to the lower-triangular support. Steps are Barzilai-Borwein
// sized, backtracked until an Armijo-style decrease holds, and every
// candidate is projected by rescaling each column to unit norm (which is
// exactly the sens(C) = 1 constraint surface).
struct SolverConfig {
    index_t max_iters = -1;  // negative: 5000 when T <= 256, else 1000
    double tol = 1e-9;       // relative objective decrease that stops the solve
    double step_init = 1.0;
    int max_halvings = 60;
    std::uint64_t seed = 0;  // reserved; the default identity start is deterministic
    // Feasible starting point (lower-triangular, unit columns after
    // projection). Unset means the identity.
    std::optional<Matrix> warm_start;
};

struct SolveResult {
    Factorization fac;
    // phi at the start followed by phi after every accepted iteration;
    // non-increasing by construction.
    std::vector<double> objective_trace;
    double objective = 0.0;         // final solver objective (weighted for solve_mf_plus)
    double plain_frobenius = 0.0;   // ||B||_F^2 of the returned factorization
    double baseline_identity = 0.0; // phi at C = I
    double baseline_workload = 0.0; // phi at C = column-normalized input
    index_t iterations = 0;         // accepted iterations
    bool converged = false;         // stopped on the tol test
    bool fallback = false;          // a baseline beat the iteration and was returned
};

// Minimal-norm factorization of a lower-triangular invertible workload:
// returns B = A C^{-1} with sens(C) = 1 and ||B||_F^2 no worse than both the
// identity-C and normalized-A-C baselines (falling back to the better
// baseline with `fallback` set if the iteration ends above them).
SolveResult solve_opt_f(const Matrix& a, const SolverConfig& cfg = {});

// The weighted variant: solves phi over M = Lambda_tau * A, then returns
// C = C-tilde and B = A C^{-1}, so the returned factorization still
// reconstructs A while C was tuned for the weighted objective. `objective`
// reports ||Lambda_tau B||_F^2 and `plain_frobenius` reports ||B||_F^2.
//
// When A is the prefix-sum workload and tau < T, Lambda_tau * A is block
// diagonal with identical blocks, so the solve warm-starts from a tiled
// solution of the tau-sized block problem before polishing on the full
// matrix. An explicit cfg.warm_start suppresses this.
SolveResult solve_mf_plus(const Matrix& a, index_t tau, const SolverConfig& cfg = {});

// Column-normalized lower-triangular Toeplitz matrix built from the power
// series of (1 - x)^{-1/2}; a strong feasible starting point for prefix-sum
// workloads.
Matrix sqrt_prefix_warm_start(index_t t);

}  // namespace mflab
