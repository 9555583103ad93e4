#pragma once

#include <string>

#include "mflab/matrix.hpp"
#include "mflab/mechanisms.hpp"

namespace mflab {

// Numerical evaluation of the convergence-rate noise terms. Both theorem
// terms are reported without their suppressed absolute constants, so every
// check against them is a ratio or factor check, never an exact-constant
// comparison.

// Nonconvex rate noise term:
//   (sigma^2 / (T tau)) * [ (1/tau) sum_{t=1}^T ||b_t - b_{floor(t/tau) tau}||^2
//                           + sum_{t = 0 mod tau, 1<=t<=T} ||b_t - b_{t-tau}||^2 ]
// with b_0 = 0. B must have exactly big_t rows; 1 <= tau <= big_t.
double theorem1_noise_term(const Matrix& b, index_t tau, double sigma, index_t big_t);

// Convex rate noise term: the same bracket plus ||b_{floor(T/tau) tau}||^2,
// scaled by sigma^2 / (T L tau).
double theorem2_noise_term(const Matrix& b, index_t tau, double sigma, index_t big_t,
                           double l);

// Default restart period tau = floor(1 / (gamma L)), clamped to [1, T].
index_t tau_nonconvex(double gamma, double l, index_t big_t);

// Poly-log-adjusted variant tau = floor(1 / (8 gamma L log2 T)), clamped.
index_t tau_convex_logfactor(double gamma, double l, index_t big_t);

// The convex bracket evaluated for the chess factorization's B, scaled by
// sigma^2 only (no 1/(T L tau)), so linear growth in T is visible directly.
// Every row pair entering the sums is checked against
//   (t - t') / 2  <=  ||b_t - b_{t'}||^2  <=  2 t,
// and a violation throws numeric_error. Requires tau <= T/4.
double chess_noise_growth(index_t big_t, index_t tau, double sigma);

// Exact second moments of ||x_T||^2 on f(x) = (L/2)||x||^2 when the injected
// noise rows z_t have E||z_t||^2 = sigma^2. All require gamma L < 1.
struct PgdMoment {
    double value = 0.0;       // E||x_T||^2
    double stationary = 0.0;  // fixed point gamma sigma^2 / (L (2 - gamma L))
};

// Independent noise: E||x_{t+1}||^2 = (1-gamma L)^2 E||x_t||^2 + gamma^2 sigma^2.
PgdMoment pgd_exact_moment(double gamma, double l, double sigma, double x0_norm_sq,
                           index_t big_t);

// Anti-correlated noise x_{t+1} = (1-gamma L) x_t - gamma (z_{t+1} - z_t).
// The pairing of +z_t and -z_t across steps leaves E||x_T||^2 =
//   (1-gamma L)^{2T} x0 + gamma^2 sigma^2 (1 + (gamma L)^2 sum_{k<T-1} (1-gamma L)^{2k}),
// evaluated here by the exact one-step recursion with the cross term.
double anti_pgd_exact_moment(double gamma, double l, double sigma, double x0_norm_sq,
                             index_t big_t);

// Reset-free virtual sequence under independent noise:
//   E||xt_T||^2 = (1-gamma L)^{2T} x0 + gamma^2 sigma^2 sum_{j=1}^{T-1} (1 - (1-gamma L)^j)^2.
double pgd_virtual_exact_moment(double gamma, double l, double sigma, double x0_norm_sq,
                                index_t big_t);

// Per-step stationary gradient-norm prediction for quadratics with Hessian
// eigenvalues `spectrum` under independent per-step noise of total power
// sigma^2 spread over d = spectrum.size() coordinates:
//   E||grad f(x)||^2 -> (gamma sigma^2 / d) sum_i lambda_i / (2 - gamma lambda_i).
// Requires gamma * max(lambda) < 2.
double quadratic_stationary_grad_norm_sq(const std::vector<double>& spectrum, double gamma,
                                         double sigma);

// Both theorem terms plus the prior-work proxy for one factorization.
struct BoundReport {
    std::string label;
    index_t tau_used = 0;
    double noise_term_nonconvex = 0.0;
    double noise_term_convex = 0.0;
    double prior_proxy = 0.0;
};

BoundReport bound_report(const Factorization& fac, index_t tau, double sigma, double l);

}  // namespace mflab
