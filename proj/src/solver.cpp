#include "mflab/solver.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "mflab/errors.hpp"
#include "mflab/kernels.hpp"

namespace mflab {

namespace {

constexpr double kArmijo = 1e-4;
constexpr double kStepFloor = 1e-14;
constexpr double kStepCeil = 1e12;

index_t default_max_iters(index_t n) { return n <= 256 ? 5000 : 1000; }

void check_workload(const Matrix& a, const char* who) {
    if (!a.square()) throw shape_error(std::string(who) + ": workload must be square");
    if (a.rows < 1) throw shape_error(std::string(who) + ": empty workload");
    if (!a.lower_triangular) {
        for (index_t i = 0; i < a.rows; ++i)
            for (index_t j = i + 1; j < a.cols; ++j)
                if (a(i, j) != 0.0)
                    throw shape_error(std::string(who) +
                                      ": workload has a nonzero above the diagonal at (" +
                                      std::to_string(i) + ", " + std::to_string(j) + ")");
    }
}

// phi(C) via fresh inverse and product; throws singular_error for a
// numerically singular candidate.
double evaluate(const Matrix& m, const Matrix& c, Matrix& cinv, Matrix& b) {
    invert_lower_triangular_into(cinv, c);
    matmul_into(b, m, cinv);
    return frobenius_norm_sq(b);
}

// grad(i, j) = -2 sum_{k <= j} (B^T B)(i, k) * Cinv(j, k), lower support only.
void gradient_into(Matrix& g, const Matrix& p, const Matrix& cinv) {
    const index_t n = p.rows;
    if (g.rows != n || g.cols != n) g = Matrix(n, n, true);
    g.lower_triangular = true;
    std::fill(g.data.begin(), g.data.end(), 0.0);
#pragma omp parallel for schedule(dynamic, 8)
    for (index_t i = 0; i < n; ++i) {
        const double* pi = p.row_ptr(i);
        double* gi = g.row_ptr(i);
        for (index_t j = 0; j <= i; ++j) {
            const double* cj = cinv.row_ptr(j);
            double s = 0.0;
#pragma omp simd reduction(+ : s)
            for (index_t k = 0; k <= j; ++k) s += pi[k] * cj[k];
            gi[j] = -2.0 * s;
        }
    }
}

struct Baseline {
    Matrix c;
    double objective;
};

Baseline identity_baseline(const Matrix& m) {
    Baseline b{identity(m.rows), frobenius_norm_sq(m)};
    return b;
}

Baseline workload_baseline(const Matrix& m, Matrix& cinv_buf, Matrix& b_buf) {
    Matrix c = m;
    c.lower_triangular = true;
    normalize_columns(c);
    const double obj = evaluate(m, c, cinv_buf, b_buf);
    return Baseline{std::move(c), obj};
}

}  // namespace

Matrix sqrt_prefix_warm_start(index_t t) {
    if (t < 1) throw param_error("sqrt_prefix_warm_start: T must be >= 1");
    std::vector<double> coeff(static_cast<std::size_t>(t));
    coeff[0] = 1.0;
    for (index_t k = 1; k < t; ++k)
        coeff[static_cast<std::size_t>(k)] = coeff[static_cast<std::size_t>(k - 1)] *
                                             static_cast<double>(2 * k - 1) /
                                             static_cast<double>(2 * k);
    Matrix c(t, t, true);
    for (index_t i = 0; i < t; ++i)
        for (index_t j = 0; j <= i; ++j) c(i, j) = coeff[static_cast<std::size_t>(i - j)];
    normalize_columns(c);
    return c;
}

SolveResult solve_opt_f(const Matrix& a, const SolverConfig& cfg) {
    check_workload(a, "solve_opt_f");
    if (cfg.tol <= 0.0) throw param_error("solve_opt_f: tol must be positive");
    if (!(cfg.step_init > 0.0)) throw param_error("solve_opt_f: step_init must be positive");
    if (cfg.max_halvings < 1) throw param_error("solve_opt_f: max_halvings must be >= 1");

    Matrix m = a;
    m.lower_triangular = true;
    const index_t n = m.rows;
    const index_t max_iters = cfg.max_iters < 0 ? default_max_iters(n) : cfg.max_iters;
    if (max_iters < 1) throw param_error("solve_opt_f: max_iters must be >= 1");

    Matrix c = identity(n);
    if (cfg.warm_start) {
        const Matrix& w = *cfg.warm_start;
        if (!w.square() || w.rows != n)
            throw shape_error("solve_opt_f: warm start shape does not match workload");
        c = w;
        c.lower_triangular = true;
        for (index_t i = 0; i < n; ++i)
            for (index_t j = i + 1; j < n; ++j)
                if (c(i, j) != 0.0)
                    throw shape_error("solve_opt_f: warm start is not lower-triangular");
        normalize_columns(c);
    }

    Matrix cinv(n, n, true), b(n, n, true), p(n, n), g(n, n, true);
    Matrix cand(n, n, true), cand_cinv(n, n, true), cand_b(n, n, true);
    Matrix prev_c(n, n, true), prev_g(n, n, true);

    SolveResult result;
    double phi = evaluate(m, c, cinv, b);  // singular workload/start throws here
    result.objective_trace.push_back(phi);

    bool have_prev = false;
    double last_step = cfg.step_init;
    bool stalled = false;

    while (result.iterations < max_iters && !stalled) {
        gram_into(p, b);
        gradient_into(g, p, cinv);

        double step = 2.0 * last_step;
        if (have_prev) {
            // Barzilai-Borwein 1: <dC, dC> / <dC, dG> over the accepted move.
            double dcc = 0.0, dcg = 0.0;
            for (std::size_t i = 0; i < c.data.size(); ++i) {
                const double dc = c.data[i] - prev_c.data[i];
                dcc += dc * dc;
                dcg += dc * (g.data[i] - prev_g.data[i]);
            }
            if (dcg > 0.0 && dcc > 0.0) step = std::clamp(dcc / dcg, kStepFloor, kStepCeil);
        }

        prev_c = c;
        prev_g = g;

        bool accepted = false;
        for (int h = 0; h <= cfg.max_halvings; ++h, step *= 0.5) {
            for (std::size_t i = 0; i < c.data.size(); ++i)
                cand.data[i] = c.data[i] - step * g.data[i];
            cand.lower_triangular = true;
            double cand_phi;
            try {
                normalize_columns(cand);
                cand_phi = evaluate(m, cand, cand_cinv, cand_b);
            } catch (const numeric_error&) {
                continue;  // singular or degenerate candidate; halve and retry
            }
            if (!std::isfinite(cand_phi)) continue;
            double move = 0.0;
            for (std::size_t i = 0; i < c.data.size(); ++i) {
                const double d = cand.data[i] - c.data[i];
                move += d * d;
            }
            if (cand_phi <= phi - kArmijo * move / step) {
                std::swap(c, cand);
                std::swap(cinv, cand_cinv);
                std::swap(b, cand_b);
                const double prev_phi = phi;
                phi = cand_phi;
                last_step = step;
                have_prev = true;
                accepted = true;
                ++result.iterations;
                result.objective_trace.push_back(phi);
                if (prev_phi - phi < cfg.tol * std::max(prev_phi, 1e-300)) {
                    result.converged = true;
                    stalled = true;  // leave the outer loop
                }
                break;
            }
        }
        if (!accepted) stalled = true;
    }

    // The identity and normalized-workload baselines are always feasible;
    // never return anything worse than either.
    const Baseline ident = identity_baseline(m);
    const Baseline work = workload_baseline(m, cand_cinv, cand_b);
    result.baseline_identity = ident.objective;
    result.baseline_workload = work.objective;
    const Baseline* best = nullptr;
    if (ident.objective < phi) best = &ident;
    if (work.objective < phi && (!best || work.objective < best->objective)) best = &work;
    if (best) {
        c = best->c;
        phi = evaluate(m, c, cinv, b);
        result.fallback = true;
    }

    result.objective = phi;
    result.plain_frobenius = phi;
    result.fac.label = "mf";
    result.fac.workload = m;
    result.fac.b = b;
    result.fac.c = c;
    result.fac.sensitivity = max_column_norm(c);
    result.fac.tau = 0;
    validate_factorization(result.fac, 1e-8, 1e-10);
    return result;
}

SolveResult solve_mf_plus(const Matrix& a, index_t tau, const SolverConfig& cfg) {
    check_workload(a, "solve_mf_plus");
    const index_t t = a.rows;
    if (tau < 1 || tau > t)
        throw param_error("solve_mf_plus: tau outside [1, " + std::to_string(t) + "]");

    const Matrix lam = build_lambda(t, tau);
    const Matrix m = matmul(lam, a);

    SolverConfig core_cfg = cfg;
    if (!core_cfg.warm_start && max_abs_diff(a, build_prefix_sum(t)) == 0.0) {
        if (tau == t) {
            // Lambda_T * S is a row-rescaled prefix sum; the square-root
            // start remains a strong feasible point for it.
            core_cfg.warm_start = sqrt_prefix_warm_start(t);
        } else {
            // Lambda_tau * S is block diagonal with identical tau-sized
            // blocks, so a solution of the block problem tiles into a strong
            // feasible start. Only applies to the prefix-sum workload.
            SolverConfig block_cfg = cfg;
            block_cfg.warm_start = sqrt_prefix_warm_start(tau);
            block_cfg.max_iters = cfg.max_iters;
            const Matrix block = matmul(build_lambda(tau, tau), build_prefix_sum(tau));
            const Matrix block_c = solve_opt_f(block, block_cfg).fac.c;

            Matrix tiled = identity(t);
            const index_t full_blocks = t / tau;
            for (index_t k = 0; k < full_blocks; ++k)
                for (index_t i = 0; i < tau; ++i)
                    for (index_t j = 0; j <= i; ++j)
                        tiled(k * tau + i, k * tau + j) = block_c(i, j);
            const index_t rest = t - full_blocks * tau;
            if (rest > 0) {
                // The trailing partial block is a scaled prefix-sum matrix;
                // scaling does not move the argmin, so solve S directly.
                SolverConfig rest_cfg = cfg;
                rest_cfg.warm_start = sqrt_prefix_warm_start(rest);
                const Matrix rest_c = solve_opt_f(build_prefix_sum(rest), rest_cfg).fac.c;
                const index_t off = full_blocks * tau;
                for (index_t i = 0; i < rest; ++i)
                    for (index_t j = 0; j <= i; ++j)
                        tiled(off + i, off + j) = rest_c(i, j);
            }
            core_cfg.warm_start = std::move(tiled);
        }
    }

    SolveResult core = solve_opt_f(m, core_cfg);

    const Matrix cinv = invert_lower_triangular(core.fac.c);
    Matrix b = matmul(a, cinv);

    SolveResult result;
    result.objective_trace = std::move(core.objective_trace);
    result.baseline_identity = core.baseline_identity;
    result.baseline_workload = core.baseline_workload;
    result.iterations = core.iterations;
    result.converged = core.converged;
    result.fallback = core.fallback;
    result.objective = weighted_objective(lam, b);
    result.plain_frobenius = frobenius_norm_sq(b);
    result.fac.label = "mf-plus";
    result.fac.workload = a;
    result.fac.workload.lower_triangular = true;
    result.fac.b = std::move(b);
    result.fac.c = core.fac.c;
    result.fac.sensitivity = max_column_norm(result.fac.c);
    result.fac.tau = tau;
    validate_factorization(result.fac, 1e-8, 1e-10);
    return result;
}

}  // namespace mflab
