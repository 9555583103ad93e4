#include "mflab/mechanisms.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "mflab/kernels.hpp"
#include "mflab/mfmx.hpp"

namespace mflab {

namespace {

void require_steps(index_t t) {
    if (t < 1) throw param_error("factorization needs at least one step, got t = " + std::to_string(t));
}

}  // namespace

Matrix build_prefix_sum(index_t t) {
    require_steps(t);
    Matrix s(t, t, true);
    for (index_t i = 0; i < t; ++i)
        for (index_t j = 0; j <= i; ++j) s(i, j) = 1.0;
    return s;
}

Matrix build_lambda(index_t t, index_t tau) {
    require_steps(t);
    if (tau < 1 || tau > t)
        throw param_error("build_lambda: tau must lie in [1, " + std::to_string(t) + "], got " +
                          std::to_string(tau));
    const double w = 1.0 / std::sqrt(static_cast<double>(tau));
    Matrix lam(t, t, true);
    for (index_t r = 1; r <= t; ++r) {
        if (r % tau == 0) {
            lam(r - 1, r - 1) = 1.0;
            if (r > tau) lam(r - 1, r - tau - 1) = -1.0;
        } else {
            lam(r - 1, r - 1) = w;
            if (r > tau) lam(r - 1, (r / tau) * tau - 1) = -w;
        }
    }
    return lam;
}

Factorization pgd_factorization(index_t t) {
    Factorization f;
    f.label = "pgd";
    f.workload = build_prefix_sum(t);
    f.b = f.workload;
    f.c = identity(t);
    f.sensitivity = max_column_norm(f.c);
    return f;
}

Factorization anti_pgd_factorization(index_t t) {
    Factorization f;
    f.label = "anti-pgd";
    f.workload = build_prefix_sum(t);
    f.b = identity(t);
    f.c = f.workload;
    f.sensitivity = max_column_norm(f.c);
    return f;
}

Factorization chess_factorization(index_t t) {
    require_steps(t);
    Factorization f;
    f.label = "chess";
    f.workload = build_prefix_sum(t);
    f.b = Matrix(t, t, true);
    const double v = std::sqrt(2.0);
    for (index_t r = 1; r <= t; ++r)
        for (index_t j = r % 2 == 0 ? 2 : 1; j <= r; j += 2) f.b(r - 1, j - 1) = v;
    f.c = matmul(invert_lower_triangular(f.b), f.workload);
    f.sensitivity = max_column_norm(f.c);
    return f;
}

Matrix build_tree_matrix(int k) {
    if (k < 1) throw param_error("build_tree_matrix: k must be positive");
    if (k > 14)
        throw param_error("build_tree_matrix: k = " + std::to_string(k) +
                          " exceeds the supported depth of 14");
    Matrix h(1, 1);
    h(0, 0) = 1.0;
    for (int level = 1; level < k; ++level) {
        const index_t r = h.rows, c = h.cols;
        Matrix next(2 * r + 1, 2 * c);
        for (index_t i = 0; i < r; ++i)
            for (index_t j = 0; j < c; ++j) {
                next(i, j) = h(i, j);
                next(r + i, c + j) = h(i, j);
            }
        for (index_t j = 0; j < 2 * c; ++j) next(2 * r, j) = 1.0;
        h = std::move(next);
    }
    return h;
}

Factorization tree_factorization(int k) {
    Factorization f;
    f.label = "tree";
    f.c = build_tree_matrix(k);
    const index_t t = f.c.cols;
    f.workload = build_prefix_sum(t);
    // pinv(C) = (C^T C)^-1 C^T; C has full column rank, so the Gram matrix
    // is positive definite and a Cholesky solve is enough.
    Matrix ct = transpose(f.c);
    Matrix gram = matmul(ct, f.c);
    Matrix linv;
    try {
        linv = invert_lower_triangular(cholesky(gram));
    } catch (const numeric_error& e) {
        throw numeric_error(std::string("tree_factorization: pseudo-inverse lost rank: ") +
                            e.what());
    }
    Matrix gram_inv = matmul(transpose(linv), linv);
    f.b = matmul(f.workload, matmul(gram_inv, ct));
    f.sensitivity = max_column_norm(f.c);
    return f;
}

double weighted_objective(const Matrix& weight, const Matrix& b) {
    return frobenius_norm_sq(matmul(weight, b));
}

double prior_proxy(const Factorization& f) {
    return f.sensitivity * std::sqrt(frobenius_norm_sq(f.b));
}

void save_factorization(const std::filesystem::path& dir, const Factorization& f) {
    std::filesystem::create_directories(dir);
    write_mfmx(dir / "B.mfmx", f.b);
    write_mfmx(dir / "C.mfmx", f.c);
    std::ofstream meta(dir / "meta.txt", std::ios::trunc);
    if (!meta) throw error("save_factorization: cannot open " + (dir / "meta.txt").string());
    char sens[64];
    std::snprintf(sens, sizeof sens, "%.17g", f.sensitivity);
    meta << "label " << f.label << "\n"
         << "t " << f.t() << "\n"
         << "m " << f.m() << "\n"
         << "tau " << f.tau << "\n"
         << "sensitivity " << sens << "\n";
    if (!meta) throw error("save_factorization: short write to " + (dir / "meta.txt").string());
}

Factorization load_factorization(const std::filesystem::path& dir) {
    Factorization f;
    f.b = read_mfmx(dir / "B.mfmx");
    f.c = read_mfmx(dir / "C.mfmx");

    std::ifstream meta(dir / "meta.txt");
    if (!meta) throw error("load_factorization: cannot open " + (dir / "meta.txt").string());
    std::map<std::string, std::string> kv;
    std::string key, value;
    while (meta >> key >> value) kv[key] = value;
    for (const char* want : {"label", "t", "m", "tau", "sensitivity"})
        if (!kv.count(want))
            throw error("load_factorization: meta.txt in " + dir.string() + " is missing '" +
                        want + "'");

    f.label = kv["label"];
    f.tau = std::stoll(kv["tau"]);
    f.sensitivity = std::stod(kv["sensitivity"]);
    if (std::stoll(kv["t"]) != f.t() || std::stoll(kv["m"]) != f.m())
        throw error("load_factorization: meta.txt dimensions disagree with the matrices in " +
                    dir.string());
    f.workload = matmul(f.b, f.c);
    validate_factorization(f);
    return f;
}

void validate_factorization(const Factorization& f, double recon_tol, double sens_tol) {
    if (f.m() < 1) throw numeric_error("factorization '" + f.label + "' has no noise dimensions");
    if (f.b.rows != f.workload.rows || f.c.cols != f.workload.cols)
        throw shape_error("factorization '" + f.label + "' does not match its workload shape");
    const double recon = max_abs_diff(matmul(f.b, f.c), f.workload);
    if (!(recon <= recon_tol))
        throw numeric_error("factorization '" + f.label + "' reconstructs the workload to " +
                            std::to_string(recon) + ", worse than " + std::to_string(recon_tol));
    const double sens = max_column_norm(f.c);
    if (!(std::abs(sens - f.sensitivity) <= sens_tol))
        throw numeric_error("factorization '" + f.label + "' carries sensitivity " +
                            std::to_string(f.sensitivity) + " but C measures " +
                            std::to_string(sens));
}

}  // namespace mflab
