#include "mflab/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace mflab {

namespace {

constexpr double kPivotFloor = 1e-14;

// Fixed-size row chunks keep parallel reductions associative in a fixed
// order: each chunk is accumulated serially, chunk partials are combined
// ascending. Results are identical for any thread count.
constexpr index_t kRowChunk = 128;

void require_multipliable(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows)
        throw shape_error("matmul: inner dimensions " + std::to_string(a.cols) + " and " +
                          std::to_string(b.rows) + " differ");
}

}  // namespace

void matmul_into(Matrix& out, const Matrix& a, const Matrix& b) {
    require_multipliable(a, b);
    if (&out == &a || &out == &b) {
        Matrix tmp;
        matmul_into(tmp, a, b);
        out = std::move(tmp);
        return;
    }
    const bool a_tri = a.lower_triangular && a.square();
    const bool b_tri = b.lower_triangular && b.square();
    out.rows = a.rows;
    out.cols = b.cols;
    out.lower_triangular = a_tri && b_tri;
    out.data.assign(static_cast<std::size_t>(a.rows * b.cols), 0.0);

    const index_t n = a.rows, kdim = a.cols, m = b.cols;
#pragma omp parallel for schedule(dynamic, 16)
    for (index_t i = 0; i < n; ++i) {
        double* oi = out.row_ptr(i);
        const double* ai = a.row_ptr(i);
        const index_t kmax = a_tri ? i : kdim - 1;
        for (index_t k = 0; k <= kmax; ++k) {
            const double aik = ai[k];
            const double* bk = b.row_ptr(k);
            const index_t jmax = b_tri ? std::min(k, m - 1) : m - 1;
#pragma omp simd
            for (index_t j = 0; j <= jmax; ++j) oi[j] += aik * bk[j];
        }
    }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    Matrix out;
    matmul_into(out, a, b);
    return out;
}

void invert_lower_triangular_into(Matrix& out, const Matrix& l) {
    if (!l.square()) throw shape_error("invert_lower_triangular: matrix is not square");
    const index_t n = l.rows;
    for (index_t i = 0; i < n; ++i)
        if (std::abs(l(i, i)) < kPivotFloor)
            throw singular_error("invert_lower_triangular: zero pivot", i);
    if (&out == &l) {
        Matrix tmp;
        invert_lower_triangular_into(tmp, l);
        out = std::move(tmp);
        return;
    }
    out.rows = n;
    out.cols = n;
    out.lower_triangular = true;
    out.data.assign(static_cast<std::size_t>(n * n), 0.0);

#pragma omp parallel for schedule(dynamic, 8)
    for (index_t j = 0; j < n; ++j) {
        out(j, j) = 1.0 / l(j, j);
        for (index_t i = j + 1; i < n; ++i) {
            const double* li = l.row_ptr(i);
            double s = 0.0;
            for (index_t k = j; k < i; ++k) s += li[k] * out(k, j);
            out(i, j) = -s / li[i];
        }
    }
}

Matrix invert_lower_triangular(const Matrix& l) {
    Matrix out;
    invert_lower_triangular_into(out, l);
    return out;
}

double frobenius_norm_sq(const Matrix& a) {
    const index_t n = a.rows;
    std::vector<double> partial(static_cast<std::size_t>(n), 0.0);
#pragma omp parallel for schedule(static)
    for (index_t i = 0; i < n; ++i) {
        const double* ai = a.row_ptr(i);
        double s = 0.0;
#pragma omp simd reduction(+ : s)
        for (index_t j = 0; j < a.cols; ++j) s += ai[j] * ai[j];
        partial[static_cast<std::size_t>(i)] = s;
    }
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}

double frobenius_inner(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows || a.cols != b.cols)
        throw shape_error("frobenius_inner: shapes differ");
    const index_t n = a.rows;
    std::vector<double> partial(static_cast<std::size_t>(n), 0.0);
#pragma omp parallel for schedule(static)
    for (index_t i = 0; i < n; ++i) {
        const double* ai = a.row_ptr(i);
        const double* bi = b.row_ptr(i);
        double s = 0.0;
#pragma omp simd reduction(+ : s)
        for (index_t j = 0; j < a.cols; ++j) s += ai[j] * bi[j];
        partial[static_cast<std::size_t>(i)] = s;
    }
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows || a.cols != b.cols) throw shape_error("max_abs_diff: shapes differ");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        worst = std::max(worst, std::abs(a.data[i] - b.data[i]));
    return worst;
}

namespace {

std::vector<double> column_norms_sq(const Matrix& a) {
    const index_t nchunks = (a.rows + kRowChunk - 1) / kRowChunk;
    std::vector<double> chunk_ss(static_cast<std::size_t>(std::max<index_t>(nchunks, 1) * a.cols), 0.0);
#pragma omp parallel for schedule(static)
    for (index_t c = 0; c < nchunks; ++c) {
        double* ss = chunk_ss.data() + c * a.cols;
        const index_t hi = std::min(a.rows, (c + 1) * kRowChunk);
        for (index_t i = c * kRowChunk; i < hi; ++i) {
            const double* ai = a.row_ptr(i);
#pragma omp simd
            for (index_t j = 0; j < a.cols; ++j) ss[j] += ai[j] * ai[j];
        }
    }
    std::vector<double> total(static_cast<std::size_t>(a.cols), 0.0);
    for (index_t c = 0; c < nchunks; ++c) {
        const double* ss = chunk_ss.data() + c * a.cols;
        for (index_t j = 0; j < a.cols; ++j) total[static_cast<std::size_t>(j)] += ss[j];
    }
    return total;
}

}  // namespace

double max_column_norm(const Matrix& a) {
    if (a.rows == 0 || a.cols == 0) return 0.0;
    const std::vector<double> ss = column_norms_sq(a);
    return std::sqrt(*std::max_element(ss.begin(), ss.end()));
}

double row_diff_norm_sq(const Matrix& a, index_t i, index_t j) {
    if (i < 0 || i > a.rows || j < 0 || j > a.rows)
        throw bounds_error("row_diff_norm_sq: row index outside [0, " + std::to_string(a.rows) +
                           "]");
    if (i == j) return 0.0;
    const double* ri = i == 0 ? nullptr : a.row_ptr(i - 1);
    const double* rj = j == 0 ? nullptr : a.row_ptr(j - 1);
    double s = 0.0;
    if (ri && rj) {
#pragma omp simd reduction(+ : s)
        for (index_t c = 0; c < a.cols; ++c) {
            const double d = ri[c] - rj[c];
            s += d * d;
        }
    } else {
        const double* r = ri ? ri : rj;
#pragma omp simd reduction(+ : s)
        for (index_t c = 0; c < a.cols; ++c) s += r[c] * r[c];
    }
    return s;
}

void copy_row(const Matrix& a, index_t i, double* out) {
    if (i < 0 || i > a.rows)
        throw bounds_error("copy_row: row index outside [0, " + std::to_string(a.rows) + "]");
    if (i == 0)
        std::memset(out, 0, static_cast<std::size_t>(a.cols) * sizeof(double));
    else
        std::memcpy(out, a.row_ptr(i - 1), static_cast<std::size_t>(a.cols) * sizeof(double));
}

Matrix transpose(const Matrix& a) {
    Matrix out(a.cols, a.rows);
#pragma omp parallel for schedule(static)
    for (index_t i = 0; i < a.rows; ++i)
        for (index_t j = 0; j < a.cols; ++j) out(j, i) = a(i, j);
    return out;
}

void gram_into(Matrix& out, const Matrix& b) {
    const index_t n = b.cols;
    if (out.rows != n || out.cols != n) out = Matrix(n, n);
    out.lower_triangular = false;
    std::fill(out.data.begin(), out.data.end(), 0.0);
    const bool tri = b.lower_triangular && b.square();
    // out(i, j) = sum_k b(k, i) b(k, j). For triangular b only k >= max(i, j)
    // contributes. Each thread owns a row of out; k ascends, so the sum order
    // is fixed regardless of thread count.
#pragma omp parallel for schedule(dynamic, 8)
    for (index_t i = 0; i < n; ++i) {
        double* oi = out.row_ptr(i);
        const index_t k0 = tri ? i : 0;
        for (index_t k = k0; k < b.rows; ++k) {
            const double* bk = b.row_ptr(k);
            const double v = bk[i];
            if (v == 0.0) continue;
            const index_t jmax = tri ? std::min(k, n - 1) : n - 1;
#pragma omp simd
            for (index_t j = i; j <= jmax; ++j) oi[j] += v * bk[j];
        }
    }
    // Mirror the strict upper part down.
#pragma omp parallel for schedule(static)
    for (index_t i = 1; i < n; ++i)
        for (index_t j = 0; j < i; ++j) out(i, j) = out(j, i);
}

Matrix gram(const Matrix& b) {
    Matrix out(b.cols, b.cols);
    gram_into(out, b);
    return out;
}

Matrix cholesky(const Matrix& a) {
    if (!a.square()) throw shape_error("cholesky: matrix is not square");
    const index_t n = a.rows;
    Matrix l = a;
    l.lower_triangular = true;
    std::vector<double> colk(static_cast<std::size_t>(n));
    for (index_t k = 0; k < n; ++k) {
        double pivot = l(k, k);
        if (!(pivot > 0.0) || !std::isfinite(pivot))
            throw numeric_error("cholesky: matrix not positive definite at pivot " +
                                std::to_string(k));
        const double lkk = std::sqrt(pivot);
        l(k, k) = lkk;
        const double inv = 1.0 / lkk;
        for (index_t i = k + 1; i < n; ++i) {
            l(i, k) *= inv;
            colk[static_cast<std::size_t>(i)] = l(i, k);
        }
#pragma omp parallel for schedule(dynamic, 16)
        for (index_t i = k + 1; i < n; ++i) {
            const double lik = l(i, k);
            double* li = l.row_ptr(i);
            const double* ck = colk.data();
#pragma omp simd
            for (index_t j = k + 1; j <= i; ++j) li[j] -= lik * ck[j];
        }
    }
    for (index_t i = 0; i < n; ++i)
        for (index_t j = i + 1; j < n; ++j) l(i, j) = 0.0;
    return l;
}

void normalize_columns(Matrix& a) {
    const std::vector<double> ss = column_norms_sq(a);
    std::vector<double> inv(ss.size());
    for (std::size_t j = 0; j < ss.size(); ++j) {
        if (ss[j] <= 0.0)
            throw numeric_error("normalize_columns: column " + std::to_string(j) + " is zero");
        inv[j] = 1.0 / std::sqrt(ss[j]);
    }
#pragma omp parallel for schedule(static)
    for (index_t i = 0; i < a.rows; ++i) {
        double* ai = a.row_ptr(i);
#pragma omp simd
        for (index_t j = 0; j < a.cols; ++j) ai[j] *= inv[static_cast<std::size_t>(j)];
    }
}

std::vector<double> matvec(const Matrix& a, const std::vector<double>& x) {
    if (static_cast<index_t>(x.size()) != a.cols)
        throw shape_error("matvec: vector length " + std::to_string(x.size()) +
                          " does not match " + std::to_string(a.cols) + " columns");
    std::vector<double> y(static_cast<std::size_t>(a.rows), 0.0);
#pragma omp parallel for schedule(static)
    for (index_t i = 0; i < a.rows; ++i) {
        const double* ai = a.row_ptr(i);
        double s = 0.0;
#pragma omp simd reduction(+ : s)
        for (index_t j = 0; j < a.cols; ++j) s += ai[j] * x[static_cast<std::size_t>(j)];
        y[static_cast<std::size_t>(i)] = s;
    }
    return y;
}

std::vector<double> matvec_transposed(const Matrix& a, const std::vector<double>& x) {
    if (static_cast<index_t>(x.size()) != a.rows)
        throw shape_error("matvec_transposed: vector length " + std::to_string(x.size()) +
                          " does not match " + std::to_string(a.rows) + " rows");
    std::vector<double> y(static_cast<std::size_t>(a.cols), 0.0);
    for (index_t i = 0; i < a.rows; ++i) {
        const double xi = x[static_cast<std::size_t>(i)];
        const double* ai = a.row_ptr(i);
#pragma omp simd
        for (index_t j = 0; j < a.cols; ++j) y[static_cast<std::size_t>(j)] += xi * ai[j];
    }
    return y;
}

}  // namespace mflab
