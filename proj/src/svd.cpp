#include "mflab/svd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mflab/rng.hpp"

namespace mflab {

namespace {

double column_dot(const Matrix& m, index_t p, index_t q) {
    double s = 0.0;
    for (index_t i = 0; i < m.rows; ++i) s += m(i, p) * m(i, q);
    return s;
}

void rotate_columns(Matrix& m, index_t p, index_t q, double c, double s) {
    for (index_t i = 0; i < m.rows; ++i) {
        const double a = m(i, p), b = m(i, q);
        m(i, p) = c * a - s * b;
        m(i, q) = s * a + c * b;
    }
}

}  // namespace

Svd jacobi_svd(const Matrix& a) {
    if (!a.square()) throw shape_error("jacobi_svd: matrix is not square");
    const index_t n = a.rows;
    Matrix w = a;  // becomes U * diag(s): columns are driven to orthogonality
    w.lower_triangular = false;
    Matrix v = identity(n);
    v.lower_triangular = false;

    constexpr int kMaxSweeps = 60;
    constexpr double kOrthTol = 1e-14;
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        bool rotated = false;
        for (index_t p = 0; p < n - 1; ++p)
            for (index_t q = p + 1; q < n; ++q) {
                const double app = column_dot(w, p, p);
                const double aqq = column_dot(w, q, q);
                const double apq = column_dot(w, p, q);
                if (std::abs(apq) <= kOrthTol * std::sqrt(app * aqq)) continue;
                rotated = true;
                const double zeta = (aqq - app) / (2.0 * apq);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                rotate_columns(w, p, q, c, s);
                rotate_columns(v, p, q, c, s);
            }
        if (!rotated) break;
        if (sweep == kMaxSweeps - 1)
            throw numeric_error("jacobi_svd: no convergence after " + std::to_string(kMaxSweeps) +
                                " sweeps");
    }

    Svd out;
    out.singular_values.assign(static_cast<std::size_t>(n), 0.0);
    std::vector<index_t> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> norms(static_cast<std::size_t>(n));
    for (index_t j = 0; j < n; ++j) norms[static_cast<std::size_t>(j)] = std::sqrt(column_dot(w, j, j));
    const double top = *std::max_element(norms.begin(), norms.end());
    for (double nj : norms)
        if (!(nj > 1e-12 * top))
            throw numeric_error("jacobi_svd: input is numerically rank deficient");
    std::stable_sort(order.begin(), order.end(),
                     [&](index_t x, index_t y) { return norms[static_cast<std::size_t>(x)] > norms[static_cast<std::size_t>(y)]; });

    out.u = Matrix(n, n);
    out.v = Matrix(n, n);
    for (index_t jj = 0; jj < n; ++jj) {
        const index_t j = order[static_cast<std::size_t>(jj)];
        const double nj = norms[static_cast<std::size_t>(j)];
        out.singular_values[static_cast<std::size_t>(jj)] = nj;
        for (index_t i = 0; i < n; ++i) {
            out.u(i, jj) = w(i, j) / nj;
            out.v(i, jj) = v(i, j);
        }
    }
    return out;
}

PowerIterationResult power_iteration(
    const std::function<std::vector<double>(const std::vector<double>&)>& apply, index_t dim,
    std::uint64_t seed, double rel_tol, int max_iterations) {
    if (dim < 1) throw param_error("power_iteration: dimension must be positive");
    GaussianStream g(seed);
    std::vector<double> x(static_cast<std::size_t>(dim));
    for (double& xi : x) xi = g.next();

    auto normalize = [](std::vector<double>& v) {
        double n = 0.0;
        for (double vi : v) n += vi * vi;
        n = std::sqrt(n);
        if (n == 0.0) throw numeric_error("power_iteration: iterate collapsed to zero");
        for (double& vi : v) vi /= n;
        return n;
    };
    normalize(x);

    PowerIterationResult res;
    double prev = 0.0;
    for (int it = 1; it <= max_iterations; ++it) {
        std::vector<double> y = apply(x);
        double rayleigh = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) rayleigh += x[i] * y[i];
        const double growth = normalize(y);
        x.swap(y);
        res.iterations = it;
        res.value = rayleigh;
        if (it > 1 && std::abs(rayleigh - prev) <= rel_tol * std::max(std::abs(rayleigh), 1e-300))
            break;
        prev = rayleigh;
        (void)growth;
    }
    res.vector = std::move(x);
    return res;
}

}  // namespace mflab
