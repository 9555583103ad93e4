#include "mflab/problems.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mflab/errors.hpp"
#include "mflab/kernels.hpp"
#include "mflab/rng.hpp"
#include "mflab/svd.hpp"

namespace mflab {

namespace {

void check_dim(const Problem& p, const std::vector<double>& x) {
    if (static_cast<index_t>(x.size()) != p.dim())
        throw shape_error("problem expects dimension " + std::to_string(p.dim()) + ", got " +
                          std::to_string(x.size()));
}

}  // namespace

double Problem::optimum_value() const { return std::numeric_limits<double>::quiet_NaN(); }

Matrix Problem::example_gradients(const std::vector<double>&,
                                  const std::vector<index_t>&) const {
    throw capability_error("problem has no per-example gradients");
}

IsotropicQuadratic::IsotropicQuadratic(index_t d, double l) : d_(d), l_(l) {
    if (d < 1) throw param_error("IsotropicQuadratic: dimension must be positive");
    if (!(l > 0.0)) throw param_error("IsotropicQuadratic: smoothness must be positive");
}

double IsotropicQuadratic::loss(const std::vector<double>& x) const {
    check_dim(*this, x);
    double s = 0.0;
    for (double v : x) s += v * v;
    return 0.5 * l_ * s;
}

std::vector<double> IsotropicQuadratic::gradient(const std::vector<double>& x) const {
    check_dim(*this, x);
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) g[i] = l_ * x[i];
    return g;
}

std::vector<double> IsotropicQuadratic::hessian_spectrum() const {
    return std::vector<double>(static_cast<std::size_t>(d_), l_);
}

LeastSquares::LeastSquares(Matrix a, std::vector<double> b, double smoothness, double optimum,
                           std::vector<double> spectrum)
    : a_(std::move(a)),
      b_(std::move(b)),
      smoothness_(smoothness),
      optimum_(optimum),
      spectrum_(std::move(spectrum)) {
    if (a_.rows != static_cast<index_t>(b_.size()))
        throw shape_error("LeastSquares: design rows do not match target length");
    if (!(smoothness_ > 0.0)) throw param_error("LeastSquares: smoothness must be positive");
}

double LeastSquares::loss(const std::vector<double>& x) const {
    check_dim(*this, x);
    std::vector<double> r = matvec(a_, x);
    double s = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double d = r[i] - b_[i];
        s += d * d;
    }
    return 0.5 * s;
}

std::vector<double> LeastSquares::gradient(const std::vector<double>& x) const {
    check_dim(*this, x);
    std::vector<double> r = matvec(a_, x);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= b_[i];
    return matvec_transposed(a_, r);
}

LeastSquares build_random_quadratic(index_t d, double l, std::uint64_t seed) {
    if (d < 2) throw param_error("build_random_quadratic: need dimension >= 2");
    if (!(l > 0.0)) throw param_error("build_random_quadratic: smoothness must be positive");

    Matrix raw(d, d);
    GaussianStream entries(derive_seed(seed, {0}));
    for (double& v : raw.data) v = entries.next();
    const Svd svd = jacobi_svd(raw);

    // Replace the spectrum with a linear ramp sqrt(l) .. 0 (inclusive), kept
    // descending to match the factor order.
    const double root = std::sqrt(l);
    std::vector<double> ramp(static_cast<std::size_t>(d));
    for (index_t k = 0; k < d; ++k)
        ramp[static_cast<std::size_t>(k)] =
            root * static_cast<double>(d - 1 - k) / static_cast<double>(d - 1);

    Matrix scaled = svd.u;  // columns scaled by the new singular values
    for (index_t i = 0; i < d; ++i)
        for (index_t k = 0; k < d; ++k) scaled(i, k) *= ramp[static_cast<std::size_t>(k)];
    const Matrix a = matmul(scaled, transpose(svd.v));

    std::vector<double> b(static_cast<std::size_t>(d));
    GaussianStream target(derive_seed(seed, {1}));
    for (double& v : b) v = target.next();

    // At any minimizer the residual is the projection of b onto the left
    // direction with singular value zero, so the minimum is known exactly.
    double along = 0.0;
    for (index_t i = 0; i < d; ++i) along += svd.u(i, d - 1) * b[static_cast<std::size_t>(i)];
    const double optimum = 0.5 * along * along;

    std::vector<double> spectrum(static_cast<std::size_t>(d));
    for (index_t k = 0; k < d; ++k)
        spectrum[static_cast<std::size_t>(k)] =
            ramp[static_cast<std::size_t>(k)] * ramp[static_cast<std::size_t>(k)];

    return LeastSquares(a, std::move(b), l, optimum, std::move(spectrum));
}

LogisticRegression::LogisticRegression(Dataset data) : data_(std::move(data)) {
    if (data_.size() < 1) throw param_error("LogisticRegression: empty dataset");
    if (data_.num_classes < 2)
        throw param_error("LogisticRegression: need at least two classes");
    for (index_t i = 0; i < data_.size(); ++i)
        if (data_.labels[static_cast<std::size_t>(i)] < 0 ||
            data_.labels[static_cast<std::size_t>(i)] >= data_.num_classes)
            throw param_error("LogisticRegression: label out of range at example " +
                              std::to_string(i));

    const Matrix& x = data_.features;
    const double inv_n = 1.0 / static_cast<double>(x.rows);
    const auto apply = [&x, inv_n](const std::vector<double>& v) {
        std::vector<double> xv = matvec(x, v);
        std::vector<double> out = matvec_transposed(x, xv);
        for (double& o : out) o *= inv_n;
        return out;
    };
    smoothness_ = 0.5 * power_iteration(apply, x.cols, 0x109157u, 1e-10, 20000).value;
    if (!(smoothness_ > 0.0))
        throw numeric_error("LogisticRegression: feature matrix has no curvature");
}

index_t LogisticRegression::dim() const {
    return static_cast<index_t>(data_.num_classes) * data_.dim();
}

void LogisticRegression::probabilities(const std::vector<double>& x, index_t example,
                                       double* p) const {
    const index_t d = data_.dim();
    const int k = data_.num_classes;
    const double* feat = data_.features.row_ptr(example);
    double top = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
        const double* w = x.data() + static_cast<std::size_t>(c) * static_cast<std::size_t>(d);
        double s = 0.0;
#pragma omp simd reduction(+ : s)
        for (index_t j = 0; j < d; ++j) s += w[j] * feat[j];
        p[c] = s;
        top = std::max(top, s);
    }
    double z = 0.0;
    for (int c = 0; c < k; ++c) {
        p[c] = std::exp(p[c] - top);
        z += p[c];
    }
    for (int c = 0; c < k; ++c) p[c] /= z;
}

double LogisticRegression::loss(const std::vector<double>& x) const {
    check_dim(*this, x);
    const int k = data_.num_classes;
    std::vector<double> p(static_cast<std::size_t>(k));
    double total = 0.0;
    for (index_t i = 0; i < data_.size(); ++i) {
        probabilities(x, i, p.data());
        const int y = data_.labels[static_cast<std::size_t>(i)];
        total += -std::log(std::max(p[static_cast<std::size_t>(y)], 1e-300));
    }
    return total / static_cast<double>(data_.size());
}

std::vector<double> LogisticRegression::gradient(const std::vector<double>& x) const {
    check_dim(*this, x);
    const index_t d = data_.dim();
    const int k = data_.num_classes;
    std::vector<double> g(x.size(), 0.0);
    std::vector<double> p(static_cast<std::size_t>(k));
    for (index_t i = 0; i < data_.size(); ++i) {
        probabilities(x, i, p.data());
        const int y = data_.labels[static_cast<std::size_t>(i)];
        const double* feat = data_.features.row_ptr(i);
        for (int c = 0; c < k; ++c) {
            const double coef = p[static_cast<std::size_t>(c)] - (c == y ? 1.0 : 0.0);
            double* gc = g.data() + static_cast<std::size_t>(c) * static_cast<std::size_t>(d);
#pragma omp simd
            for (index_t j = 0; j < d; ++j) gc[j] += coef * feat[j];
        }
    }
    const double inv_n = 1.0 / static_cast<double>(data_.size());
    for (double& v : g) v *= inv_n;
    return g;
}

Matrix LogisticRegression::example_gradients(const std::vector<double>& x,
                                             const std::vector<index_t>& indices) const {
    check_dim(*this, x);
    const index_t d = data_.dim();
    const int k = data_.num_classes;
    Matrix out(static_cast<index_t>(indices.size()), dim());
    std::vector<double> p(static_cast<std::size_t>(k));
    for (std::size_t r = 0; r < indices.size(); ++r) {
        const index_t i = indices[r];
        if (i < 0 || i >= data_.size())
            throw bounds_error("example_gradients: index " + std::to_string(i) +
                               " outside dataset of size " + std::to_string(data_.size()));
        probabilities(x, i, p.data());
        const int y = data_.labels[static_cast<std::size_t>(i)];
        const double* feat = data_.features.row_ptr(i);
        double* row = out.row_ptr(static_cast<index_t>(r));
        for (int c = 0; c < k; ++c) {
            const double coef = p[static_cast<std::size_t>(c)] - (c == y ? 1.0 : 0.0);
            double* gc = row + static_cast<std::size_t>(c) * static_cast<std::size_t>(d);
#pragma omp simd
            for (index_t j = 0; j < d; ++j) gc[j] = coef * feat[j];
        }
    }
    return out;
}

Matrix clip_rows(const Matrix& g, double alpha) {
    if (!(alpha > 0.0)) throw param_error("clip_rows: alpha must be positive");
    Matrix out = g;
    for (index_t i = 0; i < out.rows; ++i) {
        double* row = out.row_ptr(i);
        double s = 0.0;
#pragma omp simd reduction(+ : s)
        for (index_t j = 0; j < out.cols; ++j) s += row[j] * row[j];
        const double norm = std::sqrt(s);
        const double scale = norm > alpha ? alpha / norm : 1.0;
        for (index_t j = 0; j < out.cols; ++j) row[j] *= scale;
    }
    return out;
}

Dataset make_blob_dataset(index_t n, index_t d, int classes, double separation,
                          std::uint64_t seed) {
    if (n < 1 || d < 1) throw param_error("make_blob_dataset: n and d must be positive");
    if (classes < 2) throw param_error("make_blob_dataset: need at least two classes");
    if (!(separation >= 0.0)) throw param_error("make_blob_dataset: separation must be >= 0");

    Matrix centers(classes, d);
    const double spread = separation / std::sqrt(static_cast<double>(d));
    for (int c = 0; c < classes; ++c) {
        GaussianStream g(derive_seed(seed, {0, static_cast<std::uint64_t>(c)}));
        double* row = centers.row_ptr(c);
        for (index_t j = 0; j < d; ++j) row[j] = 0.5 + spread * g.next();
    }

    Dataset ds;
    ds.features = Matrix(n, d);
    ds.labels.resize(static_cast<std::size_t>(n));
    ds.num_classes = classes;
    for (index_t i = 0; i < n; ++i) {
        const int y = static_cast<int>(i % classes);
        ds.labels[static_cast<std::size_t>(i)] = y;
        GaussianStream g(derive_seed(seed, {1, static_cast<std::uint64_t>(i)}));
        const double* center = centers.row_ptr(y);
        double* row = ds.features.row_ptr(i);
        for (index_t j = 0; j < d; ++j)
            row[j] = std::clamp(center[j] + 0.1 * g.next(), 0.0, 1.0);
    }
    return ds;
}

}  // namespace mflab
