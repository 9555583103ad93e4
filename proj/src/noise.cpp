#include "mflab/noise.hpp"

#include <cmath>
#include <string>

#include "mflab/errors.hpp"
#include "mflab/rng.hpp"

namespace mflab {

Matrix sample_noise_matrix(const NoiseSpec& spec) {
    if (spec.m < 1 || spec.d < 1)
        throw param_error("sample_noise_matrix: m and d must be positive");
    if (!(spec.zeta >= 0.0))
        throw param_error("sample_noise_matrix: zeta must be nonnegative");
    Matrix z(spec.m, spec.d);
    if (spec.zeta == 0.0) return z;
    const double scale = spec.zeta / std::sqrt(static_cast<double>(spec.d));
#pragma omp parallel for schedule(static)
    for (index_t i = 0; i < spec.m; ++i) {
        GaussianStream g(derive_seed(spec.seed, {static_cast<std::uint64_t>(i)}));
        double* row = z.row_ptr(i);
        for (index_t j = 0; j < spec.d; ++j) row[j] = scale * g.next();
    }
    return z;
}

NoiseStream::NoiseStream(const Matrix& b, double sensitivity, const NoiseSpec& spec)
    : b_(&b),
      sensitivity_(sensitivity),
      z_(sample_noise_matrix(spec)),
      diff_(static_cast<std::size_t>(spec.m)),
      out_(static_cast<std::size_t>(spec.d)) {
    if (spec.m != b.cols)
        throw shape_error("NoiseStream: spec.m = " + std::to_string(spec.m) +
                          " does not match b.cols = " + std::to_string(b.cols));
    if (!(sensitivity >= 0.0) || !std::isfinite(sensitivity))
        throw param_error("NoiseStream: sensitivity must be finite and nonnegative");
}

const std::vector<double>& NoiseStream::next_increment() {
    if (cursor_ >= b_->rows)
        throw stream_error("NoiseStream: exhausted after " + std::to_string(b_->rows) +
                           " increments");
    const double* next = b_->row_ptr(cursor_);
    const double* prev = cursor_ == 0 ? nullptr : b_->row_ptr(cursor_ - 1);
    const index_t m = b_->cols;
    for (index_t i = 0; i < m; ++i) diff_[i] = prev ? next[i] - prev[i] : next[i];

    std::fill(out_.begin(), out_.end(), 0.0);
    const index_t d = z_.cols;
    for (index_t i = 0; i < m; ++i) {
        const double w = diff_[i];
        if (w == 0.0) continue;  // rows of B often share long prefixes
        const double* zrow = z_.row_ptr(i);
#pragma omp simd
        for (index_t j = 0; j < d; ++j) out_[j] += w * zrow[j];
    }
    for (index_t j = 0; j < d; ++j) out_[j] *= sensitivity_;
    ++cursor_;
    return out_;
}

}  // namespace mflab
