#pragma once

#include <cstdint>
#include <vector>

#include "mflab/matrix.hpp"

namespace mflab {

// Parameters for the shared noise matrix Z. Entries are i.i.d. Gaussian with
// variance zeta^2 / d, so every row satisfies E||z_i||^2 = zeta^2.
struct NoiseSpec {
    index_t m = 0;           // rows of Z, equals the column count of B
    index_t d = 0;           // model dimension
    double zeta = 0.0;       // per-row scale before sensitivity
    std::uint64_t seed = 0;  // base seed; row i draws from derive_seed(seed, {i})
};

// Materializes Z. Row i comes from its own derived stream, so the result is
// identical whether rows are filled serially or in parallel, and any single
// row can be regenerated without the others. zeta = 0 yields the zero matrix.
Matrix sample_noise_matrix(const NoiseSpec& spec);

// Streams the correlated noise increments of a factorization row by row:
//
//   increment(t) = sensitivity * (b_{t+1} - b_t)^T Z,   t = 0 .. T-1,
//
// with b_0 the zero row. Summing the first k increments telescopes to
// sensitivity * b_k^T Z, which is what the matrix form of the mechanism adds
// to iterate k. The stream borrows `b`; the caller keeps it alive.
class NoiseStream {
  public:
    // Borrows b for its whole lifetime; the caller keeps it alive.
    NoiseStream(const Matrix& b, double sensitivity, const NoiseSpec& spec);
    NoiseStream(Matrix&&, double, const NoiseSpec&) = delete;

    // The next increment, a vector of length d. The reference stays valid
    // until the following call. Throws stream_error past T increments.
    const std::vector<double>& next_increment();

    index_t cursor() const { return cursor_; }
    index_t steps() const { return b_->rows; }
    const Matrix& noise_matrix() const { return z_; }

  private:
    const Matrix* b_;
    double sensitivity_;
    Matrix z_;
    index_t cursor_ = 0;
    std::vector<double> diff_;
    std::vector<double> out_;
};

}  // namespace mflab
