#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "mflab/idx.hpp"
#include "mflab/matrix.hpp"

namespace mflab {

// An objective the optimizer can descend. Every problem exposes a full
// gradient; problems built from examples also expose per-example gradients
// for the clipped stochastic path, and quadratics expose their Hessian
// spectrum so closed-form noise predictions can be evaluated against runs.
class Problem {
  public:
    virtual ~Problem() = default;

    virtual index_t dim() const = 0;
    virtual double loss(const std::vector<double>& x) const = 0;
    virtual std::vector<double> gradient(const std::vector<double>& x) const = 0;

    // Smoothness constant L used by step-size and tau rules.
    virtual double smoothness() const = 0;

    // Minimum value when known exactly; NaN otherwise.
    virtual double optimum_value() const;

    // Hessian eigenvalues for quadratics; empty for everything else.
    virtual std::vector<double> hessian_spectrum() const { return {}; }

    // Per-example interface. num_examples() = 0 means unavailable, and
    // example_gradients throws capability_error.
    virtual index_t num_examples() const { return 0; }
    virtual Matrix example_gradients(const std::vector<double>& x,
                                     const std::vector<index_t>& indices) const;
};

// f(x) = (L/2) ||x||^2: one curvature everywhere, minimum 0 at the origin.
class IsotropicQuadratic : public Problem {
  public:
    IsotropicQuadratic(index_t d, double l);
    index_t dim() const override { return d_; }
    double loss(const std::vector<double>& x) const override;
    std::vector<double> gradient(const std::vector<double>& x) const override;
    double smoothness() const override { return l_; }
    double optimum_value() const override { return 0.0; }
    std::vector<double> hessian_spectrum() const override;

  private:
    index_t d_;
    double l_;
};

// f(x) = (1/2) ||Ax - b||^2 for a square A.
class LeastSquares : public Problem {
  public:
    LeastSquares(Matrix a, std::vector<double> b, double smoothness, double optimum,
                 std::vector<double> spectrum);
    index_t dim() const override { return a_.cols; }
    double loss(const std::vector<double>& x) const override;
    std::vector<double> gradient(const std::vector<double>& x) const override;
    double smoothness() const override { return smoothness_; }
    double optimum_value() const override { return optimum_; }
    std::vector<double> hessian_spectrum() const override { return spectrum_; }
    const Matrix& design() const { return a_; }
    const std::vector<double>& target() const { return b_; }

  private:
    Matrix a_;
    std::vector<double> b_;
    double smoothness_;
    double optimum_;
    std::vector<double> spectrum_;
};

// Draws a dense Gaussian matrix, replaces its singular values with a linear
// ramp from sqrt(L) down to exactly 0, and targets a Gaussian right-hand
// side. The resulting least-squares problem has largest Hessian eigenvalue L,
// a genuinely singular direction, and a known minimum: the residual at any
// minimizer is the component of b along the null direction of A^T.
LeastSquares build_random_quadratic(index_t d, double l, std::uint64_t seed);

// Multinomial logistic regression over a dataset. The parameter vector packs
// the class-by-feature weight matrix row-major, dim = num_classes * d. Loss
// is the mean cross entropy; smoothness reports the standard softmax bound
// (1/2) lambda_max(X^T X / n), measured by power iteration at construction.
class LogisticRegression : public Problem {
  public:
    explicit LogisticRegression(Dataset data);
    index_t dim() const override;
    double loss(const std::vector<double>& x) const override;
    std::vector<double> gradient(const std::vector<double>& x) const override;
    double smoothness() const override { return smoothness_; }
    index_t num_examples() const override { return data_.size(); }
    Matrix example_gradients(const std::vector<double>& x,
                             const std::vector<index_t>& indices) const override;
    const Dataset& data() const { return data_; }

  private:
    // Softmax probabilities for one example, written into p (length K).
    void probabilities(const std::vector<double>& x, index_t example, double* p) const;
    Dataset data_;
    double smoothness_ = 0.0;
};

// Row-wise l2 clipping: each row g becomes g * min(1, alpha / ||g||).
// alpha must be positive; +infinity leaves the matrix unchanged.
Matrix clip_rows(const Matrix& g, double alpha);

// Synthetic two-or-more-class Gaussian blob dataset in feature space [0, 1],
// for data generation and the logistic experiments. Class centers sit on
// scaled coordinate directions; separation controls how far apart.
Dataset make_blob_dataset(index_t n, index_t d, int classes, double separation,
                          std::uint64_t seed);

}  // namespace mflab
