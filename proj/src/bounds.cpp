#include "mflab/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mflab/errors.hpp"
#include "mflab/kernels.hpp"

namespace mflab {

namespace {

void check_bracket_args(const Matrix& b, index_t tau, double sigma, index_t big_t) {
    if (b.rows != big_t)
        throw shape_error("noise term: B has " + std::to_string(b.rows) + " rows, expected " +
                          std::to_string(big_t));
    if (tau < 1 || tau > big_t)
        throw param_error("noise term: tau outside [1, " + std::to_string(big_t) + "]");
    if (!(sigma >= 0.0)) throw param_error("noise term: sigma must be nonnegative");
}

// The shared bracket of both theorems. b_0 is the virtual zero row, which
// row_diff_norm_sq already understands as index 0.
double theorem_bracket(const Matrix& b, index_t tau) {
    const index_t big_t = b.rows;
    double within = 0.0;  // (1/tau) sum over all t of the distance to the anchor
    for (index_t t = 1; t <= big_t; ++t) {
        const index_t anchor = (t / tau) * tau;
        within += row_diff_norm_sq(b, t, anchor);
    }
    double across = 0.0;  // restart-to-restart distances
    for (index_t t = tau; t <= big_t; t += tau) across += row_diff_norm_sq(b, t, t - tau);
    return within / static_cast<double>(tau) + across;
}

}  // namespace

double theorem1_noise_term(const Matrix& b, index_t tau, double sigma, index_t big_t) {
    check_bracket_args(b, tau, sigma, big_t);
    const double bracket = theorem_bracket(b, tau);
    return sigma * sigma / (static_cast<double>(big_t) * static_cast<double>(tau)) * bracket;
}

double theorem2_noise_term(const Matrix& b, index_t tau, double sigma, index_t big_t,
                           double l) {
    check_bracket_args(b, tau, sigma, big_t);
    if (!(l > 0.0)) throw param_error("noise term: L must be positive");
    const index_t last_anchor = (big_t / tau) * tau;
    const double bracket = theorem_bracket(b, tau) + row_diff_norm_sq(b, last_anchor, 0);
    return sigma * sigma /
           (static_cast<double>(big_t) * l * static_cast<double>(tau)) * bracket;
}

index_t tau_nonconvex(double gamma, double l, index_t big_t) {
    if (!(gamma > 0.0) || !(l > 0.0)) throw param_error("tau rule: gamma and L must be positive");
    if (big_t < 1) throw param_error("tau rule: T must be >= 1");
    const double raw = std::floor(1.0 / (gamma * l));
    const double clamped = std::clamp(raw, 1.0, static_cast<double>(big_t));
    return static_cast<index_t>(clamped);
}

index_t tau_convex_logfactor(double gamma, double l, index_t big_t) {
    if (!(gamma > 0.0) || !(l > 0.0)) throw param_error("tau rule: gamma and L must be positive");
    if (big_t < 1) throw param_error("tau rule: T must be >= 1");
    const double lg = std::max(std::log2(static_cast<double>(big_t)), 1.0);
    const double raw = std::floor(1.0 / (8.0 * gamma * l * lg));
    const double clamped = std::clamp(raw, 1.0, static_cast<double>(big_t));
    return static_cast<index_t>(clamped);
}

double chess_noise_growth(index_t big_t, index_t tau, double sigma) {
    if (tau < 1 || tau > big_t / 4)
        throw param_error("chess_noise_growth: tau outside [1, T/4]");
    if (!(sigma >= 0.0)) throw param_error("chess_noise_growth: sigma must be nonnegative");
    const Matrix b = chess_factorization(big_t).b;

    const auto checked_diff = [&b](index_t t, index_t anchor) {
        const double v = row_diff_norm_sq(b, t, anchor);
        const double lower = static_cast<double>(t - anchor) / 2.0;
        const double upper = 2.0 * static_cast<double>(t);
        if (v < lower - 1e-9 || v > upper + 1e-9)
            throw numeric_error("chess_noise_growth: ||b_" + std::to_string(t) + " - b_" +
                                std::to_string(anchor) + "||^2 = " + std::to_string(v) +
                                " escapes [" + std::to_string(lower) + ", " +
                                std::to_string(upper) + "]");
        return v;
    };

    double within = 0.0;
    for (index_t t = 1; t <= big_t; ++t) within += checked_diff(t, (t / tau) * tau);
    double across = 0.0;
    for (index_t t = tau; t <= big_t; t += tau) across += checked_diff(t, t - tau);
    const index_t last_anchor = (big_t / tau) * tau;
    const double final_term = checked_diff(last_anchor, 0);
    return sigma * sigma * (within / static_cast<double>(tau) + across + final_term);
}

namespace {

void check_moment_args(double gamma, double l, double sigma, double x0_norm_sq,
                       index_t big_t) {
    if (!(gamma > 0.0) || !(l > 0.0))
        throw param_error("exact moment: gamma and L must be positive");
    if (gamma * l >= 1.0) throw param_error("exact moment: requires gamma * L < 1");
    if (!(sigma >= 0.0)) throw param_error("exact moment: sigma must be nonnegative");
    if (!(x0_norm_sq >= 0.0)) throw param_error("exact moment: x0_norm_sq must be >= 0");
    if (big_t < 1) throw param_error("exact moment: T must be >= 1");
}

}  // namespace

PgdMoment pgd_exact_moment(double gamma, double l, double sigma, double x0_norm_sq,
                           index_t big_t) {
    check_moment_args(gamma, l, sigma, x0_norm_sq, big_t);
    const double a2 = (1.0 - gamma * l) * (1.0 - gamma * l);
    const double inject = gamma * gamma * sigma * sigma;
    double u = x0_norm_sq;
    for (index_t t = 0; t < big_t; ++t) u = a2 * u + inject;
    PgdMoment out;
    out.value = u;
    out.stationary = gamma * sigma * sigma / (l * (2.0 - gamma * l));
    return out;
}

double anti_pgd_exact_moment(double gamma, double l, double sigma, double x0_norm_sq,
                             index_t big_t) {
    check_moment_args(gamma, l, sigma, x0_norm_sq, big_t);
    const double a = 1.0 - gamma * l;
    const double inject = gamma * gamma * sigma * sigma;
    // E<x_t, z_t> = -gamma sigma^2 once t >= 1, which is the whole benefit of
    // the anti-correlation: most of each injected row is withdrawn one step
    // later.
    double u = x0_norm_sq;
    for (index_t t = 0; t < big_t; ++t) {
        const double cross = t >= 1 ? inject * (1.0 - 2.0 * a) : 0.0;
        u = a * a * u + inject + cross;
    }
    return u;
}

double pgd_virtual_exact_moment(double gamma, double l, double sigma, double x0_norm_sq,
                                index_t big_t) {
    check_moment_args(gamma, l, sigma, x0_norm_sq, big_t);
    const double a = 1.0 - gamma * l;
    double decay = 1.0;
    for (index_t t = 0; t < big_t; ++t) decay *= a * a;
    double noise = 0.0;
    double aj = 1.0;
    for (index_t j = 1; j <= big_t - 1; ++j) {
        aj *= a;
        const double c = 1.0 - aj;
        noise += c * c;
    }
    return decay * x0_norm_sq + gamma * gamma * sigma * sigma * noise;
}

double quadratic_stationary_grad_norm_sq(const std::vector<double>& spectrum, double gamma,
                                         double sigma) {
    if (spectrum.empty()) throw param_error("stationary prediction: empty spectrum");
    if (!(gamma > 0.0) || !(sigma >= 0.0))
        throw param_error("stationary prediction: gamma > 0 and sigma >= 0 required");
    const double d = static_cast<double>(spectrum.size());
    double total = 0.0;
    for (double lam : spectrum) {
        if (lam < 0.0) throw param_error("stationary prediction: negative eigenvalue");
        if (gamma * lam >= 2.0)
            throw param_error("stationary prediction: gamma * lambda >= 2 has no fixed point");
        if (lam == 0.0) continue;
        total += lam / (2.0 - gamma * lam);
    }
    return gamma * sigma * sigma / d * total;
}

BoundReport bound_report(const Factorization& fac, index_t tau, double sigma, double l) {
    BoundReport r;
    r.label = fac.label;
    r.tau_used = tau;
    r.noise_term_nonconvex = theorem1_noise_term(fac.b, tau, sigma, fac.t());
    r.noise_term_convex = theorem2_noise_term(fac.b, tau, sigma, fac.t(), l);
    r.prior_proxy = prior_proxy(fac);
    return r;
}

}  // namespace mflab
