#include "mflab/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <string>

#include "mflab/errors.hpp"
#include "mflab/noise.hpp"
#include "mflab/rng.hpp"

namespace mflab {

namespace {

double norm_sq(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

bool all_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

std::vector<double> initial_point(const Problem& p, const RunConfig& cfg) {
    const index_t d = p.dim();
    const double radius = cfg.x0_radius < 0.0 ? std::sqrt(static_cast<double>(d))
                                              : cfg.x0_radius;
    std::vector<double> x(static_cast<std::size_t>(d), 0.0);
    if (radius == 0.0) return x;
    GaussianStream g(derive_seed(cfg.seed, {0}));
    for (double& v : x) v = g.next();
    const double n = std::sqrt(norm_sq(x));
    for (double& v : x) v *= radius / n;
    return x;
}

void check_config(const Problem& p, const Factorization& f, const RunConfig& cfg) {
    if (cfg.steps < 1) throw param_error("run: steps must be >= 1");
    if (!(cfg.gamma > 0.0) || !std::isfinite(cfg.gamma))
        throw param_error("run: gamma must be positive and finite");
    if (!(cfg.zeta >= 0.0)) throw param_error("run: zeta must be nonnegative");
    if (f.t() != cfg.steps)
        throw param_error("run: factorization has " + std::to_string(f.t()) +
                          " rows but the run asks for " + std::to_string(cfg.steps) +
                          " steps");
    if (p.dim() < 1) throw param_error("run: problem has no dimensions");
}

// Core recursion shared by the full-gradient and clipped-stochastic paths.
// step_gradient(x, t) supplies the realized gradient for step t.
template <typename StepGradient>
Trajectory run_impl(const Problem& p, const Factorization& f, const RunConfig& cfg,
                    StepGradient step_gradient) {
    check_config(p, f, cfg);
    const index_t big_t = cfg.steps;
    Trajectory traj;
    traj.optimum = p.optimum_value();
    traj.grad_norm_sq.reserve(static_cast<std::size_t>(big_t) + 1);
    traj.loss.reserve(static_cast<std::size_t>(big_t) + 1);

    std::vector<double> x = initial_point(p, cfg);
    NoiseSpec spec{f.m(), p.dim(), cfg.zeta, derive_seed(cfg.seed, {1})};
    NoiseStream noise(f.b, f.sensitivity, spec);

    const double guard = cfg.divergence_norm * cfg.divergence_norm;
    for (index_t t = 0; t <= big_t; ++t) {
        const double value = p.loss(x);
        std::vector<double> g = p.gradient(x);
        if (!std::isfinite(value) || !all_finite(g)) {
            traj.diverged = true;
            break;
        }
        traj.loss.push_back(value);
        traj.grad_norm_sq.push_back(norm_sq(g));
        if (cfg.record_iterates) traj.iterates.push_back(x);
        traj.x_final = x;
        if (t == big_t) break;

        std::vector<double> step = step_gradient(x, t, std::move(g));
        if (cfg.record_iterates) traj.gradients.push_back(step);
        const std::vector<double>& inc = noise.next_increment();
        for (std::size_t j = 0; j < x.size(); ++j)
            x[j] -= cfg.gamma * (step[j] + inc[j]);
        if (!all_finite(x) || norm_sq(x) > guard) {
            traj.diverged = true;
            break;
        }
    }
    return traj;
}

}  // namespace

double Trajectory::avg_grad_norm_sq() const {
    if (grad_norm_sq.empty()) return std::numeric_limits<double>::quiet_NaN();
    double s = 0.0;
    for (double v : grad_norm_sq) s += v;
    return s / static_cast<double>(grad_norm_sq.size());
}

double Trajectory::last_grad_norm_sq() const {
    if (grad_norm_sq.empty()) return std::numeric_limits<double>::quiet_NaN();
    return grad_norm_sq.back();
}

double Trajectory::final_loss() const {
    if (loss.empty()) return std::numeric_limits<double>::quiet_NaN();
    return loss.back();
}

Trajectory run(const Problem& p, const Factorization& f, const RunConfig& cfg) {
    return run_impl(p, f, cfg, [&p](const std::vector<double>&, index_t,
                                    std::vector<double> g) { return g; });
}

Trajectory run_clipped_stochastic(const Problem& p, const Factorization& f,
                                  const RunConfig& cfg, index_t batch_size) {
    const index_t n = p.num_examples();
    if (n < 1) throw capability_error("run_clipped_stochastic: no per-example gradients");
    if (batch_size < 1 || batch_size > n)
        throw param_error("run_clipped_stochastic: batch size outside [1, " +
                          std::to_string(n) + "]");
    if (!(cfg.clip_alpha > 0.0))
        throw param_error("run_clipped_stochastic: clip_alpha must be positive");

    // One shuffled order for the whole run; batches are contiguous windows of
    // it, walked cyclically.
    std::vector<index_t> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), index_t{0});
    SplitMix64 rng(derive_seed(cfg.seed, {2}));
    for (index_t i = n - 1; i > 0; --i) {
        const index_t j = static_cast<index_t>(rng.next() % static_cast<std::uint64_t>(i + 1));
        std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }

    const double inv_batch = 1.0 / static_cast<double>(batch_size);
    auto step_gradient = [&](const std::vector<double>& x, index_t t,
                             std::vector<double> /*full*/) {
        std::vector<index_t> batch(static_cast<std::size_t>(batch_size));
        const index_t start = (t * batch_size) % n;
        for (index_t k = 0; k < batch_size; ++k)
            batch[static_cast<std::size_t>(k)] =
                perm[static_cast<std::size_t>((start + k) % n)];
        // Fixed summation order regardless of where the window landed.
        std::sort(batch.begin(), batch.end());
        const Matrix rows = clip_rows(p.example_gradients(x, batch), cfg.clip_alpha);
        std::vector<double> g(x.size(), 0.0);
        for (index_t r = 0; r < rows.rows; ++r) {
            const double* row = rows.row_ptr(r);
            for (std::size_t j = 0; j < g.size(); ++j) g[j] += row[j];
        }
        for (double& v : g) v *= inv_batch;
        return g;
    };
    return run_impl(p, f, cfg, step_gradient);
}

namespace {

std::vector<std::vector<double>> shadow_trajectory(const Problem& p, const Trajectory& traj,
                                                   const RunConfig& cfg, index_t tau) {
    if (traj.iterates.empty())
        throw capability_error("virtual trajectory needs a run recorded with iterates");
    if (!(cfg.gamma > 0.0)) throw param_error("virtual trajectory: gamma must be positive");
    const std::size_t count = traj.iterates.size();
    std::vector<std::vector<double>> shadow(count);
    shadow[0] = traj.iterates[0];
    for (std::size_t s = 0; s + 1 < count; ++s) {
        if (tau > 0 && static_cast<index_t>(s + 1) % tau == 0) {
            shadow[s + 1] = traj.iterates[s + 1];
            continue;
        }
        const std::vector<double> g = p.gradient(traj.iterates[s]);
        shadow[s + 1] = shadow[s];
        for (std::size_t j = 0; j < g.size(); ++j) shadow[s + 1][j] -= cfg.gamma * g[j];
    }
    return shadow;
}

}  // namespace

std::vector<std::vector<double>> virtual_restart_trajectory(const Problem& p,
                                                            const Trajectory& traj,
                                                            const RunConfig& cfg) {
    const index_t last = static_cast<index_t>(traj.iterates.empty() ? 0
                                                                    : traj.iterates.size() - 1);
    if (cfg.tau_diag < 1 || (last > 0 && cfg.tau_diag > last))
        throw param_error("virtual_restart_trajectory: tau_diag outside [1, T]");
    return shadow_trajectory(p, traj, cfg, cfg.tau_diag);
}

std::vector<std::vector<double>> virtual_plain_trajectory(const Problem& p,
                                                          const Trajectory& traj,
                                                          const RunConfig& cfg) {
    return shadow_trajectory(p, traj, cfg, 0);
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& t,
                          const std::string& config_echo) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw error("cannot open " + path.string() + " for writing");
    if (!config_echo.empty()) out << "# " << config_echo << "\n";
    out << "iter,grad_norm_sq,loss_gap\n";
    const bool has_opt = std::isfinite(t.optimum);
    char buf[64];
    for (std::size_t i = 0; i < t.grad_norm_sq.size(); ++i) {
        out << i << ',';
        std::snprintf(buf, sizeof buf, "%.17g", t.grad_norm_sq[i]);
        out << buf << ',';
        const double gap = has_opt ? t.loss[i] - t.optimum : t.loss[i];
        std::snprintf(buf, sizeof buf, "%.17g", gap);
        out << buf << '\n';
    }
    if (!out) throw error("short write to " + path.string());
}

}  // namespace mflab
