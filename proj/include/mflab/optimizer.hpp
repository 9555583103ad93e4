#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "mflab/matrix.hpp"
#include "mflab/mechanisms.hpp"
#include "mflab/problems.hpp"

namespace mflab {

// One gradient-descent run with linearly correlated noise. `zeta` is the
// scale of the shared noise rows before sensitivity, so the effective
// per-step noise level is sensitivity(C) * zeta. x0 is a Gaussian direction
// scaled to x0_radius (negative means sqrt(dim); 0 gives the origin).
struct RunConfig {
    index_t steps = 0;
    double gamma = 0.0;
    double zeta = 0.0;
    double clip_alpha = std::numeric_limits<double>::infinity();
    std::uint64_t seed = 0;
    index_t tau_diag = 0;  // restart period for the virtual-sequence diagnostic; 0 = unset
    bool record_iterates = false;
    double x0_radius = -1.0;
    double divergence_norm = 1e12;
};

// Everything recorded along one run. Iterates x_0 .. x_T produce T+1 entries
// of gradient and loss history unless the divergence guard fired first, in
// which case the history stops at the last finite iterate.
struct Trajectory {
    std::vector<double> grad_norm_sq;
    std::vector<double> loss;
    double optimum = 0.0;  // NaN when the problem has no known minimum
    bool diverged = false;
    std::vector<double> x_final;
    std::vector<std::vector<double>> iterates;   // only when record_iterates
    std::vector<std::vector<double>> gradients;  // realized step gradients, ditto

    // Mean of ||grad f(x_t)||^2 over the recorded iterates.
    double avg_grad_norm_sq() const;
    double last_grad_norm_sq() const;
    double final_loss() const;
};

// Plain full-gradient descent driven by the factorization's noise stream:
//   x_{t+1} = x_t - gamma * (grad f(x_t) + noise_increment_t).
// Requires fac to have exactly cfg.steps rows.
Trajectory run(const Problem& p, const Factorization& f, const RunConfig& cfg);

// Per-example variant: a fixed shuffled order, contiguous batches walked
// cyclically, each batch row-clipped to l2 radius cfg.clip_alpha before
// averaging. Requires per-example gradients. With clip_alpha = infinity and
// batch_size = num_examples this reproduces run() exactly.
Trajectory run_clipped_stochastic(const Problem& p, const Factorization& f,
                                  const RunConfig& cfg, index_t batch_size);

// The noise-free shadow of a recorded run, reset to the real iterate at
// every multiple of cfg.tau_diag:
//   xt_{s+1} = xt_s - gamma * grad f(x_s),   then   xt_{s+1} = x_{s+1}
// whenever (s+1) is a multiple of tau. Returns xt_0 .. xt_T. The run must
// have been recorded with record_iterates on.
std::vector<std::vector<double>> virtual_restart_trajectory(const Problem& p,
                                                            const Trajectory& traj,
                                                            const RunConfig& cfg);

// Same shadow without any resets, for watching the gap to the real sequence
// grow. This is the reset-free diagnostic; tau_diag is ignored.
std::vector<std::vector<double>> virtual_plain_trajectory(const Problem& p,
                                                          const Trajectory& traj,
                                                          const RunConfig& cfg);

// CSV with one row per recorded iterate: iter, grad_norm_sq, loss_gap.
// loss_gap is loss minus the known optimum, or raw loss when none is known.
// config_echo lands in a leading comment line.
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& t,
                          const std::string& config_echo);

}  // namespace mflab
