#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mflab/mechanisms.hpp"
#include "mflab/optimizer.hpp"
#include "mflab/problems.hpp"
#include "mflab/solver.hpp"

namespace mflab {

// Configuration surface shared by the CLI subcommands. One JSON document
// drives factorization, runs, and bound evaluation; every output embeds a
// canonical echo of the parsed values so results are reproducible from the
// file alone.

struct SolverSettings {
    index_t max_iters = -1;
    double tol = 1e-9;
    double step_init = 1.0;
    // "auto" warm-starts prefix-sum solves from the square-root factorization
    // (and tiled block solutions inside solve_mf_plus); "identity" forces the
    // plain start everywhere.
    bool auto_warm_start = true;
};

struct ProblemConfig {
    std::string type;  // "quadratic" | "isotropic" | "logistic"
    index_t d = 0;
    double l = 10.0;
    std::uint64_t seed = 0;
    // logistic from IDX files ...
    std::string images;
    std::string labels;
    // ... or synthetic blobs generated in memory
    bool synthetic = false;
    index_t n = 0;
    int classes = 2;
    double separation = 2.0;
};

struct ExperimentConfig {
    std::uint64_t seed = 0;
    index_t t = 0;
    index_t trials = 1;
    // Exactly one of zeta/sigma is set (>= 0). sigma is the effective noise
    // level: each mechanism runs at zeta = sigma / sensitivity.
    double zeta = -1.0;
    double sigma = -1.0;
    std::vector<double> gammas;
    std::vector<index_t> taus;  // mf-plus period grid
    std::vector<std::string> mechanisms;
    ProblemConfig problem;
    double clip_alpha = std::numeric_limits<double>::infinity();
    index_t batch_size = 0;  // 0 = full-batch gradients
    double x0_radius = -1.0;
    bool write_trajectories = false;
    SolverSettings solver;
    std::string tau_rule = "nonconvex-inverse";  // bounds subcommand
};

// Parses and validates the JSON text; any malformed or missing field throws
// param_error with the offending key named.
ExperimentConfig parse_experiment_config(const std::string& json_text);

// Canonical single-line JSON echo of the parsed config.
std::string echo_config(const ExperimentConfig& cfg);

std::unique_ptr<Problem> build_problem(const ProblemConfig& pc);

// A factorization ready to run, with, for solver-produced ones, the solve
// diagnostics and whether the on-disk cache supplied it.
struct ResolvedMechanism {
    Factorization fac;
    bool cache_hit = false;
    bool solver_backed = false;  // mf / mf-plus
    double objective = 0.0;      // solver objective when solver_backed
    double plain_frobenius = 0.0;
    bool fallback = false;
};

// Builds or loads the factorization for a mechanism label. Fixed
// constructions (pgd, anti-pgd, chess, tree) are rebuilt on the spot;
// mf/mf-plus consult `cache_dir` under the key {workload-hash}-{tau}-{T}
// first and solve + store on miss. tau is ignored except for mf-plus.
ResolvedMechanism resolve_mechanism(const std::string& label, index_t t, index_t tau,
                                    const std::filesystem::path& cache_dir,
                                    const SolverSettings& solver);

// One summary row of a sweep.
struct SweepRow {
    std::string mechanism;
    double gamma = 0.0;
    index_t tau = 0;  // 0 for mechanisms without a period
    std::uint64_t seed = 0;
    double avg_grad_norm_sq = 0.0;
    double last_grad_norm_sq = 0.0;
    double final_loss = 0.0;
    bool diverged = false;
};

// Runs the full (mechanism x gamma x tau x trial) grid. Cell seeds are
// derive_seed(base, {gamma_index, tau_index, trial}), shared across
// mechanisms so they face common random numbers. Returns rows in canonical
// grid order and writes summary.csv (plus per-cell trajectory files when
// configured) into out_dir.
std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg,
                                const std::filesystem::path& cache_dir,
                                const std::filesystem::path& out_dir, int workers);

void write_summary_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows,
                       const std::string& config_echo);

// Dominant oscillation period of a series: drop the first 20% as burn-in,
// remove the mean, and take the highest autocorrelation peak over lags
// [2, len/4]. Flat, trending, or too-short series give nullopt.
std::optional<index_t> estimate_period(const std::vector<double>& series);

// grad_norm_sq column of a trajectory CSV written by write_trajectory_csv.
std::vector<double> read_trajectory_grad_norms(const std::filesystem::path& csv_path);

}  // namespace mflab
