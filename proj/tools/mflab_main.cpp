#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "mflab/bounds.hpp"
#include "mflab/errors.hpp"
#include "mflab/experiment.hpp"
#include "mflab/idx.hpp"
#include "mflab/kernels.hpp"
#include "mflab/mechanisms.hpp"
#include "mflab/problems.hpp"

namespace {

using namespace mflab;

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw param_error("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

int cmd_factorize(const std::string& config_path, const std::string& cache_dir) {
    const ExperimentConfig cfg = parse_experiment_config(slurp(config_path));
    std::cout << "# " << echo_config(cfg) << "\n";
    std::cout << "mechanism,tau,sensitivity,objective,frobenius_sq,prior_proxy,cache_hit,"
                 "fallback\n";
    for (const std::string& label : cfg.mechanisms) {
        const std::vector<index_t> taus =
            label == "mf-plus" ? cfg.taus : std::vector<index_t>{0};
        for (index_t tau : taus) {
            const ResolvedMechanism r =
                resolve_mechanism(label, cfg.t, tau, cache_dir, cfg.solver);
            std::cout << label << ',' << tau << ',' << fmt(r.fac.sensitivity) << ','
                      << fmt(r.objective) << ',' << fmt(r.plain_frobenius) << ','
                      << fmt(prior_proxy(r.fac)) << ',' << (r.cache_hit ? 1 : 0) << ','
                      << (r.fallback ? 1 : 0) << "\n";
        }
    }
    return 0;
}

int cmd_run(const std::string& config_path, const std::string& cache_dir,
            const std::string& out_dir, int workers) {
    const ExperimentConfig cfg = parse_experiment_config(slurp(config_path));
    const std::vector<SweepRow> rows = run_sweep(cfg, cache_dir, out_dir, workers);
    std::cout << "wrote " << (std::filesystem::path(out_dir) / "summary.csv").string()
              << " (" << rows.size() << " rows)\n";
    return 0;
}

int cmd_bounds(const std::string& config_path, const std::string& cache_dir,
               const std::string& out_dir) {
    const ExperimentConfig cfg = parse_experiment_config(slurp(config_path));
    const std::unique_ptr<Problem> problem = build_problem(cfg.problem);
    const double l = problem->smoothness();

    std::filesystem::create_directories(out_dir);
    const std::filesystem::path path = std::filesystem::path(out_dir) / "bounds.csv";
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw error("cannot open " + path.string() + " for writing");
    out << "# " << echo_config(cfg) << "\n";
    out << "mechanism,gamma,tau,sigma,noise_term_nonconvex,noise_term_convex,prior_proxy,"
           "ratio_vs_pgd\n";

    const Factorization pgd = pgd_factorization(cfg.t);
    for (const std::string& label : cfg.mechanisms) {
        const std::vector<index_t> fac_taus =
            label == "mf-plus" ? cfg.taus : std::vector<index_t>{0};
        for (index_t fac_tau : fac_taus) {
            const ResolvedMechanism r =
                resolve_mechanism(label, cfg.t, fac_tau, cache_dir, cfg.solver);
            const double sigma =
                cfg.zeta >= 0.0 ? cfg.zeta * r.fac.sensitivity : cfg.sigma;
            const double sigma_pgd =
                cfg.zeta >= 0.0 ? cfg.zeta * pgd.sensitivity : cfg.sigma;
            for (double gamma : cfg.gammas) {
                const index_t tau = cfg.tau_rule == "convex-logfactor"
                                        ? tau_convex_logfactor(gamma, l, cfg.t)
                                        : tau_nonconvex(gamma, l, cfg.t);
                const BoundReport report = bound_report(r.fac, tau, sigma, l);
                const double pgd_nc = theorem1_noise_term(pgd.b, tau, sigma_pgd, cfg.t);
                const double ratio = pgd_nc > 0.0 ? report.noise_term_nonconvex / pgd_nc
                                     : report.noise_term_nonconvex == 0.0
                                         ? 1.0
                                         : std::numeric_limits<double>::infinity();
                const std::string name =
                    label == "mf-plus" ? label + "@" + std::to_string(fac_tau) : label;
                out << name << ',' << fmt(gamma) << ',' << tau << ',' << fmt(sigma) << ','
                    << fmt(report.noise_term_nonconvex) << ','
                    << fmt(report.noise_term_convex) << ',' << fmt(report.prior_proxy)
                    << ',' << fmt(ratio) << "\n";
            }
        }
    }
    if (!out) throw error("short write to " + path.string());
    std::cout << "wrote " << path.string() << "\n";
    return 0;
}

int cmd_oscillation(const std::string& input, int expected) {
    const std::vector<double> series = read_trajectory_grad_norms(input);
    const std::optional<index_t> period = estimate_period(series);
    if (period)
        std::cout << "period " << *period << "\n";
    else
        std::cout << "period none\n";
    if (expected > 0) {
        if (!period) return 2;
        if (std::llabs(static_cast<long long>(*period) - expected) > 1) return 2;
    }
    return 0;
}

int cmd_gen_data(const std::string& config_path, const std::string& out_dir) {
    const ExperimentConfig cfg = parse_experiment_config(slurp(config_path));
    if (cfg.problem.type != "logistic" || !cfg.problem.synthetic)
        throw param_error("gen-data needs a logistic problem with a 'synthetic' block");
    const Dataset ds = make_blob_dataset(cfg.problem.n, cfg.problem.d, cfg.problem.classes,
                                         cfg.problem.separation, cfg.problem.seed);
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path images = std::filesystem::path(out_dir) / "images.idx";
    const std::filesystem::path labels = std::filesystem::path(out_dir) / "labels.idx";
    write_idx_images(images, ds.features, 1, ds.dim());
    write_idx_labels(labels, ds.labels);
    std::cout << "wrote " << images.string() << " and " << labels.string() << " ("
              << ds.size() << " examples, " << ds.dim() << " features, "
              << ds.num_classes << " classes)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"matrix-factorization noise mechanisms for private gradient descent"};
    app.require_subcommand(1);

    std::string config_path;
    std::string cache_dir = "cache";
    std::string out_dir = "out";
    int workers = 1;
    std::string osc_input;
    int osc_expected = 0;

    CLI::App* factorize = app.add_subcommand("factorize", "solve and cache factorizations");
    factorize->add_option("--config", config_path, "experiment config (JSON)")->required();
    factorize->add_option("--cache", cache_dir, "factorization cache directory");

    CLI::App* run = app.add_subcommand("run", "run a mechanism/gamma/tau sweep");
    run->add_option("--config", config_path, "experiment config (JSON)")->required();
    run->add_option("--cache", cache_dir, "factorization cache directory");
    run->add_option("--out", out_dir, "output directory");
    run->add_option("--workers", workers, "sweep worker count")
        ->check(CLI::PositiveNumber);

    CLI::App* bounds = app.add_subcommand("bounds", "evaluate convergence-bound noise terms");
    bounds->add_option("--config", config_path, "experiment config (JSON)")->required();
    bounds->add_option("--cache", cache_dir, "factorization cache directory");
    bounds->add_option("--out", out_dir, "output directory");

    CLI::App* oscillation =
        app.add_subcommand("oscillation", "estimate the dominant period of a trajectory");
    oscillation->add_option("--input", osc_input, "trajectory CSV")->required();
    oscillation->add_option("--expected", osc_expected,
                            "expected period; exit 2 unless the estimate is within 1");

    CLI::App* gen_data = app.add_subcommand("gen-data", "emit a synthetic IDX dataset");
    gen_data->add_option("--config", config_path, "experiment config (JSON)")->required();
    gen_data->add_option("--out", out_dir, "output directory");

    try {
        app.parse(argc, argv);
        if (factorize->parsed()) return cmd_factorize(config_path, cache_dir);
        if (run->parsed()) return cmd_run(config_path, cache_dir, out_dir, workers);
        if (bounds->parsed()) return cmd_bounds(config_path, cache_dir, out_dir);
        if (oscillation->parsed()) return cmd_oscillation(osc_input, osc_expected);
        if (gen_data->parsed()) return cmd_gen_data(config_path, out_dir);
        return 1;
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    } catch (const mflab::param_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const mflab::format_error& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 1;
    } catch (const mflab::error& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << "\n";
        return 2;
    }
}
