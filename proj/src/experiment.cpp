#include "mflab/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "mflab/errors.hpp"
#include "mflab/idx.hpp"
#include "mflab/kernels.hpp"
#include "mflab/rng.hpp"

namespace mflab {

namespace {

using nlohmann::json;

const json& require_field(const json& j, const char* key) {
    if (!j.contains(key)) throw param_error(std::string("config: missing field '") + key + "'");
    return j.at(key);
}

double positive_number(const json& j, const char* key) {
    const double v = require_field(j, key).get<double>();
    if (!(v > 0.0) || !std::isfinite(v))
        throw param_error(std::string("config: '") + key + "' must be positive and finite");
    return v;
}

const std::vector<std::string> kKnownMechanisms = {"pgd",  "anti-pgd", "chess",
                                                   "tree", "mf",       "mf-plus"};

ProblemConfig parse_problem(const json& j) {
    ProblemConfig pc;
    pc.type = require_field(j, "type").get<std::string>();
    if (pc.type == "quadratic" || pc.type == "isotropic") {
        pc.d = require_field(j, "d").get<index_t>();
        pc.l = positive_number(j, "l");
        if (pc.d < 1) throw param_error("config: problem.d must be >= 1");
        if (pc.type == "quadratic") {
            pc.seed = j.value("seed", std::uint64_t{0});
            if (pc.d < 2) throw param_error("config: quadratic problem needs d >= 2");
        }
    } else if (pc.type == "logistic") {
        if (j.contains("synthetic")) {
            const json& s = j.at("synthetic");
            pc.synthetic = true;
            pc.n = require_field(s, "n").get<index_t>();
            pc.d = require_field(s, "d").get<index_t>();
            pc.classes = s.value("classes", 2);
            pc.separation = s.value("separation", 2.0);
            pc.seed = s.value("seed", std::uint64_t{0});
            if (pc.n < 1 || pc.d < 1 || pc.classes < 2)
                throw param_error("config: synthetic dataset needs n, d >= 1 and classes >= 2");
        } else {
            pc.images = require_field(j, "images").get<std::string>();
            pc.labels = require_field(j, "labels").get<std::string>();
        }
    } else {
        throw param_error("config: unknown problem type '" + pc.type + "'");
    }
    return pc;
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw param_error(std::string("config: invalid JSON: ") + e.what());
    }
    try {
        ExperimentConfig cfg;
        cfg.seed = j.value("seed", std::uint64_t{0});
        cfg.t = require_field(j, "t").get<index_t>();
        if (cfg.t < 1) throw param_error("config: 't' must be >= 1");
        cfg.trials = j.value("trials", index_t{1});
        if (cfg.trials < 1) throw param_error("config: 'trials' must be >= 1");

        const bool has_zeta = j.contains("zeta");
        const bool has_sigma = j.contains("sigma");
        if (has_zeta == has_sigma)
            throw param_error("config: exactly one of 'zeta' and 'sigma' is required");
        if (has_zeta) {
            cfg.zeta = j.at("zeta").get<double>();
            if (!(cfg.zeta >= 0.0)) throw param_error("config: 'zeta' must be >= 0");
        } else {
            cfg.sigma = j.at("sigma").get<double>();
            if (!(cfg.sigma >= 0.0)) throw param_error("config: 'sigma' must be >= 0");
        }

        for (const json& g : require_field(j, "gammas")) {
            const double v = g.get<double>();
            if (!(v > 0.0) || !std::isfinite(v))
                throw param_error("config: every gamma must be positive and finite");
            cfg.gammas.push_back(v);
        }
        if (cfg.gammas.empty()) throw param_error("config: 'gammas' must be non-empty");

        if (j.contains("taus"))
            for (const json& t : j.at("taus")) {
                const index_t v = t.get<index_t>();
                if (v < 1 || v > cfg.t)
                    throw param_error("config: every tau must lie in [1, t]");
                cfg.taus.push_back(v);
            }

        for (const json& m : require_field(j, "mechanisms")) {
            const std::string label = m.get<std::string>();
            if (std::find(kKnownMechanisms.begin(), kKnownMechanisms.end(), label) ==
                kKnownMechanisms.end())
                throw param_error("config: unknown mechanism '" + label + "'");
            cfg.mechanisms.push_back(label);
        }
        if (cfg.mechanisms.empty()) throw param_error("config: 'mechanisms' must be non-empty");
        const bool wants_plus =
            std::find(cfg.mechanisms.begin(), cfg.mechanisms.end(), "mf-plus") !=
            cfg.mechanisms.end();
        if (wants_plus && cfg.taus.empty())
            throw param_error("config: 'taus' must be non-empty when mf-plus is requested");

        cfg.problem = parse_problem(require_field(j, "problem"));

        if (j.contains("clip_alpha")) {
            cfg.clip_alpha = j.at("clip_alpha").get<double>();
            if (!(cfg.clip_alpha > 0.0))
                throw param_error("config: 'clip_alpha' must be positive");
        }
        cfg.batch_size = j.value("batch_size", index_t{0});
        if (cfg.batch_size < 0) throw param_error("config: 'batch_size' must be >= 0");
        if (j.contains("x0_radius")) {
            cfg.x0_radius = j.at("x0_radius").get<double>();
            if (!(cfg.x0_radius >= 0.0))
                throw param_error("config: 'x0_radius' must be >= 0");
        }
        cfg.write_trajectories = j.value("write_trajectories", false);

        if (j.contains("solver")) {
            const json& s = j.at("solver");
            cfg.solver.max_iters = s.value("max_iters", index_t{-1});
            if (cfg.solver.max_iters != -1 && cfg.solver.max_iters < 1)
                throw param_error("config: solver.max_iters must be >= 1 (or -1 for auto)");
            if (s.contains("tol")) cfg.solver.tol = positive_number(s, "tol");
            if (s.contains("step_init")) cfg.solver.step_init = positive_number(s, "step_init");
            const std::string warm = s.value("warm_start", std::string("auto"));
            if (warm == "auto")
                cfg.solver.auto_warm_start = true;
            else if (warm == "identity")
                cfg.solver.auto_warm_start = false;
            else
                throw param_error("config: solver.warm_start must be 'auto' or 'identity'");
        }

        cfg.tau_rule = j.value("tau_rule", std::string("nonconvex-inverse"));
        if (cfg.tau_rule != "nonconvex-inverse" && cfg.tau_rule != "convex-logfactor")
            throw param_error("config: tau_rule must be 'nonconvex-inverse' or "
                              "'convex-logfactor'");
        return cfg;
    } catch (const json::exception& e) {
        throw param_error(std::string("config: ") + e.what());
    }
}

std::string echo_config(const ExperimentConfig& cfg) {
    json j;
    j["seed"] = cfg.seed;
    j["t"] = cfg.t;
    j["trials"] = cfg.trials;
    if (cfg.zeta >= 0.0)
        j["zeta"] = cfg.zeta;
    else
        j["sigma"] = cfg.sigma;
    j["gammas"] = cfg.gammas;
    j["taus"] = cfg.taus;
    j["mechanisms"] = cfg.mechanisms;
    json p;
    p["type"] = cfg.problem.type;
    if (cfg.problem.type == "logistic") {
        if (cfg.problem.synthetic) {
            p["synthetic"] = {{"n", cfg.problem.n},
                              {"d", cfg.problem.d},
                              {"classes", cfg.problem.classes},
                              {"separation", cfg.problem.separation},
                              {"seed", cfg.problem.seed}};
        } else {
            p["images"] = cfg.problem.images;
            p["labels"] = cfg.problem.labels;
        }
    } else {
        p["d"] = cfg.problem.d;
        p["l"] = cfg.problem.l;
        if (cfg.problem.type == "quadratic") p["seed"] = cfg.problem.seed;
    }
    j["problem"] = p;
    if (std::isfinite(cfg.clip_alpha)) j["clip_alpha"] = cfg.clip_alpha;
    j["batch_size"] = cfg.batch_size;
    if (cfg.x0_radius >= 0.0) j["x0_radius"] = cfg.x0_radius;
    j["write_trajectories"] = cfg.write_trajectories;
    j["solver"] = {{"max_iters", cfg.solver.max_iters},
                   {"tol", cfg.solver.tol},
                   {"step_init", cfg.solver.step_init},
                   {"warm_start", cfg.solver.auto_warm_start ? "auto" : "identity"}};
    j["tau_rule"] = cfg.tau_rule;
    return j.dump();
}

std::unique_ptr<Problem> build_problem(const ProblemConfig& pc) {
    if (pc.type == "quadratic")
        return std::make_unique<LeastSquares>(build_random_quadratic(pc.d, pc.l, pc.seed));
    if (pc.type == "isotropic") return std::make_unique<IsotropicQuadratic>(pc.d, pc.l);
    if (pc.type == "logistic") {
        Dataset ds = pc.synthetic
                         ? make_blob_dataset(pc.n, pc.d, pc.classes, pc.separation, pc.seed)
                         : load_idx(pc.images, pc.labels);
        return std::make_unique<LogisticRegression>(std::move(ds));
    }
    throw param_error("build_problem: unknown type '" + pc.type + "'");
}

namespace {

std::string workload_hash(const Matrix& a) {
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a over shape and payload
    const auto mix_bytes = [&h](const void* p, std::size_t n) {
        const unsigned char* bytes = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= bytes[i];
            h *= 1099511628211ull;
        }
    };
    mix_bytes(&a.rows, sizeof a.rows);
    mix_bytes(&a.cols, sizeof a.cols);
    mix_bytes(a.data.data(), a.data.size() * sizeof(double));
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

SolverConfig to_solver_config(const SolverSettings& s, index_t t, bool is_plain_mf) {
    SolverConfig cfg;
    cfg.max_iters = s.max_iters;
    cfg.tol = s.tol;
    cfg.step_init = s.step_init;
    if (is_plain_mf && s.auto_warm_start)
        cfg.warm_start = sqrt_prefix_warm_start(t);
    else if (!s.auto_warm_start)
        cfg.warm_start = identity(t);  // explicit identity also disables tiling
    return cfg;
}

}  // namespace

ResolvedMechanism resolve_mechanism(const std::string& label, index_t t, index_t tau,
                                    const std::filesystem::path& cache_dir,
                                    const SolverSettings& solver) {
    ResolvedMechanism out;
    if (label == "pgd") {
        out.fac = pgd_factorization(t);
    } else if (label == "anti-pgd") {
        out.fac = anti_pgd_factorization(t);
    } else if (label == "chess") {
        out.fac = chess_factorization(t);
    } else if (label == "tree") {
        int k = 1;
        while ((index_t{1} << (k - 1)) < t) ++k;
        if ((index_t{1} << (k - 1)) != t)
            throw param_error("tree mechanism needs T a power of two, got " +
                              std::to_string(t));
        out.fac = tree_factorization(k);
    } else if (label == "mf" || label == "mf-plus") {
        const bool plus = label == "mf-plus";
        const index_t key_tau = plus ? tau : 0;
        if (plus && (tau < 1 || tau > t))
            throw param_error("mf-plus needs tau in [1, " + std::to_string(t) + "]");
        const Matrix s = build_prefix_sum(t);
        const std::filesystem::path dir =
            cache_dir / (workload_hash(s) + "-" + std::to_string(key_tau) + "-" +
                         std::to_string(t));
        out.solver_backed = true;
        if (std::filesystem::exists(dir / "meta.txt")) {
            try {
                out.fac = load_factorization(dir);
                if (out.fac.label == label && out.fac.t() == t) {
                    out.cache_hit = true;
                    out.plain_frobenius = frobenius_norm_sq(out.fac.b);
                    out.objective =
                        plus ? weighted_objective(build_lambda(t, tau), out.fac.b)
                             : out.plain_frobenius;
                    return out;
                }
            } catch (const error&) {
                // stale or damaged entry: fall through and re-solve
            }
        }
        const SolveResult solved =
            plus ? solve_mf_plus(s, tau, to_solver_config(solver, t, false))
                 : solve_opt_f(s, to_solver_config(solver, t, true));
        out.fac = solved.fac;
        out.objective = solved.objective;
        out.plain_frobenius = solved.plain_frobenius;
        out.fallback = solved.fallback;
        std::filesystem::create_directories(dir);
        save_factorization(dir, out.fac);
        return out;
    } else {
        throw param_error("unknown mechanism '" + label + "'");
    }
    out.plain_frobenius = frobenius_norm_sq(out.fac.b);
    out.objective = out.plain_frobenius;
    return out;
}

namespace {

struct Cell {
    std::size_t mech = 0;
    std::size_t resolved = 0;  // index into the resolved factorization list
    std::size_t gamma = 0;
    std::size_t tau = 0;  // position in the tau grid; 0 for mechanisms without tau
    index_t trial = 0;
};

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg,
                                const std::filesystem::path& cache_dir,
                                const std::filesystem::path& out_dir, int workers) {
    std::filesystem::create_directories(out_dir);
    const std::unique_ptr<Problem> problem = build_problem(cfg.problem);
    if (cfg.batch_size > 0 && problem->num_examples() == 0)
        throw param_error("config: batch_size > 0 needs a problem with per-example "
                          "gradients");

    // Resolve every factorization up front so solver time is paid once,
    // outside the cell loop.
    std::vector<ResolvedMechanism> resolved;
    std::vector<std::pair<std::size_t, std::size_t>> mech_slots;  // (resolved idx, tau idx)
    std::vector<std::size_t> mech_slot_begin(cfg.mechanisms.size() + 1, 0);
    for (std::size_t mi = 0; mi < cfg.mechanisms.size(); ++mi) {
        mech_slot_begin[mi] = mech_slots.size();
        const std::string& label = cfg.mechanisms[mi];
        if (label == "mf-plus") {
            for (std::size_t ti = 0; ti < cfg.taus.size(); ++ti) {
                resolved.push_back(
                    resolve_mechanism(label, cfg.t, cfg.taus[ti], cache_dir, cfg.solver));
                mech_slots.emplace_back(resolved.size() - 1, ti);
            }
        } else {
            resolved.push_back(resolve_mechanism(label, cfg.t, 0, cache_dir, cfg.solver));
            mech_slots.emplace_back(resolved.size() - 1, 0);
        }
    }
    mech_slot_begin[cfg.mechanisms.size()] = mech_slots.size();

    std::vector<Cell> cells;
    for (std::size_t mi = 0; mi < cfg.mechanisms.size(); ++mi)
        for (std::size_t slot = mech_slot_begin[mi]; slot < mech_slot_begin[mi + 1]; ++slot)
            for (std::size_t gi = 0; gi < cfg.gammas.size(); ++gi)
                for (index_t trial = 0; trial < cfg.trials; ++trial)
                    cells.push_back(Cell{mi, mech_slots[slot].first, gi,
                                         mech_slots[slot].second, trial});

    std::vector<SweepRow> rows(cells.size());
    std::vector<std::string> failures(cells.size());
    const std::string echo = echo_config(cfg);

#pragma omp parallel for schedule(dynamic) if (workers > 1) num_threads(workers)
    for (std::ptrdiff_t idx = 0; idx < static_cast<std::ptrdiff_t>(cells.size()); ++idx) {
        const Cell& cell = cells[static_cast<std::size_t>(idx)];
        try {
            const ResolvedMechanism& mech = resolved[cell.resolved];
            const std::string& label = cfg.mechanisms[cell.mech];
            RunConfig rc;
            rc.steps = cfg.t;
            rc.gamma = cfg.gammas[cell.gamma];
            rc.zeta = cfg.zeta >= 0.0 ? cfg.zeta : cfg.sigma / mech.fac.sensitivity;
            rc.clip_alpha = cfg.clip_alpha;
            rc.seed = derive_seed(cfg.seed, {static_cast<std::uint64_t>(cell.gamma),
                                             static_cast<std::uint64_t>(cell.tau),
                                             static_cast<std::uint64_t>(cell.trial)});
            rc.x0_radius = cfg.x0_radius;
            const Trajectory traj =
                cfg.batch_size > 0
                    ? run_clipped_stochastic(*problem, mech.fac, rc, cfg.batch_size)
                    : run(*problem, mech.fac, rc);

            SweepRow row;
            row.mechanism = label;
            row.gamma = rc.gamma;
            row.tau = label == "mf-plus" ? cfg.taus[cell.tau] : 0;
            row.seed = rc.seed;
            row.avg_grad_norm_sq = traj.avg_grad_norm_sq();
            row.last_grad_norm_sq = traj.last_grad_norm_sq();
            row.final_loss = traj.final_loss();
            row.diverged = traj.diverged;
            rows[static_cast<std::size_t>(idx)] = row;

            if (cfg.write_trajectories) {
                std::ostringstream name;
                name << "traj-" << label << "-g" << cell.gamma << "-t" << row.tau << "-s"
                     << cell.trial << ".csv";
                write_trajectory_csv(out_dir / name.str(), traj,
                                     echo + " cell=" + name.str());
            }
        } catch (const std::exception& e) {
            failures[static_cast<std::size_t>(idx)] = e.what();
        }
    }

    for (const std::string& f : failures)
        if (!f.empty()) throw error("sweep cell failed: " + f);

    write_summary_csv(out_dir / "summary.csv", rows, echo);
    return rows;
}

void write_summary_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows,
                       const std::string& config_echo) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw error("cannot open " + path.string() + " for writing");
    if (!config_echo.empty()) out << "# " << config_echo << "\n";
    out << "mechanism,gamma,tau,seed,avg_grad_norm_sq,last_grad_norm_sq,final_loss,"
           "diverged\n";
    for (const SweepRow& r : rows) {
        out << r.mechanism << ',' << format_double(r.gamma) << ',' << r.tau << ',' << r.seed
            << ',' << format_double(r.avg_grad_norm_sq) << ','
            << format_double(r.last_grad_norm_sq) << ',' << format_double(r.final_loss)
            << ',' << (r.diverged ? 1 : 0) << '\n';
    }
    if (!out) throw error("short write to " + path.string());
}

std::optional<index_t> estimate_period(const std::vector<double>& series) {
    if (series.size() < 16) return std::nullopt;
    const std::size_t burn = series.size() / 5;
    const std::size_t n = series.size() - burn;
    const double* y = series.data() + burn;

    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += y[i];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (y[i] - mean) * (y[i] - mean);
    if (!(var > 0.0) || !std::isfinite(var)) return std::nullopt;

    const std::size_t max_lag = n / 4;
    if (max_lag < 2) return std::nullopt;
    std::vector<double> rho(max_lag + 1, 0.0);
    for (std::size_t lag = 2; lag <= max_lag; ++lag) {
        double acc = 0.0;
        for (std::size_t i = 0; i + lag < n; ++i) acc += (y[i] - mean) * (y[i + lag] - mean);
        rho[lag] = acc / var;
    }

    // A period shows up as a peak of the autocorrelation, never as a shoulder
    // of the lag-zero decline, so only interior local maxima are candidates.
    double best_rho = 0.0;
    std::size_t best_lag = 0;
    for (std::size_t lag = 3; lag < max_lag; ++lag) {
        if (rho[lag] < rho[lag - 1] || rho[lag] < rho[lag + 1]) continue;
        if (rho[lag] > best_rho + 1e-12) {
            best_rho = rho[lag];
            best_lag = lag;
        }
    }
    if (best_lag == 0 || best_rho < 0.05) return std::nullopt;
    return static_cast<index_t>(best_lag);
}

std::vector<double> read_trajectory_grad_norms(const std::filesystem::path& csv_path) {
    std::ifstream in(csv_path);
    if (!in) throw format_error("cannot open " + csv_path.string(), 0);
    std::vector<double> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (line.rfind("iter,", 0) == 0) continue;
        const std::size_t first = line.find(',');
        if (first == std::string::npos)
            throw format_error(csv_path.filename().string() + ": malformed row '" + line +
                                   "'",
                               0);
        const std::size_t second = line.find(',', first + 1);
        const std::string field =
            second == std::string::npos ? line.substr(first + 1)
                                        : line.substr(first + 1, second - first - 1);
        try {
            out.push_back(std::stod(field));
        } catch (const std::exception&) {
            throw format_error(csv_path.filename().string() + ": bad number '" + field + "'",
                               0);
        }
    }
    return out;
}

}  // namespace mflab
