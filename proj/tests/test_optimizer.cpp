#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "mflab/errors.hpp"
#include "mflab/experiment.hpp"
#include "mflab/kernels.hpp"
#include "mflab/matrix.hpp"
#include "mflab/mechanisms.hpp"
#include "mflab/noise.hpp"
#include "mflab/optimizer.hpp"
#include "mflab/problems.hpp"
#include "mflab/rng.hpp"
#include "mflab/solver.hpp"

using namespace mflab;

namespace {

RunConfig basic_config(index_t steps, double gamma, double zeta, std::uint64_t seed) {
    RunConfig cfg;
    cfg.steps = steps;
    cfg.gamma = gamma;
    cfg.zeta = zeta;
    cfg.seed = seed;
    return cfg;
}

double vec_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

Factorization ad_hoc_lower(index_t t, double sens, std::uint64_t seed) {
    Factorization f;
    f.label = "adhoc";
    f.workload = build_prefix_sum(t);
    f.b = Matrix(t, t);
    GaussianStream g(seed);
    for (index_t i = 0; i < t; ++i)
        for (index_t j = 0; j <= i; ++j) f.b(i, j) = g.next();
    f.c = identity(t);
    f.sensitivity = sens;
    return f;
}

}  // namespace

TEST_CASE("run rejects bad configs") {
    IsotropicQuadratic p(3, 2.0);
    Factorization f = pgd_factorization(8);

    RunConfig cfg = basic_config(8, 0.1, 0.0, 1);
    cfg.steps = 0;
    CHECK_THROWS_AS(run(p, f, cfg), param_error);

    cfg = basic_config(8, 0.0, 0.0, 1);
    CHECK_THROWS_AS(run(p, f, cfg), param_error);
    cfg.gamma = -0.5;
    CHECK_THROWS_AS(run(p, f, cfg), param_error);
    cfg.gamma = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(run(p, f, cfg), param_error);

    cfg = basic_config(8, 0.1, -1.0, 1);
    CHECK_THROWS_AS(run(p, f, cfg), param_error);

    cfg = basic_config(7, 0.1, 0.0, 1);
    CHECK_THROWS_AS(run(p, f, cfg), param_error);
}

TEST_CASE("noiseless isotropic run halves the iterate each step") {
    const index_t t = 12;
    IsotropicQuadratic p(6, 4.0);
    Factorization f = pgd_factorization(t);
    RunConfig cfg = basic_config(t, 0.125, 0.0, 42);
    cfg.record_iterates = true;

    Trajectory traj = run(p, f, cfg);
    REQUIRE(traj.grad_norm_sq.size() == static_cast<std::size_t>(t) + 1);
    REQUIRE(traj.iterates.size() == static_cast<std::size_t>(t) + 1);
    CHECK(!traj.diverged);
    CHECK(traj.optimum == 0.0);

    for (index_t s = 0; s <= t; ++s) {
        const double shrink = std::ldexp(1.0, -2 * static_cast<int>(s));
        CHECK(traj.grad_norm_sq[static_cast<std::size_t>(s)] ==
              shrink * traj.grad_norm_sq[0]);
        CHECK(traj.loss[static_cast<std::size_t>(s)] == shrink * traj.loss[0]);
    }
    const double last = std::ldexp(1.0, -static_cast<int>(t));
    for (std::size_t j = 0; j < traj.x_final.size(); ++j)
        CHECK(traj.x_final[j] == last * traj.iterates[0][j]);
}

TEST_CASE("zero noise makes the factorization irrelevant") {
    LeastSquares p = build_random_quadratic(5, 10.0, 901);
    RunConfig cfg = basic_config(8, 0.02, 0.0, 7);

    Trajectory a = run(p, pgd_factorization(8), cfg);
    Trajectory b = run(p, anti_pgd_factorization(8), cfg);
    Trajectory c = run(p, chess_factorization(8), cfg);

    REQUIRE(a.grad_norm_sq.size() == b.grad_norm_sq.size());
    REQUIRE(a.grad_norm_sq.size() == c.grad_norm_sq.size());
    for (std::size_t i = 0; i < a.grad_norm_sq.size(); ++i) {
        CHECK(a.grad_norm_sq[i] == b.grad_norm_sq[i]);
        CHECK(a.grad_norm_sq[i] == c.grad_norm_sq[i]);
        CHECK(a.loss[i] == b.loss[i]);
        CHECK(a.loss[i] == c.loss[i]);
    }
    for (std::size_t j = 0; j < a.x_final.size(); ++j) {
        CHECK(a.x_final[j] == b.x_final[j]);
        CHECK(a.x_final[j] == c.x_final[j]);
    }
}

TEST_CASE("independent noise enters one fresh row per step") {
    const index_t t = 10;
    const index_t d = 4;
    IsotropicQuadratic p(d, 3.0);
    Factorization f = pgd_factorization(t);
    RunConfig cfg = basic_config(t, 0.05, 0.7, 555);
    cfg.x0_radius = 0.0;
    cfg.record_iterates = true;

    Trajectory traj = run(p, f, cfg);
    REQUIRE(!traj.diverged);

    NoiseSpec spec{f.m(), d, cfg.zeta, derive_seed(cfg.seed, {1})};
    Matrix z = sample_noise_matrix(spec);
    std::vector<double> x(static_cast<std::size_t>(d), 0.0);
    for (index_t s = 0; s < t; ++s) {
        std::vector<double> g = p.gradient(x);
        for (index_t j = 0; j < d; ++j)
            x[static_cast<std::size_t>(j)] -=
                cfg.gamma * (g[static_cast<std::size_t>(j)] + f.sensitivity * z(s, j));
        for (index_t j = 0; j < d; ++j)
            CHECK(traj.iterates[static_cast<std::size_t>(s) + 1][static_cast<std::size_t>(j)] ==
                  x[static_cast<std::size_t>(j)]);
    }
}

TEST_CASE("identical configs reproduce the trajectory bit for bit") {
    LeastSquares p = build_random_quadratic(6, 10.0, 333);
    Factorization f = chess_factorization(16);
    RunConfig cfg = basic_config(16, 0.03, 0.3, 2024);

    Trajectory a = run(p, f, cfg);
    Trajectory b = run(p, f, cfg);
    REQUIRE(a.grad_norm_sq.size() == b.grad_norm_sq.size());
    for (std::size_t i = 0; i < a.grad_norm_sq.size(); ++i) {
        CHECK(a.grad_norm_sq[i] == b.grad_norm_sq[i]);
        CHECK(a.loss[i] == b.loss[i]);
    }
    for (std::size_t j = 0; j < a.x_final.size(); ++j) CHECK(a.x_final[j] == b.x_final[j]);

    cfg.seed = 2025;
    Trajectory c = run(p, f, cfg);
    bool any_diff = false;
    for (std::size_t j = 0; j < a.x_final.size(); ++j)
        if (a.x_final[j] != c.x_final[j]) any_diff = true;
    CHECK(any_diff);
}

TEST_CASE("starting radius shapes the initial iterate") {
    IsotropicQuadratic p(9, 1.0);
    Factorization f = pgd_factorization(2);
    RunConfig cfg = basic_config(2, 0.1, 0.0, 11);
    cfg.record_iterates = true;

    Trajectory def = run(p, f, cfg);
    CHECK(vec_norm(def.iterates[0]) == doctest::Approx(3.0).epsilon(1e-12));

    cfg.x0_radius = 0.0;
    Trajectory origin = run(p, f, cfg);
    for (double v : origin.iterates[0]) CHECK(v == 0.0);

    cfg.x0_radius = 2.5;
    Trajectory shell = run(p, f, cfg);
    CHECK(vec_norm(shell.iterates[0]) == doctest::Approx(2.5).epsilon(1e-12));

    Trajectory again = run(p, f, cfg);
    for (std::size_t j = 0; j < shell.iterates[0].size(); ++j)
        CHECK(shell.iterates[0][j] == again.iterates[0][j]);

    cfg.seed = 12;
    Trajectory other = run(p, f, cfg);
    bool any_diff = false;
    for (std::size_t j = 0; j < shell.iterates[0].size(); ++j)
        if (shell.iterates[0][j] != other.iterates[0][j]) any_diff = true;
    CHECK(any_diff);
}

TEST_CASE("divergence flips the flag instead of throwing") {
    IsotropicQuadratic p(3, 4.0);
    Factorization f = pgd_factorization(100);
    RunConfig cfg = basic_config(100, 10.0, 0.0, 5);

    Trajectory traj = run(p, f, cfg);
    CHECK(traj.diverged);
    CHECK(traj.grad_norm_sq.size() < 101);
    CHECK(traj.grad_norm_sq.size() == traj.loss.size());
    for (double v : traj.grad_norm_sq) CHECK(std::isfinite(v));
    for (double v : traj.loss) CHECK(std::isfinite(v));
    for (double v : traj.x_final) CHECK(std::isfinite(v));

    RunConfig tight = cfg;
    tight.divergence_norm = 1e3;
    Trajectory early = run(p, f, tight);
    CHECK(early.diverged);
    CHECK(early.grad_norm_sq.size() < traj.grad_norm_sq.size());
}

TEST_CASE("stepwise recursion equals the closed matrix form") {
    const index_t d = 5;
    LeastSquares p = build_random_quadratic(d, 10.0, 77);

    std::vector<Factorization> facs;
    facs.push_back(pgd_factorization(8));
    facs.push_back(anti_pgd_factorization(8));
    facs.push_back(chess_factorization(8));
    facs.push_back(tree_factorization(3));
    facs.push_back(solve_opt_f(build_prefix_sum(8)).fac);

    for (const Factorization& f : facs) {
        INFO("label ", f.label);
        const index_t t = f.t();
        RunConfig cfg = basic_config(t, 0.03, 0.4, 4242);
        cfg.record_iterates = true;
        Trajectory traj = run(p, f, cfg);
        REQUIRE(!traj.diverged);
        REQUIRE(traj.gradients.size() == static_cast<std::size_t>(t));

        Matrix grads(t, d);
        for (index_t s = 0; s < t; ++s)
            for (index_t j = 0; j < d; ++j)
                grads(s, j) = traj.gradients[static_cast<std::size_t>(s)]
                                            [static_cast<std::size_t>(j)];
        NoiseSpec spec{f.m(), d, cfg.zeta, derive_seed(cfg.seed, {1})};
        Matrix z = sample_noise_matrix(spec);
        Matrix sg = matmul(build_prefix_sum(t), grads);
        Matrix bz = matmul(f.b, z);

        for (index_t s = 1; s <= t; ++s) {
            for (index_t j = 0; j < d; ++j) {
                const double expected =
                    traj.iterates[0][static_cast<std::size_t>(j)] -
                    cfg.gamma * (sg(s - 1, j) + f.sensitivity * bz(s - 1, j));
                const double got =
                    traj.iterates[static_cast<std::size_t>(s)][static_cast<std::size_t>(j)];
                CHECK(std::abs(got - expected) <= 1e-9);
            }
        }
    }
}

TEST_CASE("full batches without clipping reproduce the plain run") {
    Dataset data = make_blob_dataset(40, 6, 3, 2.0, 88);
    LogisticRegression p(std::move(data));
    Factorization f = chess_factorization(12);
    RunConfig cfg = basic_config(12, 0.2, 0.25, 31);

    Trajectory plain = run(p, f, cfg);
    Trajectory batched = run_clipped_stochastic(p, f, cfg, 40);

    REQUIRE(plain.grad_norm_sq.size() == batched.grad_norm_sq.size());
    for (std::size_t i = 0; i < plain.grad_norm_sq.size(); ++i) {
        CHECK(plain.grad_norm_sq[i] == batched.grad_norm_sq[i]);
        CHECK(plain.loss[i] == batched.loss[i]);
    }
    for (std::size_t j = 0; j < plain.x_final.size(); ++j)
        CHECK(plain.x_final[j] == batched.x_final[j]);
}

TEST_CASE("the clip threshold caps every row entering the mean") {
    Dataset data = make_blob_dataset(10, 5, 2, 4.0, 19);
    LogisticRegression p(std::move(data));
    const index_t n = p.num_examples();
    const index_t dim = p.dim();

    std::vector<index_t> all(static_cast<std::size_t>(n));
    for (index_t i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
    std::vector<double> x0(static_cast<std::size_t>(dim), 0.0);
    Matrix raw = p.example_gradients(x0, all);
    double max_norm = 0.0;
    for (index_t r = 0; r < raw.rows; ++r) {
        double s = 0.0;
        for (index_t j = 0; j < raw.cols; ++j) s += raw(r, j) * raw(r, j);
        max_norm = std::max(max_norm, std::sqrt(s));
    }
    REQUIRE(max_norm > 0.5);

    const double alpha = 0.5;
    Matrix clipped = clip_rows(raw, alpha);
    std::vector<double> mean(static_cast<std::size_t>(dim), 0.0);
    for (index_t r = 0; r < clipped.rows; ++r)
        for (index_t j = 0; j < clipped.cols; ++j)
            mean[static_cast<std::size_t>(j)] += clipped(r, j);
    for (double& v : mean) v *= 1.0 / static_cast<double>(n);

    Factorization f = pgd_factorization(1);
    RunConfig cfg = basic_config(1, 1.0, 0.0, 3);
    cfg.clip_alpha = alpha;
    cfg.x0_radius = 0.0;
    cfg.record_iterates = true;
    Trajectory traj = run_clipped_stochastic(p, f, cfg, n);

    REQUIRE(traj.iterates.size() == 2);
    for (index_t j = 0; j < dim; ++j) {
        double expect = 0.0;
        expect -= cfg.gamma * (mean[static_cast<std::size_t>(j)] + 0.0);
        CHECK(traj.iterates[1][static_cast<std::size_t>(j)] ==
              doctest::Approx(expect).epsilon(1e-15));
    }
}

namespace {

// One-hot feature rows make batch membership visible in the step gradient:
// example i only ever touches weight columns i and d + i.
LogisticRegression one_hot_problem(index_t n) {
    Dataset data;
    data.features = Matrix(n, n);
    for (index_t i = 0; i < n; ++i) data.features(i, i) = 1.0;
    data.labels.resize(static_cast<std::size_t>(n));
    for (index_t i = 0; i < n; ++i)
        data.labels[static_cast<std::size_t>(i)] = static_cast<int>(i % 2);
    data.num_classes = 2;
    return LogisticRegression(std::move(data));
}

std::set<index_t> touched_examples(const std::vector<double>& step, index_t n) {
    std::set<index_t> out;
    for (index_t i = 0; i < n; ++i) {
        if (step[static_cast<std::size_t>(i)] != 0.0 ||
            step[static_cast<std::size_t>(n + i)] != 0.0)
            out.insert(i);
    }
    return out;
}

}  // namespace

TEST_CASE("batches partition the dataset once per epoch") {
    const index_t n = 12;
    const index_t batch = 4;
    LogisticRegression p = one_hot_problem(n);
    Factorization f = pgd_factorization(6);
    RunConfig cfg = basic_config(6, 0.1, 0.0, 64);
    cfg.record_iterates = true;

    Trajectory traj = run_clipped_stochastic(p, f, cfg, batch);
    REQUIRE(traj.gradients.size() == 6);

    std::set<index_t> epoch;
    std::vector<std::set<index_t>> sets;
    for (int s = 0; s < 3; ++s) {
        std::set<index_t> members =
            touched_examples(traj.gradients[static_cast<std::size_t>(s)], n);
        CHECK(members.size() == static_cast<std::size_t>(batch));
        for (index_t i : members) CHECK(epoch.count(i) == 0);
        epoch.insert(members.begin(), members.end());
        sets.push_back(std::move(members));
    }
    CHECK(epoch.size() == static_cast<std::size_t>(n));

    for (int s = 3; s < 6; ++s) {
        std::set<index_t> again =
            touched_examples(traj.gradients[static_cast<std::size_t>(s)], n);
        CHECK(again == sets[static_cast<std::size_t>(s - 3)]);
    }
}

TEST_CASE("batch windows walk the permutation cyclically") {
    const index_t n = 10;
    const index_t batch = 4;
    LogisticRegression p = one_hot_problem(n);
    Factorization f = pgd_factorization(5);
    RunConfig cfg = basic_config(5, 0.1, 0.0, 9);
    cfg.record_iterates = true;

    Trajectory traj = run_clipped_stochastic(p, f, cfg, batch);
    REQUIRE(traj.gradients.size() == 5);

    std::vector<int> hits(static_cast<std::size_t>(n), 0);
    for (int s = 0; s < 5; ++s) {
        std::set<index_t> members =
            touched_examples(traj.gradients[static_cast<std::size_t>(s)], n);
        CHECK(members.size() == static_cast<std::size_t>(batch));
        for (index_t i : members) hits[static_cast<std::size_t>(i)] += 1;
    }
    for (int h : hits) CHECK(h == 2);
}

TEST_CASE("clipped path rejects what it cannot serve") {
    IsotropicQuadratic q(4, 1.0);
    Factorization f = pgd_factorization(3);
    RunConfig cfg = basic_config(3, 0.1, 0.0, 1);
    CHECK_THROWS_AS(run_clipped_stochastic(q, f, cfg, 1), capability_error);

    Dataset data = make_blob_dataset(8, 3, 2, 1.0, 2);
    LogisticRegression p(std::move(data));
    CHECK_THROWS_AS(run_clipped_stochastic(p, f, cfg, 0), param_error);
    CHECK_THROWS_AS(run_clipped_stochastic(p, f, cfg, 9), param_error);

    RunConfig bad = cfg;
    bad.clip_alpha = 0.0;
    CHECK_THROWS_AS(run_clipped_stochastic(p, f, bad, 4), param_error);
    bad.clip_alpha = -2.0;
    CHECK_THROWS_AS(run_clipped_stochastic(p, f, bad, 4), param_error);
}

TEST_CASE("virtual restarts rejoin the real iterates") {
    LeastSquares p = build_random_quadratic(6, 10.0, 404);
    Factorization f = chess_factorization(32);
    RunConfig cfg = basic_config(32, 0.04, 0.5, 13);
    cfg.record_iterates = true;
    cfg.tau_diag = 8;

    Trajectory traj = run(p, f, cfg);
    REQUIRE(!traj.diverged);
    std::vector<std::vector<double>> shadow = virtual_restart_trajectory(p, traj, cfg);
    REQUIRE(shadow.size() == traj.iterates.size());
    for (std::size_t t = 0; t < shadow.size(); t += 8)
        for (std::size_t j = 0; j < shadow[t].size(); ++j)
            CHECK(shadow[t][j] == traj.iterates[t][j]);

    RunConfig every = cfg;
    every.tau_diag = 1;
    std::vector<std::vector<double>> glued = virtual_restart_trajectory(p, traj, every);
    for (std::size_t t = 0; t < glued.size(); ++t)
        for (std::size_t j = 0; j < glued[t].size(); ++j)
            CHECK(glued[t][j] == traj.iterates[t][j]);

    RunConfig zero = cfg;
    zero.tau_diag = 0;
    CHECK_THROWS_AS(virtual_restart_trajectory(p, traj, zero), param_error);
    RunConfig over = cfg;
    over.tau_diag = 33;
    CHECK_THROWS_AS(virtual_restart_trajectory(p, traj, over), param_error);

    Trajectory bare = run(p, f, basic_config(32, 0.04, 0.5, 13));
    CHECK_THROWS_AS(virtual_restart_trajectory(p, bare, cfg), capability_error);
}

TEST_CASE("virtual gap equals the accumulated correlated noise") {
    const index_t t = 256;
    const index_t d = 4;
    LeastSquares p = build_random_quadratic(d, 8.0, 606);

    std::vector<Factorization> facs;
    facs.push_back(chess_factorization(t));
    facs.push_back(ad_hoc_lower(t, 1.3, 505));

    for (const Factorization& f : facs) {
        INFO("label ", f.label);
        RunConfig cfg = basic_config(t, 0.02, 0.6, 808);
        cfg.record_iterates = true;
        Trajectory traj = run(p, f, cfg);
        REQUIRE(!traj.diverged);
        REQUIRE(traj.iterates.size() == static_cast<std::size_t>(t) + 1);

        NoiseSpec spec{f.m(), d, cfg.zeta, derive_seed(cfg.seed, {1})};
        Matrix z = sample_noise_matrix(spec);
        std::vector<double> bt(static_cast<std::size_t>(f.m()));
        std::vector<double> ba(static_cast<std::size_t>(f.m()));

        for (index_t tau : {index_t{8}, index_t{64}, index_t{0}}) {
            std::vector<std::vector<double>> shadow;
            if (tau == 0) {
                shadow = virtual_plain_trajectory(p, traj, cfg);
            } else {
                RunConfig diag = cfg;
                diag.tau_diag = tau;
                shadow = virtual_restart_trajectory(p, traj, diag);
            }
            double worst = 0.0;
            for (index_t s = 0; s <= t; ++s) {
                const index_t anchor = tau == 0 ? 0 : (s / tau) * tau;
                copy_row(f.b, s, bt.data());
                copy_row(f.b, anchor, ba.data());
                for (index_t j = 0; j < d; ++j) {
                    double combo = 0.0;
                    for (index_t i = 0; i < f.m(); ++i)
                        combo += (bt[static_cast<std::size_t>(i)] -
                                  ba[static_cast<std::size_t>(i)]) *
                                 z(i, j);
                    const double expected = cfg.gamma * f.sensitivity * combo;
                    const double got =
                        shadow[static_cast<std::size_t>(s)][static_cast<std::size_t>(j)] -
                        traj.iterates[static_cast<std::size_t>(s)][static_cast<std::size_t>(j)];
                    worst = std::max(worst, std::abs(got - expected));
                }
            }
            INFO("tau ", tau, " worst gap error ", worst);
            CHECK(worst <= 1e-10);
        }
    }
}

TEST_CASE("trajectory csv round-trips its series") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "mflab_traj_test";
    fs::create_directories(dir);

    LeastSquares p = build_random_quadratic(4, 6.0, 21);
    Factorization f = pgd_factorization(10);
    RunConfig cfg = basic_config(10, 0.05, 0.2, 99);
    Trajectory traj = run(p, f, cfg);

    const fs::path path = dir / "traj.csv";
    write_trajectory_csv(path, traj, "gamma=0.05 steps=10");

    std::ifstream in(path);
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "# gamma=0.05 steps=10");
    REQUIRE(std::getline(in, line));
    CHECK(line == "iter,grad_norm_sq,loss_gap");

    std::size_t rows = 0;
    double first_gap = 0.0;
    while (std::getline(in, line)) {
        if (rows == 0) {
            const std::size_t a = line.find(',');
            const std::size_t b = line.find(',', a + 1);
            first_gap = std::stod(line.substr(b + 1));
        }
        ++rows;
    }
    CHECK(rows == traj.grad_norm_sq.size());
    CHECK(first_gap == doctest::Approx(traj.loss[0] - traj.optimum).epsilon(1e-15));

    std::vector<double> series = read_trajectory_grad_norms(path);
    REQUIRE(series.size() == traj.grad_norm_sq.size());
    for (std::size_t i = 0; i < series.size(); ++i)
        CHECK(series[i] == traj.grad_norm_sq[i]);

    Dataset data = make_blob_dataset(12, 3, 2, 1.0, 5);
    LogisticRegression logit(std::move(data));
    Factorization f2 = pgd_factorization(2);
    Trajectory traj2 = run(logit, f2, basic_config(2, 0.1, 0.0, 4));
    CHECK(!std::isfinite(traj2.optimum));
    const fs::path path2 = dir / "traj_rawloss.csv";
    write_trajectory_csv(path2, traj2, "");

    std::ifstream in2(path2);
    REQUIRE(std::getline(in2, line));
    CHECK(line == "iter,grad_norm_sq,loss_gap");
    REQUIRE(std::getline(in2, line));
    const std::size_t a = line.find(',');
    const std::size_t b = line.find(',', a + 1);
    CHECK(std::stod(line.substr(b + 1)) ==
          doctest::Approx(traj2.loss[0]).epsilon(1e-15));

    fs::remove_all(dir);
}

TEST_CASE("trajectory summary statistics match their series") {
    LeastSquares p = build_random_quadratic(5, 10.0, 71);
    Factorization f = chess_factorization(20);
    RunConfig cfg = basic_config(20, 0.03, 0.4, 6);
    Trajectory traj = run(p, f, cfg);

    double s = 0.0;
    for (double v : traj.grad_norm_sq) s += v;
    CHECK(traj.avg_grad_norm_sq() ==
          s / static_cast<double>(traj.grad_norm_sq.size()));
    CHECK(traj.last_grad_norm_sq() == traj.grad_norm_sq.back());
    CHECK(traj.final_loss() == traj.loss.back());

    Trajectory empty;
    CHECK(std::isnan(empty.avg_grad_norm_sq()));
    CHECK(std::isnan(empty.last_grad_norm_sq()));
    CHECK(std::isnan(empty.final_loss()));
}
