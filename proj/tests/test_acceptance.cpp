#include <doctest.h>

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "mechanic/commands.hpp"
#include "mechanic/config.hpp"
#include "mechanic/harness.hpp"
#include "mechanic/mechanic.hpp"
#include "mechanic/models.hpp"
#include "mechanic/rng.hpp"
#include "mechanic/theory_checks.hpp"
#include "mechanic/tuner.hpp"

using namespace mechanic;
namespace fs = std::filesystem;

// Acceptance battery: one criterion per test case, one printed verdict line
// each, every tolerance pinned in the assertion itself.

namespace {

struct Stopwatch {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

void verdict(int index, const char* name, bool pass, const std::string& detail) {
    std::printf("%s criterion %d (%s): %s\n", pass ? "PASS" : "FAIL", index, name,
                detail.c_str());
    std::fflush(stdout);
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

ExperimentConfig logreg_base(long dim, long n, double noise, unsigned long seed) {
    ExperimentConfig cfg;
    cfg.objective.kind = "logreg";
    cfg.objective.dim = dim;
    cfg.data.n = n;
    cfg.data.noise = noise;
    cfg.data.seed = seed;
    cfg.run.seed = seed;
    cfg.run.batch_size = 64;
    return cfg;
}

// Bounded feedback trace with a positive opener and a random overall
// magnitude spanning four decades.
std::vector<double> bounded_trace(std::uint64_t seed, long T) {
    Rng rng(seed);
    std::vector<double> h(static_cast<std::size_t>(T));
    h[0] = rng.uniform(0.0, 1.0);
    for (std::size_t t = 1; t < h.size(); ++t) h[t] = rng.uniform(-1.0, 1.0);
    const double scale = std::pow(10.0, rng.uniform(-2.0, 2.0));
    for (double& v : h) v *= scale;
    if (h[0] == 0.0) h[0] = 0.5 * scale;
    return h;
}

Dataset class_index_dataset(std::uint64_t seed, long n, long dim, long classes) {
    Rng rng(seed);
    std::vector<double> features(static_cast<std::size_t>(n * dim));
    std::vector<double> labels(static_cast<std::size_t>(n));
    for (auto& f : features) f = rng.normal();
    for (auto& y : labels)
        y = static_cast<double>(rng.next_below(static_cast<std::uint64_t>(classes)));
    return Dataset::dense_from(std::move(features), std::move(labels), dim);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("criterion 1: scale decomposition identity on logged runs") {
    Stopwatch watch;
    double worst = 0.0;
    long probes = 0;
    for (const char* opt : {"sgd", "adamw"}) {
        for (unsigned long seed = 1; seed <= 5; ++seed) {
            ExperimentConfig cfg = logreg_base(20, 512, 0.1, seed);
            cfg.optimizer.kind = opt;
            cfg.optimizer.lr = std::string(opt) == "sgd" ? 0.1 : 0.001;
            cfg.mechanic.lambda = 0.0;
            cfg.run.steps = 200;
            const RunRecord rec = run_experiment(cfg);
            REQUIRE(rec.ledger != nullptr);
            Rng rng(Rng::mix(seed, 21));
            for (int k = 0; k < 5; ++k) {
                const double s_ref = rng.uniform(0.1, 7.0);
                ParamVector x_target(20);
                for (double& v : x_target) v = rng.normal();
                worst = std::max(worst, theorem1_residual(*rec.ledger, s_ref, x_target));
                ++probes;
            }
        }
    }
    const double elapsed = watch.seconds();
    const bool pass = worst <= 1e-9 && elapsed < 10.0;
    verdict(1, "scale decomposition identity", pass,
            "worst residual " + fmt(worst) + " over " + std::to_string(probes) +
                " comparator draws, tol 1e-9, " + fmt(elapsed) + "s");
    CHECK(worst <= 1e-9);
    CHECK(elapsed < 10.0);
}

TEST_CASE("criterion 2: per-step inequality sweep") {
    Stopwatch watch;
    const long n = 100000;
    long violations = 0;
    double worst = std::numeric_limits<double>::infinity();
    bool stratified = true;
    for (unsigned long seed = 1; seed <= 3; ++seed) {
        const InequalitySweepReport rep = sweep_technical_inequality(n, seed);
        violations += rep.violations;
        worst = std::min(worst, rep.worst_margin);
        for (long count : rep.case_counts)
            if (count < n / 10) stratified = false;
    }
    const double elapsed = watch.seconds();
    const bool pass = violations == 0 && stratified && elapsed < 5.0;
    verdict(2, "per-step inequality sweep", pass,
            std::to_string(violations) + " violations in 3x1e5 samples, worst margin " +
                fmt(worst) + ", all five cases covered: " + (stratified ? "yes" : "no") +
                ", " + fmt(elapsed) + "s");
    CHECK(violations == 0);
    CHECK(stratified);
    CHECK(elapsed < 5.0);
}

TEST_CASE("criteria 3 and 4: regret bound margin and wealth positivity") {
    Stopwatch watch;
    long margin_violations = 0;
    long wealth_violations = 0;
    double worst_margin = std::numeric_limits<double>::infinity();
    double min_wealth = std::numeric_limits<double>::infinity();
    for (long T : {100L, 1000L}) {
        for (long i = 0; i < 100; ++i) {
            const std::vector<double> h = bounded_trace(
                Rng::mix(1, static_cast<std::uint64_t>(T) * 1000 + static_cast<std::uint64_t>(i)),
                T);
            const TheoreticalRun run = run_theoretical_tuner(h, 1.0, 1.0);
            for (double w : run.wealth) {
                min_wealth = std::min(min_wealth, w);
                if (!(w > 0.0)) ++wealth_violations;
            }
            for (double s_ref : {0.01, 1.0, 100.0}) {
                const double margin = regret_bound_margin(h, s_ref, 10.0);
                worst_margin = std::min(worst_margin, margin);
                if (!(margin >= 0.0)) ++margin_violations;
            }
        }
    }
    const double elapsed = watch.seconds();
    const bool pass3 = margin_violations == 0 && elapsed < 30.0;
    verdict(3, "regret bound margin", pass3,
            std::to_string(margin_violations) + " violations over 200 traces x 3 comparator "
                                                "scales, worst margin " +
                fmt(worst_margin) + ", " + fmt(elapsed) + "s");
    const bool pass4 = wealth_violations == 0;
    verdict(4, "wealth positivity", pass4,
            std::to_string(wealth_violations) + " nonpositive wealth steps, minimum " +
                fmt(min_wealth));
    CHECK(margin_violations == 0);
    CHECK(elapsed < 30.0);
    CHECK(wealth_violations == 0);
}

TEST_CASE("criterion 5: scale-freeness of the epsilon-free tuner") {
    TunerParams params;
    params.epsilon = 0.0;
    double worst_rel = 0.0;
    for (double c : {1e-3, 1.0, 1e3}) {
        TunerState base = tuner_init(params);
        TunerState scaled = tuner_init(params);
        Rng rng(505);
        for (long t = 0; t < 10000; ++t) {
            const double h = rng.uniform(-2.0, 2.0);
            tuner_step(base, h, params);
            tuner_step(scaled, c * h, params);
            for (std::size_t i = 0; i < params.n(); ++i) {
                const double denom = std::max(std::fabs(base.s[i]), 1e-300);
                worst_rel = std::max(worst_rel, std::fabs(base.s[i] - scaled.s[i]) / denom);
            }
        }
    }
    const bool pass = worst_rel <= 1e-10;
    verdict(5, "scale-freeness", pass,
            "worst per-coordinate relative deviation " + fmt(worst_rel) +
                " across c in {1e-3, 1, 1e3} over 1e4 steps, tol 1e-10");
    CHECK(worst_rel <= 1e-10);
}

TEST_CASE("criterion 6: first emitted scale matches s_init") {
    TunerParams params;
    bool pass = true;
    std::string detail;
    for (double h : {1e-6, 1.0, 1e6}) {
        TunerState st = tuner_init(params);
        tuner_step(st, h, params);
        const double rel = std::fabs(tuner_sum(st.s) - params.s_init) / params.s_init;
        const double tol = 1e-6 + params.epsilon / h;
        if (!(rel <= tol)) pass = false;
        detail += "h=" + fmt(h) + " rel=" + fmt(rel) + " tol=" + fmt(tol) + "  ";
        CHECK(rel <= tol);
    }
    verdict(6, "first emitted scale", pass, detail);
}

TEST_CASE("criterion 7: analytic gradients vs central differences") {
    const double step = 1e-5;
    const double tol = 1e-5;
    Rng rng(31415);
    double worst = 0.0;

    auto run_draws = [&](const Objective& obj, const Dataset* data, const Batch& batch) {
        for (int rep = 0; rep < 20; ++rep) {
            ParamVector params(static_cast<std::size_t>(obj.param_dim()));
            for (auto& p : params) p = 0.5 * rng.normal();
            const LossGrad lg = loss_and_grad(obj, params, data, batch);
            const ParamVector fd = finite_difference_grad(obj, params, data, batch, step);
            double diff = 0.0, norm = 0.0;
            for (std::size_t j = 0; j < params.size(); ++j) {
                diff += (lg.grad[j] - fd[j]) * (lg.grad[j] - fd[j]);
                norm += fd[j] * fd[j];
            }
            const double rel = std::sqrt(diff) / std::max(std::sqrt(norm), 1e-10);
            worst = std::max(worst, rel);
            CHECK(rel <= tol);
        }
    };

    ParamVector center(7);
    for (auto& c : center) c = rng.normal();
    run_draws(make_quadratic(center), nullptr, {});

    Dataset reg = synth_logistic(71, 48, 13, 0.1);
    Batch all(48);
    for (std::uint32_t i = 0; i < 48; ++i) all[i] = i;
    run_draws(make_linreg(13), &reg, all);
    run_draws(make_logreg(13), &reg, all);

    Dataset multi = class_index_dataset(72, 32, 5, 4);
    Batch mbatch(32);
    for (std::uint32_t i = 0; i < 32; ++i) mbatch[i] = i;
    run_draws(make_multilogreg(5, 4), &multi, mbatch);

    Dataset mse_data = synth_logistic(73, 32, 4, 0.0);
    run_draws(make_mlp(4, 6, 1, Objective::MlpHead::mse), &mse_data, mbatch);

    Dataset ce_data = class_index_dataset(74, 32, 4, 3);
    run_draws(make_mlp(4, 6, 3, Objective::MlpHead::cross_entropy), &ce_data, mbatch);

    verdict(7, "gradient correctness", worst <= tol,
            "worst relative error " + fmt(worst) + " over 20 draws x 6 objectives, tol 1e-5");
}

TEST_CASE("criterion 8: wrapped runs compete with a tuned baseline sweep") {
    Stopwatch watch;
    const std::vector<double> grid{3.0, 1.0, 0.3, 0.1, 0.03, 0.01, 0.003, 0.001};
    struct Task {
        long dim;
        double noise;
    };
    const Task tasks[] = {{10, 0.0}, {10, 0.2}, {100, 0.0}, {100, 0.2}};

    int tasks_passed = 0;
    std::string detail;
    for (const Task& task : tasks) {
        std::vector<double> wrapped_final, sweep_final;
        for (unsigned long seed = 1; seed <= 5; ++seed) {
            ExperimentConfig cfg = logreg_base(task.dim, 2048, task.noise, seed);
            cfg.run.epochs = 20;

            ExperimentConfig wrapped = cfg;
            wrapped.mechanic.enabled = true;
            wrapped.optimizer.lr = 1.0;
            const RunRecord rec = run_experiment(wrapped, false);
            wrapped_final.push_back(rec.diverged ? std::numeric_limits<double>::infinity()
                                                 : rec.final_loss);

            const SweepResult sweep = lr_sweep(cfg, grid);
            sweep_final.push_back(sweep.records[sweep.best_index].final_loss);
        }
        const double wrapped_med = median(wrapped_final);
        const double sweep_med = median(sweep_final);
        const bool ok = wrapped_med <= 1.1 * sweep_med;
        if (ok) ++tasks_passed;
        detail += "d=" + std::to_string(task.dim) + " noise=" + fmt(task.noise) + " ratio=" +
                  fmt(wrapped_med / sweep_med) + (ok ? " ok  " : " MISS  ");
    }
    const double elapsed = watch.seconds();
    const bool pass = tasks_passed >= 3 && elapsed < 300.0;
    verdict(8, "competitive with tuned baseline", pass,
            std::to_string(tasks_passed) + "/4 tasks within 1.1x of the 8-point sweep "
                                           "(medians over 5 seeds): " +
                detail + fmt(elapsed) + "s");
    CHECK(tasks_passed >= 3);
    CHECK(elapsed < 300.0);
}

TEST_CASE("criterion 9: smaller batches learn a smaller scale") {
    std::vector<double> s_small, s_large;
    for (unsigned long seed = 1; seed <= 5; ++seed) {
        for (long batch : {8L, 128L}) {
            ExperimentConfig cfg = logreg_base(20, 4096, 0.1, seed);
            cfg.run.batch_size = batch;
            cfg.run.epochs = 10;
            cfg.optimizer.lr = 1.0;
            const RunRecord rec = run_experiment(cfg);
            REQUIRE_FALSE(rec.s_sum_curve.empty());
            (batch == 8 ? s_small : s_large).push_back(rec.s_sum_curve.back());
        }
    }
    const double med_small = median(s_small);
    const double med_large = median(s_large);
    const bool pass = med_small < med_large;
    verdict(9, "batch-size scale trend", pass,
            "median final scale: batch 8 -> " + fmt(med_small) + ", batch 128 -> " +
                fmt(med_large));
    CHECK(med_small < med_large);
}

TEST_CASE("criterion 10: golden trace reproduces bit for bit") {
#ifndef GOLDEN_CONFIG_PATH
#error "GOLDEN_CONFIG_PATH must be defined by the build"
#endif
    const fs::path root =
        fs::temp_directory_path() / ("mechanic_golden_" + std::to_string(::getpid()));
    fs::create_directories(root);
    ::setenv(kOutputRootEnv, root.string().c_str(), 1);

    RunCmdOptions opt;
    opt.config_path = GOLDEN_CONFIG_PATH;
    opt.output_dir = "g1";
    const int rc1 = cmd_run(opt);
    opt.output_dir = "g2";
    const int rc2 = cmd_run(opt);

    ::unsetenv(kOutputRootEnv);

    const std::string t1 = slurp(root / "g1/trace.csv");
    const std::string t2 = slurp(root / "g2/trace.csv");
    const bool pass = rc1 == kExitOk && rc2 == kExitOk && !t1.empty() && t1 == t2;
    verdict(10, "golden trace determinism", pass,
            "two runs of the pinned config, trace bytes " +
                std::to_string(t1.size()) + " vs " + std::to_string(t2.size()) +
                (t1 == t2 ? ", identical" : ", DIFFER"));
    CHECK(rc1 == kExitOk);
    CHECK(rc2 == kExitOk);
    CHECK_FALSE(t1.empty());
    CHECK(t1 == t2);

    std::error_code ec;
    fs::remove_all(root, ec);
}

TEST_CASE("criterion 11: wrapper invariant battery") {
    bool nonneg_ok = true;
    bool neutral_ok = true;
    bool reconstruct_ok = true;
    bool equiv_ok = true;
    const long steps = 10000;
    const std::size_t dim = 8;

    for (unsigned long seed = 1; seed <= 3; ++seed) {
        TunerParams params;
        ParamVector x0(dim);
        Rng init_rng(Rng::mix(seed, 1));
        for (auto& v : x0) v = init_rng.normal();

        Mechanic stored(x0, params, DeltaMode::stored);
        Mechanic recovered(x0, params, DeltaMode::recovered);
        Rng rng(Rng::mix(seed, 2));

        for (long t = 0; t < steps; ++t) {
            ParamVector g(dim), u(dim);
            const double mag = std::pow(10.0, rng.uniform(-1.0, 1.0));
            for (std::size_t i = 0; i < dim; ++i) {
                g[i] = mag * rng.normal();
                u[i] = -0.05 * g[i];
            }
            stored.step(g, u);
            recovered.step(g, u);

            if (t == 0 && stored.x() != x0) neutral_ok = false;

            const TunerState& ts = stored.tuner();
            for (const auto* arr : {&ts.m, &ts.v, &ts.r, &ts.s})
                for (double v : *arr)
                    if (!(v >= 0.0) || !std::isfinite(v)) nonneg_ok = false;

            const ParamVector delta = stored.current_delta();
            const double s = stored.s_sum();
            for (std::size_t i = 0; i < dim; ++i) {
                if (stored.x()[i] != stored.x_ref()[i] + s * delta[i]) reconstruct_ok = false;
                const double a = stored.x()[i];
                const double b = recovered.x()[i];
                if (!(std::fabs(a - b) <= 1e-9 * (1.0 + std::fabs(a)))) equiv_ok = false;
            }
        }
    }

    const bool pass = nonneg_ok && neutral_ok && reconstruct_ok && equiv_ok;
    verdict(11, "wrapper invariant battery", pass,
            std::string("nonnegativity ") + (nonneg_ok ? "ok" : "FAIL") +
                ", first-step neutrality " + (neutral_ok ? "ok" : "FAIL") +
                ", reconstruction " + (reconstruct_ok ? "ok" : "FAIL") +
                ", mode equivalence " + (equiv_ok ? "ok" : "FAIL") +
                " over 3 seeds x 1e4 steps");
    CHECK(nonneg_ok);
    CHECK(neutral_ok);
    CHECK(reconstruct_ok);
    CHECK(equiv_ok);
}
