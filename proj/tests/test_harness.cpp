#include <doctest.h>

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "mechanic/errors.hpp"
#include "mechanic/harness.hpp"
#include "mechanic/rng.hpp"

using namespace mechanic;

namespace {

ExperimentConfig quadratic_config(long dim, double lr, long steps) {
    ExperimentConfig cfg;
    cfg.objective.kind = "quadratic";
    cfg.objective.dim = dim;
    cfg.optimizer.lr = lr;
    cfg.run.steps = steps;
    cfg.run.init = "ones";
    cfg.mechanic.enabled = false;
    return cfg;
}

ExperimentConfig logreg_config(long steps) {
    ExperimentConfig cfg;
    cfg.objective.kind = "logreg";
    cfg.objective.dim = 20;
    cfg.data.n = 256;
    cfg.data.noise = 0.1;
    cfg.data.seed = 1;
    cfg.run.steps = steps;
    cfg.run.batch_size = 64;
    cfg.run.seed = 1;
    return cfg;
}

} // namespace

TEST_CASE("ledger accessors in both modes") {
    const ParamVector x_ref{1.0, 2.0};
    RegretLedger raw(RegretLedger::Mode::raw, x_ref, 0.0);
    RegretLedger scalars(RegretLedger::Mode::scalars, x_ref, 0.0);
    CHECK(raw.mode() == RegretLedger::Mode::raw);
    CHECK(RegretLedger::mode_for_dim(10000) == RegretLedger::Mode::raw);
    CHECK(RegretLedger::mode_for_dim(10001) == RegretLedger::Mode::scalars);

    const ParamVector g{1.0, -1.0};
    const ParamVector x{1.5, 2.5};
    const ParamVector delta{0.25, 0.25};
    raw.record(g, x, delta, 2.0, 0.5, 0.7);
    scalars.record(g, x, delta, 2.0, 0.5, 0.7);

    for (const RegretLedger* led : {&raw, &scalars}) {
        CHECK(led->size() == 1);
        CHECK(led->h(0) == 0.5);
        CHECK(led->s_sum(0) == 2.0);
        CHECK(led->loss(0) == 0.7);
        CHECK(led->g_dot_x(0) == 1.5 - 2.5);
        CHECK(led->g_dot_delta(0) == 0.0);
        CHECK(led->g_total() == g);
    }
    CHECK(raw.g(0) == g);
    CHECK_THROWS_AS(scalars.g(0), std::logic_error);
}

TEST_CASE("regret sums agree across ledger modes") {
    const ParamVector x_ref{0.5, -0.5, 1.0};
    RegretLedger raw(RegretLedger::Mode::raw, x_ref, 0.0);
    RegretLedger scalars(RegretLedger::Mode::scalars, x_ref, 0.0);
    Rng rng(606);
    ParamVector x = x_ref;
    ParamVector delta(3, 0.0);
    double s = 0.0;
    for (int t = 0; t < 100; ++t) {
        ParamVector g(3);
        for (auto& gi : g) gi = rng.normal();
        const double h = dot(delta, g);
        raw.record(g, x, delta, s, h, 0.0);
        scalars.record(g, x, delta, s, h, 0.0);
        for (std::size_t i = 0; i < 3; ++i) delta[i] -= 0.1 * g[i];
        s = 0.01 * (t + 1);
        for (std::size_t i = 0; i < 3; ++i) x[i] = x_ref[i] + s * delta[i];
    }

    const ParamVector target{0.2, 0.1, -0.3};
    const double lr_raw = linearized_regret(raw, target);
    const double lr_sc = linearized_regret(scalars, target);
    CHECK(lr_raw == doctest::Approx(lr_sc).epsilon(1e-12));
    CHECK(tuner_regret(raw, 0.3) == tuner_regret(scalars, 0.3));

    // The decomposition residual is rounding-level in both modes.
    CHECK(theorem1_residual(raw, 0.3, target) <= 1e-12);
    CHECK(theorem1_residual(scalars, 0.3, target) <= 1e-12);
    CHECK_THROWS_AS(theorem1_residual(raw, 0.0, target), std::invalid_argument);
}

TEST_CASE("single-record ledger reduces the decomposition to its base term") {
    const ParamVector x_ref{1.0, -2.0, 0.5};
    RegretLedger led(RegretLedger::Mode::raw, x_ref, 0.0);
    const ParamVector g{0.3, 1.1, -0.7};
    led.record(g, x_ref, {0.0, 0.0, 0.0}, 0.0, 0.0, 1.0);

    const ParamVector target{0.4, 0.4, 0.4};
    CHECK(linearized_regret(led, target) ==
          doctest::Approx(dot(g, x_ref) - dot(g, target)).epsilon(1e-15));
    CHECK(theorem1_residual(led, 2.5, target) <= 1e-12);
}

TEST_CASE("gradient descent on the bowl follows the closed form exactly") {
    // Contraction factor 1 - eta = 0.5 is a power of two, so every float op
    // along the trajectory is exact and the curve can be pinned bitwise.
    const long dim = 4;
    const long steps = 10;
    const RunRecord rec = run_experiment(quadratic_config(dim, 0.5, steps));
    CHECK_FALSE(rec.diverged);
    CHECK_FALSE(rec.mechanic_on);
    CHECK(rec.ledger == nullptr);
    CHECK(rec.steps_run == steps);
    CHECK(rec.initial_loss == 2.0);
    REQUIRE(rec.loss_curve.size() == static_cast<std::size_t>(steps));
    double expected_loss = 2.0;
    double expected_norm = 2.0;
    for (long t = 0; t < steps; ++t) {
        CHECK(rec.loss_curve[static_cast<std::size_t>(t)] == expected_loss);
        CHECK(rec.grad_norm_curve[static_cast<std::size_t>(t)] == expected_norm);
        expected_loss *= 0.25;
        expected_norm *= 0.5;
    }
    CHECK(rec.final_loss == expected_loss);
    double expected_coord = 1.0;
    for (long t = 0; t < steps; ++t) expected_coord *= 0.5;
    for (double xi : rec.final_x) CHECK(xi == expected_coord);
    CHECK(rec.h_curve.empty());
    CHECK(rec.s_sum_curve.empty());
}

TEST_CASE("quadratic at the optimum stays put under the threshold floor") {
    ExperimentConfig cfg = quadratic_config(3, 0.5, 5);
    cfg.run.init = "zeros";
    const RunRecord rec = run_experiment(cfg);
    CHECK_FALSE(rec.diverged);
    CHECK(rec.initial_loss == 0.0);
    CHECK(rec.final_loss == 0.0);
}

TEST_CASE("divergence guard trips at 1e6 x the initial loss") {
    // eta = 3 doubles the iterate every step: loss grows 4x per step and
    // crosses 1e6 after ten steps.
    ExperimentConfig cfg = quadratic_config(4, 3.0, 50);
    CHECK_THROWS_AS(run_experiment(cfg), DivergenceError);

    const RunRecord rec = run_experiment(cfg, false);
    CHECK(rec.diverged);
    CHECK(rec.steps_run == 10);
    CHECK(rec.loss_curve.size() == 10);
    CHECK(rec.grad_norm_curve.size() == 10);
    CHECK(rec.final_loss > 1e6);
}

TEST_CASE("gradient clipping uses the unclipped norm for reporting") {
    ExperimentConfig cfg = quadratic_config(1, 1.0, 3);
    cfg.run.grad_clip_norm = 0.5;
    const RunRecord rec = run_experiment(cfg);
    REQUIRE(rec.steps_run == 3);
    CHECK(rec.loss_curve[0] == 0.5);
    CHECK(rec.loss_curve[1] == 0.125);  // step was clipped to length 0.5
    CHECK(rec.loss_curve[2] == 0.0);
    CHECK(rec.grad_norm_curve[0] == 1.0);
    CHECK(rec.grad_norm_curve[1] == 0.5);
}

TEST_CASE("wrapped run records the full tuner history") {
    ExperimentConfig cfg = logreg_config(50);
    const RunRecord rec = run_experiment(cfg);
    CHECK(rec.mechanic_on);
    REQUIRE(rec.ledger != nullptr);
    CHECK(rec.ledger->mode() == RegretLedger::Mode::raw);
    CHECK(rec.ledger->size() == 50);
    CHECK(rec.steps_run == 50);
    REQUIRE(rec.h_curve.size() == 50);
    CHECK(rec.h_curve[0] == 0.0);  // first step has no displacement yet
    REQUIRE(rec.s_sum_curve.size() == 50);
    CHECK(rec.s_sum_curve[0] == 0.0);
    CHECK(rec.s_sum_curve.back() > 0.0);
    REQUIRE(rec.s_curves.size() == 6);
    REQUIRE(rec.wealth_curves.size() == 6);
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(rec.s_curves[i].size() == 50);
        for (double s : rec.s_curves[i]) CHECK(s >= 0.0);
        for (double w : rec.wealth_curves[i]) CHECK(w >= 0.0);
    }
    CHECK_FALSE(rec.diverged);

    // Ledger can be disabled independently of the wrapper.
    cfg.run.ledger = false;
    CHECK(run_experiment(cfg).ledger == nullptr);
}

TEST_CASE("decomposition holds on a wrapped run without the regularizer") {
    ExperimentConfig cfg = logreg_config(120);
    cfg.mechanic.lambda = 0.0;
    const RunRecord rec = run_experiment(cfg);
    REQUIRE(rec.ledger != nullptr);
    Rng rng(4242);
    for (int draw = 0; draw < 3; ++draw) {
        const double s_ref = rng.uniform(0.1, 7.0);
        ParamVector target(20);
        for (auto& ti : target) ti = rng.normal();
        CAPTURE(draw);
        CHECK(theorem1_residual(*rec.ledger, s_ref, target) <= 1e-9);
    }

    // With the regularizer on, the residual is still well-defined and finite.
    ExperimentConfig reg = logreg_config(120);
    const RunRecord rec2 = run_experiment(reg);
    REQUIRE(rec2.ledger != nullptr);
    CHECK(std::isfinite(theorem1_residual(*rec2.ledger, 1.0, ParamVector(20, 0.0))));
}

TEST_CASE("runs are deterministic given the config") {
    const ExperimentConfig cfg = logreg_config(60);
    const RunRecord a = run_experiment(cfg);
    const RunRecord b = run_experiment(cfg);
    CHECK(a.final_x == b.final_x);
    CHECK(a.loss_curve == b.loss_curve);
    CHECK(a.h_curve == b.h_curve);
    CHECK(a.s_sum_curve == b.s_sum_curve);
    CHECK(a.final_loss == b.final_loss);
    CHECK(a.config_hash == b.config_hash);

    ExperimentConfig other = cfg;
    other.run.seed = 2;
    other.data.seed = 2;
    const RunRecord c = run_experiment(other);
    CHECK(a.final_x != c.final_x);
}

TEST_CASE("final loss is the full-dataset loss at the final iterate") {
    const ExperimentConfig cfg = logreg_config(40);
    const RunRecord rec = run_experiment(cfg);
    const Objective obj = objective_from_config(cfg.objective);
    const Dataset data = dataset_from_config(cfg.data, cfg.objective.dim);
    Batch all(static_cast<std::size_t>(data.size()));
    std::iota(all.begin(), all.end(), 0u);
    CHECK(rec.final_loss == loss_and_grad(obj, rec.final_x, &data, all).loss);
}

TEST_CASE("epochs take precedence over steps") {
    ExperimentConfig cfg = logreg_config(9999);
    cfg.data.n = 100;
    cfg.run.batch_size = 32;
    cfg.run.epochs = 3;
    const RunRecord rec = run_experiment(cfg);
    CHECK(rec.steps_run == 3 * 4);  // ceil(100 / 32) batches per epoch

    // A batch larger than the dataset is a structural error.
    ExperimentConfig bad = logreg_config(10);
    bad.data.n = 16;
    bad.run.batch_size = 64;
    CHECK_THROWS_AS(run_experiment(bad), std::invalid_argument);
}

TEST_CASE("sweep picks the fastest contraction and skips diverged rates") {
    ExperimentConfig cfg = quadratic_config(4, 0.01, 20);
    const SweepResult sweep = lr_sweep(cfg, {0.3, 0.1, 0.03});
    REQUIRE(sweep.records.size() == 3);
    for (const RunRecord& r : sweep.records) {
        CHECK_FALSE(r.diverged);
        CHECK_FALSE(r.mechanic_on);
    }
    CHECK(sweep.best_index == 0);
    CHECK(sweep.grid[sweep.best_index] == 0.3);

    // eta = 0.5 and eta = 1.5 contract at exactly the same rate; the tie
    // goes to the earlier grid entry. eta = 3 diverges and is excluded.
    const SweepResult tie = lr_sweep(cfg, {0.5, 1.5, 3.0});
    CHECK(tie.records[0].final_loss == tie.records[1].final_loss);
    CHECK(tie.records[2].diverged);
    CHECK(tie.best_index == 0);

    CHECK_THROWS_AS(lr_sweep(cfg, {}), std::invalid_argument);
    CHECK_THROWS_AS(lr_sweep(cfg, {0.1, -1.0}), std::invalid_argument);
    CHECK_THROWS_AS(lr_sweep(cfg, {3.0, 4.0}), DivergenceError);
}

TEST_CASE("config translators") {
    ObjectiveConfig o;
    o.kind = "mlp";
    o.dim = 6;
    o.hidden = 4;
    o.outputs = 1;
    o.head = "mse";
    const Objective obj = objective_from_config(o);
    CHECK(obj.kind == Objective::Kind::mlp);
    CHECK(obj.param_dim() == 4 * 6 + 4 + 1 * 4 + 1);

    DataConfig d;
    d.source = "synthetic";
    d.n = 32;
    d.seed = 9;
    d.noise = 0.0;
    const Dataset data = dataset_from_config(d, 5);
    CHECK(data.size() == 32);
    CHECK(data.dim() == 5);

    MechanicConfig m;
    m.betas = {0.5, 0.75};
    m.lambda = 0.125;
    m.epsilon = 0.0;
    const TunerParams tp = tuner_params_from_config(m);
    CHECK(tp.betas == std::vector<double>{0.5, 0.75});
    CHECK(tp.lambda == 0.125);
    CHECK(tp.epsilon == 0.0);

    ScheduleConfig s;
    s.kind = "cosine_with_warmup";
    s.total_steps = 0;
    const Schedule sched = schedule_from_config(s, 0.2, 80);
    CHECK(sched.kind == ScheduleKind::cosine_with_warmup);
    CHECK(sched.base_lr == 0.2);
    CHECK(sched.total_steps == 80);  // 0 resolves to the run length

    s.total_steps = 30;
    CHECK(schedule_from_config(s, 0.2, 80).total_steps == 30);
}
