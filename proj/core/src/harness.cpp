#include "mechanic/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>

#include "mechanic/errors.hpp"
#include "mechanic/mechanic.hpp"
#include "mechanic/rng.hpp"

namespace mechanic {

RegretLedger::RegretLedger(Mode mode, ParamVector x_ref, double lambda)
    : mode_(mode), x_ref_(std::move(x_ref)), lambda_(lambda), g_total_(x_ref_.size(), 0.0) {
    if (x_ref_.empty())
        throw std::invalid_argument("RegretLedger: empty reference point");
    if (lambda_ < 0.0)
        throw std::invalid_argument("RegretLedger: lambda must be >= 0");
}

void RegretLedger::record(const ParamVector& g, const ParamVector& x, const ParamVector& delta,
                          double s_sum, double h, double loss) {
    check_same_dim(g, x_ref_, "RegretLedger::record: g");
    check_same_dim(x, x_ref_, "RegretLedger::record: x");
    check_same_dim(delta, x_ref_, "RegretLedger::record: delta");
    h_.push_back(h);
    s_sum_.push_back(s_sum);
    loss_.push_back(loss);
    g_dot_x_.push_back(dot(g, x));
    g_dot_delta_.push_back(dot(g, delta));
    axpy(1.0, g, g_total_);
    if (mode_ == Mode::raw)
        g_steps_.push_back(g);
}

const ParamVector& RegretLedger::g(std::size_t t) const {
    if (mode_ != Mode::raw)
        throw std::logic_error("RegretLedger: per-step gradients kept only in raw mode");
    return g_steps_.at(t);
}

double linearized_regret(const RegretLedger& ledger, const ParamVector& x_target) {
    check_same_dim(x_target, ledger.x_ref(), "linearized_regret: x_target");
    double sum = 0.0;
    if (ledger.mode() == RegretLedger::Mode::raw) {
        for (std::size_t t = 0; t < ledger.size(); ++t)
            sum += ledger.g_dot_x(t) - dot(ledger.g(t), x_target);
        return sum;
    }
    for (std::size_t t = 0; t < ledger.size(); ++t)
        sum += ledger.g_dot_x(t);
    return sum - dot(ledger.g_total(), x_target);
}

double tuner_regret(const RegretLedger& ledger, double s_ref) {
    double sum = 0.0;
    for (std::size_t t = 0; t < ledger.size(); ++t)
        sum += ledger.h(t) * (ledger.s_sum(t) - s_ref);
    return sum;
}

double theorem1_residual(const RegretLedger& ledger, double s_ref, const ParamVector& x_target) {
    if (s_ref == 0.0)
        throw std::invalid_argument("theorem1_residual: s_ref must be nonzero");
    check_same_dim(x_target, ledger.x_ref(), "theorem1_residual: x_target");

    const double lhs = linearized_regret(ledger, x_target);

    double base_term = 0.0;
    if (ledger.mode() == RegretLedger::Mode::raw) {
        for (std::size_t t = 0; t < ledger.size(); ++t) {
            const ParamVector& g = ledger.g(t);
            base_term += ledger.g_dot_delta(t) -
                         (dot(g, x_target) - dot(g, ledger.x_ref())) / s_ref;
        }
    } else {
        for (std::size_t t = 0; t < ledger.size(); ++t)
            base_term += ledger.g_dot_delta(t);
        base_term -= (dot(ledger.g_total(), x_target) - dot(ledger.g_total(), ledger.x_ref())) / s_ref;
    }

    const double rhs = tuner_regret(ledger, s_ref) + s_ref * base_term;
    return std::fabs(lhs - rhs) / (1.0 + std::fabs(lhs));
}

Objective objective_from_config(const ObjectiveConfig& o) {
    if (o.kind == "quadratic")
        return make_quadratic(ParamVector(static_cast<std::size_t>(o.dim), 0.0));
    if (o.kind == "linreg")
        return make_linreg(o.dim);
    if (o.kind == "logreg")
        return make_logreg(o.dim);
    if (o.kind == "multilogreg")
        return make_multilogreg(o.dim, o.classes);
    if (o.kind == "mlp")
        return make_mlp(o.dim, o.hidden, o.outputs,
                        o.head == "mse" ? Objective::MlpHead::mse
                                        : Objective::MlpHead::cross_entropy);
    throw ConfigError("unknown objective kind '" + o.kind + "'");
}

Dataset dataset_from_config(const DataConfig& d, long feature_dim) {
    if (d.source == "libsvm")
        return load_libsvm(d.path, feature_dim);
    return synth_logistic(d.seed, d.n, feature_dim, d.noise);
}

TunerParams tuner_params_from_config(const MechanicConfig& m) {
    TunerParams tp;
    tp.betas = m.betas;
    tp.lambda = m.lambda;
    tp.s_init = m.s_init;
    tp.epsilon = m.epsilon;
    tp.skip_nonfinite_h = m.skip_nonfinite_h;
    validate(tp);
    return tp;
}

Schedule schedule_from_config(const ScheduleConfig& s, double lr, long resolved_steps) {
    Schedule out;
    if (s.kind == "constant") out.kind = ScheduleKind::constant;
    else if (s.kind == "linear_warmup_linear_decay") out.kind = ScheduleKind::linear_warmup_linear_decay;
    else if (s.kind == "cosine_with_warmup") out.kind = ScheduleKind::cosine_with_warmup;
    else if (s.kind == "step_decay") out.kind = ScheduleKind::step_decay;
    else throw ConfigError("unknown schedule kind '" + s.kind + "'");
    out.base_lr = lr;
    out.total_steps = s.total_steps > 0 ? s.total_steps : resolved_steps;
    out.warmup_steps = s.warmup_steps;
    out.milestones = s.milestones;
    out.decay_factor = s.decay_factor;
    return out;
}

namespace {

BaseOptimizer::Config base_config_from(const OptimizerConfig& p) {
    BaseOptimizer::Config c;
    c.kind = base_opt_kind_from_string(p.kind);
    c.momentum_beta = p.momentum_beta;
    c.adamw = AdamWParams{p.adamw_beta1, p.adamw_beta2, p.adamw_epsilon, p.weight_decay};
    c.lion = LionParams{p.lion_beta1, p.lion_beta2, p.weight_decay};
    return c;
}

ParamVector initial_params(const Objective& obj, const RunConfig& run) {
    ParamVector x(static_cast<std::size_t>(obj.param_dim()), 0.0);
    if (run.init == "ones") {
        std::fill(x.begin(), x.end(), 1.0);
    } else if (run.init == "normal") {
        Rng rng(Rng::mix(run.seed, 0x696e6974));
        for (double& xi : x)
            xi = run.init_scale * rng.normal();
    }
    return x;
}

double full_dataset_loss(const Objective& obj, const ParamVector& x, const Dataset* data) {
    try {
        if (!data)
            return loss_and_grad(obj, x, nullptr, Batch{}).loss;
        Batch all(static_cast<std::size_t>(data->size()));
        std::iota(all.begin(), all.end(), 0u);
        return loss_and_grad(obj, x, data, all).loss;
    } catch (const std::exception&) {
        return std::numeric_limits<double>::infinity();
    }
}

} // namespace

RunRecord run_experiment(const ExperimentConfig& config, bool throw_on_divergence) {
    validate_config(config);

    const Objective obj = objective_from_config(config.objective);
    std::optional<Dataset> data;
    if (obj.kind != Objective::Kind::quadratic)
        data.emplace(dataset_from_config(config.data, config.objective.dim));

    long steps = config.run.steps;
    if (config.run.epochs > 0) {
        const long n = data->size();
        const long per_epoch = (n + config.run.batch_size - 1) / config.run.batch_size;
        steps = config.run.epochs * per_epoch;
    }

    const Schedule schedule = schedule_from_config(config.schedule, config.optimizer.lr, steps);
    BaseOptimizer base(base_config_from(config.optimizer));

    ParamVector x = initial_params(obj, config.run);

    std::optional<Mechanic> mech;
    std::size_t n_scales = 0;
    if (config.mechanic.enabled) {
        const TunerParams tp = tuner_params_from_config(config.mechanic);
        n_scales = tp.n();
        mech.emplace(x, tp,
                     config.mechanic.delta_mode == "recovered" ? DeltaMode::recovered
                                                               : DeltaMode::stored);
    }

    RunRecord rec;
    rec.config_hash = config_hash(config);
    rec.seed = config.run.seed;
    rec.mechanic_on = config.mechanic.enabled;
    rec.s_curves.resize(n_scales);
    rec.wealth_curves.resize(n_scales);
    if (config.run.ledger && mech) {
        rec.ledger = std::make_shared<RegretLedger>(
            RegretLedger::mode_for_dim(x.size()), x, config.mechanic.lambda);
        rec.ledger->seed = config.run.seed;
        rec.ledger->config_hash = rec.config_hash;
    }

    std::vector<Batch> batches;
    std::size_t batch_cursor = 0;
    long epoch = 0;
    const Batch no_batch;

    double threshold = std::numeric_limits<double>::infinity();
    std::string divergence_note;

    for (long t = 0; t < steps; ++t) {
        const ParamVector& xt = mech ? mech->x() : x;

        const Batch* batch = &no_batch;
        if (data) {
            if (batch_cursor == batches.size()) {
                batches = minibatch_iter(*data, config.run.batch_size, config.run.seed, epoch);
                ++epoch;
                batch_cursor = 0;
            }
            batch = &batches[batch_cursor++];
        }

        LossGrad lg = loss_and_grad(obj, xt, data ? &*data : nullptr, *batch);
        const double grad_norm = nrm2(lg.grad);
        if (t == 0) {
            rec.initial_loss = lg.loss;
            threshold = 1e6 * std::max(lg.loss, 1e-12);
        }
        if (!std::isfinite(lg.loss) || lg.loss > threshold) {
            divergence_note = "loss " + std::to_string(lg.loss) + " at step " + std::to_string(t) +
                              " tripped the 1e6 x initial-loss guard (initial " +
                              std::to_string(rec.initial_loss) + ")";
            rec.diverged = true;
            break;
        }

        if (config.run.grad_clip_norm > 0.0 && grad_norm > config.run.grad_clip_norm) {
            const double scale = config.run.grad_clip_norm / grad_norm;
            for (double& gi : lg.grad)
                gi *= scale;
        }

        const double eta = schedule_eval(schedule, t);
        try {
            if (mech) {
                const double s_before = mech->s_sum();
                // xt aliases the wrapper's iterate, which step() overwrites;
                // the ledger needs the pre-step values.
                ParamVector x_before, delta_before;
                if (rec.ledger) {
                    x_before = xt;
                    delta_before = mech->current_delta();
                }
                const ParamVector u = base.step(lg.grad, xt, eta);
                mech->step(lg.grad, u);
                if (rec.ledger)
                    rec.ledger->record(lg.grad, x_before, delta_before, s_before, mech->last_h(),
                                       lg.loss);
                rec.h_curve.push_back(mech->last_h());
                rec.s_sum_curve.push_back(mech->s_sum());
                const TunerState& ts = mech->tuner();
                const std::vector<double> w = mech->wealth();
                for (std::size_t i = 0; i < n_scales; ++i) {
                    rec.s_curves[i].push_back(ts.s[i]);
                    rec.wealth_curves[i].push_back(w[i]);
                }
            } else {
                const ParamVector u = base.step(lg.grad, x, eta);
                axpy(1.0, u, x);
            }
        } catch (const std::domain_error& ex) {
            divergence_note = std::string("non-finite update at step ") + std::to_string(t) +
                              ": " + ex.what();
            rec.diverged = true;
            break;
        }

        rec.loss_curve.push_back(lg.loss);
        rec.grad_norm_curve.push_back(grad_norm);
        rec.steps_run = t + 1;
    }

    rec.final_x = mech ? mech->x() : x;
    rec.final_loss = full_dataset_loss(obj, rec.final_x, data ? &*data : nullptr);

    if (rec.diverged && throw_on_divergence)
        throw DivergenceError("run_experiment: " + divergence_note);
    return rec;
}

SweepResult lr_sweep(const ExperimentConfig& config, const std::vector<double>& grid) {
    if (grid.empty())
        throw std::invalid_argument("lr_sweep: empty grid");
    for (double eta : grid)
        if (!(eta > 0.0) || !std::isfinite(eta))
            throw std::invalid_argument("lr_sweep: grid learning rates must be finite and > 0");

    SweepResult out;
    out.grid = grid;
    out.records.reserve(grid.size());
    for (double eta : grid) {
        ExperimentConfig c = config;
        c.mechanic.enabled = false;
        c.optimizer.lr = eta;
        out.records.push_back(run_experiment(c, false));
    }

    std::size_t best = grid.size();
    double best_loss = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < out.records.size(); ++i) {
        const RunRecord& r = out.records[i];
        if (r.diverged || !std::isfinite(r.final_loss))
            continue;
        if (r.final_loss < best_loss) {
            best_loss = r.final_loss;
            best = i;
        }
    }
    if (best == grid.size())
        throw DivergenceError("lr_sweep: every grid learning rate diverged");
    out.best_index = best;
    return out;
}

} // namespace mechanic
