#pragma once

#include <memory>
#include <string>
#include <vector>

#include "mechanic/vec.hpp"

namespace mechanic {

enum class ScheduleKind { constant, linear_warmup_linear_decay, cosine_with_warmup, step_decay };

struct Schedule {
    ScheduleKind kind = ScheduleKind::constant;
    double base_lr = 1.0;
    long total_steps = 0;    // required for non-constant kinds
    long warmup_steps = 0;
    std::vector<long> milestones;  // step-decay boundaries, in steps
    double decay_factor = 0.1;     // multiplier applied at each milestone
};

// eta_t for step index t. Constant schedules ignore t entirely; every other
// kind requires 0 <= t < total_steps and throws std::invalid_argument outside.
double schedule_eval(const Schedule& schedule, long t);

struct AdamWParams {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 0.0;
};

struct LionParams {
    double beta1 = 0.9;
    double beta2 = 0.99;
    double weight_decay = 0.0;
};

struct MomentumState {
    ParamVector buffer;  // heavy-ball accumulator
};

struct AdamWState {
    ParamVector m;
    ParamVector v;
    long t = 0;
};

struct LionState {
    ParamVector buffer;
};

// Stateless step: u = -eta * g.
ParamVector sgd_update(const ParamVector& g, double eta);

// Heavy ball: b <- beta * b + g, u = -eta * b. Buffer is resized on first use.
ParamVector momentum_update(MomentumState& state, const ParamVector& g, double eta, double beta);

// Bias-corrected moments with decoupled weight decay:
// u = -eta * (mhat / (sqrt(vhat) + eps) + wd * x).
ParamVector adamw_update(AdamWState& state, const ParamVector& g, const ParamVector& x,
                         double eta, const AdamWParams& params);

// Sign momentum: c = beta1*b + (1-beta1)*g, u = -eta*(sign(c) + wd*x),
// then b <- beta2*b + (1-beta2)*g. sign(0) = 0.
ParamVector lion_update(LionState& state, const ParamVector& g, const ParamVector& x,
                        double eta, const LionParams& params);

enum class BaseOptKind { sgd, momentum, adamw, lion };

// Uniform front for the harness: owns whatever per-algorithm buffers the
// selected update rule needs and is a pure function of its inputs.
class BaseOptimizer {
public:
    struct Config {
        BaseOptKind kind = BaseOptKind::sgd;
        double momentum_beta = 0.9;
        AdamWParams adamw;
        LionParams lion;
    };

    explicit BaseOptimizer(Config config) : config_(config) {}

    ParamVector step(const ParamVector& g, const ParamVector& x, double eta);

    const Config& config() const { return config_; }

private:
    Config config_;
    MomentumState momentum_;
    AdamWState adamw_;
    LionState lion_;
};

BaseOptKind base_opt_kind_from_string(const std::string& name);

} // namespace mechanic
