#include "mechanic/base_opt.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mechanic {

double schedule_eval(const Schedule& schedule, long t) {
    if (!(schedule.base_lr > 0.0))
        throw std::invalid_argument("schedule: base_lr must be positive");
    if (schedule.kind == ScheduleKind::constant) return schedule.base_lr;

    if (t < 0 || t >= schedule.total_steps)
        throw std::invalid_argument("schedule: step " + std::to_string(t) +
                                    " outside [0, " + std::to_string(schedule.total_steps) + ")");
    if (schedule.warmup_steps > schedule.total_steps)
        throw std::invalid_argument("schedule: warmup exceeds total_steps");

    switch (schedule.kind) {
        case ScheduleKind::linear_warmup_linear_decay: {
            if (t < schedule.warmup_steps)
                return schedule.base_lr * static_cast<double>(t + 1) /
                       static_cast<double>(schedule.warmup_steps);
            const double span = static_cast<double>(schedule.total_steps - schedule.warmup_steps);
            return schedule.base_lr * static_cast<double>(schedule.total_steps - t) / span;
        }
        case ScheduleKind::cosine_with_warmup: {
            if (t < schedule.warmup_steps)
                return schedule.base_lr * static_cast<double>(t + 1) /
                       static_cast<double>(schedule.warmup_steps);
            const double progress = static_cast<double>(t - schedule.warmup_steps) /
                                    static_cast<double>(schedule.total_steps - schedule.warmup_steps);
            return schedule.base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
        }
        case ScheduleKind::step_decay: {
            double lr = schedule.base_lr;
            for (long milestone : schedule.milestones)
                if (t >= milestone) lr *= schedule.decay_factor;
            return lr;
        }
        default:
            return schedule.base_lr;
    }
}

ParamVector sgd_update(const ParamVector& g, double eta) {
    ParamVector u(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) u[i] = -eta * g[i];
    return u;
}

ParamVector momentum_update(MomentumState& state, const ParamVector& g, double eta, double beta) {
    if (state.buffer.empty()) state.buffer.assign(g.size(), 0.0);
    check_same_dim(state.buffer, g);
    ParamVector u(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        state.buffer[i] = beta * state.buffer[i] + g[i];
        u[i] = -eta * state.buffer[i];
    }
    return u;
}

ParamVector adamw_update(AdamWState& state, const ParamVector& g, const ParamVector& x,
                         double eta, const AdamWParams& params) {
    if (state.m.empty()) {
        state.m.assign(g.size(), 0.0);
        state.v.assign(g.size(), 0.0);
    }
    check_same_dim(state.m, g);
    check_same_dim(x, g);
    ++state.t;
    const double bc1 = 1.0 - std::pow(params.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(params.beta2, static_cast<double>(state.t));
    ParamVector u(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        state.m[i] = params.beta1 * state.m[i] + (1.0 - params.beta1) * g[i];
        state.v[i] = params.beta2 * state.v[i] + (1.0 - params.beta2) * g[i] * g[i];
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        u[i] = -eta * (mhat / (std::sqrt(vhat) + params.epsilon) + params.weight_decay * x[i]);
    }
    return u;
}

ParamVector lion_update(LionState& state, const ParamVector& g, const ParamVector& x,
                        double eta, const LionParams& params) {
    if (state.buffer.empty()) state.buffer.assign(g.size(), 0.0);
    check_same_dim(state.buffer, g);
    check_same_dim(x, g);
    ParamVector u(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double c = params.beta1 * state.buffer[i] + (1.0 - params.beta1) * g[i];
        const double sign = c > 0.0 ? 1.0 : (c < 0.0 ? -1.0 : 0.0);
        u[i] = -eta * (sign + params.weight_decay * x[i]);
        state.buffer[i] = params.beta2 * state.buffer[i] + (1.0 - params.beta2) * g[i];
    }
    return u;
}

ParamVector BaseOptimizer::step(const ParamVector& g, const ParamVector& x, double eta) {
    switch (config_.kind) {
        case BaseOptKind::sgd:
            return sgd_update(g, eta);
        case BaseOptKind::momentum:
            return momentum_update(momentum_, g, eta, config_.momentum_beta);
        case BaseOptKind::adamw:
            return adamw_update(adamw_, g, x, eta, config_.adamw);
        case BaseOptKind::lion:
            return lion_update(lion_, g, x, eta, config_.lion);
    }
    throw std::logic_error("base optimizer: unknown kind");
}

BaseOptKind base_opt_kind_from_string(const std::string& name) {
    if (name == "sgd") return BaseOptKind::sgd;
    if (name == "momentum") return BaseOptKind::momentum;
    if (name == "adamw") return BaseOptKind::adamw;
    if (name == "lion") return BaseOptKind::lion;
    throw std::invalid_argument("unknown base optimizer '" + name + "'");
}

} // namespace mechanic
