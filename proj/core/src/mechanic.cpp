#include "mechanic/mechanic.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace mechanic {

double compute_h(const ParamVector& delta, const ParamVector& g, const ParamVector& x,
                 double s_sum, double lambda) {
    check_same_dim(delta, g, "compute_h: delta vs g");
    check_same_dim(delta, x, "compute_h: delta vs x");
    if (!(s_sum >= 0.0))
        throw std::invalid_argument("compute_h: s_sum must be >= 0");
    if (!(lambda >= 0.0))
        throw std::invalid_argument("compute_h: lambda must be >= 0");

    double h = dot(delta, g);
    if (lambda > 0.0 && s_sum > 0.0) {
        const double x_norm = nrm2(x);
        if (x_norm > 1e-30)
            h += lambda * s_sum * nrm2(g) * dot(delta, x) / x_norm;
    }
    return h;
}

ParamVector recover_delta(const ParamVector& x, const ParamVector& x_ref,
                          double s_sum, double epsilon) {
    check_same_dim(x, x_ref, "recover_delta");
    if (!(s_sum >= 0.0))
        throw std::invalid_argument("recover_delta: s_sum must be >= 0");
    if (!(epsilon >= 0.0))
        throw std::invalid_argument("recover_delta: epsilon must be >= 0");

    ParamVector delta(x.size(), 0.0);
    const double denom = s_sum + epsilon;
    if (denom == 0.0)
        return delta;
    for (std::size_t i = 0; i < x.size(); ++i)
        delta[i] = (x[i] - x_ref[i]) / denom;
    return delta;
}

Mechanic::Mechanic(ParamVector x0, TunerParams params, DeltaMode mode)
    : params_(std::move(params)), mode_(mode), x_ref_(std::move(x0)), x_(x_ref_) {
    validate(params_);
    if (x_ref_.empty())
        throw std::invalid_argument("Mechanic: empty parameter vector");
    if (!all_finite(x_ref_))
        throw std::domain_error("Mechanic: non-finite entry in x0");
    delta_.emplace(x_ref_.size(), 0.0);
    tuner_ = tuner_init(params_);
}

double Mechanic::s_sum() const {
    if (pinned_scale_)
        return *pinned_scale_;
    return tuner_sum(tuner_.s);
}

ParamVector Mechanic::current_delta() const {
    if (delta_)
        return *delta_;
    // Only reachable in recovered mode after the scale left zero: divide by
    // the exact scale so reconstruction stays consistent with step().
    return recover_delta(x_, x_ref_, s_sum(), 0.0);
}

void Mechanic::pin_scale(double fixed_scale) {
    if (!(fixed_scale > 0.0) || !std::isfinite(fixed_scale))
        throw std::invalid_argument("Mechanic: pinned scale must be finite and > 0");
    pinned_scale_ = fixed_scale;
}

const ParamVector& Mechanic::step(const ParamVector& g, const ParamVector& u) {
    check_same_dim(g, x_, "Mechanic::step: g");
    check_same_dim(u, x_, "Mechanic::step: u");
    if (!all_finite(g))
        throw std::domain_error("Mechanic::step: non-finite entry in g");
    if (!all_finite(u))
        throw std::domain_error("Mechanic::step: non-finite entry in u");

    const double s_now = s_sum();

    // In recovered mode the stored copy is dropped the first time the scale
    // is positive; before that, recovery would divide by zero and lose the
    // accumulated updates.
    if (mode_ == DeltaMode::recovered && delta_.has_value() && s_now > 0.0)
        delta_.reset();

    ParamVector scratch;
    ParamVector* delta = nullptr;
    if (delta_) {
        delta = &*delta_;
    } else {
        scratch = recover_delta(x_, x_ref_, s_now, 0.0);
        delta = &scratch;
    }

    // Feedback uses the displacement the current iterate was built from,
    // not the one extended by u below.
    last_h_ = compute_h(*delta, g, x_, s_now, params_.lambda);

    axpy(1.0, u, *delta);

    if (!pinned_scale_)
        tuner_step(tuner_, last_h_, params_);
    const double s_next = s_sum();

    for (std::size_t i = 0; i < x_.size(); ++i)
        x_[i] = x_ref_[i] + s_next * (*delta)[i];

    ++t_;
    return x_;
}

} // namespace mechanic
