#pragma once

#include <optional>

#include "mechanic/tuner.hpp"
#include "mechanic/vec.hpp"

namespace mechanic {

// Tuner feedback for one step:
//   h = <delta, g> + lambda * s_sum * ||g|| * <delta, x> / ||x||.
// The second term vanishes when lambda = 0, s_sum = 0, or ||x|| <= 1e-30
// (the norm guard; the formula divides by ||x||).
double compute_h(const ParamVector& delta, const ParamVector& g, const ParamVector& x,
                 double s_sum, double lambda);

// (x - x_ref) / (s_sum + epsilon). Zero denominator yields the zero vector.
// With s_sum = 0 this loses the true displacement, which is why the wrapper
// keeps a stored copy until the scale leaves zero.
ParamVector recover_delta(const ParamVector& x, const ParamVector& x_ref,
                          double s_sum, double epsilon);

enum class DeltaMode {
    stored,    // keep the displacement vector across steps (default)
    recovered  // rebuild it from x each step once the scale is positive
};

// Scale wrapper around an arbitrary base optimizer. The caller owns the
// training loop: evaluate the gradient g at x(), obtain the base update u
// for that gradient, then call step(g, u). The wrapper plays the iterate
//   x_{t+1} = x_ref + s_{t+1} * Delta_{t+1},  Delta_{t+1} = sum of updates,
// with s chosen online from the scalar feedback stream.
class Mechanic {
public:
    Mechanic(ParamVector x0, TunerParams params, DeltaMode mode = DeltaMode::stored);

    // Advances one step and returns the new iterate. Throws
    // std::invalid_argument on dimension mismatch and std::domain_error on
    // non-finite entries in g or u.
    const ParamVector& step(const ParamVector& g, const ParamVector& u);

    const ParamVector& x() const { return x_; }
    const ParamVector& x_ref() const { return x_ref_; }
    const TunerState& tuner() const { return tuner_; }
    const TunerParams& params() const { return params_; }
    long step_count() const { return t_; }

    // Scale currently in effect (applied to the stored displacement).
    double s_sum() const;
    std::vector<double> wealth() const { return tuner_wealth(tuner_, params_); }
    double last_h() const { return last_h_; }

    // Displacement the next step will extend; recomputed in recovered mode.
    ParamVector current_delta() const;

    // Persistent O(d) buffers beyond x_ref and the iterate itself.
    int persistent_extra_vectors() const { return delta_.has_value() ? 1 : 0; }

    // Pins the emitted scale to a constant and bypasses the tuner; the
    // wrapped run then replays the base trajectory scaled by that constant.
    void pin_scale(double fixed_scale);

private:
    TunerParams params_;
    DeltaMode mode_;
    ParamVector x_ref_;
    ParamVector x_;
    std::optional<ParamVector> delta_;
    TunerState tuner_;
    std::optional<double> pinned_scale_;
    long t_ = 0;
    double last_h_ = 0.0;
};

} // namespace mechanic
