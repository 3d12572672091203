#pragma once

#include <cstddef>
#include <vector>

namespace mechanic {

// Hyperparameters of the scale tuner. One tuner instance runs n copies of
// the same update rule, one per decay factor, and the emitted scale is the
// sum over copies.
struct TunerParams {
    std::vector<double> betas{0.9, 0.99, 0.999, 0.9999, 0.99999, 0.999999};
    double lambda = 0.01;   // weight of the norm-regularization term in the feedback
    double s_init = 1e-8;   // magnitude of the first emitted scale
    double epsilon = 1e-8;  // denominator stabilizer; 0 selects the exactly scale-free mode
    bool skip_nonfinite_h = false;

    std::size_t n() const { return betas.size(); }
};

// Throws std::invalid_argument when a field is out of range.
void validate(const TunerParams& params);

// Per-copy running statistics. All arrays have length params.n().
struct TunerState {
    std::vector<double> m;  // running max of |h|, decayed by beta
    std::vector<double> v;  // beta^2-discounted sum of h^2
    std::vector<double> r;  // discounted reward, floored at zero
    std::vector<double> s;  // current per-copy scale
    long t = 0;
};

TunerState tuner_init(const TunerParams& params);

// One feedback step. Updates every copy in place; the new scales are in
// state.s afterwards. Non-finite h throws std::domain_error, or leaves the
// state untouched when params.skip_nonfinite_h is set.
//
// m tracks |h|: with a signed max, a feedback stream that starts negative
// would pin every scale at zero permanently.
void tuner_step(TunerState& state, double h, const TunerParams& params);

// The single scale applied to the displacement: sum of the per-copy scales.
double tuner_sum(const std::vector<double>& s);

// Per-copy wealth s_init*m/n + r for the current state.
std::vector<double> tuner_wealth(const TunerState& state, const TunerParams& params);

// Analysis-friendly single-copy tuner. Differs from the practical rule:
// feedback is clipped to the previous max (signed), the wealth is not
// floored, and the scale carries a direction factor clip(q/sqrt(4m^2+v),0,1).
struct TheoreticalTunerState {
    double m = 0.0;  // running max of signed h
    double q = 0.0;  // discounted sum of clipped feedback
    double r = 0.0;  // discounted reward (unfloored)
    double v = 0.0;  // discounted sum of clipped feedback squared
    double s = 0.0;
    double w0 = 1.0;    // initial wealth
    double beta = 1.0;  // discount factor
    double epsilon = 1e-8;
};

TheoreticalTunerState theoretical_tuner_init(double w0, double beta, double epsilon = 1e-8);

// One step of the analysis variant. Throws std::domain_error on non-finite h.
void theoretical_tuner_step(TheoreticalTunerState& state, double h);

} // namespace mechanic
