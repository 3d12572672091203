#include "mechanic/tuner.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mechanic {

void validate(const TunerParams& params) {
    if (params.betas.empty())
        throw std::invalid_argument("tuner: betas must be non-empty");
    for (double b : params.betas)
        if (!(b >= 0.0 && b <= 1.0))
            throw std::invalid_argument("tuner: beta " + std::to_string(b) +
                                        " outside [0, 1]");
    if (!(params.s_init > 0.0))
        throw std::invalid_argument("tuner: s_init must be positive");
    if (!(params.epsilon >= 0.0))
        throw std::invalid_argument("tuner: epsilon must be nonnegative");
    if (!(params.lambda >= 0.0))
        throw std::invalid_argument("tuner: lambda must be nonnegative");
}

TunerState tuner_init(const TunerParams& params) {
    validate(params);
    TunerState st;
    st.m.assign(params.n(), 0.0);
    st.v.assign(params.n(), 0.0);
    st.r.assign(params.n(), 0.0);
    st.s.assign(params.n(), 0.0);
    st.t = 0;
    return st;
}

void tuner_step(TunerState& state, double h, const TunerParams& params) {
    if (!std::isfinite(h)) {
        if (params.skip_nonfinite_h) return;
        throw std::domain_error("tuner: non-finite feedback h");
    }
    const auto n = params.n();
    const double habs = std::fabs(h);
    for (std::size_t i = 0; i < n; ++i) {
        const double beta = params.betas[i];
        state.m[i] = std::max(beta * state.m[i], habs);
        state.v[i] = beta * beta * state.v[i] + h * h;
        state.r[i] = std::max(0.0, beta * state.r[i] - state.s[i] * h);
        const double wealth = params.s_init * state.m[i] / static_cast<double>(n) + state.r[i];
        const double denom = std::sqrt(state.v[i]) + params.epsilon;
        state.s[i] = denom > 0.0 ? wealth / denom : 0.0;
    }
    ++state.t;
}

double tuner_sum(const std::vector<double>& s) {
    double acc = 0.0;
    for (double v : s) acc += v;
    return acc;
}

std::vector<double> tuner_wealth(const TunerState& state, const TunerParams& params) {
    std::vector<double> w(params.n());
    for (std::size_t i = 0; i < params.n(); ++i)
        w[i] = params.s_init * state.m[i] / static_cast<double>(params.n()) + state.r[i];
    return w;
}

TheoreticalTunerState theoretical_tuner_init(double w0, double beta, double epsilon) {
    if (!(w0 > 0.0))
        throw std::invalid_argument("theoretical tuner: w0 must be positive");
    if (!(beta >= 0.0 && beta <= 1.0))
        throw std::invalid_argument("theoretical tuner: beta outside [0, 1]");
    if (!(epsilon >= 0.0))
        throw std::invalid_argument("theoretical tuner: epsilon must be nonnegative");
    TheoreticalTunerState st;
    st.w0 = w0;
    st.beta = beta;
    st.epsilon = epsilon;
    return st;
}

void theoretical_tuner_step(TheoreticalTunerState& state, double h) {
    if (!std::isfinite(h))
        throw std::domain_error("theoretical tuner: non-finite feedback h");
    const double m_prev = state.m;
    state.m = std::max(state.beta * state.m, h);
    const double h_clipped = std::clamp(h, -m_prev, m_prev);
    state.q = state.beta * state.q + h_clipped;
    state.r = state.beta * state.r - state.s * h_clipped;
    const double wealth = state.w0 + state.r;
    state.v = state.beta * state.beta * state.v + h_clipped * h_clipped;
    const double base = 4.0 * state.m * state.m + state.v;
    if (base > 0.0) {
        const double direction = std::clamp(state.q / std::sqrt(base), 0.0, 1.0);
        state.s = wealth / (std::sqrt(base) + state.epsilon) * direction;
    } else {
        state.s = 0.0;
    }
}

} // namespace mechanic
