#include "mechanic/theory_checks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "mechanic/rng.hpp"

namespace mechanic {

double a_fn(double x) {
    if (x <= 0.0) return 0.0;
    if (x <= 1.0) return 0.5 * x * x;
    return x - 0.5;
}

namespace {

void check_domain(const InequalitySample& s) {
    if (!std::isfinite(s.A) || !std::isfinite(s.B) || !std::isfinite(s.m) ||
        !std::isfinite(s.x))
        throw std::invalid_argument("inequality sample: non-finite field");
    if (!(s.B > 0.0)) throw std::invalid_argument("inequality sample: B must be positive");
    if (!(s.m >= 0.0)) throw std::invalid_argument("inequality sample: m must be nonnegative");
    if (std::fabs(s.x) > s.m)
        throw std::invalid_argument("inequality sample: |x| exceeds m");
    if (s.B < 4.0 * s.m * s.m)
        throw std::invalid_argument("inequality sample: B < 4m^2");
}

double lhs_of(const InequalitySample& s) {
    const double root_b = std::sqrt(s.B);
    const double arg = -s.A / root_b;
    return a_fn(arg) - (s.x / root_b) * std::clamp(arg, 0.0, 1.0);
}

double rhs_of(const InequalitySample& s) {
    return a_fn((-s.A - s.x) / std::sqrt(s.B + s.x * s.x)) - s.x * s.x / s.B;
}

} // namespace

double technical_inequality_margin(const InequalitySample& sample) {
    check_domain(sample);
    return lhs_of(sample) - rhs_of(sample);
}

bool technical_inequality_holds(const InequalitySample& sample, double tol) {
    const double margin = technical_inequality_margin(sample);
    if (tol < 0.0) tol = 1e-12 * (1.0 + std::fabs(lhs_of(sample)));
    return margin >= -tol;
}

namespace {

// Sample A inside one of the five case regimes of the proof, given B, m, x.
// Regimes 1 and 4 (0-indexed) are only nonempty for x > 0, so those draws
// flip x to |x|.
InequalitySample sample_case(int regime, double B, double m, double x, Rng& rng) {
    const double root_b = std::sqrt(B);
    InequalitySample s;
    s.B = B;
    s.m = m;
    s.x = x;
    switch (regime) {
        case 0:  // -A/sqrt(B) <= 0: both potentials on the flat piece
            s.A = rng.uniform(0.0, 2.0 * root_b);
            break;
        case 1:  // small positive x, A in [-x, 0]
            s.x = std::fabs(x);
            s.A = rng.uniform(-s.x, 0.0);
            break;
        case 2:  // -A/sqrt(B) in [0, 1] with -A - x <= ... quadratic piece
            s.A = rng.uniform(-root_b, std::min(0.0, -x));
            break;
        case 3: {  // both arguments past the linear knee
            const double bound = -x - std::sqrt(B + x * x);
            s.A = bound - rng.next_double() * 3.0 * root_b;
            break;
        }
        default: {  // straddling the knee, needs x > 0
            s.x = std::fabs(x);
            const double low = -s.x - std::sqrt(B + s.x * s.x);
            const double high = -root_b;
            if (low < high)
                s.A = high - rng.next_double() * (high - low);
            else
                s.A = high;  // degenerate x = 0, interval collapses
            break;
        }
    }
    return s;
}

} // namespace

InequalitySweepReport sweep_technical_inequality(long n_samples, std::uint64_t seed) {
    if (n_samples < 1)
        throw std::invalid_argument("inequality sweep: need at least one sample");
    InequalitySweepReport report;
    report.n_samples = n_samples;
    report.worst_margin = std::numeric_limits<double>::infinity();
    report.worst_by_case.fill(std::numeric_limits<double>::infinity());
    for (long i = 0; i < n_samples; ++i) {
        Rng rng(Rng::mix(seed, static_cast<std::uint64_t>(i)));
        const int regime = static_cast<int>(i % 5);
        const double B = std::pow(10.0, rng.uniform(-6.0, 6.0));
        const double m = 0.5 * std::sqrt(B) * rng.next_double();
        const double x = rng.uniform(-m, m);
        const InequalitySample s = sample_case(regime, B, m, x, rng);
        const double margin = technical_inequality_margin(s);
        ++report.case_counts[static_cast<std::size_t>(regime)];
        if (margin < report.worst_by_case[static_cast<std::size_t>(regime)])
            report.worst_by_case[static_cast<std::size_t>(regime)] = margin;
        if (margin < report.worst_margin) {
            report.worst_margin = margin;
            report.worst_sample = s;
        }
        if (!technical_inequality_holds(s)) ++report.violations;
    }
    return report;
}

TheoreticalRun run_theoretical_tuner(const std::vector<double>& h_trace,
                                     double beta, double w0, double epsilon) {
    TheoreticalRun run;
    run.s_used.reserve(h_trace.size());
    run.wealth.reserve(h_trace.size());
    TheoreticalTunerState st = theoretical_tuner_init(w0, beta, epsilon);
    bool first = true;
    for (double h : h_trace) {
        run.s_used.push_back(st.s);
        run.max_s_used = std::max(run.max_s_used, st.s);
        theoretical_tuner_step(st, h);
        run.wealth.push_back(st.w0 + st.r);
        run.sum_h_sq += h * h;
        if (first) {
            run.m_first = st.m;
            first = false;
        }
    }
    run.m_last = st.m;
    return run;
}

double regret_bound_margin(const std::vector<double>& h_trace, double s_ref, double C) {
    if (h_trace.empty())
        throw std::invalid_argument("regret bound: empty trace");
    if (!(s_ref >= 0.0))
        throw std::invalid_argument("regret bound: s_ref must be nonnegative");
    constexpr double w0 = 1.0;
    const TheoreticalRun run = run_theoretical_tuner(h_trace, 1.0, w0);
    if (!(run.m_first > 0.0))
        throw std::invalid_argument("regret bound: trace must begin with positive feedback");
    double actual = 0.0;
    for (std::size_t t = 0; t < h_trace.size(); ++t)
        actual += h_trace[t] * (run.s_used[t] - s_ref);
    const double T = static_cast<double>(h_trace.size());
    const double log_arg =
        std::numbers::e + T * s_ref * run.m_last / (run.m_first * w0);
    const double bound = w0 + (s_ref + run.max_s_used) * run.m_last +
                         C * s_ref * std::log(log_arg) * std::sqrt(run.sum_h_sq);
    return bound - actual;
}

} // namespace mechanic
