#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "mechanic/tuner.hpp"

namespace mechanic {

// Piecewise potential used by the wealth analysis:
// 0 for x <= 0, x^2/2 on [0, 1], x - 1/2 for x >= 1.
// Continuous, differentiable, monotone, 1-Lipschitz.
double a_fn(double x);

// One point of the inequality domain: B > 0, m >= 0, |x| <= m, B >= 4m^2.
struct InequalitySample {
    double A = 0.0;
    double B = 1.0;
    double m = 0.0;
    double x = 0.0;
};

// LHS - RHS of
//   a(-A/sqrt(B)) - (x/sqrt(B)) * clip(-A/sqrt(B), 0, 1)
//     >= a((-A - x)/sqrt(B + x^2)) - x^2/B.
// Throws std::invalid_argument when the sample violates the domain.
double technical_inequality_margin(const InequalitySample& sample);

// margin >= -tol; tol <= 0 selects the default 1e-12 * (1 + |LHS|).
bool technical_inequality_holds(const InequalitySample& sample, double tol = -1.0);

struct InequalitySweepReport {
    long n_samples = 0;
    long violations = 0;
    double worst_margin = 0.0;                  // minimum LHS - RHS seen
    std::array<long, 5> case_counts{};          // samples per proof-case regime
    std::array<double, 5> worst_by_case{};      // minimum margin per regime
    InequalitySample worst_sample;
};

// Randomized sweep over the inequality domain, stratified round-robin over
// the five case regimes of the proof so each regime gets n/5 samples.
// Each sample draws from its own seeded stream, so the report is identical
// regardless of evaluation order.
InequalitySweepReport sweep_technical_inequality(long n_samples, std::uint64_t seed);

// Replay of the analysis tuner over a feedback trace.
struct TheoreticalRun {
    std::vector<double> s_used;   // scale in effect when h_t arrived (s_1 = 0)
    std::vector<double> wealth;   // w0 + r after each step
    double m_first = 0.0;
    double m_last = 0.0;
    double sum_h_sq = 0.0;
    double max_s_used = 0.0;
};

TheoreticalRun run_theoretical_tuner(const std::vector<double>& h_trace,
                                     double beta, double w0, double epsilon = 1e-8);

// bound - actual for the discounted-regret guarantee at beta = 1, w0 = 1:
//   actual = sum_t h_t (s_t - s_ref)
//   bound  = w0 + (s_ref + max_t s_t) m_T
//            + C * s_ref * log(e + T * s_ref * m_T / (m_1 * w0)) * sqrt(sum_t h_t^2)
// Nonnegative return means the bound held. The trace must start with a
// positive h (m_1 > 0), otherwise std::invalid_argument.
double regret_bound_margin(const std::vector<double>& h_trace, double s_ref, double C);

} // namespace mechanic
