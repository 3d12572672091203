#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "mechanic/base_opt.hpp"
#include "mechanic/config.hpp"
#include "mechanic/data.hpp"
#include "mechanic/models.hpp"
#include "mechanic/tuner.hpp"
#include "mechanic/vec.hpp"

namespace mechanic {

// Per-step log of the quantities the regret statements are written in.
// Raw mode keeps every gradient vector so the comparator term <g_t, x_o>
// can be formed for arbitrary x_o; scalars mode keeps only per-step inner
// products plus the running gradient sum (enough because the comparator is
// fixed across steps), for dimensions where storing T gradients is too much.
class RegretLedger {
public:
    enum class Mode { raw, scalars };

    static Mode mode_for_dim(std::size_t dim) {
        return dim <= 10000 ? Mode::raw : Mode::scalars;
    }

    RegretLedger(Mode mode, ParamVector x_ref, double lambda);

    // Values must be the ones the wrapper consumed at step t: the gradient,
    // the iterate it was evaluated at, the pre-update displacement, and the
    // scale in effect.
    void record(const ParamVector& g, const ParamVector& x, const ParamVector& delta,
                double s_sum, double h, double loss);

    std::size_t size() const { return h_.size(); }
    Mode mode() const { return mode_; }
    const ParamVector& x_ref() const { return x_ref_; }
    double lambda() const { return lambda_; }

    double h(std::size_t t) const { return h_.at(t); }
    double s_sum(std::size_t t) const { return s_sum_.at(t); }
    double loss(std::size_t t) const { return loss_.at(t); }
    double g_dot_x(std::size_t t) const { return g_dot_x_.at(t); }
    double g_dot_delta(std::size_t t) const { return g_dot_delta_.at(t); }

    // Raw mode only; throws std::logic_error in scalars mode.
    const ParamVector& g(std::size_t t) const;
    // Sum of all recorded gradients (kept in both modes).
    const ParamVector& g_total() const { return g_total_; }

    unsigned long seed = 0;
    std::uint64_t config_hash = 0;

private:
    Mode mode_;
    ParamVector x_ref_;
    double lambda_;
    std::vector<double> h_, s_sum_, loss_, g_dot_x_, g_dot_delta_;
    std::vector<ParamVector> g_steps_;
    ParamVector g_total_;
};

// Sum over t of <g_t, x_t - x_target>.
double linearized_regret(const RegretLedger& ledger, const ParamVector& x_target);

// Sum over t of h_t * (s_sum_t - s_ref): the scalar game the tuner plays.
double tuner_regret(const RegretLedger& ledger, double s_ref);

// Relative gap |LHS - RHS| / (1 + |LHS|) of the decomposition
//   sum <g_t, x_t - x_o> = sum h_t (s_t - s_o)
//                          + s_o * sum <g_t, Delta_t - (x_o - x_ref)/s_o>,
// which is an algebraic identity when the ledger was recorded with
// lambda = 0 (the regularized h breaks it). Throws std::invalid_argument
// when s_ref = 0.
double theorem1_residual(const RegretLedger& ledger, double s_ref, const ParamVector& x_target);

struct RunRecord {
    std::uint64_t config_hash = 0;
    unsigned long seed = 0;
    long steps_run = 0;
    bool diverged = false;
    bool mechanic_on = false;
    double initial_loss = 0.0;
    double final_loss = 0.0; // full-dataset loss at the final iterate
    ParamVector final_x;
    std::vector<double> loss_curve;      // minibatch loss at x_t
    std::vector<double> grad_norm_curve; // unclipped gradient norm at x_t
    std::vector<double> h_curve;         // mechanic runs only
    std::vector<double> s_sum_curve;     // scale after the step
    std::vector<std::vector<double>> s_curves;      // [beta][step]
    std::vector<std::vector<double>> wealth_curves; // [beta][step]
    std::shared_ptr<RegretLedger> ledger;           // null when disabled or mechanic off
};

// Runs one training loop described by the config. A loss above 1e6 x the
// initial loss (or non-finite) trips the divergence guard: with
// throw_on_divergence the run aborts with DivergenceError naming the step;
// otherwise the record comes back with diverged = true and the curves up to
// the bad step. Deterministic given config (the seed is part of it).
RunRecord run_experiment(const ExperimentConfig& config, bool throw_on_divergence = true);

struct SweepResult {
    std::vector<double> grid;
    std::vector<RunRecord> records;  // one per grid point, config order
    std::size_t best_index = 0;      // into grid/records
};

// Baseline protocol: runs the unwrapped base optimizer (mechanic forced
// off) at each grid learning rate. Diverged runs are excluded from winner
// selection; ties in final loss go to the earliest grid element. Throws
// DivergenceError when every grid point diverged.
SweepResult lr_sweep(const ExperimentConfig& config, const std::vector<double>& grid);

// Config-to-core translation, shared by run_experiment, the CLI, and tests.
Objective objective_from_config(const ObjectiveConfig& o);
Dataset dataset_from_config(const DataConfig& d, long feature_dim);
TunerParams tuner_params_from_config(const MechanicConfig& m);
Schedule schedule_from_config(const ScheduleConfig& s, double lr, long resolved_steps);

} // namespace mechanic
