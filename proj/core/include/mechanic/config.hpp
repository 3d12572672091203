#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace mechanic {

// Experiment description parsed from a sectioned key = value file. The
// schema is strict: unknown sections or keys are errors (with a spelling
// suggestion), because a silently ignored key corrupts experiments.

struct ObjectiveConfig {
    std::string kind = "logreg"; // quadratic | linreg | logreg | multilogreg | mlp
    long dim = 20;               // feature dimension (quadratic: parameter dimension)
    long classes = 3;            // multilogreg only
    long hidden = 16;            // mlp only
    long outputs = 1;            // mlp only
    std::string head = "mse";    // mlp only: mse | cross_entropy
};

struct DataConfig {
    std::string source = "synthetic"; // synthetic | libsvm
    std::string path;                 // libsvm only; required there
    long n = 512;                     // synthetic only
    double noise = 0.1;               // synthetic label-flip probability
    unsigned long seed = 1;           // synthetic generator seed
};

struct OptimizerConfig {
    std::string kind = "sgd"; // sgd | momentum | adamw | lion
    double lr = 0.01;
    double weight_decay = 0.0;
    double momentum_beta = 0.9;
    double adamw_beta1 = 0.9;
    double adamw_beta2 = 0.999;
    double adamw_epsilon = 1e-8;
    double lion_beta1 = 0.9;
    double lion_beta2 = 0.99;
};

struct ScheduleConfig {
    std::string kind = "constant"; // constant | linear_warmup_linear_decay |
                                   // cosine_with_warmup | step_decay
    long total_steps = 0;          // 0 = span the whole run
    long warmup_steps = 0;
    std::vector<long> milestones;  // step_decay boundaries
    double decay_factor = 0.1;
};

struct MechanicConfig {
    bool enabled = true;
    std::vector<double> betas = {0.9, 0.99, 0.999, 0.9999, 0.99999, 0.999999};
    double lambda = 0.01;
    double s_init = 1e-8;
    double epsilon = 1e-8;
    bool skip_nonfinite_h = false;
    std::string delta_mode = "stored"; // stored | recovered
};

struct RunConfig {
    long steps = 200;           // ignored when epochs > 0
    long epochs = 0;            // > 0 takes precedence over steps
    long batch_size = 64;
    unsigned long seed = 1;     // init draw and batch shuffling
    bool ledger = true;
    double grad_clip_norm = 0.0; // 0 = off; clips g before any consumer
    std::string init = "zeros";  // zeros | ones | normal
    double init_scale = 1.0;     // normal init stddev multiplier
    std::string output_dir = "out";
};

struct ExperimentConfig {
    ObjectiveConfig objective;
    DataConfig data;
    OptimizerConfig optimizer;
    ScheduleConfig schedule;
    MechanicConfig mechanic;
    RunConfig run;
};

// Parses a config file. Throws ConfigError naming the offending key and
// line; unknown keys get a nearest-match suggestion. Validates after parse.
ExperimentConfig parse_config(const std::string& path);

// Same parser over an in-memory string; source_name appears in errors.
ExperimentConfig parse_config_text(std::string_view text, const std::string& source_name);

// Applies one "section.key=value" override on top of a parsed config.
void apply_override(ExperimentConfig& cfg, const std::string& expr);

// Cross-field checks; throws ConfigError. Called by parse_config, and again
// by commands after overrides.
void validate_config(const ExperimentConfig& cfg);

// Canonical text form: every key in a fixed order, doubles at full
// precision. parse_config_text(config_echo(c)) reproduces c exactly.
std::string config_echo(const ExperimentConfig& cfg);

// FNV-1a over the canonical echo; stable run identifier.
std::uint64_t config_hash(const ExperimentConfig& cfg);
std::uint64_t fnv1a(std::string_view bytes);

} // namespace mechanic
