#pragma once

#include <string>
#include <vector>

namespace mechanic {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailure = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitDivergence = 3;

// Relative output directories resolve under $MECHANIC_OUTPUT_ROOT when set.
inline constexpr const char* kOutputRootEnv = "MECHANIC_OUTPUT_ROOT";
std::string resolve_output_dir(const std::string& dir);

struct RunCmdOptions {
    std::string config_path;
    std::vector<std::string> overrides; // section.key=value, applied in order
    std::string output_dir;             // overrides [run] output_dir when nonempty
};

// Executes one experiment: writes config_resolved.ini and trace.csv into the
// output directory, prints a summary line. Divergence still writes both
// files (truncated trace) and exits 3.
int cmd_run(const RunCmdOptions& options);

struct SweepCmdOptions {
    std::string config_path;
    std::vector<std::string> overrides;
    std::vector<double> grid;
    std::string output_dir;
};

// Baseline grid search: per-eta traces under eta_<i>/, sweep.csv summary
// (eta, final_loss, diverged, winner), resolved config echo.
int cmd_sweep(const SweepCmdOptions& options);

struct CheckCmdOptions {
    std::string suite = "all"; // all | inequality | bound | tuner | identity
    unsigned long seed = 1;
    long n_samples = 100000;   // inequality sweep size per seed
    std::string output_dir = "check_out";
    bool inject_violation = false; // test hook: forces one synthetic failure
};

// Runs the verification battery, printing one PASS/FAIL line per check and
// writing check_report.csv with the observed margins. Exit 1 on any FAIL.
int cmd_check(const CheckCmdOptions& options);

struct PlotCmdOptions {
    std::vector<std::string> csv_paths;
    std::vector<std::string> columns; // y columns, same names in every file
    std::string x_column = "step";
    std::string out_path = "plot.svg";
    std::string title;
    bool log_y = false;
};

int cmd_plot(const PlotCmdOptions& options);

} // namespace mechanic
