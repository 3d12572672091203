#include <CLI11.hpp>

#include "mechanic/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"mechanic: learning-rate-scale tuner around pluggable base optimizers.\n"
                 "Relative output directories resolve under $MECHANIC_OUTPUT_ROOT when set."};
    app.require_subcommand(1);

    mechanic::RunCmdOptions run_opts;
    CLI::App* run = app.add_subcommand("run", "train once from a config file");
    run->add_option("config", run_opts.config_path, "config file (sectioned key = value)")
        ->required();
    run->add_option("--set", run_opts.overrides, "override section.key=value (repeatable)");
    run->add_option("-o,--out", run_opts.output_dir, "output directory (overrides [run])");

    mechanic::SweepCmdOptions sweep_opts;
    CLI::App* sweep = app.add_subcommand("sweep", "grid-search the base learning rate");
    sweep->add_option("config", sweep_opts.config_path, "config file")->required();
    sweep->add_option("--grid", sweep_opts.grid, "learning rates to try")
        ->required()
        ->expected(-1);
    sweep->add_option("--set", sweep_opts.overrides, "override section.key=value (repeatable)");
    sweep->add_option("-o,--out", sweep_opts.output_dir, "output directory");

    mechanic::CheckCmdOptions check_opts;
    CLI::App* check = app.add_subcommand("check", "run the verification battery");
    check->add_option("--suite", check_opts.suite, "all | inequality | bound | tuner | identity")
        ->capture_default_str();
    check->add_option("--seed", check_opts.seed, "base seed")->capture_default_str();
    check->add_option("-n,--samples", check_opts.n_samples, "inequality samples per seed")
        ->capture_default_str();
    check->add_option("-o,--out", check_opts.output_dir, "report directory")
        ->capture_default_str();
    check->add_flag("--inject-violation", check_opts.inject_violation)->group("");

    mechanic::PlotCmdOptions plot_opts;
    CLI::App* plot = app.add_subcommand("plot", "render CSV columns as an SVG line chart");
    plot->add_option("csv", plot_opts.csv_paths, "input CSV files")->required()->expected(-1);
    plot->add_option("--columns", plot_opts.columns, "y columns to draw")
        ->required()
        ->expected(-1);
    plot->add_option("--x", plot_opts.x_column, "x column")->capture_default_str();
    plot->add_option("--out", plot_opts.out_path, "output SVG path")->capture_default_str();
    plot->add_option("--title", plot_opts.title, "chart title");
    plot->add_flag("--log-y", plot_opts.log_y, "log10 y axis");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        // CLI11's --help path returns 0; anything else is a usage error.
        return code == 0 ? mechanic::kExitOk : mechanic::kExitConfigError;
    }

    if (run->parsed())
        return mechanic::cmd_run(run_opts);
    if (sweep->parsed())
        return mechanic::cmd_sweep(sweep_opts);
    if (check->parsed())
        return mechanic::cmd_check(check_opts);
    return mechanic::cmd_plot(plot_opts);
}
