#include "mechanic/commands.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <stdexcept>

#include "mechanic/csv.hpp"
#include "mechanic/errors.hpp"
#include "mechanic/harness.hpp"
#include "mechanic/mechanic.hpp"
#include "mechanic/rng.hpp"
#include "mechanic/svg.hpp"
#include "mechanic/theory_checks.hpp"

namespace fs = std::filesystem;

namespace mechanic {

std::string resolve_output_dir(const std::string& dir) {
    fs::path p(dir);
    if (p.is_absolute())
        return p.string();
    const char* root = std::getenv(kOutputRootEnv);
    if (root && *root)
        return (fs::path(root) / p).string();
    return p.string();
}

namespace {

int guarded(const std::function<int()>& body) {
    try {
        return body();
    } catch (const DivergenceError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitDivergence;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfigError;
    } catch (const ParseError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfigError;
    }
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << text;
    if (!out)
        throw std::runtime_error("write failed for " + path.string());
}

void write_trace_csv(const fs::path& path, const RunRecord& rec) {
    std::vector<std::string> header = {"step", "loss", "grad_norm"};
    const std::size_t n = rec.s_curves.size();
    if (rec.mechanic_on) {
        header.push_back("h");
        header.push_back("s_sum");
        for (std::size_t i = 0; i < n; ++i)
            header.push_back("s_" + std::to_string(i));
        for (std::size_t i = 0; i < n; ++i)
            header.push_back("wealth_" + std::to_string(i));
    }
    std::vector<std::vector<double>> rows;
    rows.reserve(rec.loss_curve.size());
    for (std::size_t t = 0; t < rec.loss_curve.size(); ++t) {
        std::vector<double> row = {static_cast<double>(t), rec.loss_curve[t],
                                   rec.grad_norm_curve[t]};
        if (rec.mechanic_on) {
            row.push_back(rec.h_curve[t]);
            row.push_back(rec.s_sum_curve[t]);
            for (std::size_t i = 0; i < n; ++i)
                row.push_back(rec.s_curves[i][t]);
            for (std::size_t i = 0; i < n; ++i)
                row.push_back(rec.wealth_curves[i][t]);
        }
        rows.push_back(std::move(row));
    }
    write_csv(path.string(), header, rows);
}

ExperimentConfig load_config(const std::string& config_path,
                             const std::vector<std::string>& overrides,
                             const std::string& output_dir) {
    ExperimentConfig cfg = parse_config(config_path);
    for (const auto& ov : overrides)
        apply_override(cfg, ov);
    if (!output_dir.empty())
        cfg.run.output_dir = output_dir;
    validate_config(cfg);
    return cfg;
}

} // namespace

int cmd_run(const RunCmdOptions& options) {
    return guarded([&]() {
        const ExperimentConfig cfg = load_config(options.config_path, options.overrides,
                                                 options.output_dir);
        const fs::path out = resolve_output_dir(cfg.run.output_dir);
        fs::create_directories(out);
        write_text_file(out / "config_resolved.ini", config_echo(cfg));

        const RunRecord rec = run_experiment(cfg, false);
        write_trace_csv(out / "trace.csv", rec);

        std::printf("run: steps=%ld initial_loss=%s final_loss=%s%s config_hash=%llu out=%s\n",
                    rec.steps_run, format_double(rec.initial_loss).c_str(),
                    format_double(rec.final_loss).c_str(),
                    rec.mechanic_on && !rec.s_sum_curve.empty()
                        ? (" s_sum=" + format_double(rec.s_sum_curve.back())).c_str()
                        : "",
                    static_cast<unsigned long long>(rec.config_hash), out.string().c_str());
        if (rec.diverged) {
            std::fprintf(stderr, "error: run diverged after %ld steps (see %s)\n", rec.steps_run,
                         (out / "trace.csv").string().c_str());
            return kExitDivergence;
        }
        return kExitOk;
    });
}

int cmd_sweep(const SweepCmdOptions& options) {
    return guarded([&]() {
        if (options.grid.empty())
            throw ConfigError("sweep: provide at least one learning rate via --grid");
        const ExperimentConfig cfg = load_config(options.config_path, options.overrides,
                                                 options.output_dir);
        const fs::path out = resolve_output_dir(cfg.run.output_dir);
        fs::create_directories(out);
        write_text_file(out / "config_resolved.ini", config_echo(cfg));

        const SweepResult sweep = lr_sweep(cfg, options.grid);

        std::vector<std::vector<double>> rows;
        for (std::size_t i = 0; i < sweep.grid.size(); ++i) {
            const RunRecord& rec = sweep.records[i];
            const fs::path sub = out / ("eta_" + std::to_string(i));
            fs::create_directories(sub);
            write_trace_csv(sub / "trace.csv", rec);
            rows.push_back({sweep.grid[i], rec.final_loss, rec.diverged ? 1.0 : 0.0,
                            i == sweep.best_index ? 1.0 : 0.0});
        }
        write_csv((out / "sweep.csv").string(), {"eta", "final_loss", "diverged", "winner"}, rows);

        std::printf("sweep: winner eta=%s final_loss=%s out=%s\n",
                    format_double(sweep.grid[sweep.best_index]).c_str(),
                    format_double(sweep.records[sweep.best_index].final_loss).c_str(),
                    out.string().c_str());
        return kExitOk;
    });
}

namespace {

struct CheckLine {
    std::string name;
    bool pass = false;
    long violations = 0;
    double worst_margin = 0.0;
};

void report(std::vector<CheckLine>& lines, const std::string& name, bool pass, long violations,
            double worst_margin) {
    std::printf("%s %s violations=%ld worst_margin=%s\n", pass ? "PASS" : "FAIL", name.c_str(),
                violations, format_double(worst_margin).c_str());
    lines.push_back({name, pass, violations, worst_margin});
}

void check_inequality(std::vector<CheckLine>& lines, unsigned long seed, long n) {
    for (unsigned long s = seed; s < seed + 3; ++s) {
        const InequalitySweepReport rep = sweep_technical_inequality(n, s);
        bool stratified = true;
        for (long count : rep.case_counts)
            if (count < rep.n_samples / 10)
                stratified = false;
        report(lines, "inequality_sweep_seed" + std::to_string(s),
               rep.violations == 0 && stratified, rep.violations, rep.worst_margin);
    }
}

// Bounded trace with a positive opening step (the bound's log needs
// m_1 > 0) and a random overall magnitude, so the battery exercises the
// scale-free range rather than one unit scale.
std::vector<double> random_h_trace(std::uint64_t seed, long T) {
    Rng rng(seed);
    std::vector<double> h(static_cast<std::size_t>(T));
    h[0] = rng.uniform(0.0, 1.0);
    for (std::size_t t = 1; t < h.size(); ++t)
        h[t] = rng.uniform(-1.0, 1.0);
    const double scale = std::pow(10.0, rng.uniform(-2.0, 2.0));
    for (double& v : h)
        v *= scale;
    if (h[0] == 0.0)
        h[0] = 0.5 * scale;
    return h;
}

void check_bound(std::vector<CheckLine>& lines, unsigned long seed) {
    long margin_violations = 0;
    long wealth_violations = 0;
    double worst_margin = std::numeric_limits<double>::infinity();
    double min_wealth = std::numeric_limits<double>::infinity();
    for (long T : {100L, 1000L}) {
        for (long i = 0; i < 100; ++i) {
            const std::vector<double> h =
                random_h_trace(Rng::mix(seed, static_cast<std::uint64_t>(T) * 1000 +
                                                  static_cast<std::uint64_t>(i)),
                               T);
            const TheoreticalRun run = run_theoretical_tuner(h, 1.0, 1.0);
            for (double w : run.wealth) {
                min_wealth = std::min(min_wealth, w);
                if (!(w > 0.0))
                    ++wealth_violations;
            }
            for (double s_ref : {0.0, 0.01, 1.0, 100.0}) {
                const double margin = regret_bound_margin(h, s_ref, 10.0);
                worst_margin = std::min(worst_margin, margin);
                if (!(margin >= 0.0))
                    ++margin_violations;
            }
        }
    }
    report(lines, "theorem3_bound_battery", margin_violations == 0, margin_violations,
           worst_margin);
    report(lines, "wealth_positivity_battery", wealth_violations == 0, wealth_violations,
           min_wealth);
}

void check_tuner(std::vector<CheckLine>& lines, unsigned long seed) {
    // Nonnegativity over a long random feedback stream.
    TunerParams params;
    TunerState state = tuner_init(params);
    Rng rng(Rng::mix(seed, 7));
    long nonneg_violations = 0;
    double min_seen = std::numeric_limits<double>::infinity();
    for (long t = 0; t < 10000; ++t) {
        tuner_step(state, rng.uniform(-2.0, 2.0), params);
        for (const auto* arr : {&state.m, &state.v, &state.r, &state.s})
            for (double v : *arr) {
                min_seen = std::min(min_seen, v);
                if (!(v >= 0.0) || !std::isfinite(v))
                    ++nonneg_violations;
            }
    }
    report(lines, "tuner_nonnegativity", nonneg_violations == 0, nonneg_violations, min_seen);

    // First emitted scale approximates s_init.
    TunerState fresh = tuner_init(params);
    tuner_step(fresh, 1.0, params);
    const double rel = std::fabs(tuner_sum(fresh.s) - params.s_init) / params.s_init;
    report(lines, "first_scale_matches_s_init", rel <= 1e-6 + params.epsilon / 1.0, 0, rel);

    // Positive rescaling of the whole stream leaves scales unchanged at
    // epsilon = 0.
    TunerParams sf = params;
    sf.epsilon = 0.0;
    TunerState a = tuner_init(sf), b = tuner_init(sf);
    Rng stream(Rng::mix(seed, 8));
    double worst_rel = 0.0;
    for (long t = 0; t < 10000; ++t) {
        const double h = stream.normal();
        tuner_step(a, h, sf);
        tuner_step(b, 1e3 * h, sf);
        for (std::size_t i = 0; i < sf.n(); ++i) {
            const double denom = std::max(std::fabs(a.s[i]), 1e-300);
            worst_rel = std::max(worst_rel, std::fabs(a.s[i] - b.s[i]) / denom);
        }
    }
    report(lines, "scale_freeness", worst_rel <= 1e-10, worst_rel <= 1e-10 ? 0 : 1, worst_rel);
}

void check_identity(std::vector<CheckLine>& lines, unsigned long seed) {
    double worst = 0.0;
    long violations = 0;
    for (const char* opt : {"sgd", "adamw"}) {
        ExperimentConfig cfg;
        cfg.objective.kind = "logreg";
        cfg.objective.dim = 20;
        cfg.data.n = 512;
        cfg.data.noise = 0.1;
        cfg.data.seed = seed;
        cfg.optimizer.kind = opt;
        cfg.optimizer.lr = std::string(opt) == "sgd" ? 0.1 : 0.001;
        cfg.mechanic.lambda = 0.0;
        cfg.run.steps = 200;
        cfg.run.batch_size = 64;
        cfg.run.seed = seed;
        const RunRecord rec = run_experiment(cfg);
        Rng rng(Rng::mix(seed, 21));
        for (int k = 0; k < 5; ++k) {
            const double s_ref = rng.uniform(0.1, 7.0);
            ParamVector x_target(20);
            for (double& v : x_target)
                v = rng.normal();
            const double res = theorem1_residual(*rec.ledger, s_ref, x_target);
            worst = std::max(worst, res);
            if (!(res <= 1e-9))
                ++violations;
        }
    }
    report(lines, "theorem1_identity", violations == 0, violations, worst);
}

} // namespace

int cmd_check(const CheckCmdOptions& options) {
    return guarded([&]() {
        if (options.n_samples < 1)
            throw ConfigError("check: n_samples must be >= 1");
        const bool all = options.suite == "all";
        if (!all && options.suite != "inequality" && options.suite != "bound" &&
            options.suite != "tuner" && options.suite != "identity")
            throw ConfigError("check: unknown suite '" + options.suite +
                              "' (expected all, inequality, bound, tuner, identity)");

        std::vector<CheckLine> lines;
        if (all || options.suite == "inequality")
            check_inequality(lines, options.seed, options.n_samples);
        if (all || options.suite == "bound")
            check_bound(lines, options.seed);
        if (all || options.suite == "tuner")
            check_tuner(lines, options.seed);
        if (all || options.suite == "identity")
            check_identity(lines, options.seed);

        if (options.inject_violation) {
            std::printf("FAIL injected_violation violations=1 worst_margin=-1\n");
            lines.push_back({"injected_violation", false, 1, -1.0});
        }

        const fs::path out = resolve_output_dir(options.output_dir);
        fs::create_directories(out);
        std::ofstream csv(out / "check_report.csv", std::ios::binary);
        csv << "check,pass,violations,worst_margin\n";
        bool ok = true;
        for (const CheckLine& line : lines) {
            ok = ok && line.pass;
            csv << line.name << ',' << (line.pass ? 1 : 0) << ',' << line.violations << ','
                << format_double(line.worst_margin) << '\n';
        }
        std::printf("%s: %zu checks, report at %s\n", ok ? "ok" : "FAILED", lines.size(),
                    (out / "check_report.csv").string().c_str());
        return ok ? kExitOk : kExitCheckFailure;
    });
}

int cmd_plot(const PlotCmdOptions& options) {
    return guarded([&]() {
        if (options.csv_paths.empty())
            throw ConfigError("plot: provide at least one CSV path");
        if (options.columns.empty())
            throw ConfigError("plot: provide at least one column name");

        std::vector<PlotSeries> series;
        for (const std::string& path : options.csv_paths) {
            const CsvTable table = read_csv(path);
            const std::size_t xi = column_index(table, options.x_column);
            for (const std::string& col : options.columns) {
                const std::size_t yi = column_index(table, col);
                PlotSeries s;
                s.name = options.csv_paths.size() > 1
                             ? fs::path(path).stem().string() + ":" + col
                             : col;
                for (const auto& row : table.rows) {
                    s.x.push_back(row[xi]);
                    s.y.push_back(row[yi]);
                }
                series.push_back(std::move(s));
            }
        }

        PlotOptionsSvg svg_opts;
        svg_opts.title = options.title;
        svg_opts.x_label = options.x_column;
        svg_opts.log_y = options.log_y;
        write_text_file(options.out_path, render_line_plot(series, svg_opts));
        std::printf("plot: %zu series -> %s\n", series.size(), options.out_path.c_str());
        return kExitOk;
    });
}

} // namespace mechanic
