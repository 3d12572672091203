#include "mechanic/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "mechanic/csv.hpp"
#include "mechanic/errors.hpp"

namespace mechanic {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

// Error location prefix: "file.ini:12: " (line 0 = no file context, used by
// overrides).
std::string where(const std::string& source, int line) {
    if (line <= 0)
        return source.empty() ? std::string() : source + ": ";
    return source + ":" + std::to_string(line) + ": ";
}

[[noreturn]] void fail(const std::string& source, int line, const std::string& msg) {
    throw ConfigError(where(source, line) + msg);
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

std::string suggest(const std::string& bad, const std::vector<std::string>& known) {
    std::string best;
    std::size_t best_d = bad.size() + 2;
    for (const auto& k : known) {
        const std::size_t d = levenshtein(bad, k);
        if (d < best_d) {
            best_d = d;
            best = k;
        }
    }
    if (!best.empty() && best_d <= std::max<std::size_t>(2, bad.size() / 3))
        return " (did you mean '" + best + "'?)";
    return "";
}

double parse_double_value(const std::string& key, const std::string& v,
                          const std::string& source, int line) {
    double out = 0.0;
    const char* first = v.data();
    const char* last = first + v.size();
    const auto res = std::from_chars(first, last, out);
    if (res.ec != std::errc{} || res.ptr != last)
        fail(source, line, "invalid value for key '" + key + "': expected a number, got '" + v + "'");
    if (!std::isfinite(out))
        fail(source, line, "invalid value for key '" + key + "': must be finite");
    return out;
}

long parse_long_value(const std::string& key, const std::string& v,
                      const std::string& source, int line) {
    long out = 0;
    const char* first = v.data();
    const char* last = first + v.size();
    const auto res = std::from_chars(first, last, out);
    if (res.ec != std::errc{} || res.ptr != last)
        fail(source, line, "invalid value for key '" + key + "': expected an integer, got '" + v + "'");
    return out;
}

unsigned long parse_ulong_value(const std::string& key, const std::string& v,
                                const std::string& source, int line) {
    unsigned long out = 0;
    const char* first = v.data();
    const char* last = first + v.size();
    const auto res = std::from_chars(first, last, out);
    if (res.ec != std::errc{} || res.ptr != last)
        fail(source, line,
             "invalid value for key '" + key + "': expected a nonnegative integer, got '" + v + "'");
    return out;
}

bool parse_bool_value(const std::string& key, const std::string& v,
                      const std::string& source, int line) {
    if (v == "true") return true;
    if (v == "false") return false;
    fail(source, line, "invalid value for key '" + key + "': expected true or false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (start <= v.size()) {
        const std::size_t comma = v.find(',', start);
        if (comma == std::string::npos) {
            parts.push_back(trim(std::string_view(v).substr(start)));
            break;
        }
        parts.push_back(trim(std::string_view(v).substr(start, comma - start)));
        start = comma + 1;
    }
    return parts;
}

std::vector<double> parse_double_list(const std::string& key, const std::string& v,
                                      const std::string& source, int line) {
    std::vector<double> out;
    for (const auto& p : split_list(v)) {
        if (p.empty())
            fail(source, line, "invalid value for key '" + key + "': empty list element");
        out.push_back(parse_double_value(key, p, source, line));
    }
    return out;
}

std::vector<long> parse_long_list(const std::string& key, const std::string& v,
                                  const std::string& source, int line) {
    std::vector<long> out;
    if (trim(v).empty())
        return out;
    for (const auto& p : split_list(v)) {
        if (p.empty())
            fail(source, line, "invalid value for key '" + key + "': empty list element");
        out.push_back(parse_long_value(key, p, source, line));
    }
    return out;
}

const std::vector<std::string>& section_keys(const std::string& section) {
    static const std::vector<std::string> objective = {"kind", "dim", "classes",
                                                       "hidden", "outputs", "head"};
    static const std::vector<std::string> data = {"source", "path", "n", "noise", "seed"};
    static const std::vector<std::string> optimizer = {
        "kind",        "lr",          "weight_decay",  "momentum_beta", "adamw_beta1",
        "adamw_beta2", "adamw_epsilon", "lion_beta1", "lion_beta2"};
    static const std::vector<std::string> schedule = {"kind", "total_steps", "warmup_steps",
                                                      "milestones", "decay_factor"};
    static const std::vector<std::string> mech = {"enabled", "betas",           "lambda",
                                                  "s_init",  "epsilon",         "skip_nonfinite_h",
                                                  "delta_mode"};
    static const std::vector<std::string> run = {"steps",      "epochs",         "batch_size",
                                                 "seed",       "ledger",         "grad_clip_norm",
                                                 "init",       "init_scale",     "output_dir"};
    static const std::vector<std::string> none;
    if (section == "objective") return objective;
    if (section == "data") return data;
    if (section == "optimizer") return optimizer;
    if (section == "schedule") return schedule;
    if (section == "mechanic") return mech;
    if (section == "run") return run;
    return none;
}

void set_key(ExperimentConfig& cfg, const std::string& section, const std::string& key,
             const std::string& value, const std::string& source, int line) {
    const auto& keys = section_keys(section);
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
        fail(source, line, "unknown key '" + key + "'" + suggest(key, keys) + " in [" + section + "]");

    if (section == "objective") {
        auto& o = cfg.objective;
        if (key == "kind") o.kind = value;
        else if (key == "dim") o.dim = parse_long_value(key, value, source, line);
        else if (key == "classes") o.classes = parse_long_value(key, value, source, line);
        else if (key == "hidden") o.hidden = parse_long_value(key, value, source, line);
        else if (key == "outputs") o.outputs = parse_long_value(key, value, source, line);
        else if (key == "head") o.head = value;
    } else if (section == "data") {
        auto& d = cfg.data;
        if (key == "source") d.source = value;
        else if (key == "path") d.path = value;
        else if (key == "n") d.n = parse_long_value(key, value, source, line);
        else if (key == "noise") d.noise = parse_double_value(key, value, source, line);
        else if (key == "seed") d.seed = parse_ulong_value(key, value, source, line);
    } else if (section == "optimizer") {
        auto& p = cfg.optimizer;
        if (key == "kind") p.kind = value;
        else if (key == "lr") p.lr = parse_double_value(key, value, source, line);
        else if (key == "weight_decay") p.weight_decay = parse_double_value(key, value, source, line);
        else if (key == "momentum_beta") p.momentum_beta = parse_double_value(key, value, source, line);
        else if (key == "adamw_beta1") p.adamw_beta1 = parse_double_value(key, value, source, line);
        else if (key == "adamw_beta2") p.adamw_beta2 = parse_double_value(key, value, source, line);
        else if (key == "adamw_epsilon") p.adamw_epsilon = parse_double_value(key, value, source, line);
        else if (key == "lion_beta1") p.lion_beta1 = parse_double_value(key, value, source, line);
        else if (key == "lion_beta2") p.lion_beta2 = parse_double_value(key, value, source, line);
    } else if (section == "schedule") {
        auto& s = cfg.schedule;
        if (key == "kind") s.kind = value;
        else if (key == "total_steps") s.total_steps = parse_long_value(key, value, source, line);
        else if (key == "warmup_steps") s.warmup_steps = parse_long_value(key, value, source, line);
        else if (key == "milestones") s.milestones = parse_long_list(key, value, source, line);
        else if (key == "decay_factor") s.decay_factor = parse_double_value(key, value, source, line);
    } else if (section == "mechanic") {
        auto& m = cfg.mechanic;
        if (key == "enabled") m.enabled = parse_bool_value(key, value, source, line);
        else if (key == "betas") m.betas = parse_double_list(key, value, source, line);
        else if (key == "lambda") m.lambda = parse_double_value(key, value, source, line);
        else if (key == "s_init") m.s_init = parse_double_value(key, value, source, line);
        else if (key == "epsilon") m.epsilon = parse_double_value(key, value, source, line);
        else if (key == "skip_nonfinite_h") m.skip_nonfinite_h = parse_bool_value(key, value, source, line);
        else if (key == "delta_mode") m.delta_mode = value;
    } else if (section == "run") {
        auto& r = cfg.run;
        if (key == "steps") r.steps = parse_long_value(key, value, source, line);
        else if (key == "epochs") r.epochs = parse_long_value(key, value, source, line);
        else if (key == "batch_size") r.batch_size = parse_long_value(key, value, source, line);
        else if (key == "seed") r.seed = parse_ulong_value(key, value, source, line);
        else if (key == "ledger") r.ledger = parse_bool_value(key, value, source, line);
        else if (key == "grad_clip_norm") r.grad_clip_norm = parse_double_value(key, value, source, line);
        else if (key == "init") r.init = value;
        else if (key == "init_scale") r.init_scale = parse_double_value(key, value, source, line);
        else if (key == "output_dir") r.output_dir = value;
    }
}

void check_one_of(const std::string& section, const std::string& key, const std::string& value,
                  const std::vector<std::string>& allowed) {
    if (std::find(allowed.begin(), allowed.end(), value) != allowed.end())
        return;
    std::string list;
    for (std::size_t i = 0; i < allowed.size(); ++i) {
        if (i) list += ", ";
        list += allowed[i];
    }
    throw ConfigError("invalid value '" + value + "' for key '" + key + "' in [" + section +
                      "]: expected one of " + list);
}

} // namespace

ExperimentConfig parse_config_text(std::string_view text, const std::string& source_name) {
    ExperimentConfig cfg;
    std::set<std::string> seen;
    std::string section;
    std::istringstream stream{std::string(text)};
    std::string raw;
    int line_no = 0;
    static const std::vector<std::string> sections = {"objective", "data",     "optimizer",
                                                      "schedule",  "mechanic", "run"};
    while (std::getline(stream, raw)) {
        ++line_no;
        if (!raw.empty() && raw.back() == '\r')
            raw.pop_back();
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#' || line[0] == ';')
            continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                fail(source_name, line_no, "malformed section header '" + line + "'");
            section = trim(std::string_view(line).substr(1, line.size() - 2));
            if (std::find(sections.begin(), sections.end(), section) == sections.end())
                fail(source_name, line_no,
                     "unknown section '[" + section + "]'" + suggest(section, sections));
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            fail(source_name, line_no, "expected 'key = value', got '" + line + "'");
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        if (key.empty())
            fail(source_name, line_no, "missing key before '='");
        if (section.empty())
            fail(source_name, line_no, "key '" + key + "' appears before any [section]");
        if (!seen.insert(section + "." + key).second)
            fail(source_name, line_no, "duplicate key '" + key + "' in [" + section + "]");
        set_key(cfg, section, key, value, source_name, line_no);
    }
    validate_config(cfg);
    return cfg;
}

ExperimentConfig parse_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path);
}

void apply_override(ExperimentConfig& cfg, const std::string& expr) {
    const std::size_t eq = expr.find('=');
    const std::size_t dot = expr.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq)
        throw ConfigError("malformed override '" + expr + "': expected section.key=value");
    const std::string section = trim(std::string_view(expr).substr(0, dot));
    const std::string key = trim(std::string_view(expr).substr(dot + 1, eq - dot - 1));
    const std::string value = trim(std::string_view(expr).substr(eq + 1));
    static const std::vector<std::string> sections = {"objective", "data",     "optimizer",
                                                      "schedule",  "mechanic", "run"};
    if (std::find(sections.begin(), sections.end(), section) == sections.end())
        throw ConfigError("override '" + expr + "': unknown section '[" + section + "]'" +
                          suggest(section, sections));
    set_key(cfg, section, key, value, "<override>", 0);
}

void validate_config(const ExperimentConfig& cfg) {
    const auto& o = cfg.objective;
    check_one_of("objective", "kind", o.kind, {"quadratic", "linreg", "logreg", "multilogreg", "mlp"});
    if (o.dim < 1)
        throw ConfigError("objective.dim must be >= 1");
    if (o.kind == "multilogreg" && o.classes < 2)
        throw ConfigError("objective.classes must be >= 2 for multilogreg");
    if (o.kind == "mlp") {
        check_one_of("objective", "head", o.head, {"mse", "cross_entropy"});
        if (o.hidden < 1)
            throw ConfigError("objective.hidden must be >= 1");
        if (o.outputs < 1)
            throw ConfigError("objective.outputs must be >= 1");
        if (o.head == "mse" && o.outputs != 1)
            throw ConfigError("objective.outputs must be 1 with the mse head");
    }

    const auto& d = cfg.data;
    check_one_of("data", "source", d.source, {"synthetic", "libsvm"});
    if (d.source == "libsvm" && d.path.empty())
        throw ConfigError("missing required key 'path' in [data] (source = libsvm)");
    if (d.source == "synthetic") {
        if (d.n < 1)
            throw ConfigError("data.n must be >= 1");
        if (!(d.noise >= 0.0 && d.noise <= 1.0))
            throw ConfigError("data.noise must be in [0, 1]");
    }
    if (d.source == "synthetic" && (o.kind == "multilogreg" || (o.kind == "mlp" && o.head == "cross_entropy")))
        throw ConfigError("class-index objectives require a libsvm dataset; the synthetic "
                          "generator emits +/-1 labels");

    const auto& p = cfg.optimizer;
    check_one_of("optimizer", "kind", p.kind, {"sgd", "momentum", "adamw", "lion"});
    if (!(p.lr > 0.0))
        throw ConfigError("optimizer.lr must be > 0");
    if (p.weight_decay < 0.0)
        throw ConfigError("optimizer.weight_decay must be >= 0");
    for (const auto& [name, beta] : {std::pair<const char*, double>{"momentum_beta", p.momentum_beta},
                                     {"adamw_beta1", p.adamw_beta1},
                                     {"adamw_beta2", p.adamw_beta2},
                                     {"lion_beta1", p.lion_beta1},
                                     {"lion_beta2", p.lion_beta2}})
        if (!(beta >= 0.0 && beta < 1.0))
            throw ConfigError(std::string("optimizer.") + name + " must be in [0, 1)");
    if (!(p.adamw_epsilon > 0.0))
        throw ConfigError("optimizer.adamw_epsilon must be > 0");

    const auto& s = cfg.schedule;
    check_one_of("schedule", "kind", s.kind,
                 {"constant", "linear_warmup_linear_decay", "cosine_with_warmup", "step_decay"});
    if (s.total_steps < 0 || s.warmup_steps < 0)
        throw ConfigError("schedule steps must be >= 0");
    if (!(s.decay_factor > 0.0))
        throw ConfigError("schedule.decay_factor must be > 0");
    if (!std::is_sorted(s.milestones.begin(), s.milestones.end()))
        throw ConfigError("schedule.milestones must be ascending");

    const auto& m = cfg.mechanic;
    if (m.betas.empty())
        throw ConfigError("mechanic.betas must be nonempty");
    for (double b : m.betas)
        if (!(b >= 0.0 && b <= 1.0))
            throw ConfigError("mechanic.betas entries must be in [0, 1]");
    if (m.lambda < 0.0)
        throw ConfigError("mechanic.lambda must be >= 0");
    if (!(m.s_init > 0.0))
        throw ConfigError("mechanic.s_init must be > 0");
    if (m.epsilon < 0.0)
        throw ConfigError("mechanic.epsilon must be >= 0");
    check_one_of("mechanic", "delta_mode", m.delta_mode, {"stored", "recovered"});

    const auto& r = cfg.run;
    if (r.epochs < 0)
        throw ConfigError("run.epochs must be >= 0");
    if (r.epochs == 0 && r.steps < 1)
        throw ConfigError("run.steps must be >= 1 (or set run.epochs)");
    if (r.batch_size < 1)
        throw ConfigError("run.batch_size must be >= 1");
    if (r.grad_clip_norm < 0.0)
        throw ConfigError("run.grad_clip_norm must be >= 0 (0 disables)");
    check_one_of("run", "init", r.init, {"zeros", "ones", "normal"});
    if (!std::isfinite(r.init_scale))
        throw ConfigError("run.init_scale must be finite");
    if (r.output_dir.empty())
        throw ConfigError("run.output_dir must be nonempty");
    if (o.kind == "quadratic" && r.epochs > 0)
        throw ConfigError("run.epochs needs a dataset; the quadratic objective has none");
}

namespace {

std::string join_doubles(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += format_double(v[i]);
    }
    return out;
}

std::string join_longs(const std::vector<long>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += std::to_string(v[i]);
    }
    return out;
}

} // namespace

std::string config_echo(const ExperimentConfig& cfg) {
    std::ostringstream out;
    const auto& o = cfg.objective;
    out << "[objective]\n"
        << "kind = " << o.kind << "\n"
        << "dim = " << o.dim << "\n"
        << "classes = " << o.classes << "\n"
        << "hidden = " << o.hidden << "\n"
        << "outputs = " << o.outputs << "\n"
        << "head = " << o.head << "\n\n";
    const auto& d = cfg.data;
    out << "[data]\n"
        << "source = " << d.source << "\n"
        << "path = " << d.path << "\n"
        << "n = " << d.n << "\n"
        << "noise = " << format_double(d.noise) << "\n"
        << "seed = " << d.seed << "\n\n";
    const auto& p = cfg.optimizer;
    out << "[optimizer]\n"
        << "kind = " << p.kind << "\n"
        << "lr = " << format_double(p.lr) << "\n"
        << "weight_decay = " << format_double(p.weight_decay) << "\n"
        << "momentum_beta = " << format_double(p.momentum_beta) << "\n"
        << "adamw_beta1 = " << format_double(p.adamw_beta1) << "\n"
        << "adamw_beta2 = " << format_double(p.adamw_beta2) << "\n"
        << "adamw_epsilon = " << format_double(p.adamw_epsilon) << "\n"
        << "lion_beta1 = " << format_double(p.lion_beta1) << "\n"
        << "lion_beta2 = " << format_double(p.lion_beta2) << "\n\n";
    const auto& s = cfg.schedule;
    out << "[schedule]\n"
        << "kind = " << s.kind << "\n"
        << "total_steps = " << s.total_steps << "\n"
        << "warmup_steps = " << s.warmup_steps << "\n"
        << "milestones = " << join_longs(s.milestones) << "\n"
        << "decay_factor = " << format_double(s.decay_factor) << "\n\n";
    const auto& m = cfg.mechanic;
    out << "[mechanic]\n"
        << "enabled = " << (m.enabled ? "true" : "false") << "\n"
        << "betas = " << join_doubles(m.betas) << "\n"
        << "lambda = " << format_double(m.lambda) << "\n"
        << "s_init = " << format_double(m.s_init) << "\n"
        << "epsilon = " << format_double(m.epsilon) << "\n"
        << "skip_nonfinite_h = " << (m.skip_nonfinite_h ? "true" : "false") << "\n"
        << "delta_mode = " << m.delta_mode << "\n\n";
    const auto& r = cfg.run;
    out << "[run]\n"
        << "steps = " << r.steps << "\n"
        << "epochs = " << r.epochs << "\n"
        << "batch_size = " << r.batch_size << "\n"
        << "seed = " << r.seed << "\n"
        << "ledger = " << (r.ledger ? "true" : "false") << "\n"
        << "grad_clip_norm = " << format_double(r.grad_clip_norm) << "\n"
        << "init = " << r.init << "\n"
        << "init_scale = " << format_double(r.init_scale) << "\n"
        << "output_dir = " << r.output_dir << "\n";
    return out.str();
}

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (const char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
    return fnv1a(config_echo(cfg));
}

} // namespace mechanic
