#include "mvsde/cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "mvsde/verify.hpp"

namespace mvsde::cli {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
    throw ConfigError(fmt::format("{} = '{}': expected {}", key, value, expected));
}

double parse_double(std::string_view key, std::string_view v) {
    double out = 0.0;
    const auto* end = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || ptr != end || !std::isfinite(out)) bad_value(key, v, "a finite number");
    return out;
}

std::uint64_t parse_u64(std::string_view key, std::string_view v) {
    std::uint64_t out = 0;
    const auto* end = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || ptr != end) bad_value(key, v, "a non-negative integer");
    return out;
}

std::size_t parse_size(std::string_view key, std::string_view v) { return static_cast<std::size_t>(parse_u64(key, v)); }

std::vector<double> parse_list(std::string_view key, std::string_view v) {
    std::vector<double> out;
    while (!v.empty()) {
        const auto comma = v.find(',');
        out.push_back(parse_double(key, trim(v.substr(0, comma))));
        if (comma == std::string_view::npos) break;
        v.remove_prefix(comma + 1);
    }
    if (out.empty()) bad_value(key, v, "a comma-separated list of numbers");
    return out;
}

std::string num(double v) { return fmt::format("{}", v); }

using Setter = void (*)(ExperimentConfig&, std::string_view key, std::string_view value);
using Getter = std::string (*)(const ExperimentConfig&);

struct KeySpec {
    std::string_view name;
    Setter set;
    Getter get;
};

// Order here is the order of to_text.
const std::vector<KeySpec>& keys() {
    static const std::vector<KeySpec> table{
        {"run.mode", [](ExperimentConfig& c, std::string_view k, std::string_view v) {
             try {
                 c.mode = parse_mode(std::string(v));
             } catch (const std::invalid_argument&) {
                 bad_value(k, v, "chaos-sweep, verify, moments or decay");
             }
         },
         [](const ExperimentConfig& c) { return mode_name(c.mode); }},
        {"run.seed", [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.seed = parse_u64(k, v); },
         [](const ExperimentConfig& c) { return std::to_string(c.seed); }},

        {"model.name", [](ExperimentConfig& c, std::string_view k, std::string_view v) {
             try {
                 c.model = parse_builtin(std::string(v));
             } catch (const std::invalid_argument&) {
                 bad_value(k, v, "example61, mean-square, double-kernel or linear-mean-field");
             }
         },
         [](const ExperimentConfig& c) { return builtin_name(c.model); }},
        {"model.theta", [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.linear.theta = parse_double(k, v); },
         [](const ExperimentConfig& c) { return num(c.linear.theta); }},
        {"model.kappa", [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.linear.kappa = parse_double(k, v); },
         [](const ExperimentConfig& c) { return num(c.linear.kappa); }},
        {"model.sigma", [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.linear.sigma = parse_double(k, v); },
         [](const ExperimentConfig& c) { return num(c.linear.sigma); }},

        {"initial.law", [](ExperimentConfig& c, std::string_view k, std::string_view v) {
             if (v == "normal") c.initial = InitialKind::normal;
             else if (v == "point") c.initial = InitialKind::point;
             else bad_value(k, v, "normal or point");
         },
         [](const ExperimentConfig& c) { return std::string(c.initial == InitialKind::normal ? "normal" : "point"); }},
        {"initial.mean", [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.initial_mean = parse_double(k, v); },
         [](const ExperimentConfig& c) { return num(c.initial_mean); }},
        {"initial.variance", [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.initial_variance = parse_double(k, v); },
         [](const ExperimentConfig& c) { return num(c.initial_variance); }},
        {"initial.x", [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.initial_point = parse_double(k, v); },
         [](const ExperimentConfig& c) { return num(c.initial_point); }},

        {"scheme.kind", [](ExperimentConfig& c, std::string_view k, std::string_view v) {
             try {
                 c.scheme = parse_scheme(std::string(v));
             } catch (const std::invalid_argument&) {
                 bad_value(k, v, "tamed, explicit or frozen");
             }
         },
         [](const ExperimentConfig& c) { return scheme_name(c.scheme); }},
        {"scheme.dt", [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.dt = parse_double(k, v); },
         [](const ExperimentConfig& c) { return num(resolved_dt(c)); }},
        {"scheme.outer_m", [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.outer_m = parse_size(k, v); },
         [](const ExperimentConfig& c) { return std::to_string(c.outer_m); }},

        {"horizon.T", [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.T = parse_double(k, v); },
         [](const ExperimentConfig& c) { return num(c.T); }},

        {"chaos.N_1", [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.n1 = parse_size(k, v); },
         [](const ExperimentConfig& c) { return std::to_string(c.n1); }},
        {"chaos.levels", [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.levels = parse_size(k, v); },
         [](const ExperimentConfig& c) { return std::to_string(c.levels); }},
        {"chaos.U", [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.replications = parse_size(k, v); },
         [](const ExperimentConfig& c) { return std::to_string(c.replications); }},
        {"chaos.estimator", [](ExperimentConfig& c, std::string_view k, std::string_view v) {
             if (v == "splitting") c.estimator = ChaosEstimator::splitting;
             else if (v == "decoupled") c.estimator = ChaosEstimator::decoupled;
             else bad_value(k, v, "splitting or decoupled");
         },
         [](const ExperimentConfig& c) {
             return std::string(c.estimator == ChaosEstimator::splitting ? "splitting" : "decoupled");
         }},
        {"chaos.reference_factor", [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.reference_factor = parse_size(k, v); },
         [](const ExperimentConfig& c) { return std::to_string(c.reference_factor); }},

        {"verify.samples", [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.verify_samples = parse_size(k, v); },
         [](const ExperimentConfig& c) { return std::to_string(c.verify_samples); }},
        {"verify.radii", [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.verify_radii = parse_list(k, v); },
         [](const ExperimentConfig& c) {
             std::string s;
             for (std::size_t i = 0; i < c.verify_radii.size(); ++i) s += (i ? "," : "") + num(c.verify_radii[i]);
             return s;
         }},
        {"verify.x_max", [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.verify_x_max = parse_double(k, v); },
         [](const ExperimentConfig& c) { return num(c.verify_x_max); }},

        {"moments.N", [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.moments_n = parse_size(k, v); },
         [](const ExperimentConfig& c) { return std::to_string(c.moments_n); }},
        {"moments.points", [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.moments_points = parse_size(k, v); },
         [](const ExperimentConfig& c) { return std::to_string(c.moments_points); }},

        {"decay.N", [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.decay_n = parse_size(k, v); },
         [](const ExperimentConfig& c) { return std::to_string(c.decay_n); }},
        {"decay.p", [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.decay_p = parse_double(k, v); },
         [](const ExperimentConfig& c) { return num(c.decay_p); }},
        {"decay.points", [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.decay_points = parse_size(k, v); },
         [](const ExperimentConfig& c) { return std::to_string(c.decay_points); }},

        {"output.path", [](ExperimentConfig& c, std::string_view k, std::string_view v) {
             if (v.empty()) bad_value(k, v, "a file path");
             c.output_path = std::string(v);
         },
         [](const ExperimentConfig& c) { return c.output_path; }},
    };
    return table;
}

[[noreturn]] void out_of_range(std::string_view key, const std::string& value, std::string_view accepted) {
    throw ConfigError(fmt::format("{} = {} is out of range (accepted: {})", key, value, accepted));
}

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class CsvFile {
public:
    explicit CsvFile(const std::filesystem::path& path) : path_(path), out_(path, std::ios::binary) {
        if (!out_) throw IoError("cannot open " + path.string() + " for writing");
    }

    void row(const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) out_ << (i ? "," : "") << csv_field(fields[i]);
        out_ << '\n';
        out_.flush();
        check();
    }

    void truncated(std::string_view reason) {
        std::string one_line(reason);
        std::replace(one_line.begin(), one_line.end(), '\n', ' ');
        out_ << "# truncated: " << one_line << '\n';
        out_.flush();
        check();
    }

    void close() {
        out_.close();
        if (out_.fail()) throw IoError("error writing " + path_.string());
    }

private:
    void check() {
        if (!out_) throw IoError("error writing " + path_.string());
    }

    std::filesystem::path path_;
    std::ofstream out_;
};

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << text;
    out.close();
    if (out.fail()) throw IoError("error writing " + path.string());
}

std::filesystem::path diagnostics_path_for(const std::filesystem::path& csv) {
    auto p = csv;
    p.replace_extension(".blowup.txt");
    return p;
}

struct Outcome {
    int code = kSuccess;
    std::string csv_schema;
    nlohmann::ordered_json summary = nlohmann::ordered_json::object();
};

std::ostream& null_stream() {
    static std::ostringstream sink;
    sink.str({});
    return sink;
}

// ---- modes ----------------------------------------------------------------

Outcome run_chaos(const ExperimentConfig& c, const std::filesystem::path& out, std::ostream& log) {
    Outcome o;
    o.csv_schema = "chaos-sweep/1";
    const auto model = build_model(c);
    ChaosSweepOptions opts;
    opts.initial = build_initial(c);
    opts.estimator = c.estimator;
    opts.reference_factor = c.reference_factor;
    const auto report = run_chaos_sweep(model, c.n1, c.levels, c.T, c.replications, build_scheme(c), c.seed, opts);

    CsvFile csv(out);
    csv.row({"level", "N", "error", "std_error", "log2_slope", "T", "U"});
    log << fmt::format("{:>5} {:>8} {:>24} {:>24} {:>10}\n", "level", "N", "error", "std_error", "slope");
    for (std::size_t l = 0; l < report.levels.size(); ++l) {
        const std::string slope = l == 0 ? "" : format_number(report.slopes[l - 1]);
        csv.row({std::to_string(l), std::to_string(report.levels[l]), format_number(report.errors[l]),
                 format_number(report.std_errors[l]), slope, format_number(c.T), std::to_string(c.replications)});
        log << fmt::format("{:>5} {:>8} {:>24.17g} {:>24.17g} {:>10}\n", l, report.levels[l], report.errors[l],
                           report.std_errors[l], l == 0 ? "" : fmt::format("{:.4f}", report.slopes[l - 1]));
    }
    if (report.levels.size() >= 2) {
        log << fmt::format("fitted log2 slope: {:.6f}\n", report.fitted_slope);
        o.summary["fitted_slope"] = report.fitted_slope;
    }
    if (report.failure) {
        csv.truncated(*report.failure);
        write_text(diagnostics_path_for(out), *report.failure + "\n\n" + to_text(c));
        log << "sweep aborted: " << *report.failure << '\n';
        o.summary["failure"] = *report.failure;
        o.code = kBlowUp;
    }
    csv.close();
    return o;
}

std::string describe(const AssumptionReport& r) {
    std::string s;
    for (const auto& [k, v] : r.estimated_constants) s += (s.empty() ? "" : ";") + k + "=" + format_number(v);
    if (!r.violations.empty()) {
        const auto& v = r.violations.front();
        std::string x;
        for (double c : v.input.x) x += (x.empty() ? "" : " ") + format_number(c);
        s += fmt::format("{}first={}@sample {} x=({}) lhs={} rhs={}", s.empty() ? "" : ";",
                         inequality_name(v.target.kind), v.sample, x, format_number(v.lhs), format_number(v.rhs));
    }
    for (const auto& n : r.notes) s += (s.empty() ? "" : ";") + n;
    return s;
}

Outcome run_verify(const ExperimentConfig& c, const std::filesystem::path& out, std::ostream& log) {
    Outcome o;
    o.csv_schema = "verify/1";
    const auto model = build_model(c);
    CheckOptions opts;
    opts.seed = c.seed;
    opts.x_max = c.verify_x_max;
    const std::size_t n = c.verify_samples;

    struct Row {
        AssumptionReport report;
        bool informational;
    };
    std::vector<Row> rows;
    for (double R : c.verify_radii) rows.push_back({check_local_monotonicity(model, R, n, opts), false});
    rows.push_back({check_polynomial_lipschitz(model, n, opts), false});
    rows.push_back({check_coercivity(model, n, CoercivityMode::declared, opts), false});
    if (model.growth.sharp_coercivity) rows.push_back({check_coercivity(model, n, CoercivityMode::sharp, opts), false});
    rows.push_back({check_growth(model, n, opts), false});
    rows.push_back({lyapunov_check(model, n, opts), !model.lyapunov.has_value()});
    rows.push_back({check_exponent_relations(model.growth), false});
    rows.push_back({check_coercivity(model, n, CoercivityMode::dissipative, opts),
                    !model.growth.dissipation.has_value()});
    {
        AssumptionReport scan;
        scan.id = "largest-feasible-p";
        scan.samples = std::max<std::size_t>(1, n / 10);
        const auto p = largest_feasible_p(model, scan.samples, opts);
        if (p) {
            scan.estimated_constants["p"] = *p;
        } else {
            scan.verdict = Verdict::inconclusive;
            scan.notes.push_back("declared L3 fails already at p = 2");
        }
        scan.estimated_constants["p_declared"] = model.growth.p;
        rows.push_back({scan, true});
    }

    CsvFile csv(out);
    csv.row({"assumption", "samples", "violations", "verdict", "role", "detail"});
    log << fmt::format("{:<26} {:>9} {:>10} {:<13} {:<14}\n", "assumption", "samples", "violations", "verdict",
                       "role");
    bool failed = false;
    for (const auto& row : rows) {
        const auto& r = row.report;
        const char* role = row.informational ? "informational" : "required";
        csv.row({r.id, std::to_string(r.samples), std::to_string(r.violation_count), verdict_name(r.verdict), role,
                 describe(r)});
        log << fmt::format("{:<26} {:>9} {:>10} {:<13} {:<14}\n", r.id, r.samples, r.violation_count,
                           verdict_name(r.verdict), role);
        for (const auto& note : r.notes) log << "    " << note << '\n';
        if (!row.informational && r.verdict == Verdict::fail) failed = true;
    }
    csv.close();
    o.summary["all_required_pass"] = !failed;
    o.code = failed ? kVerificationFailed : kSuccess;
    return o;
}

Outcome run_moments(const ExperimentConfig& c, const std::filesystem::path& out, std::ostream& log) {
    Outcome o;
    o.csv_schema = "moments/1";
    const auto model = build_model(c);
    const auto scheme = build_scheme(c);
    const std::size_t steps = step_count(c.T, scheme.dt);
    const std::size_t stride = std::max<std::size_t>(1, steps / std::max<std::size_t>(1, c.moments_points));

    const bool has_ode = c.model == BuiltinModel::linear_mean_field;
    const double m0 = c.initial == InitialKind::normal ? c.initial_mean : c.initial_point;
    const double s0 =
        c.initial == InitialKind::normal ? c.initial_variance + m0 * m0 : c.initial_point * c.initial_point;

    CsvFile csv(out);
    csv.row({"t", "mean", "mean_se", "second_moment", "second_moment_se", "mean_ode", "second_moment_ode"});
    const BrownianDriver driver(c.seed);
    IntegrateOptions io;
    std::size_t k = 0;
    io.on_step = [&](const Ensemble& e) {
        const bool last = k == steps;
        if (k % stride == 0 || last) {
            const double nn = static_cast<double>(e.size());
            double s1 = 0, s2 = 0, s4 = 0;
            for (double x : e.states) {
                const double x2 = x * x;
                s1 += x;
                s2 += x2;
                s4 += x2 * x2;
            }
            const double mean = s1 / nn, second = s2 / nn;
            const double var1 = e.size() > 1 ? std::max(0.0, (s2 / nn - mean * mean) * nn / (nn - 1)) : 0.0;
            const double var2 = e.size() > 1 ? std::max(0.0, (s4 / nn - second * second) * nn / (nn - 1)) : 0.0;
            std::string mo, so;
            if (has_ode) {
                const auto ode = linear_mean_field_moments(c.linear, m0, s0, e.time);
                mo = format_number(ode.mean);
                so = format_number(ode.second);
            }
            csv.row({format_number(e.time), format_number(mean), format_number(std::sqrt(var1 / nn)),
                     format_number(second), format_number(std::sqrt(var2 / nn)), mo, so});
        }
        ++k;
    };
    try {
        const auto init = sample_initial(build_initial(c), c.moments_n, model.dims.state, driver);
        integrate(init, model, scheme, driver, c.T, io);
    } catch (const BlowUpError& e) {
        csv.truncated(e.what());
        csv.close();
        write_text(diagnostics_path_for(out), std::string(e.what()) + "\n\n" + to_text(c));
        log << e.what() << '\n';
        o.code = kBlowUp;
        o.summary["failure"] = e.what();
        return o;
    }
    csv.close();
    log << fmt::format("wrote {} observation rows\n", k == 0 ? 0 : (k - 1) / stride + 1);
    return o;
}

Outcome run_decay(const ExperimentConfig& c, const std::filesystem::path& out, std::ostream& log) {
    Outcome o;
    o.csv_schema = "decay/1";
    const auto model = build_model(c);
    if (!model.growth.dissipation)
        throw ConfigError("run.mode = decay needs a model with declared dissipation constants (linear-mean-field)");
    DecayOptions opts;
    opts.scheme = build_scheme(c);
    opts.initial = build_initial(c);
    opts.seed = c.seed;
    opts.points = c.decay_points;
    CsvFile csv(out);
    csv.row({"t", "moment", "log_moment"});
    DecayEstimate est;
    try {
        est = estimate_decay_rate(model, c.decay_p, c.decay_n, c.T, opts);
    } catch (const BlowUpError& e) {
        csv.truncated(e.what());
        csv.close();
        write_text(diagnostics_path_for(out), std::string(e.what()) + "\n\n" + to_text(c));
        o.code = kBlowUp;
        o.summary["failure"] = e.what();
        return o;
    }
    for (std::size_t i = 0; i < est.times.size(); ++i)
        csv.row({format_number(est.times[i]), format_number(est.moments[i]),
                 est.moments[i] > 0.0 ? format_number(std::log(est.moments[i])) : ""});
    csv.close();
    log << fmt::format("fitted slope of log moment on [T/2, T]: {:.6f} (r^2 = {:.6f})\n", est.slope, est.r_squared);
    log << fmt::format("-p(L5 - L6)/2 = {:.6f}\n", est.bound);
    for (const auto& n : est.notes) log << n << '\n';
    o.summary["slope"] = est.slope;
    o.summary["r_squared"] = est.r_squared;
    o.summary["bound"] = est.bound;
    o.summary["upper_bound_only"] = est.upper_bound_only;
    return o;
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace

std::string mode_name(Mode mode) {
    switch (mode) {
    case Mode::chaos_sweep:
        return "chaos-sweep";
    case Mode::verify:
        return "verify";
    case Mode::moments:
        return "moments";
    case Mode::decay:
        return "decay";
    }
    return "unknown";
}

Mode parse_mode(const std::string& name) {
    if (name == "chaos-sweep" || name == "chaos") return Mode::chaos_sweep;
    if (name == "verify") return Mode::verify;
    if (name == "moments") return Mode::moments;
    if (name == "decay") return Mode::decay;
    throw std::invalid_argument("unknown mode '" + name + "'");
}

void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value) {
    for (const auto& spec : keys()) {
        if (spec.name == key) {
            spec.set(config, key, trim(value));
            return;
        }
    }
    throw ConfigError(fmt::format("unknown key '{}'", key));
}

ExperimentConfig parse_config(std::string_view text) {
    ExperimentConfig config;
    std::string section;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        try {
            if (line.front() == '[') {
                if (line.back() != ']') throw ConfigError("unterminated section header");
                section = std::string(trim(line.substr(1, line.size() - 2)));
                if (section.empty() || section.find_first_of(" \t.=") != std::string::npos)
                    throw ConfigError("malformed section name");
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string_view::npos) throw ConfigError("expected 'key = value'");
            const auto key = trim(line.substr(0, eq));
            if (key.empty()) throw ConfigError("missing key before '='");
            const std::string full = key.find('.') != std::string_view::npos || section.empty()
                                         ? std::string(key)
                                         : section + "." + std::string(key);
            apply_setting(config, full, line.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError(fmt::format("line {}: {}", line_no, e.what()));
        }
    }
    validate(config);
    return config;
}

void validate(const ExperimentConfig& c) {
    if (!(c.T >= 0.0)) out_of_range("horizon.T", num(c.T), "T >= 0");
    if (c.dt && !(*c.dt > 0.0)) out_of_range("scheme.dt", num(*c.dt), "dt > 0");
    if (c.outer_m == 0) out_of_range("scheme.outer_m", "0", "integers >= 1");
    if (c.estimator == ChaosEstimator::splitting && (c.n1 < 2 || c.n1 % 2 != 0))
        throw ConfigError(fmt::format("chaos.N_1 = {}: N_1 must be even (accepted: even integers >= 2)", c.n1));
    if (c.n1 == 0) out_of_range("chaos.N_1", "0", "integers >= 1");
    if (c.levels == 0 || c.levels > 24) out_of_range("chaos.levels", std::to_string(c.levels), "1..24");
    if (c.replications == 0) out_of_range("chaos.U", "0", "integers >= 1");
    if (c.reference_factor == 0) out_of_range("chaos.reference_factor", "0", "integers >= 1");
    if (c.initial == InitialKind::normal && !(c.initial_variance >= 0.0))
        out_of_range("initial.variance", num(c.initial_variance), "variance >= 0");
    if (c.verify_samples == 0) out_of_range("verify.samples", "0", "integers >= 1");
    for (double r : c.verify_radii)
        if (!(r > 0.0)) out_of_range("verify.radii", num(r), "radii > 0");
    if (!(c.verify_x_max > 0.0)) out_of_range("verify.x_max", num(c.verify_x_max), "x_max > 0");
    if (c.moments_n == 0) out_of_range("moments.N", "0", "integers >= 1");
    if (c.moments_points == 0) out_of_range("moments.points", "0", "integers >= 1");
    if (c.decay_n == 0) out_of_range("decay.N", "0", "integers >= 1");
    if (!(c.decay_p >= 1.0)) out_of_range("decay.p", num(c.decay_p), "p >= 1");
    if (c.decay_points < 3) out_of_range("decay.points", std::to_string(c.decay_points), "integers >= 3");
    try {
        build_scheme(c).validate(c.T);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(fmt::format("scheme.dt = {}, horizon.T = {}: {}", num(resolved_dt(c)), num(c.T), e.what()));
    }
}

std::string to_text(const ExperimentConfig& c) {
    std::string out;
    std::string current;
    for (const auto& spec : keys()) {
        const auto dot = spec.name.find('.');
        const std::string section(spec.name.substr(0, dot));
        if (section != current) {
            out += (out.empty() ? "" : "\n") + ("[" + section + "]\n");
            current = section;
        }
        out += std::string(spec.name.substr(dot + 1)) + " = " + spec.get(c) + "\n";
    }
    return out;
}

double resolved_dt(const ExperimentConfig& c) { return c.dt.value_or(c.T <= 1.0 ? 1e-3 : 2e-3); }

CoefficientModel build_model(const ExperimentConfig& c) { return make_builtin(c.model, c.linear); }

InitialLaw build_initial(const ExperimentConfig& c) {
    if (c.initial == InitialKind::point) return PointMassLaw{c.initial_point};
    return NormalLaw{c.initial_mean, c.initial_variance};
}

SchemeConfig build_scheme(const ExperimentConfig& c) { return {c.scheme, resolved_dt(c), c.outer_m}; }

std::filesystem::path manifest_path_for(const std::filesystem::path& csv) {
    auto p = csv;
    p.replace_extension(".manifest.json");
    return p;
}

std::string format_number(double value) { return fmt::format("{:.17g}", value); }

std::string csv_field(std::string_view text) {
    if (text.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(text);
    std::string out = "\"";
    for (char ch : text) {
        if (ch == '"') out += '"';
        out += ch;
    }
    out += '"';
    return out;
}

int run(const ExperimentConfig& config, const RunOptions& options) {
    std::ostream& log = options.log ? *options.log : null_stream();
    const std::filesystem::path out = options.out.value_or(std::filesystem::path(config.output_path));
    if (options.threads > 0) set_thread_count(options.threads);

    const auto started = std::chrono::steady_clock::now();
    const std::string started_at = utc_timestamp();
    Outcome outcome;
    try {
        switch (config.mode) {
        case Mode::chaos_sweep:
            outcome = run_chaos(config, out, log);
            break;
        case Mode::verify:
            outcome = run_verify(config, out, log);
            break;
        case Mode::moments:
            outcome = run_moments(config, out, log);
            break;
        case Mode::decay:
            outcome = run_decay(config, out, log);
            break;
        }
    } catch (const IoError& e) {
        log << "I/O error: " << e.what() << '\n';
        return kIoError;
    } catch (const ConfigError& e) {
        log << "configuration error: " << e.what() << '\n';
        return kIoError;
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    nlohmann::ordered_json manifest;
    manifest["tool"] = "mvsde";
    manifest["version"] = kVersion;
    manifest["mode"] = mode_name(config.mode);
    manifest["csv"] = out.string();
    manifest["csv_schema"] = outcome.csv_schema;
    manifest["seed"] = config.seed;
    manifest["threads"] = thread_count();
    manifest["started_at"] = started_at;
    manifest["wall_time_seconds"] = wall;
    manifest["exit_code"] = outcome.code;
    manifest["summary"] = outcome.summary;
    nlohmann::ordered_json settings = nlohmann::ordered_json::object();
    for (const auto& spec : keys()) settings[std::string(spec.name)] = spec.get(config);
    manifest["settings"] = settings;
    manifest["config"] = to_text(config);
    try {
        write_text(manifest_path_for(out), manifest.dump(2) + "\n");
    } catch (const IoError& e) {
        log << "I/O error: " << e.what() << '\n';
        return kIoError;
    }
    log << fmt::format("wrote {} and {} ({:.2f} s)\n", out.string(), manifest_path_for(out).string(), wall);
    return outcome.code;
}

int rerun(const std::filesystem::path& manifest, const RunOptions& options) {
    std::ifstream in(manifest, std::ios::binary);
    if (!in) {
        if (options.log) *options.log << "I/O error: cannot read " << manifest.string() << '\n';
        return kIoError;
    }
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        if (options.log) *options.log << "malformed manifest: " << e.what() << '\n';
        return kIoError;
    }
    if (!doc.contains("config") || !doc["config"].is_string()) {
        if (options.log) *options.log << "manifest has no config text\n";
        return kIoError;
    }
    ExperimentConfig config;
    try {
        config = parse_config(doc["config"].get<std::string>());
    } catch (const ConfigError& e) {
        if (options.log) *options.log << "manifest config: " << e.what() << '\n';
        return kIoError;
    }
    RunOptions opts = options;
    if (!opts.out && doc.contains("csv") && doc["csv"].is_string()) opts.out = doc["csv"].get<std::string>();
    return run(config, opts);
}

std::string gnuplot_script(const std::vector<std::filesystem::path>& csvs) {
    std::string s;
    s += "set datafile separator ','\n";
    s += "set datafile commentschars '#'\n";
    s += "set logscale xy 2\n";
    s += "set xlabel 'N'\n";
    s += "set ylabel 'error'\n";
    s += "set key top right\n";
    s += "set grid\n";
    if (csvs.size() > 1) s += fmt::format("set multiplot layout 1,{}\n", csvs.size());
    for (const auto& path : csvs) {
        std::string title = path.filename().string();
        std::ifstream in(path);
        std::string header, first;
        if (in && std::getline(in, header) && std::getline(in, first)) {
            // T is the sixth column of a chaos-sweep row.
            std::vector<std::string> cols;
            std::stringstream ss(first);
            for (std::string f; std::getline(ss, f, ',');) cols.push_back(f);
            if (cols.size() >= 6) title = "T = " + cols[5];
        }
        s += fmt::format("set title '{}'\n", title);
        // Reference slope -1/2 anchored at the first level.
        s += fmt::format("stats '{0}' skip 1 every ::0::0 using 2:3 nooutput\n", path.string());
        s += "n0 = STATS_min_x; e0 = STATS_min_y\n";
        s += fmt::format("plot '{0}' skip 1 using 2:3:4 with yerrorlines title 'splitting error', \\\n"
                         "     '{0}' skip 1 using 2:(e0*sqrt(n0/$2)) with lines dashtype 2 title 'N^(-1/2)'\n",
                         path.string());
    }
    if (csvs.size() > 1) s += "unset multiplot\n";
    return s;
}

} // namespace mvsde::cli
