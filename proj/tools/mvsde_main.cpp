#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mvsde/cli.hpp"

namespace {

struct RunFlags {
    std::string config_path;
    std::vector<std::string> sets;
    std::optional<std::uint64_t> seed;
    int threads = 0;
    std::string out;
    bool paper_scale = false;
};

void add_run_flags(CLI::App* sub, RunFlags& f) {
    sub->add_option("--config", f.config_path, "key = value configuration file");
    sub->add_option("--set", f.sets, "override one key, e.g. --set horizon.T=30 (repeatable)");
    sub->add_option("--seed", f.seed, "master seed (run.seed)");
    sub->add_option("--threads", f.threads, "OpenMP worker threads (default: hardware parallelism)");
    sub->add_option("--out", f.out, "CSV output path (output.path)");
    sub->add_flag("--paper-scale", f.paper_scale, "use U = 500 replications");
}

int run_mode(mvsde::cli::Mode mode, const RunFlags& f) {
    using namespace mvsde::cli;
    ExperimentConfig config;
    try {
        std::string text;
        if (!f.config_path.empty()) {
            std::ifstream in(f.config_path, std::ios::binary);
            if (!in) {
                std::cerr << "cannot read config file " << f.config_path << '\n';
                return kIoError;
            }
            std::ostringstream ss;
            ss << in.rdbuf();
            text = ss.str();
        }
        config = parse_config(text);
        for (const auto& s : f.sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos) throw ConfigError("--set " + s + ": expected key=value");
            apply_setting(config, s.substr(0, eq), s.substr(eq + 1));
        }
        config.mode = mode;
        if (f.seed) config.seed = *f.seed;
        if (f.paper_scale) config.replications = 500;
        validate(config);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kIoError;
    }
    std::cout << to_text(config) << '\n';
    RunOptions opts;
    if (!f.out.empty()) opts.out = f.out;
    opts.threads = f.threads;
    opts.log = &std::cout;
    return run(config, opts);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"McKean-Vlasov particle experiments: chaos sweeps, assumption checks, moment studies"};
    app.require_subcommand(1);

    RunFlags chaos_flags, verify_flags, moments_flags, decay_flags;
    auto* chaos = app.add_subcommand("chaos", "propagation-of-chaos sweep over N_l = N_1 2^l");
    add_run_flags(chaos, chaos_flags);
    auto* verify = app.add_subcommand("verify", "sampled checks of the model's declared growth constants");
    add_run_flags(verify, verify_flags);
    auto* moments = app.add_subcommand("moments", "empirical mean and second moment over time");
    add_run_flags(moments, moments_flags);
    auto* decay = app.add_subcommand("decay", "long-horizon moment decay rate");
    add_run_flags(decay, decay_flags);

    std::vector<std::string> plot_inputs;
    std::string plot_out;
    auto* plot = app.add_subcommand("plot", "emit a gnuplot script for chaos-sweep CSVs");
    plot->add_option("csv", plot_inputs, "chaos-sweep CSV files")->required();
    plot->add_option("--out", plot_out, "script path (default: stdout)");

    std::string manifest;
    std::string rerun_out;
    int rerun_threads = 0;
    auto* rerun = app.add_subcommand("rerun", "repeat a run from its manifest");
    rerun->add_option("manifest", manifest, "manifest JSON written by a previous run")->required();
    rerun->add_option("--out", rerun_out, "CSV output path (default: the recorded one)");
    rerun->add_option("--threads", rerun_threads, "OpenMP worker threads");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : mvsde::cli::kIoError;
    }

    using mvsde::cli::Mode;
    if (*chaos) return run_mode(Mode::chaos_sweep, chaos_flags);
    if (*verify) return run_mode(Mode::verify, verify_flags);
    if (*moments) return run_mode(Mode::moments, moments_flags);
    if (*decay) return run_mode(Mode::decay, decay_flags);
    if (*plot) {
        std::vector<std::filesystem::path> paths(plot_inputs.begin(), plot_inputs.end());
        const auto script = mvsde::cli::gnuplot_script(paths);
        if (plot_out.empty()) {
            std::cout << script;
            return 0;
        }
        std::ofstream out(plot_out, std::ios::binary);
        out << script;
        out.close();
        if (out.fail()) {
            std::cerr << "cannot write " << plot_out << '\n';
            return mvsde::cli::kIoError;
        }
        return 0;
    }
    mvsde::cli::RunOptions opts;
    if (!rerun_out.empty()) opts.out = rerun_out;
    opts.threads = rerun_threads;
    opts.log = &std::cout;
    return mvsde::cli::rerun(manifest, opts);
}
