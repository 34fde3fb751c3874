#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mvsde/chaos.hpp"
#include "mvsde/integrator.hpp"
#include "mvsde/model.hpp"

namespace mvsde::cli {

inline constexpr const char* kVersion = "0.1.0";

// Bad configuration text or value; the message names the line or key.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Mode { chaos_sweep, verify, moments, decay };
std::string mode_name(Mode mode);
Mode parse_mode(const std::string& name);

enum class InitialKind { normal, point };

struct ExperimentConfig {
    Mode mode = Mode::chaos_sweep;

    BuiltinModel model = BuiltinModel::example61;
    LinearMeanFieldParams linear;

    InitialKind initial = InitialKind::normal;
    double initial_mean = 0.0;
    double initial_variance = 1.0;
    double initial_point = 0.0;

    SchemeKind scheme = SchemeKind::tamed_euler;
    std::optional<double> dt; // unset: 1e-3 for T <= 1, else 2e-3
    std::size_t outer_m = 1;

    double T = 1.0;

    std::size_t n1 = 16;
    std::size_t levels = 6;
    std::size_t replications = 100;
    ChaosEstimator estimator = ChaosEstimator::splitting;
    std::size_t reference_factor = 64;

    std::uint64_t seed = 42;

    std::size_t verify_samples = 100000;
    std::vector<double> verify_radii{1.0, 5.0, 10.0};
    double verify_x_max = 20.0;

    std::size_t moments_n = 10000;
    std::size_t moments_points = 100;

    std::size_t decay_n = 10000;
    double decay_p = 2.0;
    std::size_t decay_points = 200;

    std::string output_path = "results.csv";
};

// Grammar, one statement per line:
//   # comment            (also after a value)
//   [section]
//   key = value          (inside a section: section.key)
//   section.key = value  (anywhere)
// Unknown keys and malformed lines raise ConfigError with the line number.
// The result is validated.
ExperimentConfig parse_config(std::string_view text);

// Sets one dotted key; throws ConfigError naming the key on a bad value.
void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value);

// Range checks; throws ConfigError listing the key and accepted range.
void validate(const ExperimentConfig& config);

// Canonical text with every key, parseable by parse_config.
std::string to_text(const ExperimentConfig& config);

double resolved_dt(const ExperimentConfig& config);
CoefficientModel build_model(const ExperimentConfig& config);
InitialLaw build_initial(const ExperimentConfig& config);
SchemeConfig build_scheme(const ExperimentConfig& config);

enum ExitCode : int { kSuccess = 0, kVerificationFailed = 1, kIoError = 2, kBlowUp = 3 };

struct RunOptions {
    std::optional<std::filesystem::path> out; // overrides output.path
    int threads = 0;                          // 0: leave the OpenMP default
    std::ostream* log = nullptr;              // human-readable progress and tables
};

// Runs the configured experiment, writing the CSV and a JSON manifest next
// to it (<stem>.manifest.json). Returns an ExitCode.
int run(const ExperimentConfig& config, const RunOptions& options);

// Re-runs the experiment recorded in a manifest.
int rerun(const std::filesystem::path& manifest, const RunOptions& options);

std::filesystem::path manifest_path_for(const std::filesystem::path& csv);

// Number formatting shared by every CSV: 17 significant digits.
std::string format_number(double value);

// RFC-4180 quoting when the field contains a comma, quote or newline.
std::string csv_field(std::string_view text);

// Gnuplot script drawing log2 error against log2 N for chaos-sweep CSVs,
// one panel per file, side by side.
std::string gnuplot_script(const std::vector<std::filesystem::path>& csvs);

} // namespace mvsde::cli
