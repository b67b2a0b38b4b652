#pragma once
// Command-line scenarios: resolution (defaults < config file < flags),
// validation, serialisation into output headers, and execution.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace fbs::cli {

inline constexpr std::string_view kToolName = "fbs";
inline constexpr std::string_view kToolVersion = "1.0.0";
inline constexpr std::string_view kOutputDirEnv = "FBS_OUTPUT_DIR";

// Invalid or inconsistent scenario input (exit code 1).
class ScenarioError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Command { Estimate, Campaign, ValidateGaussian, Track, CompareFrequentist };
enum class Format { Csv, Json };

std::string_view to_string(Command c);
Command command_from_string(std::string_view name);
std::string_view to_string(Format f);
Format format_from_string(std::string_view name);

struct Scenario {
    Command command = Command::Estimate;
    std::string output;  // resolved output path
    std::uint64_t seed = 1;
    Format format = Format::Csv;

    double mu0 = 0.0;
    double sigma0 = 1e6;
    std::size_t n = 15;
    double alpha = -0.02;
    double beta = 0.6;
    double coherence_time = 10e-6;  // +inf allowed
    // Model assumed by the estimator; campaigns may differ from the truth.
    double update_alpha = -0.02;
    double update_beta = 0.6;
    double update_coherence_time = 10e-6;
    std::optional<double> eps_true;  // estimate: fixed truth, otherwise drawn

    std::size_t runs = 5000;

    std::string noise = "quasistatic";
    double sigma_eps = 0.0;
    double correlation_time = 1e-3;
    double band_low_hz = 1.0;
    int octave_count = 6;

    std::size_t cycles = 50;  // verification cycles M
    double tau_max = 7e-6;
    std::size_t repetitions = 200;
    double target_detuning = 1e6;

    std::vector<double> tau_multipliers;

    double readout = 1.44e-6;
    double depletion = 2.0e-6;

    bool operator==(const Scenario&) const = default;
};

// Per-command defaults (output left empty).
Scenario default_scenario(Command c);

// Throws ScenarioError with a one-line message naming the offending key.
void validate(const Scenario& s);

nlohmann::json to_json(const Scenario& s);

// Applies the keys present in `j` on top of `base`. Unknown keys and
// ill-typed values throw ScenarioError.
Scenario merge_json(Scenario base, const nlohmann::json& j);

// Reads a JSON config file, or recovers the scenario from the header of a
// CSV or JSON output file written by this tool.
nlohmann::json load_config_file(const std::filesystem::path& path);

// Default output: $FBS_OUTPUT_DIR (or the working directory) / <command>.<ext>
std::string default_output_path(Command c, Format f);

struct Invocation {
    Scenario scenario;
    unsigned workers = 1;
    bool help_requested = false;
    std::string help_text;
};

// Parses `fbs <command> [flags]` (args exclude the program name).
Invocation parse_invocation(const std::vector<std::string>& args);

// Runs the scenario and writes its data file plus "<output>.summary.json".
// Throws on runtime failures.
void execute(const Scenario& s, unsigned workers = 1);

std::filesystem::path summary_path(const std::string& output);

// Full CLI entry point with exit codes 0 (ok), 1 (invalid input), 2 (runtime error).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fbs::cli
