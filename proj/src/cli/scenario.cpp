#include "fbs/scenario.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include "fbs/estimator.hpp"
#include "fbs/experiments.hpp"
#include "fbs/qubit_sim.hpp"

namespace fbs::cli {

using nlohmann::json;

std::string_view to_string(Command c) {
    switch (c) {
        case Command::Estimate: return "estimate";
        case Command::Campaign: return "campaign";
        case Command::ValidateGaussian: return "validate-gaussian";
        case Command::Track: return "track";
        case Command::CompareFrequentist: return "compare-frequentist";
    }
    return "unknown";
}

Command command_from_string(std::string_view name) {
    for (Command c : {Command::Estimate, Command::Campaign, Command::ValidateGaussian,
                      Command::Track, Command::CompareFrequentist}) {
        if (to_string(c) == name) return c;
    }
    throw ScenarioError("unknown command '" + std::string(name) +
                        "' (expected estimate, campaign, validate-gaussian, track, "
                        "compare-frequentist)");
}

std::string_view to_string(Format f) { return f == Format::Csv ? "csv" : "json"; }

Format format_from_string(std::string_view name) {
    if (name == "csv") return Format::Csv;
    if (name == "json") return Format::Json;
    throw ScenarioError("format: expected 'csv' or 'json', got '" + std::string(name) + "'");
}

Scenario default_scenario(Command c) {
    Scenario s;
    s.command = c;
    switch (c) {
        case Command::Estimate:
        case Command::Campaign:
            break;
        case Command::ValidateGaussian:
            s.tau_multipliers = default_tau_multipliers();
            break;
        case Command::Track:
            s.sigma0 = 30e3;
            s.n = 8;
            s.sigma_eps = 30e3;
            break;
        case Command::CompareFrequentist:
            s.tau_multipliers = {0.5, 1.0, 2.0, 4.0};
            break;
    }
    return s;
}

namespace {

void require(bool ok, const std::string& message) {
    if (!ok) throw ScenarioError(message);
}

void check_model(double alpha, double beta, double t, const std::string& prefix) {
    require(alpha > -1.0 && alpha < 1.0, prefix + "alpha must lie in (-1, 1)");
    require(beta >= 0.0 && beta <= 1.0, prefix + "beta must lie in [0, 1]");
    require(std::abs(alpha) + beta <= 1.0 + 1e-12,
            prefix + "alpha/beta invalid: |alpha| + beta must not exceed 1");
    require(t > 0.0, prefix + "T must be > 0 (use \"inf\" for no dephasing)");
}

bool is_positive_finite(double x) { return x > 0.0 && std::isfinite(x); }

}  // namespace

void validate(const Scenario& s) {
    require(std::isfinite(s.mu0), "mu0 must be finite");
    require(is_positive_finite(s.sigma0), "sigma0 must be > 0 and finite");
    check_model(s.alpha, s.beta, s.coherence_time, "");
    check_model(s.update_alpha, s.update_beta, s.update_coherence_time, "update_");
    require(!s.eps_true || std::isfinite(*s.eps_true), "eps_true must be finite");
    require(s.runs >= 1, "runs must be >= 1");
    try {
        noise_kind_from_string(s.noise);
    } catch (const std::invalid_argument& e) {
        throw ScenarioError(e.what());
    }
    require(s.sigma_eps >= 0.0 && std::isfinite(s.sigma_eps), "sigma_eps must be >= 0");
    require(is_positive_finite(s.correlation_time), "correlation_time must be > 0");
    require(is_positive_finite(s.band_low_hz), "band_low_hz must be > 0");
    require(s.octave_count >= 2 && s.octave_count <= 60, "octave_count must be in [2, 60]");
    require(s.cycles >= 2, "cycles must be >= 2");
    require(is_positive_finite(s.tau_max), "tau_max must be > 0");
    require(s.repetitions >= 1, "repetitions must be >= 1");
    require(std::isfinite(s.target_detuning), "target_detuning must be finite");
    for (double m : s.tau_multipliers) {
        require(is_positive_finite(m), "tau_multipliers must all be > 0");
    }
    if (s.command == Command::ValidateGaussian || s.command == Command::CompareFrequentist) {
        require(!s.tau_multipliers.empty(), "tau_multipliers must not be empty");
    }
    if (s.command == Command::Track) {
        require(s.cycles >= 10, "track needs cycles >= 10 for the fringe fit");
    }
    require(s.readout >= 0.0 && std::isfinite(s.readout), "readout must be >= 0");
    require(s.depletion >= 0.0 && std::isfinite(s.depletion), "depletion must be >= 0");
}

namespace {

json time_to_json(double t) {
    if (std::isinf(t)) return "inf";
    return t;
}

double time_from_json(const json& v, const std::string& key) {
    if (v.is_string()) {
        const auto str = v.get<std::string>();
        if (str == "inf" || str == "infinity") return std::numeric_limits<double>::infinity();
        throw ScenarioError(key + ": expected a number or \"inf\", got \"" + str + "\"");
    }
    if (!v.is_number()) throw ScenarioError(key + ": expected a number or \"inf\"");
    return v.get<double>();
}

double number(const json& v, const std::string& key) {
    if (!v.is_number()) throw ScenarioError(key + ": expected a number");
    return v.get<double>();
}

std::size_t count(const json& v, const std::string& key) {
    if (!v.is_number_integer() || v.get<long long>() < 0) {
        throw ScenarioError(key + ": expected a non-negative integer");
    }
    return v.get<std::size_t>();
}

std::string text(const json& v, const std::string& key) {
    if (!v.is_string()) throw ScenarioError(key + ": expected a string");
    return v.get<std::string>();
}

}  // namespace

json to_json(const Scenario& s) {
    json j;
    j["command"] = to_string(s.command);
    j["output"] = s.output;
    j["seed"] = s.seed;
    j["format"] = to_string(s.format);
    j["mu0"] = s.mu0;
    j["sigma0"] = s.sigma0;
    j["n"] = s.n;
    j["alpha"] = s.alpha;
    j["beta"] = s.beta;
    j["T"] = time_to_json(s.coherence_time);
    j["update_alpha"] = s.update_alpha;
    j["update_beta"] = s.update_beta;
    j["update_T"] = time_to_json(s.update_coherence_time);
    j["eps_true"] = s.eps_true ? json(*s.eps_true) : json(nullptr);
    j["runs"] = s.runs;
    j["noise"] = s.noise;
    j["sigma_eps"] = s.sigma_eps;
    j["correlation_time"] = s.correlation_time;
    j["band_low_hz"] = s.band_low_hz;
    j["octave_count"] = s.octave_count;
    j["cycles"] = s.cycles;
    j["tau_max"] = s.tau_max;
    j["repetitions"] = s.repetitions;
    j["target_detuning"] = s.target_detuning;
    j["tau_multipliers"] = s.tau_multipliers;
    j["readout"] = s.readout;
    j["depletion"] = s.depletion;
    return j;
}

Scenario merge_json(Scenario s, const json& j) {
    if (!j.is_object()) throw ScenarioError("config must be a JSON object");
    for (const auto& [key, v] : j.items()) {
        if (key == "command") {
            s.command = command_from_string(text(v, key));
        } else if (key == "output") {
            s.output = text(v, key);
        } else if (key == "seed") {
            if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
                throw ScenarioError("seed: expected a non-negative integer");
            }
            s.seed = v.get<std::uint64_t>();
        } else if (key == "format") {
            s.format = format_from_string(text(v, key));
        } else if (key == "mu0") {
            s.mu0 = number(v, key);
        } else if (key == "sigma0") {
            s.sigma0 = number(v, key);
        } else if (key == "n") {
            s.n = count(v, key);
        } else if (key == "alpha") {
            s.alpha = number(v, key);
        } else if (key == "beta") {
            s.beta = number(v, key);
        } else if (key == "T") {
            s.coherence_time = time_from_json(v, key);
        } else if (key == "update_alpha") {
            s.update_alpha = number(v, key);
        } else if (key == "update_beta") {
            s.update_beta = number(v, key);
        } else if (key == "update_T") {
            s.update_coherence_time = time_from_json(v, key);
        } else if (key == "eps_true") {
            s.eps_true = v.is_null() ? std::nullopt : std::optional<double>(number(v, key));
        } else if (key == "runs") {
            s.runs = count(v, key);
        } else if (key == "noise") {
            s.noise = text(v, key);
        } else if (key == "sigma_eps") {
            s.sigma_eps = number(v, key);
        } else if (key == "correlation_time") {
            s.correlation_time = number(v, key);
        } else if (key == "band_low_hz") {
            s.band_low_hz = number(v, key);
        } else if (key == "octave_count") {
            s.octave_count = static_cast<int>(count(v, key));
        } else if (key == "cycles") {
            s.cycles = count(v, key);
        } else if (key == "tau_max") {
            s.tau_max = number(v, key);
        } else if (key == "repetitions") {
            s.repetitions = count(v, key);
        } else if (key == "target_detuning") {
            s.target_detuning = number(v, key);
        } else if (key == "tau_multipliers") {
            if (!v.is_array()) throw ScenarioError("tau_multipliers: expected an array");
            s.tau_multipliers.clear();
            for (const auto& x : v) s.tau_multipliers.push_back(number(x, key));
        } else if (key == "readout") {
            s.readout = number(v, key);
        } else if (key == "depletion") {
            s.depletion = number(v, key);
        } else {
            throw ScenarioError("unknown config key '" + key + "'");
        }
    }
    // The estimator assumes the data-generating model unless told otherwise.
    if (j.contains("alpha") && !j.contains("update_alpha")) s.update_alpha = s.alpha;
    if (j.contains("beta") && !j.contains("update_beta")) s.update_beta = s.beta;
    if (j.contains("T") && !j.contains("update_T")) s.update_coherence_time = s.coherence_time;
    return s;
}

json load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError("cannot open config file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string content = buffer.str();

    // CSV output: "# scenario: {...}" header line.
    if (content.rfind("#", 0) == 0) {
        std::istringstream lines(content);
        std::string line;
        constexpr std::string_view tag = "# scenario: ";
        while (std::getline(lines, line) && line.rfind("#", 0) == 0) {
            if (line.rfind(tag, 0) == 0) {
                try {
                    return json::parse(line.substr(tag.size()));
                } catch (const json::parse_error& e) {
                    throw ScenarioError(path.string() + ": malformed scenario header: " + e.what());
                }
            }
        }
        throw ScenarioError(path.string() + ": no '# scenario:' header line found");
    }
    json j;
    try {
        j = json::parse(content);
    } catch (const json::parse_error& e) {
        throw ScenarioError(path.string() + ": invalid JSON: " + e.what());
    }
    // JSON output written by this tool: scenario nested under "scenario".
    if (j.is_object() && j.contains("tool") && j.contains("scenario")) {
        return j.at("scenario");
    }
    return j;
}

std::string default_output_path(Command c, Format f) {
    const char* dir = std::getenv(kOutputDirEnv.data());
    const std::filesystem::path base = (dir && *dir) ? dir : ".";
    return (base / (std::string(to_string(c)) + "." + std::string(to_string(f)))).string();
}

namespace {

struct FlagValues {
    std::optional<std::string> config;
    std::optional<std::string> output;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> format;
    std::optional<double> mu0, sigma0, alpha, beta, update_alpha, update_beta, eps_true;
    std::optional<std::string> coherence_time, update_coherence_time;
    std::optional<std::size_t> n, runs, cycles, repetitions;
    std::optional<std::string> noise;
    std::optional<double> sigma_eps, correlation_time, band_low_hz, tau_max, target_detuning;
    std::optional<double> readout, depletion;
    std::optional<int> octave_count;
    std::vector<double> tau_multipliers;
    unsigned workers = 1;
};

void add_flags(CLI::App& app, FlagValues& f) {
    app.add_option("--config", f.config,
                   "JSON config file, or an output file whose header is replayed");
    app.add_option("-o,--output", f.output, "output data file");
    app.add_option("--seed", f.seed, "master random seed");
    app.add_option("--format", f.format, "csv or json");
    app.add_option("--workers", f.workers, "worker threads (does not change results)");
    app.add_option("--mu0", f.mu0, "prior mean [Hz]");
    app.add_option("--sigma0", f.sigma0, "prior standard deviation [Hz]");
    app.add_option("--n", f.n, "shots per estimation");
    app.add_option("--alpha", f.alpha, "readout bias of the simulated qubit");
    app.add_option("--beta", f.beta, "visibility of the simulated qubit");
    app.add_option("--T", f.coherence_time, "coherence time [s] or inf");
    app.add_option("--update-alpha", f.update_alpha, "alpha assumed by the estimator");
    app.add_option("--update-beta", f.update_beta, "beta assumed by the estimator");
    app.add_option("--update-T", f.update_coherence_time, "T assumed by the estimator");
    app.add_option("--eps-true", f.eps_true, "fixed true shift for estimate [Hz]");
    app.add_option("--runs", f.runs, "Monte Carlo runs");
    app.add_option("--noise", f.noise, "quasistatic, ou_drift or one_over_f");
    app.add_option("--sigma-eps", f.sigma_eps, "noise standard deviation [Hz]");
    app.add_option("--correlation-time", f.correlation_time, "OU correlation time [s]");
    app.add_option("--band-low", f.band_low_hz, "1/f band lower edge [Hz]");
    app.add_option("--octaves", f.octave_count, "1/f band width in octaves");
    app.add_option("--cycles", f.cycles, "verification Ramsey cycles per repetition");
    app.add_option("--tau-max", f.tau_max, "longest verification evolution time [s]");
    app.add_option("--repetitions", f.repetitions, "closed-loop protocol repetitions");
    app.add_option("--target-detuning", f.target_detuning, "verification detuning [Hz]");
    app.add_option("--tau-multipliers", f.tau_multipliers, "multiples of the optimal tau (comma separated)")
        ->delimiter(',');
    app.add_option("--readout", f.readout, "readout duration [s]");
    app.add_option("--depletion", f.depletion, "resonator depletion duration [s]");
}

json time_flag(const std::string& value, const std::string& key) {
    if (value == "inf" || value == "infinity") return "inf";
    try {
        std::size_t used = 0;
        const double t = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return t;
    } catch (const std::exception&) {
        throw ScenarioError("--" + key + ": expected seconds or 'inf', got '" + value + "'");
    }
}

json flags_to_json(const FlagValues& f) {
    json j = json::object();
    const auto put = [&j](const char* key, const auto& opt) {
        if (opt) j[key] = *opt;
    };
    put("output", f.output);
    put("seed", f.seed);
    put("format", f.format);
    put("mu0", f.mu0);
    put("sigma0", f.sigma0);
    put("n", f.n);
    put("alpha", f.alpha);
    put("beta", f.beta);
    if (f.coherence_time) j["T"] = time_flag(*f.coherence_time, "T");
    put("update_alpha", f.update_alpha);
    put("update_beta", f.update_beta);
    if (f.update_coherence_time) j["update_T"] = time_flag(*f.update_coherence_time, "update-T");
    put("eps_true", f.eps_true);
    put("runs", f.runs);
    put("noise", f.noise);
    put("sigma_eps", f.sigma_eps);
    put("correlation_time", f.correlation_time);
    put("band_low_hz", f.band_low_hz);
    put("octave_count", f.octave_count);
    put("cycles", f.cycles);
    put("tau_max", f.tau_max);
    put("repetitions", f.repetitions);
    put("target_detuning", f.target_detuning);
    put("readout", f.readout);
    put("depletion", f.depletion);
    if (!f.tau_multipliers.empty()) j["tau_multipliers"] = f.tau_multipliers;
    return j;
}

}  // namespace

Invocation parse_invocation(const std::vector<std::string>& args) {
    CLI::App app{"Frequency binary search estimator and experiment harness",
                 std::string(kToolName)};
    app.require_subcommand(1);
    FlagValues flags;
    std::vector<std::pair<Command, CLI::App*>> subs;
    for (Command c : {Command::Estimate, Command::Campaign, Command::ValidateGaussian,
                      Command::Track, Command::CompareFrequentist}) {
        CLI::App* sub = app.add_subcommand(std::string(to_string(c)));
        add_flags(*sub, flags);
        subs.emplace_back(c, sub);
    }

    Invocation inv;
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        inv.help_requested = true;
        inv.help_text = app.help();
        for (const auto& [c, sub] : subs) {
            if (sub->parsed()) inv.help_text = sub->help();
        }
        return inv;
    } catch (const CLI::ParseError& e) {
        throw ScenarioError(e.what());
    }

    Command command = Command::Estimate;
    for (const auto& [c, sub] : subs) {
        if (sub->parsed()) command = c;
    }

    json merged = json::object();
    if (flags.config) {
        merged = load_config_file(*flags.config);
        if (!merged.is_object()) throw ScenarioError("config must be a JSON object");
        if (merged.contains("command") &&
            command_from_string(merged["command"].get<std::string>()) != command) {
            throw ScenarioError("config file is for command '" +
                                merged["command"].get<std::string>() + "', not '" +
                                std::string(to_string(command)) + "'");
        }
    }
    merged.update(flags_to_json(flags));
    merged.erase("command");

    Scenario s = merge_json(default_scenario(command), merged);
    if (s.output.empty()) s.output = default_output_path(command, s.format);
    validate(s);
    inv.scenario = std::move(s);
    inv.workers = std::max(1u, flags.workers);
    return inv;
}

}  // namespace fbs::cli
