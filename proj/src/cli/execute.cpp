#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "fbs/estimator.hpp"
#include "fbs/experiments.hpp"
#include "fbs/qubit_sim.hpp"
#include "fbs/scenario.hpp"

namespace fbs::cli {

using nlohmann::json;

namespace {

// Column-oriented table with a versioned schema name. Cells are stored as
// JSON values so the same rows serialise to CSV and JSON.
struct Table {
    std::string schema;
    std::vector<std::string> columns;
    std::vector<std::vector<json>> rows;
};

std::string csv_cell(const json& v) {
    if (v.is_number_float()) return fmt::format("{}", v.get<double>());
    if (v.is_string()) return v.get<std::string>();
    return v.dump();
}

std::ofstream open_output(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write output file " + path.string());
    return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

void write_table(const Scenario& s, const Table& t) {
    const std::filesystem::path path = s.output;
    auto out = open_output(path);
    if (s.format == Format::Csv) {
        out << "# " << kToolName << ' ' << kToolVersion << '\n';
        out << "# schema: " << t.schema << '\n';
        out << "# seed: " << s.seed << '\n';
        out << "# scenario: " << to_json(s).dump() << '\n';
        for (std::size_t c = 0; c < t.columns.size(); ++c) {
            out << (c ? "," : "") << t.columns[c];
        }
        out << '\n';
        for (const auto& row : t.rows) {
            for (std::size_t c = 0; c < row.size(); ++c) {
                out << (c ? "," : "") << csv_cell(row[c]);
            }
            out << '\n';
        }
    } else {
        json doc;
        doc["tool"] = kToolName;
        doc["version"] = kToolVersion;
        doc["schema"] = t.schema;
        doc["seed"] = s.seed;
        doc["scenario"] = to_json(s);
        doc["columns"] = t.columns;
        json data = json::array();
        for (const auto& row : t.rows) {
            json obj = json::object();
            for (std::size_t c = 0; c < row.size(); ++c) obj[t.columns[c]] = row[c];
            data.push_back(std::move(obj));
        }
        doc["data"] = std::move(data);
        out << doc.dump(2) << '\n';
    }
    finish(out, path);
}

void write_summary(const Scenario& s, const std::string& schema, json body) {
    const auto path = summary_path(s.output);
    auto out = open_output(path);
    json doc;
    doc["tool"] = kToolName;
    doc["version"] = kToolVersion;
    doc["schema"] = schema;
    doc["seed"] = s.seed;
    doc["scenario"] = to_json(s);
    doc["summary"] = std::move(body);
    out << doc.dump(2) << '\n';
    finish(out, path);
}

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

LikelihoodModel truth_model(const Scenario& s) {
    return {s.alpha, s.beta, s.coherence_time};
}

LikelihoodModel update_model(const Scenario& s) {
    return {s.update_alpha, s.update_beta, s.update_coherence_time};
}

NoiseProcess noise_process(const Scenario& s) {
    NoiseProcess p;
    p.kind = noise_kind_from_string(s.noise);
    p.sigma_eps = s.sigma_eps;
    p.correlation_time = s.correlation_time;
    p.band_low_hz = s.band_low_hz;
    p.octave_count = s.octave_count;
    return p;
}

CycleOverheads overheads(const Scenario& s) { return {s.readout, s.depletion}; }

void run_estimate(const Scenario& s) {
    const GaussianBelief prior(s.mu0, s.sigma0);
    RandomStream rng(s.seed);
    const double eps0 = s.eps_true ? *s.eps_true : rng.normal(s.mu0, s.sigma0);
    SimulatedQubit qubit(noise_process(s), truth_model(s), std::move(rng), overheads(s));
    qubit.start_at(eps0);
    const auto result = run_estimation(prior, s.n, update_model(s),
                                       [&qubit](const ProbeSettings& p) { return qubit.measure(p); });

    Table t{"trace/1", {"step", "tau_s", "delta_f_hz", "outcome", "mu_hz", "sigma_hz"}, {}};
    std::size_t floored = 0;
    for (const auto& r : result.trace) {
        t.rows.push_back({r.step, r.probe.tau, r.probe.delta_f, sign_of(r.outcome), r.mu, r.sigma});
        floored += r.variance_floored ? 1 : 0;
    }
    write_table(s, t);
    write_summary(s, "estimate-summary/1",
                  {{"eps_true_hz", qubit.eps_true()},
                   {"eps_initial_hz", eps0},
                   {"mu_hz", result.belief.mu()},
                   {"sigma_hz", result.belief.sigma()},
                   {"error_hz", result.belief.mu() - qubit.eps_true()},
                   {"steps", result.trace.size()},
                   {"variance_floor_events", floored}});
}

void run_campaign_command(const Scenario& s, unsigned workers) {
    CampaignConfig cfg;
    cfg.run_count = s.runs;
    cfg.shots = s.n;
    cfg.prior = GaussianBelief(s.mu0, s.sigma0);
    cfg.truth_model = truth_model(s);
    cfg.update_model = update_model(s);
    cfg.noise = noise_process(s);
    cfg.overheads = overheads(s);
    cfg.master_seed = s.seed;
    const auto result = run_campaign(cfg, workers);

    Table t{"campaign/1", {"run", "eps_true_hz", "eps_hat_hz", "final_sigma_hz"}, {}};
    for (const auto& r : result.runs) {
        t.rows.push_back({r.index, r.eps_true, r.eps_hat, r.final_sigma});
    }
    write_table(s, t);

    const auto& st = result.stats;
    json summary = {{"run_count", st.errors.size()},
                    {"mean_final_sigma_hz", st.mean_final_sigma},
                    {"mean_error_hz", st.mean_error},
                    {"std_hz", st.std},
                    {"mad_hz", st.mad},
                    {"median_abs_error_hz", st.median_abs_error},
                    {"outlier_fraction", st.outlier_fraction},
                    {"calibration_fraction", st.calibration_fraction},
                    {"ks_central95", ks_statistic_central(st.errors, st.mean_final_sigma)}};
    if (st.errors.size() >= 1000) {
        const auto mad = mad_calibration(st);
        summary["k_times_mad_hz"] = mad.k_times_mad;
        summary["k_mad_over_mean_sigma"] = mad.ratio_to_mean_sigma;
    }
    write_summary(s, "campaign-summary/1", std::move(summary));
}

void run_validate(const Scenario& s) {
    const GaussianBelief prior(s.mu0, s.sigma0);
    const auto rows = gaussian_validity_sweep(prior, update_model(s), s.tau_multipliers);
    Table t{"gaussian-validity/1",
            {"tau_multiplier", "tau_s", "outcome", "posterior_mean_hz", "posterior_sigma_hz",
             "closed_form_sigma_hz", "kl_bits", "local_maxima"},
            {}};
    for (const auto& r : rows) {
        t.rows.push_back({r.tau_multiplier, r.tau, sign_of(r.outcome), r.posterior_mean,
                          r.posterior_sigma, r.closed_form_sigma, r.kl_bits, r.local_maxima});
    }
    write_table(s, t);
    write_summary(s, "gaussian-validity-summary/1",
                  {{"tau_opt_s", optimal_tau(s.sigma0, s.update_coherence_time)},
                   {"rows", rows.size()}});
}

json fit_to_json(const FringeFit& f) {
    return {{"t2_s", finite_or_null(f.t2)},
            {"t2_error_s", f.t2_error},
            {"frequency_hz", finite_or_null(f.frequency)},
            {"frequency_error_hz", f.frequency_error},
            {"amplitude", f.amplitude},
            {"amplitude_error", f.amplitude_error},
            {"offset", f.offset},
            {"offset_error", f.offset_error},
            {"phase_rad", f.phase},
            {"phase_error_rad", f.phase_error},
            {"residual_rms", f.residual_rms},
            {"iterations", f.iterations},
            {"converged", f.converged},
            {"t2_identifiable", f.t2_identifiable}};
}

void run_track(const Scenario& s) {
    ClosedLoopConfig cfg;
    cfg.noise = noise_process(s);
    cfg.shots = s.n;
    cfg.verification_cycles = s.cycles;
    cfg.tau_max = s.tau_max;
    cfg.repetitions = s.repetitions;
    cfg.prior_sigma = s.sigma0;
    cfg.target_detuning = s.target_detuning;
    cfg.truth_model = truth_model(s);
    cfg.update_model = update_model(s);
    cfg.overheads = overheads(s);
    cfg.seed = s.seed;
    const auto result = closed_loop_track(cfg);

    Table t{"fringe/1", {"tau_s", "flip_fraction_feedback", "flip_fraction_no_feedback"}, {}};
    for (std::size_t j = 0; j < result.with_feedback.tau_values.size(); ++j) {
        t.rows.push_back({result.with_feedback.tau_values[j],
                          result.with_feedback.flip_fractions[j],
                          result.without_feedback.flip_fractions[j]});
    }
    write_table(s, t);

    std::vector<double> abs_err;
    abs_err.reserve(result.estimation_errors.size());
    for (double e : result.estimation_errors) abs_err.push_back(std::abs(e));
    write_summary(s, "track-summary/1",
                  {{"fit_feedback", fit_to_json(fit_fringe(result.with_feedback))},
                   {"fit_no_feedback", fit_to_json(fit_fringe(result.without_feedback))},
                   {"estimations", result.estimation_errors.size()},
                   {"median_abs_estimation_error_hz", median(std::move(abs_err))}});
}

void run_compare(const Scenario& s, unsigned workers) {
    ComparisonConfig cfg;
    cfg.run_count = s.runs;
    cfg.shots = s.n;
    cfg.prior = GaussianBelief(s.mu0, s.sigma0);
    cfg.model = truth_model(s);
    cfg.tau_multipliers = s.tau_multipliers;
    cfg.seed = s.seed;
    if (s.n < 1) throw ScenarioError("compare-frequentist needs n >= 1");
    const auto rows = compare_frequentist(cfg, workers);
    Table t{"frequentist-comparison/1",
            {"tau_multiplier", "tau_s", "fbs_median_abs_error_hz",
             "frequentist_median_abs_error_hz", "out_of_range_count",
             "fbs_out_of_range_median_hz", "frequentist_out_of_range_median_hz"},
            {}};
    for (const auto& r : rows) {
        t.rows.push_back({r.tau_multiplier, r.tau, r.fbs_median_abs_error,
                          r.frequentist_median_abs_error, r.out_of_range_count,
                          r.fbs_out_of_range_median, r.frequentist_out_of_range_median});
    }
    write_table(s, t);
    write_summary(s, "frequentist-comparison-summary/1",
                  {{"tau_opt_s", optimal_tau(s.sigma0, s.coherence_time)},
                   {"rows", rows.size()}});
}

}  // namespace

std::filesystem::path summary_path(const std::string& output) {
    return std::filesystem::path(output + ".summary.json");
}

void execute(const Scenario& s, unsigned workers) {
    validate(s);
    switch (s.command) {
        case Command::Estimate: run_estimate(s); break;
        case Command::Campaign: run_campaign_command(s, workers); break;
        case Command::ValidateGaussian: run_validate(s); break;
        case Command::Track: run_track(s); break;
        case Command::CompareFrequentist: run_compare(s, workers); break;
    }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Invocation inv;
    try {
        inv = parse_invocation(args);
    } catch (const ScenarioError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    if (inv.help_requested) {
        out << inv.help_text;
        return 0;
    }
    try {
        execute(inv.scenario, inv.workers);
    } catch (const ScenarioError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << to_string(inv.scenario.command) << ": " << e.what() << '\n';
        return 2;
    }
    out << "wrote " << inv.scenario.output << " and " << summary_path(inv.scenario.output).string()
        << '\n';
    return 0;
}

}  // namespace fbs::cli
