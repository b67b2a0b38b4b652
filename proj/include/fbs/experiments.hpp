#pragma once
// Experiment harness: Monte Carlo estimation-error campaigns, Gaussian
// validity sweeps, closed-loop tracking with Ramsey verification, drift
// tracking, and the fixed-tau frequentist baseline.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fbs/estimator.hpp"
#include "fbs/fringe_fit.hpp"
#include "fbs/posterior_oracle.hpp"
#include "fbs/qubit_sim.hpp"
#include "fbs/random.hpp"

namespace fbs {

// Scale from median absolute deviation to a normal standard deviation.
inline constexpr double kMadToSigma = 1.4826;

struct CampaignConfig {
    std::size_t run_count = 5000;
    std::size_t shots = 15;
    GaussianBelief prior{0.0, 1e6};
    LikelihoodModel truth_model = LikelihoodModel::reference();
    LikelihoodModel update_model = LikelihoodModel::reference();
    NoiseProcess noise = NoiseProcess::quasistatic(0.0);
    CycleOverheads overheads;
    std::uint64_t master_seed = 1;

    void validate() const;
};

struct CampaignRun {
    std::size_t index = 0;
    double eps_true = 0.0;  // at the end of the run
    double eps_hat = 0.0;
    double final_sigma = 0.0;

    double error() const { return eps_hat - eps_true; }
};

struct ErrorStats {
    std::vector<double> errors;
    double mean_final_sigma = 0.0;
    double mean_error = 0.0;
    double std = 0.0;
    double mad = 0.0;                   // median |e - median(e)|
    double median_abs_error = 0.0;
    double outlier_fraction = 0.0;      // |e| > 3 final sigma
    double calibration_fraction = 0.0;  // |e| <= final sigma
};

struct CampaignResult {
    std::vector<CampaignRun> runs;
    ErrorStats stats;
};

ErrorStats summarize(std::span<const CampaignRun> runs);

// Each run draws eps_true from the prior, generates outcomes with the truth
// model and updates with the update model. Results are identical for any
// worker count.
CampaignResult run_campaign(const CampaignConfig& cfg, unsigned workers = 1);

struct MadCalibration {
    double k_times_mad = 0.0;
    double ratio_to_mean_sigma = 0.0;
};

// Requires at least 1000 errors.
MadCalibration mad_calibration(const ErrorStats& stats);

// Kolmogorov-Smirnov distance between the empirical error distribution and
// N(0, sigma^2), evaluated only at sample points inside the central
// `central_mass` quantile range of the errors.
double ks_statistic_central(std::span<const double> errors, double sigma,
                            double central_mass = 0.95);

struct ValidityRow {
    double tau_multiplier = 0.0;
    double tau = 0.0;
    Outcome outcome = Outcome::Plus;
    double posterior_mean = 0.0;
    double posterior_sigma = 0.0;    // grid oracle
    double closed_form_sigma = 0.0;  // method-of-moments update
    double kl_bits = 0.0;            // D_KL(true posterior || Gaussian fit)
    std::size_t local_maxima = 0;
};

std::vector<double> default_tau_multipliers();

// One row per (multiplier, outcome), outcomes ordered -1 then +1.
std::vector<ValidityRow> gaussian_validity_sweep(const GaussianBelief& prior,
                                                 const LikelihoodModel& model,
                                                 std::span<const double> tau_multipliers,
                                                 std::size_t grid_points = kDefaultGridPoints);

struct ClosedLoopConfig {
    NoiseProcess noise = NoiseProcess::quasistatic(30e3);
    std::size_t shots = 8;                   // N per estimation
    std::size_t verification_cycles = 50;    // M
    double tau_max = 7e-6;
    std::size_t repetitions = 200;
    double prior_sigma = 30e3;
    double target_detuning = 1e6;
    LikelihoodModel truth_model = LikelihoodModel::reference();
    LikelihoodModel update_model = LikelihoodModel::reference();
    CycleOverheads overheads;
    std::uint64_t seed = 1;
    // Prior mean of each estimation sequence.
    //   AcrossRedraws: always the previous estimate.
    //   WithinRedraws: the previous estimate, except right after a
    //     quasistatic redraw, where it resets to the nominal frequency (0).
    //   Never: always 0.
    enum class WarmStart { AcrossRedraws, WithinRedraws, Never };
    WarmStart warm_start = WarmStart::WithinRedraws;

    void validate() const;
};

struct ClosedLoopResult {
    FringeRecord with_feedback;
    FringeRecord without_feedback;
    // Final estimate minus the true shift, one per estimation sequence.
    std::vector<double> estimation_errors;
};

// Interleaves warm-started estimations with one verification Ramsey shot at
// total detuning target_detuning (feedback arm), then repeats the tau sweep
// at the nominal frequency (no feedback). Quasistatic shifts are redrawn at
// the start of every repetition.
ClosedLoopResult closed_loop_track(const ClosedLoopConfig& cfg);

struct DriftTrackingConfig {
    NoiseProcess noise = NoiseProcess::ou_drift(30e3, 5e-3);
    std::size_t shots = 8;
    std::size_t estimations = 10000;
    double prior_sigma = 30e3;
    LikelihoodModel truth_model = LikelihoodModel::reference();
    LikelihoodModel update_model = LikelihoodModel::reference();
    CycleOverheads overheads;
    std::uint64_t seed = 1;
};

struct DriftTrackingResult {
    std::vector<double> errors;  // mu - eps_true after each estimation
    std::vector<double> final_sigmas;
    double median_abs_error = 0.0;
    double elapsed = 0.0;  // simulated seconds
};

// Back-to-back warm-started estimations against a drifting shift.
DriftTrackingResult track_drift(const DriftTrackingConfig& cfg);

// Fixed-tau estimate: averages `shots` outcomes with the inflection point at
// zero shift and inverts the linearised likelihood,
//   eps_hat = (<m> - alpha) / (2 pi beta tau e^{-tau/T}),
// clamped to (-1/(2 tau), +1/(2 tau)].
double frequentist_estimate(double eps_true, double tau, std::size_t shots,
                            const LikelihoodModel& model, RandomStream& rng);

struct ComparisonConfig {
    std::size_t run_count = 5000;
    std::size_t shots = 15;
    GaussianBelief prior{0.0, 1e6};
    LikelihoodModel model = LikelihoodModel::reference();
    std::vector<double> tau_multipliers{0.5, 1.0, 2.0, 4.0};
    std::uint64_t seed = 1;
};

struct ComparisonRow {
    double tau_multiplier = 0.0;
    double tau = 0.0;
    double fbs_median_abs_error = 0.0;
    double frequentist_median_abs_error = 0.0;
    // Runs whose true shift lies outside (-1/(2 tau), +1/(2 tau)].
    std::size_t out_of_range_count = 0;
    double fbs_out_of_range_median = 0.0;
    double frequentist_out_of_range_median = 0.0;
};

// FBS versus fixed-tau estimation at equal shot budget, tau = multiplier *
// optimal_tau(prior sigma, T).
std::vector<ComparisonRow> compare_frequentist(const ComparisonConfig& cfg, unsigned workers = 1);

double median(std::vector<double> values);

}  // namespace fbs
