#include "fbs/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "parallel.hpp"

namespace fbs {

double median(std::vector<double> values) {
    if (values.empty()) {
        throw std::invalid_argument("median of an empty sample");
    }
    const std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + mid, values.end());
    const double upper = values[mid];
    if (values.size() % 2 == 1) return upper;
    const double lower = *std::max_element(values.begin(), values.begin() + mid);
    return 0.5 * (lower + upper);
}

void CampaignConfig::validate() const {
    if (run_count < 1) {
        throw std::invalid_argument("campaign run_count must be >= 1");
    }
    noise.validate();
}

ErrorStats summarize(std::span<const CampaignRun> runs) {
    ErrorStats s;
    if (runs.empty()) return s;
    s.errors.reserve(runs.size());
    double sigma_sum = 0.0;
    std::size_t outliers = 0;
    std::size_t calibrated = 0;
    for (const auto& r : runs) {
        const double e = r.error();
        s.errors.push_back(e);
        sigma_sum += r.final_sigma;
        if (std::abs(e) > 3.0 * r.final_sigma) ++outliers;
        if (std::abs(e) <= r.final_sigma) ++calibrated;
    }
    const double n = static_cast<double>(runs.size());
    s.mean_final_sigma = sigma_sum / n;
    s.mean_error = std::accumulate(s.errors.begin(), s.errors.end(), 0.0) / n;
    double ss = 0.0;
    for (double e : s.errors) ss += (e - s.mean_error) * (e - s.mean_error);
    s.std = runs.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;

    const double center = median(s.errors);
    std::vector<double> dev(s.errors.size());
    std::transform(s.errors.begin(), s.errors.end(), dev.begin(),
                   [center](double e) { return std::abs(e - center); });
    s.mad = median(dev);
    std::transform(s.errors.begin(), s.errors.end(), dev.begin(),
                   [](double e) { return std::abs(e); });
    s.median_abs_error = median(std::move(dev));
    s.outlier_fraction = static_cast<double>(outliers) / n;
    s.calibration_fraction = static_cast<double>(calibrated) / n;
    return s;
}

CampaignResult run_campaign(const CampaignConfig& cfg, unsigned workers) {
    cfg.validate();
    CampaignResult result;
    result.runs.resize(cfg.run_count);
    detail::parallel_for(cfg.run_count, workers, [&](std::size_t i) {
        RandomStream rng = RandomStream::derive(cfg.master_seed, i);
        const double eps0 = rng.normal(cfg.prior.mu(), cfg.prior.sigma());
        SimulatedQubit qubit(cfg.noise, cfg.truth_model, std::move(rng), cfg.overheads);
        qubit.start_at(eps0);
        auto est = run_estimation(cfg.prior, cfg.shots, cfg.update_model,
                                  [&qubit](const ProbeSettings& p) { return qubit.measure(p); });
        if (!est.completed()) {
            try {
                std::rethrow_exception(est.failure);
            } catch (const std::exception& e) {
                throw std::runtime_error("campaign run " + std::to_string(i) + ": " + e.what());
            }
        }
        result.runs[i] = {i, qubit.eps_true(), est.belief.mu(), est.belief.sigma()};
    });
    result.stats = summarize(result.runs);
    return result;
}

MadCalibration mad_calibration(const ErrorStats& stats) {
    if (stats.errors.size() < 1000) {
        throw std::invalid_argument("mad_calibration needs at least 1000 errors");
    }
    const double k_mad = kMadToSigma * stats.mad;
    return {k_mad, k_mad / stats.mean_final_sigma};
}

double ks_statistic_central(std::span<const double> errors, double sigma, double central_mass) {
    if (errors.empty() || !(sigma > 0.0) || !(central_mass > 0.0 && central_mass <= 1.0)) {
        throw std::invalid_argument("ks_statistic_central: invalid arguments");
    }
    std::vector<double> x(errors.begin(), errors.end());
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    const auto quantile_index = [&](double q) {
        return std::min(x.size() - 1, static_cast<std::size_t>(std::floor(q * (n - 1.0))));
    };
    const double tail = 0.5 * (1.0 - central_mass);
    const std::size_t lo = quantile_index(tail);
    const std::size_t hi = quantile_index(1.0 - tail);
    double d = 0.0;
    for (std::size_t i = lo; i <= hi; ++i) {
        const double cdf = 0.5 * std::erfc(-x[i] / (sigma * std::sqrt(2.0)));
        const double below = static_cast<double>(i) / n;
        const double at = static_cast<double>(i + 1) / n;
        d = std::max({d, std::abs(cdf - below), std::abs(cdf - at)});
    }
    return d;
}

std::vector<double> default_tau_multipliers() {
    return {0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0};
}

std::vector<ValidityRow> gaussian_validity_sweep(const GaussianBelief& prior,
                                                 const LikelihoodModel& model,
                                                 std::span<const double> tau_multipliers,
                                                 std::size_t grid_points) {
    const double tau_opt = optimal_tau(prior.sigma(), model.coherence_time());
    const GridPosterior grid = GridPosterior::from_gaussian(prior, kDefaultHalfWidthSigmas,
                                                            grid_points);
    std::vector<ValidityRow> rows;
    for (double mult : tau_multipliers) {
        if (!(mult > 0.0)) {
            throw std::invalid_argument("tau multipliers must be positive");
        }
        const double tau = mult * tau_opt;
        const ProbeSettings probe{tau, optimal_detuning(prior.mu(), tau), 0};
        for (Outcome m : {Outcome::Minus, Outcome::Plus}) {
            const GridPosterior post = grid_update(grid, m, probe, model);
            const Moments mom = moments(post);
            const GridPosterior fit =
                GridPosterior::gaussian_like(post, GaussianBelief(mom.mean, mom.stddev));
            ValidityRow row;
            row.tau_multiplier = mult;
            row.tau = tau;
            row.outcome = m;
            row.posterior_mean = mom.mean;
            row.posterior_sigma = mom.stddev;
            row.closed_form_sigma = update(prior, probe, m, model).sigma();
            row.kl_bits = kl_divergence(post, fit);
            row.local_maxima = count_local_maxima(post);
            rows.push_back(row);
        }
    }
    return rows;
}

void ClosedLoopConfig::validate() const {
    noise.validate();
    if (verification_cycles < 2) {
        throw std::invalid_argument("closed loop needs at least 2 verification cycles");
    }
    if (!(tau_max > 0.0)) {
        throw std::invalid_argument("closed loop tau_max must be > 0");
    }
    if (repetitions < 1) {
        throw std::invalid_argument("closed loop needs at least one repetition");
    }
    if (!(prior_sigma > 0.0)) {
        throw std::invalid_argument("closed loop prior_sigma must be > 0");
    }
}

ClosedLoopResult closed_loop_track(const ClosedLoopConfig& cfg) {
    cfg.validate();
    const std::size_t M = cfg.verification_cycles;
    std::vector<double> taus(M);
    for (std::size_t j = 0; j < M; ++j) {
        taus[j] = cfg.tau_max * static_cast<double>(j) / static_cast<double>(M - 1);
    }
    std::vector<std::size_t> flips_fb(M, 0);
    std::vector<std::size_t> flips_nofb(M, 0);

    SimulatedQubit qubit(cfg.noise, cfg.truth_model, RandomStream(cfg.seed), cfg.overheads,
                         SimulatedQubit::Readout::NoReset);
    const auto measure = [&qubit](const ProbeSettings& p) { return qubit.measure(p); };

    ClosedLoopResult result;
    result.estimation_errors.reserve(cfg.repetitions * M);
    double estimate = 0.0;
    for (std::size_t r = 0; r < cfg.repetitions; ++r) {
        qubit.redraw();
        if (cfg.noise.kind == NoiseKind::Quasistatic &&
            cfg.warm_start == ClosedLoopConfig::WarmStart::WithinRedraws) {
            estimate = 0.0;
        }
        for (std::size_t j = 0; j < M; ++j) {
            const auto est = run_estimation(GaussianBelief(estimate, cfg.prior_sigma), cfg.shots,
                                            cfg.update_model, measure);
            const double eps_hat = est.belief.mu();
            result.estimation_errors.push_back(eps_hat - qubit.eps_true());
            const ProbeSettings probe{taus[j], cfg.target_detuning + eps_hat, 0};
            if (qubit.measure(probe) == Outcome::Plus) ++flips_fb[j];
            if (cfg.warm_start != ClosedLoopConfig::WarmStart::Never) estimate = eps_hat;
        }
        for (std::size_t k = 0; k < M; ++k) {
            const ProbeSettings probe{taus[k], cfg.target_detuning, 0};
            if (qubit.measure(probe) == Outcome::Plus) ++flips_nofb[k];
        }
    }

    const auto to_record = [&](const std::vector<std::size_t>& flips, bool feedback) {
        FringeRecord rec;
        rec.tau_values = taus;
        rec.feedback = feedback;
        rec.shots_per_point = cfg.repetitions;
        rec.flip_fractions.resize(M);
        for (std::size_t j = 0; j < M; ++j) {
            rec.flip_fractions[j] =
                static_cast<double>(flips[j]) / static_cast<double>(cfg.repetitions);
        }
        return rec;
    };
    result.with_feedback = to_record(flips_fb, true);
    result.without_feedback = to_record(flips_nofb, false);
    return result;
}

DriftTrackingResult track_drift(const DriftTrackingConfig& cfg) {
    cfg.noise.validate();
    SimulatedQubit qubit(cfg.noise, cfg.truth_model, RandomStream(cfg.seed), cfg.overheads);
    const auto measure = [&qubit](const ProbeSettings& p) { return qubit.measure(p); };
    DriftTrackingResult result;
    result.errors.reserve(cfg.estimations);
    result.final_sigmas.reserve(cfg.estimations);
    double estimate = 0.0;
    for (std::size_t i = 0; i < cfg.estimations; ++i) {
        const auto est = run_estimation(GaussianBelief(estimate, cfg.prior_sigma), cfg.shots,
                                        cfg.update_model, measure);
        estimate = est.belief.mu();
        result.errors.push_back(estimate - qubit.eps_true());
        result.final_sigmas.push_back(est.belief.sigma());
    }
    std::vector<double> abs_err(result.errors.size());
    std::transform(result.errors.begin(), result.errors.end(), abs_err.begin(),
                   [](double e) { return std::abs(e); });
    result.median_abs_error = abs_err.empty() ? 0.0 : median(std::move(abs_err));
    result.elapsed = qubit.state().clock;
    return result;
}

double frequentist_estimate(double eps_true, double tau, std::size_t shots,
                            const LikelihoodModel& model, RandomStream& rng) {
    if (!(tau > 0.0)) {
        throw std::invalid_argument("frequentist_estimate: tau must be > 0");
    }
    if (shots < 1) {
        throw std::invalid_argument("frequentist_estimate: need at least one shot");
    }
    const ProbeSettings probe{tau, optimal_detuning(0.0, tau), 0};
    long sum = 0;
    for (std::size_t i = 0; i < shots; ++i) {
        sum += sign_of(sample_outcome(eps_true, probe, model, rng));
    }
    const double mean_m = static_cast<double>(sum) / static_cast<double>(shots);
    const double slope = 2.0 * kPi * model.contrast(tau) * tau;
    if (!(slope > 0.0)) {
        return 0.0;
    }
    const double half_range = 1.0 / (2.0 * tau);
    const double eps_hat = (mean_m - model.alpha()) / slope;
    // Half-open range (-1/(2 tau), +1/(2 tau)]: the lower edge maps to the upper.
    if (eps_hat <= -half_range || eps_hat > half_range) {
        return eps_hat > 0.0 ? half_range : std::nextafter(-half_range, 0.0);
    }
    return eps_hat;
}

std::vector<ComparisonRow> compare_frequentist(const ComparisonConfig& cfg, unsigned workers) {
    if (cfg.run_count < 1 || cfg.shots < 1) {
        throw std::invalid_argument("comparison needs run_count >= 1 and shots >= 1");
    }
    const std::size_t K = cfg.tau_multipliers.size();
    const double tau_opt = optimal_tau(cfg.prior.sigma(), cfg.model.coherence_time());
    std::vector<double> truths(cfg.run_count);
    std::vector<double> fbs_err(cfg.run_count);
    std::vector<double> freq_err(cfg.run_count * K);

    detail::parallel_for(cfg.run_count, workers, [&](std::size_t i) {
        RandomStream rng = RandomStream::derive(cfg.seed, i);
        const double eps = rng.normal(cfg.prior.mu(), cfg.prior.sigma());
        truths[i] = eps;
        auto est = run_estimation(cfg.prior, cfg.shots, cfg.model, [&](const ProbeSettings& p) {
            return sample_outcome(eps, p, cfg.model, rng);
        });
        fbs_err[i] = std::abs(est.belief.mu() - eps);
        for (std::size_t k = 0; k < K; ++k) {
            const double tau = cfg.tau_multipliers[k] * tau_opt;
            freq_err[i * K + k] =
                std::abs(frequentist_estimate(eps, tau, cfg.shots, cfg.model, rng) - eps);
        }
    });

    const double fbs_median = median(fbs_err);
    std::vector<ComparisonRow> rows;
    for (std::size_t k = 0; k < K; ++k) {
        ComparisonRow row;
        row.tau_multiplier = cfg.tau_multipliers[k];
        row.tau = row.tau_multiplier * tau_opt;
        row.fbs_median_abs_error = fbs_median;
        std::vector<double> freq_all(cfg.run_count);
        std::vector<double> fbs_out;
        std::vector<double> freq_out;
        const double half_range = 1.0 / (2.0 * row.tau);
        for (std::size_t i = 0; i < cfg.run_count; ++i) {
            freq_all[i] = freq_err[i * K + k];
            if (truths[i] <= -half_range || truths[i] > half_range) {
                fbs_out.push_back(fbs_err[i]);
                freq_out.push_back(freq_err[i * K + k]);
            }
        }
        row.frequentist_median_abs_error = median(std::move(freq_all));
        row.out_of_range_count = fbs_out.size();
        if (!fbs_out.empty()) {
            row.fbs_out_of_range_median = median(std::move(fbs_out));
            row.frequentist_out_of_range_median = median(std::move(freq_out));
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace fbs
