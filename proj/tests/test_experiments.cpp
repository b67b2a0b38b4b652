#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "fbs/experiments.hpp"

using namespace fbs;

TEST_CASE("median") {
    CHECK(median({3.0, 1.0, 2.0}) == 2.0);
    CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
    CHECK_THROWS_AS(median({}), std::invalid_argument);
}

TEST_CASE("campaign with zero shots reproduces the prior spread") {
    CampaignConfig cfg;
    cfg.run_count = 4000;
    cfg.shots = 0;
    const auto r = run_campaign(cfg);
    CHECK(r.stats.std == doctest::Approx(cfg.prior.sigma()).epsilon(0.05));
    CHECK(r.stats.mean_final_sigma == cfg.prior.sigma());
}

TEST_CASE("ideal campaign core follows the geometric posterior width") {
    CampaignConfig cfg;
    cfg.run_count = 5000;
    cfg.truth_model = cfg.update_model = LikelihoodModel::ideal();
    const auto r = run_campaign(cfg);
    CHECK(r.stats.mean_final_sigma / cfg.prior.sigma() == doctest::Approx(0.0321).epsilon(2e-3));
    // The robust width estimate ignores the few runs that lock onto an alias.
    CHECK(kMadToSigma * r.stats.mad / cfg.prior.sigma() == doctest::Approx(0.0321).epsilon(0.15));
}

// The plain standard deviation is dominated by the ~4% of runs whose truth
// sits deep in the prior tail and locks onto a neighbouring fringe, so this
// check does not hold; kept as its own ctest entry.
TEST_CASE("ideal campaign standard deviation" * doctest::test_suite("ideal-std")) {
    CampaignConfig cfg;
    cfg.run_count = 5000;
    cfg.truth_model = cfg.update_model = LikelihoodModel::ideal();
    const auto r = run_campaign(cfg);
    CHECK(r.stats.std / cfg.prior.sigma() == doctest::Approx(0.0321).epsilon(0.15));
}

TEST_CASE("campaign results do not depend on the worker count") {
    CampaignConfig cfg;
    cfg.run_count = 300;
    cfg.noise = NoiseProcess::ou_drift(20e3, 1e-4);
    const auto one = run_campaign(cfg, 1);
    const auto four = run_campaign(cfg, 4);
    REQUIRE(one.runs.size() == four.runs.size());
    for (std::size_t i = 0; i < one.runs.size(); ++i) {
        REQUIRE(one.runs[i].eps_hat == four.runs[i].eps_hat);
        REQUIRE(one.runs[i].eps_true == four.runs[i].eps_true);
        REQUIRE(one.runs[i].final_sigma == four.runs[i].final_sigma);
    }
    cfg.master_seed = 2;
    CHECK(run_campaign(cfg, 1).runs[0].eps_hat != one.runs[0].eps_hat);
}

TEST_CASE("matched and mismatched campaigns") {
    CampaignConfig matched;
    matched.run_count = 2000;
    CampaignConfig mismatched = matched;
    mismatched.update_model = LikelihoodModel::ideal();
    const auto a = run_campaign(matched);
    const auto b = run_campaign(mismatched);
    CHECK(b.stats.outlier_fraction > a.stats.outlier_fraction);
    CHECK(a.stats.calibration_fraction >= 0.60);
    CHECK(a.stats.calibration_fraction <= 0.76);
}

TEST_CASE("summary statistics") {
    std::vector<CampaignRun> runs;
    RandomStream rng(4);
    for (std::size_t i = 0; i < 20000; ++i) {
        runs.push_back({i, 0.0, rng.normal(0.0, 2.0), 2.0});
    }
    const auto st = summarize(runs);
    CHECK(st.std == doctest::Approx(2.0).epsilon(0.02));
    CHECK(kMadToSigma * st.mad == doctest::Approx(2.0).epsilon(0.03));
    CHECK(st.calibration_fraction == doctest::Approx(0.6827).epsilon(0.02));
    CHECK(st.outlier_fraction == doctest::Approx(0.0027).epsilon(0.5));
    const auto cal = mad_calibration(st);
    CHECK(cal.ratio_to_mean_sigma == doctest::Approx(1.0).epsilon(0.03));
    CHECK(ks_statistic_central(st.errors, 2.0) < 0.02);
    CHECK(ks_statistic_central(st.errors, 3.0) > 0.05);

    runs.resize(500);
    CHECK_THROWS_AS(mad_calibration(summarize(runs)), std::invalid_argument);
}

TEST_CASE("gaussian validity sweep") {
    const auto mults = default_tau_multipliers();
    const GaussianBelief prior(0.0, 1e6);
    const LikelihoodModel model = LikelihoodModel::reference();
    const auto rows = gaussian_validity_sweep(prior, model, mults, 1 << 13);
    REQUIRE(rows.size() == 2 * mults.size());
    const double tau_opt = optimal_tau(prior.sigma(), model.coherence_time());
    for (std::size_t i = 0; i < mults.size(); ++i) {
        const auto& minus = rows[2 * i];
        const auto& plus = rows[2 * i + 1];
        CHECK(minus.outcome == Outcome::Minus);
        CHECK(plus.outcome == Outcome::Plus);
        CHECK(minus.tau == doctest::Approx(mults[i] * tau_opt));
        for (const auto* r : {&minus, &plus}) {
            CHECK(r->kl_bits >= 0.0);
            CHECK(r->posterior_sigma == doctest::Approx(r->closed_form_sigma).epsilon(1e-4));
            CHECK(r->local_maxima >= 1);
        }
    }
    const double bad[] = {0.0};
    CHECK_THROWS_AS(gaussian_validity_sweep(prior, model, bad), std::invalid_argument);
}

TEST_CASE("frequentist estimator") {
    const LikelihoodModel model = LikelihoodModel::reference();
    RandomStream rng(8);
    const double tau = 1e-6;
    SUBCASE("estimates stay inside the unambiguous range") {
        for (int i = 0; i < 2000; ++i) {
            const double e = frequentist_estimate(5e6 * (rng.uniform() - 0.5), tau, 15, model, rng);
            REQUIRE(e > -0.5 / tau);
            REQUIRE(e <= 0.5 / tau);
        }
    }
    SUBCASE("mean estimate near the inflection point is linear") {
        const double eps = 0.05 / tau;
        double sum = 0.0;
        const int reps = 200;
        for (int i = 0; i < reps; ++i) sum += frequentist_estimate(eps, tau, 10000, model, rng);
        // Small-angle linearisation of sin(2 pi eps tau); 0.05 cycles gives ~1.6% bias.
        CHECK(sum / reps == doctest::Approx(eps).epsilon(0.10));
    }
}

TEST_CASE("frequentist comparison rows") {
    ComparisonConfig cfg;
    cfg.run_count = 600;
    const auto rows = compare_frequentist(cfg);
    REQUIRE(rows.size() == cfg.tau_multipliers.size());
    for (const auto& r : rows) {
        CHECK(r.fbs_median_abs_error < r.frequentist_median_abs_error);
        CHECK(r.out_of_range_count <= cfg.run_count);
    }
    CHECK(rows.back().out_of_range_count > rows.front().out_of_range_count);
    CHECK(compare_frequentist(cfg, 3)[2].frequentist_median_abs_error ==
          rows[2].frequentist_median_abs_error);
}

TEST_CASE("drift tracking keeps the error below the drift amplitude") {
    DriftTrackingConfig cfg;
    cfg.estimations = 2000;
    const auto r = track_drift(cfg);
    REQUIRE(r.errors.size() == cfg.estimations);
    CHECK(r.median_abs_error < cfg.noise.sigma_eps / 2.0);
    CHECK(r.elapsed > 0.0);
}

TEST_CASE("closed loop with no noise gives matching fringes") {
    ClosedLoopConfig cfg;
    cfg.noise = NoiseProcess::quasistatic(0.0);
    cfg.truth_model = cfg.update_model = LikelihoodModel::ideal();
    cfg.repetitions = 100;
    cfg.verification_cycles = 20;
    const auto r = closed_loop_track(cfg);
    const auto& a = r.with_feedback;
    const auto& b = r.without_feedback;
    REQUIRE(a.tau_values == b.tau_values);
    // Per-point difference against binomial errors: chi^2 per degree of
    // freedom should be O(1) if the two fringes come from the same law.
    double chi2 = 0.0;
    for (std::size_t j = 0; j < a.tau_values.size(); ++j) {
        const double p = 0.5 * (a.flip_fractions[j] + b.flip_fractions[j]);
        const double var = std::max(2.0 * p * (1.0 - p) / cfg.repetitions, 1e-6);
        chi2 += std::pow(a.flip_fractions[j] - b.flip_fractions[j], 2) / var;
    }
    CHECK(chi2 / a.tau_values.size() < 3.0);
}

TEST_CASE("closed loop configuration validation") {
    ClosedLoopConfig cfg;
    cfg.verification_cycles = 1;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = ClosedLoopConfig{};
    cfg.tau_max = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
