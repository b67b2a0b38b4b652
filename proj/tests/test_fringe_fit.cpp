#include <doctest.h>

#include <cmath>

#include "fbs/estimator.hpp"
#include "fbs/fringe_fit.hpp"
#include "fbs/random.hpp"

using namespace fbs;

namespace {

FringeRecord synthetic(double t2, double f, double amp, double offset, double phase, double noise,
                       std::uint64_t seed) {
    FringeRecord r;
    RandomStream rng(seed);
    for (int j = 0; j < 50; ++j) {
        const double tau = 7e-6 * j / 49.0;
        r.tau_values.push_back(tau);
        const double y = offset + amp * std::exp(-std::pow(tau / t2, 2)) * std::cos(2 * kPi * f * tau + phase);
        r.flip_fractions.push_back(std::clamp(y + noise * rng.normal(), 0.0, 1.0));
    }
    r.shots_per_point = 1000;
    return r;
}

}  // namespace

TEST_CASE("noise-free fringe is recovered") {
    const auto fit = fit_fringe(synthetic(5e-6, 1e6, 0.3, 0.5, 0.4, 0.0, 1));
    CHECK(fit.converged);
    CHECK(fit.t2 == doctest::Approx(5e-6).epsilon(1e-6));
    CHECK(fit.frequency == doctest::Approx(1e6).epsilon(1e-6));
    CHECK(fit.amplitude == doctest::Approx(0.3).epsilon(1e-6));
    CHECK(fit.offset == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(fit.residual_rms < 1e-8);
}

TEST_CASE("noisy fringe within 1% and error bars cover the truth") {
    int covered = 0;
    const int trials = 40;
    for (int s = 0; s < trials; ++s) {
        const auto fit = fit_fringe(synthetic(4e-6, 1e6, 0.3, 0.5, 0.0, 0.005, 100 + s));
        REQUIRE(fit.converged);
        CHECK(fit.frequency == doctest::Approx(1e6).epsilon(0.01));
        CHECK(fit.t2 == doctest::Approx(4e-6).epsilon(0.05));
        CHECK(fit.frequency_error > 0.0);
        covered += std::abs(fit.frequency - 1e6) < 3.0 * fit.frequency_error;
    }
    CHECK(covered >= trials - 3);
}

TEST_CASE("negative amplitude is normalised") {
    const auto fit = fit_fringe(synthetic(5e-6, 1.2e6, -0.3, 0.5, 0.0, 0.0, 1));
    CHECK(fit.amplitude > 0.0);
    CHECK(std::abs(fit.phase) <= kPi);
    CHECK(fit.frequency == doctest::Approx(1.2e6).epsilon(1e-6));
}

TEST_CASE("degenerate records") {
    FringeRecord flat;
    for (int j = 0; j < 20; ++j) {
        flat.tau_values.push_back(j * 1e-7);
        flat.flip_fractions.push_back(0.5);
    }
    const auto fit = fit_fringe(flat);
    CHECK(fit.amplitude == 0.0);
    CHECK_FALSE(fit.t2_identifiable);
    CHECK(std::isnan(fit.t2));

    FringeRecord short_record = flat;
    short_record.tau_values.resize(5);
    short_record.flip_fractions.resize(5);
    CHECK_THROWS_AS(fit_fringe(short_record), std::invalid_argument);

    FringeRecord unordered = flat;
    std::swap(unordered.tau_values[3], unordered.tau_values[4]);
    CHECK_THROWS_AS(fit_fringe(unordered), std::invalid_argument);
}
