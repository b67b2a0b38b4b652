#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "fbs/qubit_sim.hpp"
#include "fbs/random.hpp"

using namespace fbs;

TEST_CASE("noise kind names round-trip") {
    for (NoiseKind k : {NoiseKind::Quasistatic, NoiseKind::OuDrift, NoiseKind::OneOverF}) {
        CHECK(noise_kind_from_string(to_string(k)) == k);
    }
    CHECK_THROWS_AS(noise_kind_from_string("pink"), std::invalid_argument);
    CHECK_THROWS_AS(NoiseProcess::one_over_f(1e3, 1.0, 1).validate(), std::invalid_argument);
    CHECK_THROWS_AS(NoiseProcess::ou_drift(1e3, 0.0).validate(), std::invalid_argument);
}

TEST_CASE("sample_outcome") {
    RandomStream rng(1);
    SUBCASE("ideal probe at the fringe maximum") {
        const ProbeSettings p{100e-9, 1e5, 0};
        for (int i = 0; i < 1000; ++i) {
            REQUIRE(sample_outcome(1e5, p, LikelihoodModel::ideal(), rng) == Outcome::Plus);
        }
    }
    SUBCASE("frequencies follow the likelihood") {
        const LikelihoodModel model = LikelihoodModel::reference();
        const ProbeSettings p{300e-9, 1.2e6, 0};
        const double eps = 0.3e6;
        const double prob = likelihood_probability(Outcome::Plus, eps, p, model);
        const int n = 100000;
        int plus = 0;
        for (int i = 0; i < n; ++i) plus += sample_outcome(eps, p, model, rng) == Outcome::Plus;
        const double sd = std::sqrt(n * prob * (1.0 - prob));
        CHECK(std::abs(plus - n * prob) < 3.0 * sd);
    }
    SUBCASE("only the difference between detuning and eps matters") {
        const LikelihoodModel model = LikelihoodModel::reference();
        RandomStream a(9), b(9);
        for (int i = 0; i < 2000; ++i) {
            const ProbeSettings p1{250e-9, 1e6, 0};
            const ProbeSettings p2{250e-9, 1e6 + 3.7e5, 0};
            REQUIRE(sample_outcome(0.1e6, p1, model, a) == sample_outcome(0.1e6 + 3.7e5, p2, model, b));
        }
    }
}

TEST_CASE("noise propagation") {
    RandomStream rng(21);
    SUBCASE("quasistatic shift is frozen between redraws") {
        const auto proc = NoiseProcess::quasistatic(30e3);
        const auto s0 = initial_state(proc, rng);
        auto s = s0;
        for (int i = 0; i < 100; ++i) s = step_noise(proc, s, 1e-3, rng);
        CHECK(s.eps_true == s0.eps_true);
        CHECK(s.clock == doctest::Approx(0.1));
        CHECK(redraw_quasistatic(proc, s, rng).eps_true != s.eps_true);
    }
    SUBCASE("zero step leaves OU state unchanged and negative step throws") {
        const auto proc = NoiseProcess::ou_drift(30e3, 1e-3);
        const auto s0 = initial_state(proc, rng);
        CHECK(step_noise(proc, s0, 0.0, rng).eps_true == s0.eps_true);
        CHECK_THROWS_AS(step_noise(proc, s0, -1e-6, rng), std::invalid_argument);
    }
    SUBCASE("OU stationary variance and autocorrelation") {
        const double sigma = 30e3, tc = 1e-3, dt = 2e-4;
        const auto proc = NoiseProcess::ou_drift(sigma, tc);
        auto s = initial_state(proc, rng);
        const int n = 400000;
        double sum2 = 0.0, lag = 0.0, prev = s.eps_true;
        for (int i = 0; i < n; ++i) {
            s = step_noise(proc, s, dt, rng);
            sum2 += s.eps_true * s.eps_true;
            lag += s.eps_true * prev;
            prev = s.eps_true;
        }
        CHECK(std::sqrt(sum2 / n) == doctest::Approx(sigma).epsilon(0.05));
        CHECK(lag / sum2 == doctest::Approx(std::exp(-dt / tc)).epsilon(0.02));
    }
    SUBCASE("1/f process has stationary sigma and a -1 spectral slope") {
        const double sigma = 10e3, f_lo = 1.0;
        const int octaves = 8;
        const auto proc = NoiseProcess::one_over_f(sigma, f_lo, octaves);
        const double dt = 1.0 / (8.0 * f_lo * std::pow(2.0, octaves));
        const std::size_t n = 1 << 16;
        const int segments = 16;
        std::vector<double> psd(n / 2, 0.0);
        double sum2 = 0.0;
        Eigen::FFT<double> fft;
        auto s = initial_state(proc, rng);
        for (int seg = 0; seg < segments; ++seg) {
            std::vector<double> x(n);
            for (auto& v : x) {
                s = step_noise(proc, s, dt, rng);
                v = s.eps_true;
                sum2 += v * v;
            }
            std::vector<std::complex<double>> X;
            fft.fwd(X, x);
            for (std::size_t k = 0; k < n / 2; ++k) psd[k] += std::norm(X[k]);
        }
        CHECK(std::sqrt(sum2 / (segments * static_cast<double>(n))) == doctest::Approx(sigma).epsilon(0.1));

        // Least-squares slope of log PSD vs log f inside the band, with
        // log-spaced bins so every octave carries the same weight.
        const double df = 1.0 / (n * dt);
        const double lo = 2.0 * f_lo, hi = f_lo * std::pow(2.0, octaves) / 2.0;
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int count = 0;
        for (double edge = lo; edge < hi; edge *= std::pow(2.0, 0.25)) {
            const double upper = edge * std::pow(2.0, 0.25);
            double acc = 0.0;
            int bins = 0;
            for (std::size_t k = 1; k < n / 2; ++k) {
                const double f = k * df;
                if (f >= edge && f < upper) {
                    acc += psd[k];
                    ++bins;
                }
            }
            if (bins == 0) continue;
            const double x = std::log(std::sqrt(edge * upper));
            const double y = std::log(acc / bins);
            sx += x; sy += y; sxx += x * x; sxy += x * y;
            ++count;
        }
        const double slope = (count * sxy - sx * sy) / (count * sxx - sx * sx);
        CHECK(slope == doctest::Approx(-1.0).epsilon(0.3));
    }
}

TEST_CASE("no-reset readout") {
    CHECK(outcome_from_levels(0, 0) == Outcome::Minus);
    CHECK(outcome_from_levels(1, 1) == Outcome::Minus);
    CHECK(outcome_from_levels(0, 1) == Outcome::Plus);
    CHECK(outcome_from_levels(1, 0) == Outcome::Plus);

    SUBCASE("outcome statistics match direct sampling") {
        const LikelihoodModel model = LikelihoodModel::reference();
        const ProbeSettings p{400e-9, 0.9e6, 0};
        const double eps = 0.2e6;
        RandomStream rng(33);
        QubitState s;
        s.eps_true = eps;
        const int n = 100000;
        int flips = 0, direct = 0;
        for (int i = 0; i < n; ++i) {
            const int before = s.level;
            auto [m, next] = no_reset_outcome(s, p, model, rng);
            REQUIRE(m == outcome_from_levels(before, next.level));
            flips += m == Outcome::Plus;
            s = next;
            direct += sample_outcome(eps, p, model, rng) == Outcome::Plus;
        }
        const double p1 = static_cast<double>(flips) / n, p2 = static_cast<double>(direct) / n;
        const double pooled = 0.5 * (p1 + p2);
        const double z = (p1 - p2) / std::sqrt(pooled * (1.0 - pooled) * 2.0 / n);
        CHECK(std::abs(z) < 4.0);
        CHECK(p1 == doctest::Approx(likelihood_probability(Outcome::Plus, eps, p, model)).epsilon(0.02));
    }
}

TEST_CASE("cycle duration") {
    CHECK(cycle_duration(ProbeSettings{4.36e-6, 0.0, 0}, CycleOverheads{}) ==
          doctest::Approx(7.80e-6).epsilon(1e-9));
}

TEST_CASE("simulated qubit") {
    SUBCASE("identical seeds give identical sequences") {
        auto make = [] {
            return SimulatedQubit(NoiseProcess::ou_drift(30e3, 1e-3), LikelihoodModel::reference(),
                                  RandomStream(77), CycleOverheads{}, SimulatedQubit::Readout::NoReset);
        };
        auto a = make(), b = make();
        const ProbeSettings p{300e-9, 1e6, 0};
        for (int i = 0; i < 5000; ++i) {
            REQUIRE(a.measure(p) == b.measure(p));
            REQUIRE(a.eps_true() == b.eps_true());
        }
        CHECK(a.state().clock == doctest::Approx(5000 * cycle_duration(p, CycleOverheads{})));
    }
    SUBCASE("start_at pins the truth") {
        SimulatedQubit q(NoiseProcess::quasistatic(1e6), LikelihoodModel::ideal(), RandomStream(1));
        q.start_at(123.0);
        CHECK(q.eps_true() == 123.0);
        q.measure(ProbeSettings{1e-7, 0.0, 0});
        CHECK(q.eps_true() == 123.0);
    }
}
