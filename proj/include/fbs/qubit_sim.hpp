#pragma once
// Simulated qubit: single-shot Ramsey outcomes drawn from the likelihood model
// for a true frequency shift that follows a configurable noise process.

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fbs/estimator.hpp"
#include "fbs/random.hpp"

namespace fbs {

enum class NoiseKind { Quasistatic, OuDrift, OneOverF };

std::string_view to_string(NoiseKind kind);
NoiseKind noise_kind_from_string(std::string_view name);

struct NoiseProcess {
    NoiseKind kind = NoiseKind::Quasistatic;
    double sigma_eps = 0.0;         // stationary standard deviation [Hz]
    double correlation_time = 1.0;  // OU correlation time [s]
    double band_low_hz = 1.0;       // 1/f band [band_low, band_low * 2^octaves]
    int octave_count = 6;

    static NoiseProcess quasistatic(double sigma_eps) {
        return {NoiseKind::Quasistatic, sigma_eps};
    }
    static NoiseProcess ou_drift(double sigma_eps, double correlation_time) {
        return {NoiseKind::OuDrift, sigma_eps, correlation_time};
    }
    static NoiseProcess one_over_f(double sigma_eps, double band_low_hz, int octave_count) {
        return {NoiseKind::OneOverF, sigma_eps, 1.0, band_low_hz, octave_count};
    }

    // Throws std::invalid_argument on out-of-range parameters.
    void validate() const;

    // Relaxation rates [1/s] of the OU components (empty for quasistatic).
    // 1/f uses octave_count + 1 log-spaced rates 2 pi f over the band.
    std::vector<double> component_rates() const;

    bool operator==(const NoiseProcess&) const = default;
};

struct QubitState {
    int level = 0;            // s in {0, 1}
    double eps_true = 0.0;    // offset + sum(components) [Hz]
    double clock = 0.0;       // elapsed simulated time [s]
    double offset = 0.0;      // static part of the shift [Hz]
    std::vector<double> components;  // OU component values [Hz]
};

// Fresh state: offset zero, components drawn from their stationary law,
// quasistatic shift drawn from N(0, sigma_eps^2).
QubitState initial_state(const NoiseProcess& process, RandomStream& rng);

// Advances the noise by dt >= 0. Quasistatic shifts stay fixed; OU components
// use the exact transition x' = x e^{-g dt} + s sqrt(1 - e^{-2 g dt}) xi.
QubitState step_noise(const NoiseProcess& process, const QubitState& state, double dt,
                      RandomStream& rng);

// Starts a new estimation sequence: a quasistatic shift is redrawn, drifting
// processes are left as they are.
QubitState redraw_quasistatic(const NoiseProcess& process, const QubitState& state,
                              RandomStream& rng);

Outcome sample_outcome(double eps_true, const ProbeSettings& probe, const LikelihoodModel& model,
                       RandomStream& rng);

// m = 2|s_i - s_{i-1}| - 1
Outcome outcome_from_levels(int previous_level, int level);

// Shot without re-initialisation: the qubit flips (m = +1) with the
// likelihood-model probability and the outcome is read as flip / no flip.
std::pair<Outcome, QubitState> no_reset_outcome(const QubitState& state,
                                                const ProbeSettings& probe,
                                                const LikelihoodModel& model, RandomStream& rng);

struct CycleOverheads {
    double readout = 1.44e-6;
    double depletion = 2.0e-6;

    bool operator==(const CycleOverheads&) const = default;
};

double cycle_duration(const ProbeSettings& probe, const CycleOverheads& overheads);

// Qubit with its own state, noise process and RNG stream. Each measure()
// call is one probing cycle: draw the outcome, then advance the clock and the
// noise by the cycle duration.
class SimulatedQubit {
public:
    enum class Readout { Direct, NoReset };

    SimulatedQubit(NoiseProcess process, LikelihoodModel truth, RandomStream rng,
                   CycleOverheads overheads = {}, Readout readout = Readout::Direct);

    Outcome measure(const ProbeSettings& probe);
    Outcome measure(const ProbeSettings& probe, Readout readout);

    void redraw() { state_ = redraw_quasistatic(process_, state_, rng_); }
    // Pins the shift to `eps`: static offset eps, drift components zeroed.
    void start_at(double eps);

    const QubitState& state() const { return state_; }
    double eps_true() const { return state_.eps_true; }
    RandomStream& rng() { return rng_; }

private:
    NoiseProcess process_;
    LikelihoodModel truth_;
    RandomStream rng_;
    CycleOverheads overheads_;
    Readout readout_;
    QubitState state_;
};

}  // namespace fbs
