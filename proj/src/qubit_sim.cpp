#include "fbs/qubit_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace fbs {

std::string_view to_string(NoiseKind kind) {
    switch (kind) {
        case NoiseKind::Quasistatic: return "quasistatic";
        case NoiseKind::OuDrift: return "ou_drift";
        case NoiseKind::OneOverF: return "one_over_f";
    }
    return "unknown";
}

NoiseKind noise_kind_from_string(std::string_view name) {
    if (name == "quasistatic") return NoiseKind::Quasistatic;
    if (name == "ou_drift") return NoiseKind::OuDrift;
    if (name == "one_over_f") return NoiseKind::OneOverF;
    throw std::invalid_argument("unknown noise kind '" + std::string(name) +
                                "' (expected quasistatic, ou_drift or one_over_f)");
}

void NoiseProcess::validate() const {
    if (!(sigma_eps >= 0.0) || !std::isfinite(sigma_eps)) {
        throw std::invalid_argument("noise sigma_eps must be finite and >= 0");
    }
    if (kind == NoiseKind::OuDrift && !(correlation_time > 0.0)) {
        throw std::invalid_argument("ou_drift correlation_time must be > 0");
    }
    if (kind == NoiseKind::OneOverF) {
        if (!(band_low_hz > 0.0)) {
            throw std::invalid_argument("one_over_f band_low_hz must be > 0");
        }
        if (octave_count < 2) {
            throw std::invalid_argument("one_over_f needs octave_count >= 2 (>= 3 components)");
        }
    }
}

std::vector<double> NoiseProcess::component_rates() const {
    switch (kind) {
        case NoiseKind::Quasistatic: return {};
        case NoiseKind::OuDrift: return {1.0 / correlation_time};
        case NoiseKind::OneOverF: {
            std::vector<double> rates(static_cast<std::size_t>(octave_count) + 1);
            for (std::size_t k = 0; k < rates.size(); ++k) {
                rates[k] = 2.0 * kPi * band_low_hz * std::ldexp(1.0, static_cast<int>(k));
            }
            return rates;
        }
    }
    return {};
}

namespace {

double component_sigma(const NoiseProcess& process, std::size_t count) {
    return count == 0 ? 0.0 : process.sigma_eps / std::sqrt(static_cast<double>(count));
}

double total_shift(const QubitState& s) {
    return s.offset + std::accumulate(s.components.begin(), s.components.end(), 0.0);
}

}  // namespace

QubitState initial_state(const NoiseProcess& process, RandomStream& rng) {
    process.validate();
    QubitState state;
    const auto rates = process.component_rates();
    const double s = component_sigma(process, rates.size());
    state.components.resize(rates.size());
    for (double& c : state.components) c = s * rng.normal();
    if (process.kind == NoiseKind::Quasistatic) {
        state.offset = process.sigma_eps * rng.normal();
    }
    state.eps_true = total_shift(state);
    return state;
}

QubitState step_noise(const NoiseProcess& process, const QubitState& state, double dt,
                      RandomStream& rng) {
    if (!(dt >= 0.0)) {
        throw std::invalid_argument("step_noise: dt must be >= 0");
    }
    QubitState next = state;
    next.clock += dt;
    if (dt == 0.0 || process.kind == NoiseKind::Quasistatic) {
        return next;
    }
    const auto rates = process.component_rates();
    if (next.components.size() != rates.size()) {
        throw std::invalid_argument("step_noise: state does not match the noise process");
    }
    const double s = component_sigma(process, rates.size());
    for (std::size_t k = 0; k < rates.size(); ++k) {
        const double decay = std::exp(-rates[k] * dt);
        next.components[k] =
            next.components[k] * decay + s * std::sqrt(1.0 - decay * decay) * rng.normal();
    }
    next.eps_true = total_shift(next);
    return next;
}

QubitState redraw_quasistatic(const NoiseProcess& process, const QubitState& state,
                              RandomStream& rng) {
    if (process.kind != NoiseKind::Quasistatic) {
        return state;
    }
    QubitState next = state;
    next.offset = process.sigma_eps * rng.normal();
    next.eps_true = total_shift(next);
    return next;
}

Outcome sample_outcome(double eps_true, const ProbeSettings& probe, const LikelihoodModel& model,
                       RandomStream& rng) {
    const double p_plus = likelihood_probability(Outcome::Plus, eps_true, probe, model);
    return rng.bernoulli(p_plus) ? Outcome::Plus : Outcome::Minus;
}

Outcome outcome_from_levels(int previous_level, int level) {
    if ((previous_level != 0 && previous_level != 1) || (level != 0 && level != 1)) {
        throw std::invalid_argument("qubit levels must be 0 or 1");
    }
    return outcome_from_int(2 * std::abs(level - previous_level) - 1);
}

std::pair<Outcome, QubitState> no_reset_outcome(const QubitState& state,
                                                const ProbeSettings& probe,
                                                const LikelihoodModel& model, RandomStream& rng) {
    const bool flip = sample_outcome(state.eps_true, probe, model, rng) == Outcome::Plus;
    QubitState next = state;
    next.level = flip ? 1 - state.level : state.level;
    return {outcome_from_levels(state.level, next.level), std::move(next)};
}

double cycle_duration(const ProbeSettings& probe, const CycleOverheads& overheads) {
    if (!(overheads.readout >= 0.0) || !(overheads.depletion >= 0.0)) {
        throw std::invalid_argument("cycle overheads must be non-negative");
    }
    return probe.tau + overheads.readout + overheads.depletion;
}

SimulatedQubit::SimulatedQubit(NoiseProcess process, LikelihoodModel truth, RandomStream rng,
                               CycleOverheads overheads, Readout readout)
    : process_(process),
      truth_(truth),
      rng_(std::move(rng)),
      overheads_(overheads),
      readout_(readout),
      state_(initial_state(process_, rng_)) {}

Outcome SimulatedQubit::measure(const ProbeSettings& probe) { return measure(probe, readout_); }

Outcome SimulatedQubit::measure(const ProbeSettings& probe, Readout readout) {
    Outcome m;
    if (readout == Readout::NoReset) {
        auto [outcome, next] = no_reset_outcome(state_, probe, truth_, rng_);
        m = outcome;
        state_ = std::move(next);
    } else {
        m = sample_outcome(state_.eps_true, probe, truth_, rng_);
    }
    state_ = step_noise(process_, state_, cycle_duration(probe, overheads_), rng_);
    return m;
}

void SimulatedQubit::start_at(double eps) {
    state_.offset = eps;
    std::fill(state_.components.begin(), state_.components.end(), 0.0);
    state_.eps_true = total_shift(state_);
}

}  // namespace fbs
