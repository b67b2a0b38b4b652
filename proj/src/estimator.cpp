#include "fbs/estimator.hpp"

#include <cmath>
#include <string>

namespace fbs {

namespace {

constexpr double kVarianceFloor = 1e-12;

int branch_parity(int branch) { return (branch % 2 == 0) ? 1 : -1; }

}  // namespace

GaussianBelief::GaussianBelief(double mu, double sigma) : mu_(mu), sigma_(sigma) {
    if (!std::isfinite(mu)) {
        throw std::invalid_argument("GaussianBelief: mean must be finite");
    }
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw std::invalid_argument("GaussianBelief: sigma must be positive and finite, got " +
                                    std::to_string(sigma));
    }
}

LikelihoodModel::LikelihoodModel(double alpha, double beta, double coherence_time)
    : alpha_(alpha), beta_(beta), coherence_time_(coherence_time) {
    if (!(alpha > -1.0 && alpha < 1.0)) {
        throw std::invalid_argument("LikelihoodModel: alpha must lie in (-1, 1)");
    }
    if (!(beta >= 0.0 && beta <= 1.0)) {
        throw std::invalid_argument("LikelihoodModel: beta must lie in [0, 1]");
    }
    // Small slack so that e.g. alpha = -0.4, beta = 0.6 is not rejected by rounding.
    if (std::abs(alpha) + beta > 1.0 + 1e-12) {
        throw std::invalid_argument("LikelihoodModel: |alpha| + beta must not exceed 1");
    }
    if (!(coherence_time > 0.0)) {
        throw std::invalid_argument("LikelihoodModel: coherence time must be positive");
    }
}

double LikelihoodModel::decay_rate() const {
    return std::isinf(coherence_time_) ? 0.0 : 1.0 / coherence_time_;
}

double LikelihoodModel::contrast(double tau) const {
    return beta_ * std::exp(-tau * decay_rate());
}

Outcome outcome_from_int(int m) {
    if (m == 1) return Outcome::Plus;
    if (m == -1) return Outcome::Minus;
    throw std::invalid_argument("outcome must be -1 or +1, got " + std::to_string(m));
}

double likelihood_probability(Outcome m, double eps, const ProbeSettings& probe,
                              const LikelihoodModel& model) {
    const double fringe =
        model.alpha() +
        model.contrast(probe.tau) * std::cos(2.0 * kPi * (probe.delta_f - eps) * probe.tau);
    return 0.5 + 0.5 * sign_of(m) * fringe;
}

double optimal_tau(double sigma, double coherence_time) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw std::domain_error("optimal_tau: sigma must be positive and finite");
    }
    if (!(coherence_time > 0.0)) {
        throw std::domain_error("optimal_tau: coherence time must be positive");
    }
    const double rate = std::isinf(coherence_time) ? 0.0 : 1.0 / coherence_time;
    const double a = 4.0 * kPi * sigma;
    // (sqrt(a^2 + r^2) - r) / (a^2 / 2), rewritten to avoid cancellation for r >> a.
    return 2.0 / (std::sqrt(a * a + rate * rate) + rate);
}

double optimal_detuning(double mu, double tau, int branch) {
    if (!(tau > 0.0) || !std::isfinite(tau)) {
        throw std::domain_error("optimal_detuning: tau must be positive and finite");
    }
    return (1.0 + 2.0 * branch) / (4.0 * tau) + mu;
}

ProbeSettings optimal_probe(const GaussianBelief& belief, const LikelihoodModel& model,
                            int branch) {
    const double tau = optimal_tau(belief.sigma(), model.coherence_time());
    return {tau, optimal_detuning(belief.mu(), tau, branch), branch};
}

namespace {

// beta e^{-tau/T} * 2 pi sigma^2 tau * e^{-2 pi^2 sigma^2 tau^2}; the mean shift
// for m = +1 before the (1 + m alpha) normalisation.
double shift_numerator(double sigma, double tau, const LikelihoodModel& model) {
    const double s2 = sigma * sigma;
    return model.contrast(tau) * 2.0 * kPi * s2 * tau * std::exp(-2.0 * kPi * kPi * s2 * tau * tau);
}

}  // namespace

double expected_posterior_variance(double sigma, double tau, const LikelihoodModel& model) {
    // Marginal P(m) at the inflection point is (1 + m alpha) / 2, hence
    // sum_m P(m) / (1 + m alpha)^2 = 1 / (1 - alpha^2).
    const double shift = shift_numerator(sigma, tau, model);
    const double a = model.alpha();
    return sigma * sigma - shift * shift / (1.0 - a * a);
}

UpdateResult update_with_diagnostics(const GaussianBelief& belief, const ProbeSettings& probe,
                                     Outcome m, const LikelihoodModel& model) {
    if (!(probe.tau > 0.0)) {
        throw std::domain_error("update: probe tau must be positive");
    }
    const double norm = 1.0 + sign_of(m) * model.alpha();
    const double shift = shift_numerator(belief.sigma(), probe.tau, model) / norm;
    const double mu = belief.mu() + branch_parity(probe.branch) * sign_of(m) * shift;

    const double prior_var = belief.variance();
    double var = prior_var - shift * shift;
    if (!std::isfinite(var) || !std::isfinite(mu)) {
        throw NumericalError("update: non-finite posterior moments");
    }
    bool floored = false;
    if (var < kVarianceFloor * prior_var) {
        var = kVarianceFloor * prior_var;
        floored = true;
    }
    return {GaussianBelief(mu, std::sqrt(var)), floored};
}

GaussianBelief update(const GaussianBelief& belief, const ProbeSettings& probe, Outcome m,
                      const LikelihoodModel& model) {
    return update_with_diagnostics(belief, probe, m, model).belief;
}

EstimationResult run_estimation(const GaussianBelief& prior, std::size_t shots,
                                const LikelihoodModel& model, const OutcomeSource& measure,
                                int branch) {
    EstimationResult result{prior, {}, nullptr};
    result.trace.reserve(shots);
    for (std::size_t n = 0; n < shots; ++n) {
        const ProbeSettings probe = optimal_probe(result.belief, model, branch);
        Outcome m;
        try {
            m = measure(probe);
        } catch (...) {
            result.failure = std::current_exception();
            return result;
        }
        const UpdateResult next = update_with_diagnostics(result.belief, probe, m, model);
        result.belief = next.belief;
        result.trace.push_back(
            {n + 1, probe, m, next.belief.mu(), next.belief.sigma(), next.variance_floored});
    }
    return result;
}

}  // namespace fbs
