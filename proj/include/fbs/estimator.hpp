#pragma once
// Frequency binary search: adaptive Ramsey probe selection and Gaussian
// method-of-moments updates of the belief over a qubit frequency shift.
//
// Units: frequencies in Hz, times in seconds.
//
// Detuning / mean-shift convention
// --------------------------------
// The probe detuning is placed at
//
//     delta_f = (1 + 2l) / (4 tau) + mu
//
// so that the likelihood cosine argument at the belief mean is (1 + 2l) pi / 2.
// Substituting into the Ramsey likelihood gives
//
//     cos[2 pi (delta_f - eps) tau] = (-1)^l sin[2 pi (eps - mu) tau]
//
// i.e. for even l an outcome m = +1 favours eps > mu, and the first moment
// of the posterior moves by +(-1)^l * 2 pi m beta sigma^2 tau e^{...} / (1 + m alpha).
// The grid oracle in posterior_oracle.hpp confirms this pairing.

#include <cstddef>
#include <exception>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

namespace fbs {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kInfiniteTime = std::numeric_limits<double>::infinity();

// Raised when a closed-form update produces a non-finite result.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Gaussian belief N(mu, sigma^2) over the frequency shift.
class GaussianBelief {
public:
    GaussianBelief(double mu, double sigma);

    double mu() const { return mu_; }
    double sigma() const { return sigma_; }
    double variance() const { return sigma_ * sigma_; }

    bool operator==(const GaussianBelief&) const = default;

private:
    double mu_;
    double sigma_;
};

// SPAM and dephasing parameters of the single-shot likelihood.
//   alpha: readout bias, beta: visibility, T: effective coherence time.
// Requires |alpha| + beta <= 1 so every outcome probability is in [0, 1].
class LikelihoodModel {
public:
    LikelihoodModel(double alpha, double beta, double coherence_time = kInfiniteTime);

    static LikelihoodModel ideal() { return {0.0, 1.0, kInfiniteTime}; }
    // alpha = -0.02, beta = 0.6, T = 10 us.
    static LikelihoodModel reference() { return {-0.02, 0.6, 10e-6}; }

    double alpha() const { return alpha_; }
    double beta() const { return beta_; }
    double coherence_time() const { return coherence_time_; }
    // 1/T, exactly zero for an unbounded coherence time.
    double decay_rate() const;
    // beta * exp(-tau / T)
    double contrast(double tau) const;

    bool operator==(const LikelihoodModel&) const = default;

private:
    double alpha_;
    double beta_;
    double coherence_time_;
};

struct ProbeSettings {
    double tau = 0.0;      // evolution time [s]
    double delta_f = 0.0;  // detuning [Hz]
    int branch = 0;        // integer l of the detuning family

    bool operator==(const ProbeSettings&) const = default;
};

enum class Outcome : int { Minus = -1, Plus = +1 };

inline int sign_of(Outcome m) { return static_cast<int>(m); }
Outcome outcome_from_int(int m);

// P(m | eps, probe) = 1/2 + m/2 { alpha + beta e^{-tau/T} cos[2 pi (delta_f - eps) tau] }
double likelihood_probability(Outcome m, double eps, const ProbeSettings& probe,
                              const LikelihoodModel& model);

// Evolution time minimising the expected posterior variance:
//   tau = (sqrt(16 pi^2 sigma^2 + 1/T^2) - 1/T) / (8 pi^2 sigma^2)
// Throws std::domain_error for sigma <= 0 or T <= 0.
double optimal_tau(double sigma, double coherence_time);

// Detuning that puts the likelihood inflection point at mu.
// Throws std::domain_error for tau <= 0.
double optimal_detuning(double mu, double tau, int branch = 0);

// optimal_tau followed by optimal_detuning for the given belief.
ProbeSettings optimal_probe(const GaussianBelief& belief, const LikelihoodModel& model,
                            int branch = 0);

// Expected posterior variance E_m[sigma_{n+1}^2] of the closed-form update for
// an inflection-point probe with evolution time tau.
double expected_posterior_variance(double sigma, double tau, const LikelihoodModel& model);

struct UpdateResult {
    GaussianBelief belief;
    // The variance fell below 1e-12 * sigma_n^2 and was clamped there.
    bool variance_floored = false;
};

// Method-of-moments update for an inflection-point probe. Only probe.tau and
// probe.branch enter the closed form.
UpdateResult update_with_diagnostics(const GaussianBelief& belief, const ProbeSettings& probe,
                                     Outcome m, const LikelihoodModel& model);

GaussianBelief update(const GaussianBelief& belief, const ProbeSettings& probe, Outcome m,
                      const LikelihoodModel& model);

struct StepRecord {
    std::size_t step = 0;  // 1-based
    ProbeSettings probe;
    Outcome outcome = Outcome::Plus;
    double mu = 0.0;     // after the update
    double sigma = 0.0;  // after the update
    bool variance_floored = false;
};

struct EstimationResult {
    GaussianBelief belief;
    std::vector<StepRecord> trace;
    // Set when the outcome source threw; the trace holds the completed steps.
    std::exception_ptr failure;

    bool completed() const { return !failure; }
};

using OutcomeSource = std::function<Outcome(const ProbeSettings&)>;

// Runs `shots` adaptive probing cycles starting from `prior`.
EstimationResult run_estimation(const GaussianBelief& prior, std::size_t shots,
                                const LikelihoodModel& model, const OutcomeSource& measure,
                                int branch = 0);

}  // namespace fbs
