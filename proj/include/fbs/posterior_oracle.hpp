#pragma once
// Exact Bayesian reference posterior on a uniform frequency grid.
//
// The grid posterior carries probability masses (summing to one) rather than
// densities, so moments and KL divergences are plain weighted sums.

#include <cstddef>
#include <span>
#include <vector>

#include "fbs/estimator.hpp"

namespace fbs {

inline constexpr double kDefaultHalfWidthSigmas = 8.0;
inline constexpr std::size_t kDefaultGridPoints = std::size_t{1} << 14;

class GridPosterior {
public:
    // Discretised N(mu, sigma^2) over mu +/- half_width_sigmas * sigma.
    // Requires half_width_sigmas >= 6 and points >= 1024.
    static GridPosterior from_gaussian(const GaussianBelief& belief,
                                       double half_width_sigmas = kDefaultHalfWidthSigmas,
                                       std::size_t points = kDefaultGridPoints);

    // Discretised N(mu, sigma^2) on the same grid as `layout`.
    static GridPosterior gaussian_like(const GridPosterior& layout, const GaussianBelief& belief);

    std::span<const double> eps_values() const { return eps_; }
    std::span<const double> weights() const { return weights_; }
    double spacing() const { return spacing_; }
    std::size_t size() const { return eps_.size(); }
    double lower_edge() const { return eps_.front(); }
    double upper_edge() const { return eps_.back(); }

    // True when the grid extends at least `sigmas` standard deviations of
    // `belief` on both sides of its mean.
    bool covers(const GaussianBelief& belief, double sigmas) const;

    // Pointwise reweighting followed by renormalisation. Throws NumericalError
    // if the total weight underflows.
    GridPosterior reweighted(std::span<const double> factors) const;

private:
    GridPosterior(std::vector<double> eps, std::vector<double> weights, double spacing);

    std::vector<double> eps_;
    std::vector<double> weights_;
    double spacing_;
};

struct Moments {
    double mean = 0.0;
    double stddev = 0.0;
};

// Bayes rule: prior times the single-shot likelihood, renormalised.
GridPosterior grid_update(const GridPosterior& prior, Outcome m, const ProbeSettings& probe,
                          const LikelihoodModel& model);

Moments moments(const GridPosterior& p);

// Total prior-predictive probability of outcome m under the grid prior.
double evidence(const GridPosterior& prior, Outcome m, const ProbeSettings& probe,
                const LikelihoodModel& model);

// D_KL(p || q) in bits on a common grid. 0 log 0 = 0. Throws
// std::invalid_argument on grid mismatch or when p > 0 where q = 0.
double kl_divergence(const GridPosterior& p, const GridPosterior& q);

// Number of strict local maxima, found from sign changes of the discrete
// derivative. Points whose weight is below `relative_floor` times the peak
// weight are ignored so that round-off in the far tails does not count.
std::size_t count_local_maxima(const GridPosterior& p, double relative_floor = 1e-6);

}  // namespace fbs
