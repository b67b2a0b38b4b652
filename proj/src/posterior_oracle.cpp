#include "fbs/posterior_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fbs {

namespace {

void normalise(std::vector<double>& w) {
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    if (!(total > 0.0) || !std::isfinite(total)) {
        throw NumericalError("grid posterior: total weight underflow");
    }
    for (double& x : w) x /= total;
}

std::vector<double> gaussian_weights(std::span<const double> eps, const GaussianBelief& b) {
    std::vector<double> w(eps.size());
    for (std::size_t i = 0; i < eps.size(); ++i) {
        const double z = (eps[i] - b.mu()) / b.sigma();
        w[i] = std::exp(-0.5 * z * z);
    }
    normalise(w);
    return w;
}

}  // namespace

GridPosterior::GridPosterior(std::vector<double> eps, std::vector<double> weights, double spacing)
    : eps_(std::move(eps)), weights_(std::move(weights)), spacing_(spacing) {}

GridPosterior GridPosterior::from_gaussian(const GaussianBelief& belief, double half_width_sigmas,
                                           std::size_t points) {
    if (!(half_width_sigmas >= 6.0)) {
        throw std::invalid_argument("grid must span at least +/-6 sigma");
    }
    if (points < 1024) {
        throw std::invalid_argument("grid needs at least 1024 points");
    }
    const double half_width = half_width_sigmas * belief.sigma();
    const double lo = belief.mu() - half_width;
    const double spacing = 2.0 * half_width / static_cast<double>(points - 1);
    if (!(spacing > 0.0)) {
        throw std::invalid_argument("degenerate grid: sigma too small relative to mean");
    }
    std::vector<double> eps(points);
    for (std::size_t i = 0; i < points; ++i) {
        eps[i] = lo + spacing * static_cast<double>(i);
    }
    eps.back() = belief.mu() + half_width;
    auto w = gaussian_weights(eps, belief);
    return GridPosterior(std::move(eps), std::move(w), spacing);
}

GridPosterior GridPosterior::gaussian_like(const GridPosterior& layout,
                                           const GaussianBelief& belief) {
    return GridPosterior(layout.eps_, gaussian_weights(layout.eps_, belief), layout.spacing_);
}

bool GridPosterior::covers(const GaussianBelief& belief, double sigmas) const {
    const double reach = sigmas * belief.sigma();
    return lower_edge() <= belief.mu() - reach && upper_edge() >= belief.mu() + reach;
}

GridPosterior GridPosterior::reweighted(std::span<const double> factors) const {
    if (factors.size() != weights_.size()) {
        throw std::invalid_argument("reweighted: factor count does not match grid");
    }
    std::vector<double> w(weights_.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = weights_[i] * factors[i];
    normalise(w);
    return GridPosterior(eps_, std::move(w), spacing_);
}

GridPosterior grid_update(const GridPosterior& prior, Outcome m, const ProbeSettings& probe,
                          const LikelihoodModel& model) {
    const auto eps = prior.eps_values();
    std::vector<double> like(eps.size());
    for (std::size_t i = 0; i < eps.size(); ++i) {
        like[i] = likelihood_probability(m, eps[i], probe, model);
    }
    return prior.reweighted(like);
}

Moments moments(const GridPosterior& p) {
    const auto eps = p.eps_values();
    const auto w = p.weights();
    double mean = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) mean += w[i] * eps[i];
    double var = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double d = eps[i] - mean;
        var += w[i] * d * d;
    }
    return {mean, std::sqrt(var)};
}

double evidence(const GridPosterior& prior, Outcome m, const ProbeSettings& probe,
                const LikelihoodModel& model) {
    const auto eps = prior.eps_values();
    const auto w = prior.weights();
    double total = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        total += w[i] * likelihood_probability(m, eps[i], probe, model);
    }
    return total;
}

double kl_divergence(const GridPosterior& p, const GridPosterior& q) {
    if (p.size() != q.size() || p.lower_edge() != q.lower_edge() ||
        p.spacing() != q.spacing()) {
        throw std::invalid_argument("kl_divergence: distributions are on different grids");
    }
    const auto pw = p.weights();
    const auto qw = q.weights();
    double bits = 0.0;
    for (std::size_t i = 0; i < pw.size(); ++i) {
        if (pw[i] == 0.0) continue;
        if (qw[i] == 0.0) {
            throw std::invalid_argument("kl_divergence: p has mass where q vanishes");
        }
        bits += pw[i] * std::log2(pw[i] / qw[i]);
    }
    return bits;
}

std::size_t count_local_maxima(const GridPosterior& p, double relative_floor) {
    const auto w = p.weights();
    const double floor = relative_floor * *std::max_element(w.begin(), w.end());
    std::size_t peaks = 0;
    int last_slope = 0;
    for (std::size_t i = 1; i < w.size(); ++i) {
        const double d = w[i] - w[i - 1];
        if (w[i] < floor && w[i - 1] < floor) {
            last_slope = 0;
            continue;
        }
        const int slope = (d > 0.0) - (d < 0.0);
        if (slope == 0) continue;
        if (last_slope > 0 && slope < 0) ++peaks;
        last_slope = slope;
    }
    return peaks;
}

}  // namespace fbs
