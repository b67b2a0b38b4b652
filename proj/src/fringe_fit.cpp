#include "fbs/fringe_fit.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "fbs/estimator.hpp"

namespace fbs {

void FringeRecord::validate() const {
    if (tau_values.size() != flip_fractions.size()) {
        throw std::invalid_argument("fringe record: tau and fraction counts differ");
    }
    for (double p : flip_fractions) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw std::invalid_argument("fringe record: fractions must lie in [0, 1]");
        }
    }
}

namespace {

using Params = Eigen::Matrix<double, 5, 1>;  // offset, amplitude, t2, frequency, phase
using Jacobian = Eigen::Matrix<double, Eigen::Dynamic, 5>;

constexpr std::size_t kMaxIterations = 200;

double model_value(const Params& q, double tau) {
    const double env = std::exp(-(tau / q[2]) * (tau / q[2]));
    return q[0] + q[1] * env * std::cos(2.0 * kPi * q[3] * tau + q[4]);
}

Eigen::VectorXd residuals(const Params& q, const FringeRecord& r) {
    Eigen::VectorXd res(r.tau_values.size());
    for (std::size_t i = 0; i < r.tau_values.size(); ++i) {
        res[static_cast<Eigen::Index>(i)] = r.flip_fractions[i] - model_value(q, r.tau_values[i]);
    }
    return res;
}

// Jacobian of the model (not the residual).
Jacobian jacobian(const Params& q, const FringeRecord& r) {
    Jacobian J(static_cast<Eigen::Index>(r.tau_values.size()), 5);
    for (std::size_t i = 0; i < r.tau_values.size(); ++i) {
        const double tau = r.tau_values[i];
        const double x = tau / q[2];
        const double env = std::exp(-x * x);
        const double arg = 2.0 * kPi * q[3] * tau + q[4];
        const double c = std::cos(arg);
        const double s = std::sin(arg);
        const auto row = static_cast<Eigen::Index>(i);
        J(row, 0) = 1.0;
        J(row, 1) = env * c;
        J(row, 2) = q[1] * env * c * 2.0 * x * x / q[2];
        J(row, 3) = -q[1] * env * s * 2.0 * kPi * tau;
        J(row, 4) = -q[1] * env * s;
    }
    return J;
}

struct LmOutcome {
    Params params;
    double rss = std::numeric_limits<double>::infinity();
    std::size_t iterations = 0;
    bool converged = false;
};

LmOutcome levenberg_marquardt(Params q, const FringeRecord& r) {
    double lambda = 1e-3;
    double rss = residuals(q, r).squaredNorm();
    LmOutcome out;
    for (std::size_t it = 1; it <= kMaxIterations; ++it) {
        out.iterations = it;
        const Jacobian J = jacobian(q, r);
        const Eigen::VectorXd res = residuals(q, r);
        const Eigen::Matrix<double, 5, 5> JtJ = J.transpose() * J;
        const Params g = J.transpose() * res;
        bool improved = false;
        while (lambda < 1e12) {
            Eigen::Matrix<double, 5, 5> A = JtJ;
            for (int k = 0; k < 5; ++k) A(k, k) += lambda * std::max(JtJ(k, k), 1e-30);
            const Params step = A.ldlt().solve(g);
            const Params trial = q + step;
            const double trial_rss = residuals(trial, r).squaredNorm();
            if (std::isfinite(trial_rss) && trial_rss < rss) {
                const double rel = (rss - trial_rss) / std::max(rss, 1e-300);
                q = trial;
                rss = trial_rss;
                lambda = std::max(lambda / 10.0, 1e-12);
                improved = true;
                if (rel < 1e-12 || step.cwiseAbs().maxCoeff() < 1e-15) {
                    out.converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if (!improved) {
            // No downhill step at any damping: at a (local) minimum.
            out.converged = true;
        }
        if (out.converged) break;
    }
    out.params = q;
    out.rss = rss;
    return out;
}

// Frequency and phase of the strongest Fourier component of the mean-removed
// record, searched on a fine grid up to the Nyquist frequency of the mean
// sample spacing.
std::pair<double, double> fourier_peak(const FringeRecord& r, double mean) {
    const double span = r.tau_values.back() - r.tau_values.front();
    const double nyquist = 0.5 * static_cast<double>(r.tau_values.size() - 1) / span;
    const double df = 0.05 / span;
    double best_f = df;
    double best_mag = -1.0;
    std::complex<double> best_c;
    for (double f = df; f <= nyquist; f += df) {
        std::complex<double> acc{0.0, 0.0};
        for (std::size_t i = 0; i < r.tau_values.size(); ++i) {
            acc += (r.flip_fractions[i] - mean) *
                   std::polar(1.0, -2.0 * kPi * f * r.tau_values[i]);
        }
        if (std::abs(acc) > best_mag) {
            best_mag = std::abs(acc);
            best_f = f;
            best_c = acc;
        }
    }
    return {best_f, std::arg(best_c)};
}

double wrap_phase(double phi) {
    phi = std::remainder(phi, 2.0 * kPi);
    return phi <= -kPi ? phi + 2.0 * kPi : phi;
}

}  // namespace

FringeFit fit_fringe(const FringeRecord& record) {
    record.validate();
    const std::size_t n = record.tau_values.size();
    if (n < 10) {
        throw std::invalid_argument("fit_fringe needs at least 10 points");
    }
    if (!std::is_sorted(record.tau_values.begin(), record.tau_values.end()) ||
        record.tau_values.back() <= record.tau_values.front()) {
        throw std::invalid_argument("fit_fringe: tau values must be increasing");
    }

    const auto [lo, hi] = std::minmax_element(record.flip_fractions.begin(),
                                              record.flip_fractions.end());
    const double mean = std::accumulate(record.flip_fractions.begin(),
                                        record.flip_fractions.end(), 0.0) /
                        static_cast<double>(n);
    FringeFit fit;
    fit.offset = mean;
    if (*hi - *lo < 1e-12) {
        fit.amplitude = 0.0;
        fit.t2 = std::numeric_limits<double>::quiet_NaN();
        fit.frequency = std::numeric_limits<double>::quiet_NaN();
        fit.t2_identifiable = false;
        fit.converged = false;
        return fit;
    }

    // Fit in units of the record span so that all parameters are O(1).
    const double unit = record.tau_values.back() - record.tau_values.front();
    FringeRecord scaled = record;
    for (double& t : scaled.tau_values) t /= unit;

    const auto [f0, phi0] = fourier_peak(scaled, mean);
    LmOutcome best;
    for (double t2_seed : {0.5, 1.0, 0.25}) {
        Params start;
        start << mean, 0.5 * (*hi - *lo), t2_seed, f0, phi0;
        LmOutcome trial = levenberg_marquardt(start, scaled);
        if (trial.rss < best.rss) best = trial;
        if (best.converged && best.params[2] > 0.0) break;
    }

    Params q = best.params;
    if (q[1] < 0.0) {
        q[1] = -q[1];
        q[4] += kPi;
    }
    q[2] = std::abs(q[2]);
    fit.offset = q[0];
    fit.amplitude = q[1];
    fit.t2 = q[2] * unit;
    fit.frequency = q[3] / unit;
    fit.phase = wrap_phase(q[4]);
    fit.iterations = best.iterations;
    fit.converged = best.converged;
    fit.residual_rms = std::sqrt(best.rss / static_cast<double>(n));

    const Jacobian J = jacobian(q, scaled);
    const Eigen::Matrix<double, 5, 5> JtJ = J.transpose() * J;
    const double dof = static_cast<double>(n) - 5.0;
    const double s2 = dof > 0.0 ? best.rss / dof : 0.0;
    Eigen::FullPivLU<Eigen::Matrix<double, 5, 5>> lu(JtJ);
    if (lu.isInvertible()) {
        const Eigen::Matrix<double, 5, 5> cov = s2 * lu.inverse();
        const auto err = [&cov](int k) { return std::sqrt(std::max(cov(k, k), 0.0)); };
        fit.offset_error = err(0);
        fit.amplitude_error = err(1);
        fit.t2_error = err(2) * unit;
        fit.frequency_error = err(3) / unit;
        fit.phase_error = err(4);
    } else {
        fit.t2_identifiable = false;
    }
    if (fit.amplitude < 1e-9) {
        fit.t2_identifiable = false;
    }
    return fit;
}

}  // namespace fbs
