#pragma once

#include <cstddef>
#include <vector>

namespace fbs {

// Averaged Ramsey fringe: fraction of flipped single-shot outcomes per tau.
struct FringeRecord {
    std::vector<double> tau_values;
    std::vector<double> flip_fractions;
    bool feedback = false;
    std::size_t shots_per_point = 0;

    void validate() const;
};

// Least-squares fit of p(tau) = offset + amplitude e^{-(tau/T2)^2} cos(2 pi f tau + phase).
struct FringeFit {
    double t2 = 0.0;
    double frequency = 0.0;
    double amplitude = 0.0;
    double offset = 0.0;
    double phase = 0.0;
    // One-sigma errors from the residual-scaled inverse normal matrix.
    double t2_error = 0.0;
    double frequency_error = 0.0;
    double amplitude_error = 0.0;
    double offset_error = 0.0;
    double phase_error = 0.0;

    double residual_rms = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    // False when the record carries no oscillation to fit (e.g. constant data).
    bool t2_identifiable = true;
};

// Requires at least 10 points. Starting point: frequency from the discrete
// Fourier peak, amplitude from range/2, T2 from span/2.
FringeFit fit_fringe(const FringeRecord& record);

}  // namespace fbs
