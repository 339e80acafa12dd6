#pragma once

#include <vector>

#include "qishdr/errors.hpp"

namespace qishdr {

/// Conventional CMOS image sensor: linear response up to the full well.
struct CisParams {
    int full_well = 4000;     ///< L, electrons
    double read_noise = 0.0;  ///< sigma_read, electrons

    void validate() const;
};

/// E[Y] = min(theta, L).
double cis_mean(double theta, const CisParams& params);

/// Exposure-referred SNR of K summed CIS frames in dB:
/// 20 log10( sqrt(K) theta / sqrt(theta + sigma_read^2) ) below the full
/// well, -infinity at or above it. Requires theta > 0.
double cis_snr_h(double theta, const CisParams& params, int frames);

struct CisWeights {
    std::vector<double> weights;
    bool all_saturated = false;
};

/// Granados-style weights: proportional to exposure time among unsaturated
/// exposures (dt * lambda < full_well), zero elsewhere. When every exposure
/// is saturated the indicator ratio is 0/0; the shortest exposure gets full
/// weight and the result is flagged.
CisWeights cis_optimal_weights(const std::vector<double>& exposures_s, double flux_estimate,
                               int full_well);

} // namespace qishdr
