#pragma once

#include <vector>

#include "qishdr/cis_model.hpp"
#include "qishdr/hdr_fusion.hpp"

namespace qishdr {

/// Sampled SNR curve: (flux or theta, SNR in dB) pairs, abscissae increasing.
struct SnrCurve {
    std::vector<double> abscissa;
    std::vector<double> snr_db;

    void validate() const;
};

struct DynamicRangeReport {
    bool valid = false;          ///< false when no sample reaches the threshold
    double floor = 0.0;          ///< smallest abscissa with SNR >= threshold
    double ceiling = 0.0;        ///< largest abscissa with SNR >= threshold
    double range_db = 0.0;       ///< 20 log10(ceiling / floor)
    double threshold_db = 0.0;
};

/// n log-spaced points from lo to hi inclusive.
std::vector<double> log_grid(double lo, double hi, int n);

/// Single-exposure QIS curve: snr_h at theta = dt * lambda + dark * dt.
SnrCurve qis_snr_curve(const SensorParams& params, double exposure_s, int frames,
                       const std::vector<double>& flux_grid);

/// CIS counterpart built from cis_snr_h.
SnrCurve cis_snr_curve(const CisParams& params, double exposure_s, int frames,
                       const std::vector<double>& flux_grid);

enum class WeightRule { Optimal, Equal, CisIndicator };

/// SNR of the weighted multi-exposure estimator at each flux:
/// lambda / sqrt( sum_m w[m]^2 sigma_H^2[m] / (K_m dt_m)^2 ), in dB.
/// Weights come from the chosen rule evaluated at the true flux.
SnrCurve fused_snr_curve(const SensorParams& params, const ExposureSchedule& schedule,
                         WeightRule rule, const std::vector<double>& flux_grid);

/// Threshold crossings located by linear interpolation in (log abscissa, dB).
DynamicRangeReport dynamic_range(const SnrCurve& curve, double threshold_db = 0.0);

/// Fits the scene flux to a photon-counting histogram of analog readings by
/// minimizing the MSE between the binned density (0.05 e- bins) and the
/// Poisson-Gaussian model, golden-section searched over log flux.
double histogram_fit(const std::vector<double>& samples, double sigma_read, double dark_current,
                     double dt);

/// Mean squared error between log10 intensities; epsilon is 1e-4 of the
/// ground-truth maximum.
double lmse(const std::vector<double>& estimate, const std::vector<double>& truth);

} // namespace qishdr
