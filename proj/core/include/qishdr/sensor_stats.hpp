#pragma once

#include <vector>

#include "qishdr/errors.hpp"

namespace qishdr {

/// Physical description of one jot (QIS pixel) and its ADC.
///
/// `clip_level` is the full-scale ADC code L in electrons; the single-bit
/// sensor is exactly L = 1. The ADC model is round-then-clip:
/// code = clamp(round(Z), 0, L).
struct SensorParams {
    int clip_level = 1;         ///< L >= 1, full-scale code (electrons)
    double read_noise = 0.0;    ///< sigma_read >= 0, electrons r.m.s.
    double dark_current = 0.0;  ///< mu_dark >= 0, electrons per second

    [[nodiscard]] bool single_bit() const noexcept { return clip_level == 1; }

    /// Throws DomainError if any field is out of range.
    void validate() const;
};

/// Probabilities p_k that Gaussian read noise rounds a code k steps away.
/// Support is symmetric, truncated at |k| <= k_max and renormalized.
struct ReadNoisePmf {
    std::vector<double> probs;  ///< probs[i] = p_{i - k_max}
    int k_max = 0;
    double truncation_epsilon = 0.0;

    [[nodiscard]] double at(int k) const noexcept {
        return (k < -k_max || k > k_max) ? 0.0 : probs[static_cast<std::size_t>(k + k_max)];
    }
    [[nodiscard]] int support_min() const noexcept { return -k_max; }
    [[nodiscard]] int support_max() const noexcept { return k_max; }
};

/// p_k = Phi((k+0.5)/sigma) - Phi((k-0.5)/sigma), truncated so the omitted
/// tail mass is below `epsilon`, then renormalized. sigma_read = 0 gives the
/// degenerate pmf {0 -> 1}.
ReadNoisePmf read_noise_pmf(double sigma_read, double epsilon = 1e-12);

/// Exact first/second-moment statistics of the digitized pixel value at
/// Poisson mean theta (dark current already folded in by the caller).
struct PixelStats {
    double mean = 0.0;          ///< mu_Y, ADC codes
    double variance = 0.0;      ///< sigma_Y^2
    double dmean_dtheta = 0.0;  ///< d mu_Y / d theta
};

/// Psi_q(theta) = sum_{k=0}^{q-1} theta^k e^{-theta} / k!, the regularized
/// upper incomplete gamma function Q(q, theta). q = 0 returns 0 (empty sum).
/// Stable over theta up to ~1e6 (series / continued-fraction evaluation).
double incomplete_gamma_psi(int q, double theta);

/// Poisson pmf e^{-theta} theta^j / j! evaluated in log space; 0 for j < 0.
double poisson_pmf(long long j, double theta);

/// Precomputes the read-noise pmf for one sensor so that repeated statistics
/// evaluations (curves, lookup tables, tone-map inversion) skip that work.
class PixelResponse {
public:
    explicit PixelResponse(const SensorParams& params, double pmf_epsilon = 1e-12);

    /// mu_Y, sigma_Y^2 and dmu_Y/dtheta at Poisson mean theta.
    [[nodiscard]] PixelStats stats(double theta) const;

    /// mu_Y only (cheaper; used by the tone-map bisection).
    [[nodiscard]] double mean(double theta) const;

    [[nodiscard]] const SensorParams& params() const noexcept { return params_; }
    [[nodiscard]] const ReadNoisePmf& pmf() const noexcept { return pmf_; }

private:
    SensorParams params_;
    ReadNoisePmf pmf_;
};

/// Convenience one-shot form of PixelResponse::stats.
PixelStats pixel_stats(double theta, const SensorParams& params);

/// sqrt(K) * sigma_Y(theta) / (dmu_Y/dtheta)(theta). Returns +infinity when
/// the response slope has collapsed below 1e-300 (deep saturation).
double exposure_referred_noise(double theta, const SensorParams& params, int frames);

/// Exposure-referred SNR of the sum of `frames` frames, in dB:
/// 20 log10( sqrt(N) * theta * (dmu_Y/dtheta) / sigma_Y ). Requires theta > 0;
/// returns -infinity when saturated.
double snr_h(double theta, const SensorParams& params, int frames);

/// Poisson-Gaussian mixture density of the analog (pre-ADC) signal:
/// sum_l Poisson(l; theta) Normal(z - l; sigma_read). Requires sigma_read > 0.
double pz_density(double z, double theta, double sigma_read);

} // namespace qishdr
