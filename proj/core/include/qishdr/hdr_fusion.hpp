#pragma once

#include <cstdint>
#include <vector>

#include "qishdr/ldr_recon.hpp"
#include "qishdr/qis_sim.hpp"

namespace qishdr {

struct FusionConfig {
    int max_iterations = 10;
    double convergence_tol = 1e-6;  ///< relative change of lambda-hat
    int lut_points = 2048;
    double lut_theta_min = 1e-6;
    double lut_theta_max = 0.0;     ///< 0 selects 10 * clip_level
    int threads = 0;

    void validate() const;
};

/// Per-pixel, per-exposure fusion weights; each pixel's weights sum to 1.
struct WeightMap {
    int width = 0;
    int height = 0;
    int num_exposures = 0;
    std::vector<double> weights;  ///< [m * width * height + pixel]

    WeightMap() = default;
    WeightMap(int w, int h, int m)
        : width(w), height(h), num_exposures(m),
          weights(static_cast<std::size_t>(w) * h * m, 0.0) {}

    [[nodiscard]] std::size_t pixel_count() const noexcept {
        return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    }
    [[nodiscard]] double& at(int exposure, std::size_t pixel) {
        return weights[static_cast<std::size_t>(exposure) * pixel_count() + pixel];
    }
    [[nodiscard]] double at(int exposure, std::size_t pixel) const {
        return weights[static_cast<std::size_t>(exposure) * pixel_count() + pixel];
    }
};

/// SNR_H[m] of one exposure at scene flux lambda:
/// dt * lambda / exposure_referred_noise(dt * lambda + mu_dark * dt, K).
/// Returns 0 for lambda <= 0 and when the noise is infinite (saturation).
double snr_per_exposure(double flux, double exposure_s, int frames, const SensorParams& params);
double snr_per_exposure(double flux, double exposure_s, int frames, const PixelResponse& response);

struct OptimalWeights {
    std::vector<double> weights;
    bool degenerate = false;  ///< all SNRs were zero; weights fell back to uniform
};

/// w[m] = SNR^2[m] / sum SNR^2 — the fused-SNR maximizer over the simplex.
OptimalWeights optimal_weights(const std::vector<double>& snr_values);

/// Tabulated per-exposure SNR on a shared log-spaced theta grid, queried by
/// linear interpolation in (log theta, SNR); out-of-range queries clamp.
class SnrLut {
public:
    SnrLut(std::vector<double> theta_grid, std::vector<std::vector<double>> rows);

    [[nodiscard]] double lookup(int exposure, double theta) const;
    [[nodiscard]] int num_exposures() const noexcept { return static_cast<int>(rows_.size()); }
    [[nodiscard]] const std::vector<double>& grid() const noexcept { return theta_grid_; }

private:
    std::vector<double> theta_grid_;
    std::vector<double> log_grid_;
    std::vector<std::vector<double>> rows_;
};

SnrLut build_snr_lut(const ExposureSchedule& schedule, const SensorParams& params,
                     const FusionConfig& config);

/// lambda-hat = sum_m w[m] S[m], per pixel. Weights must be normalized.
std::vector<double> fuse(const std::vector<LdrEstimate>& ldrs, const WeightMap& weights);

/// Weighted sum with one global weight vector (helper for the baselines).
std::vector<double> fuse_fixed(const std::vector<LdrEstimate>& ldrs,
                               const std::vector<double>& weights);

/// Dutton-style baseline: w[m] = 1/M.
std::vector<double> fuse_equal_weight(const std::vector<LdrEstimate>& ldrs);

/// Granados-style baseline on QIS estimates: a uniform-weight pilot estimate
/// followed by one pass of exposure-proportional indicator weights, using
/// `full_well` (the per-frame clip level) as the saturation test.
std::vector<double> fuse_cis_weights(const std::vector<LdrEstimate>& ldrs, int full_well);

struct ReconstructionResult {
    int width = 0;
    int height = 0;
    std::vector<double> flux;          ///< lambda-hat, photons/second
    WeightMap weights;
    int iterations = 0;
    std::vector<std::uint8_t> all_clipped;  ///< 1 where every exposure had zero SNR
};

/// Iterative reconstruction: LDR estimates, uniform initial weights, then
/// alternate fuse / SNR-update (through the LUT) / weight-update until the
/// relative change of lambda-hat drops below the tolerance or the iteration
/// budget is spent.
ReconstructionResult iterative_reconstruct(const FrameStack& stack, const FusionConfig& config);

} // namespace qishdr
