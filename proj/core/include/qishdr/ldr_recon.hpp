#pragma once

#include <cstdint>
#include <vector>

#include "qishdr/qis_sim.hpp"
#include "qishdr/sensor_stats.hpp"

namespace qishdr {

enum class PixelValidity : std::uint8_t { Ok = 0, ClippedLow = 1, ClippedHigh = 2 };

/// Per-exposure flux estimate S[m] = f^{-1}(mean code) / Delta_m.
struct LdrEstimate {
    double exposure_s = 0.0;
    int frames = 0;
    int width = 0;
    int height = 0;
    std::vector<double> flux;              ///< photons/second
    std::vector<PixelValidity> validity;
};

/// Arithmetic per-pixel mean of a group of K frames (exact integer sum / K).
std::vector<double> mean_frame(const std::vector<Frame>& group);

struct TonemapResult {
    double theta = 0.0;
    PixelValidity validity = PixelValidity::Ok;
};

/// Inverts the sensor response mu_Y(theta) = mean for one (sensor, K) pair.
///
/// The invertible range is capped at mu_cap = L - 1/(2K) (half-count
/// continuity correction); means at or above it clamp to theta_cap and flag
/// clipped-high, means at or below the zero-light pedestal mu_Y(0) flag
/// clipped-low with theta = 0. Single-bit noiseless sensors use the closed
/// form -log(1 - mean); everything else is bisected to 1e-10 in mu_Y.
class ResponseInverter {
public:
    ResponseInverter(const SensorParams& params, int frames_per_group);

    [[nodiscard]] TonemapResult invert(double mean_code) const;

    [[nodiscard]] double theta_cap() const noexcept { return theta_cap_; }
    [[nodiscard]] double mean_cap() const noexcept { return mean_cap_; }
    [[nodiscard]] double mean_floor() const noexcept { return mean_floor_; }

private:
    PixelResponse response_;
    int frames_ = 1;
    double mean_cap_ = 0.0;
    double mean_floor_ = 0.0;
    double theta_cap_ = 0.0;
};

/// One-shot form of ResponseInverter::invert.
TonemapResult tonemap_inverse(double mean_code, const SensorParams& params, int frames_per_group);

/// Averages the group, inverts the tone-mapping, and scales to flux units.
LdrEstimate ldr_estimate(const std::vector<Frame>& group, double exposure_s,
                         const SensorParams& params);

} // namespace qishdr
