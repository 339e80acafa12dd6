#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qishdr/sensor_stats.hpp"

namespace qishdr {

/// Per-pixel photon flux in photons/second (static scene).
struct RadianceMap {
    int width = 0;
    int height = 0;
    std::vector<float> flux;  ///< row-major, row 0 at the top

    RadianceMap() = default;
    RadianceMap(int w, int h, float fill = 0.0f)
        : width(w), height(h), flux(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

    [[nodiscard]] std::size_t pixel_count() const noexcept { return flux.size(); }
    [[nodiscard]] float& at(int x, int y) {
        return flux[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + x];
    }
    [[nodiscard]] float at(int x, int y) const {
        return flux[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + x];
    }

    void validate() const;
};

/// One bracketing group: K frames of integration time Delta.
struct ExposureGroup {
    double exposure_s = 0.0;  ///< Delta_m, seconds
    int frames = 0;           ///< K_m
};

/// The bracketing plan: M groups plus the camera frame period T.
struct ExposureSchedule {
    std::vector<ExposureGroup> groups;
    double frame_period_s = 0.0;  ///< T; every Delta_m must fit inside it

    [[nodiscard]] int num_groups() const noexcept { return static_cast<int>(groups.size()); }
    [[nodiscard]] int total_frames() const noexcept {
        int n = 0;
        for (const auto& g : groups) n += g.frames;
        return n;
    }
    void validate() const;

    /// Builds a schedule whose frame period is the longest exposure.
    static ExposureSchedule from_groups(std::vector<ExposureGroup> groups);
};

/// Spatial s x s jot binning modeled as an s^2-fold increase of the frame
/// count per group: for locally constant flux the binned jots are
/// statistically identical to extra temporal samples. This is an
/// approximation (it ignores flux variation inside the bin).
ExposureSchedule with_spatial_oversampling(const ExposureSchedule& schedule, int factor);

/// One digitized frame; codes are ADC values in [0, L].
struct Frame {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> codes;  ///< row-major

    Frame() = default;
    Frame(int w, int h)
        : width(w), height(h), codes(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0) {}
};

/// A full capture: frames grouped by exposure, plus everything needed to
/// reproduce or interpret them.
struct FrameStack {
    ExposureSchedule schedule;
    SensorParams params;
    std::uint64_t seed = 0;
    int width = 0;
    int height = 0;
    std::vector<std::vector<Frame>> groups;  ///< groups[m] has schedule.groups[m].frames entries

    /// Unknown container-header keys carried through read/write round trips
    /// (serialized JSON object, empty when none).
    std::string extra_header_json;

    [[nodiscard]] std::size_t pixel_count() const noexcept {
        return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    }
};

/// theta_i = lambda_i * dt + mu_dark * dt per pixel.
std::vector<double> integrate_flux(const RadianceMap& radiance, double dt, double dark_current);

/// Simulates one frame: per pixel draw k ~ Poisson(theta), add Gaussian read
/// noise, then round-and-clip to [0, L]. Deterministic given
/// (seed, group, frame, pixel) regardless of `threads`.
Frame simulate_frame(const std::vector<double>& theta, int width, int height,
                     const SensorParams& params, std::uint64_t seed, std::uint32_t group,
                     std::uint32_t frame, int threads = 0);

/// Runs simulate_frame for every frame of every group in the schedule.
FrameStack simulate_stack(const RadianceMap& radiance, const ExposureSchedule& schedule,
                          const SensorParams& params, std::uint64_t seed, int threads = 0);

} // namespace qishdr
