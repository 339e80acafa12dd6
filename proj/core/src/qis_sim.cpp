#include "qishdr/qis_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qishdr/parallel.hpp"
#include "qishdr/rng.hpp"

namespace qishdr {

void RadianceMap::validate() const {
    if (width < 1 || height < 1) throw DomainError("RadianceMap: dimensions must be >= 1");
    const std::size_t expected =
        static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    if (flux.size() != expected) throw DomainError("RadianceMap: flux size does not match dimensions");
    if (expected > std::numeric_limits<std::uint32_t>::max())
        throw DomainError("RadianceMap: more than 2^32-1 pixels not supported");
    for (float v : flux) {
        if (!std::isfinite(v) || v < 0.0f)
            throw DomainError("RadianceMap: flux values must be finite and >= 0");
    }
}

void ExposureSchedule::validate() const {
    if (groups.empty()) throw DomainError("ExposureSchedule: at least one exposure group required");
    if (!(frame_period_s > 0.0) || !std::isfinite(frame_period_s))
        throw DomainError("ExposureSchedule: frame period must be finite and > 0");
    for (const auto& g : groups) {
        if (!(g.exposure_s > 0.0) || !std::isfinite(g.exposure_s))
            throw DomainError("ExposureSchedule: exposure times must be finite and > 0");
        if (g.frames < 1) throw DomainError("ExposureSchedule: each group needs >= 1 frame");
        if (g.exposure_s > frame_period_s)
            throw DomainError("ExposureSchedule: exposure exceeds the frame period");
    }
}

ExposureSchedule ExposureSchedule::from_groups(std::vector<ExposureGroup> groups) {
    ExposureSchedule s;
    s.groups = std::move(groups);
    for (const auto& g : s.groups) s.frame_period_s = std::max(s.frame_period_s, g.exposure_s);
    s.validate();
    return s;
}

ExposureSchedule with_spatial_oversampling(const ExposureSchedule& schedule, int factor) {
    if (factor < 1) throw DomainError("with_spatial_oversampling: factor must be >= 1");
    ExposureSchedule out = schedule;
    for (auto& g : out.groups) g.frames *= factor * factor;
    return out;
}

std::vector<double> integrate_flux(const RadianceMap& radiance, double dt, double dark_current) {
    radiance.validate();
    if (!(dt > 0.0) || !std::isfinite(dt))
        throw DomainError("integrate_flux: integration time must be finite and > 0");
    if (!(dark_current >= 0.0)) throw DomainError("integrate_flux: dark current must be >= 0");
    std::vector<double> theta(radiance.pixel_count());
    const double dark = dark_current * dt;
    for (std::size_t i = 0; i < theta.size(); ++i)
        theta[i] = static_cast<double>(radiance.flux[i]) * dt + dark;
    return theta;
}

Frame simulate_frame(const std::vector<double>& theta, int width, int height,
                     const SensorParams& params, std::uint64_t seed, std::uint32_t group,
                     std::uint32_t frame, int threads) {
    params.validate();
    if (params.clip_level > 255)
        throw DomainError("simulate_frame: clip_level above 255 exceeds the 8-bit frame payload");
    if (width < 1 || height < 1) throw DomainError("simulate_frame: dimensions must be >= 1");
    const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    if (theta.size() != count) throw DomainError("simulate_frame: theta size mismatch");
    for (double t : theta) {
        if (!std::isfinite(t) || t < 0.0)
            throw DomainError("simulate_frame: theta must be finite and >= 0");
    }

    Frame out(width, height);
    const double sigma = params.read_noise;
    const int clip = params.clip_level;
    parallel_for(count, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            RandomStream stream(seed, group, frame, static_cast<std::uint32_t>(i));
            double z = static_cast<double>(stream.poisson(theta[i]));
            if (sigma > 0.0) z += sigma * stream.normal();
            std::uint8_t code;
            if (z < 0.5) {
                code = 0;
            } else if (z >= clip - 0.5) {
                code = static_cast<std::uint8_t>(clip);
            } else {
                code = static_cast<std::uint8_t>(std::lround(z));
            }
            out.codes[i] = code;
        }
    });
    return out;
}

FrameStack simulate_stack(const RadianceMap& radiance, const ExposureSchedule& schedule,
                          const SensorParams& params, std::uint64_t seed, int threads) {
    radiance.validate();
    schedule.validate();
    params.validate();

    FrameStack stack;
    stack.schedule = schedule;
    stack.params = params;
    stack.seed = seed;
    stack.width = radiance.width;
    stack.height = radiance.height;
    stack.groups.resize(schedule.groups.size());

    for (std::size_t m = 0; m < schedule.groups.size(); ++m) {
        const auto& g = schedule.groups[m];
        const std::vector<double> theta = integrate_flux(radiance, g.exposure_s, params.dark_current);
        stack.groups[m].reserve(static_cast<std::size_t>(g.frames));
        for (int n = 0; n < g.frames; ++n) {
            stack.groups[m].push_back(simulate_frame(theta, radiance.width, radiance.height, params,
                                                     seed, static_cast<std::uint32_t>(m),
                                                     static_cast<std::uint32_t>(n), threads));
        }
    }
    return stack;
}

} // namespace qishdr
