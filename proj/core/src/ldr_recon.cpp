#include "qishdr/ldr_recon.hpp"

#include <cmath>
#include <unordered_map>

namespace qishdr {

std::vector<double> mean_frame(const std::vector<Frame>& group) {
    if (group.empty()) throw DomainError("mean_frame: empty frame group");
    const int w = group.front().width;
    const int h = group.front().height;
    const std::size_t count = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    std::vector<double> sum(count, 0.0);
    for (const Frame& f : group) {
        if (f.width != w || f.height != h)
            throw DomainError("mean_frame: frames in a group must share dimensions");
        for (std::size_t i = 0; i < count; ++i) sum[i] += f.codes[i];
    }
    const double inv_k = 1.0 / static_cast<double>(group.size());
    for (double& v : sum) v *= inv_k;
    return sum;
}

ResponseInverter::ResponseInverter(const SensorParams& params, int frames_per_group)
    : response_(params), frames_(frames_per_group) {
    if (frames_per_group < 1) throw DomainError("ResponseInverter: frames_per_group must be >= 1");

    const double L = params.clip_level;
    mean_cap_ = L - 1.0 / (2.0 * frames_);
    mean_floor_ = response_.mean(0.0);  // read-noise pedestal; 0 when sigma_read = 0

    if (params.single_bit() && params.read_noise == 0.0) {
        theta_cap_ = -std::log1p(-mean_cap_);
        return;
    }
    // Bracket theta_cap, then bisect mu_Y(theta) = mean_cap.
    double lo = 0.0;
    double hi = std::max(L, 1.0);
    while (response_.mean(hi) < mean_cap_) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e12) throw DomainError("ResponseInverter: response never reaches the cap");
    }
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double mu = response_.mean(mid);
        if (std::fabs(mu - mean_cap_) < 1e-10) {
            lo = hi = mid;
            break;
        }
        (mu < mean_cap_ ? lo : hi) = mid;
    }
    theta_cap_ = 0.5 * (lo + hi);
}

TonemapResult ResponseInverter::invert(double mean_code) const {
    const double L = response_.params().clip_level;
    if (!(mean_code >= 0.0) || mean_code > L || !std::isfinite(mean_code))
        throw DomainError("tonemap_inverse: mean must lie in [0, L]");

    if (mean_code <= mean_floor_) return {0.0, PixelValidity::ClippedLow};
    if (mean_code >= mean_cap_) return {theta_cap_, PixelValidity::ClippedHigh};

    if (response_.params().single_bit() && response_.params().read_noise == 0.0)
        return {-std::log1p(-mean_code), PixelValidity::Ok};

    double lo = 0.0;
    double hi = theta_cap_;
    double mid = 0.5 * (lo + hi);
    for (int i = 0; i < 200; ++i) {
        mid = 0.5 * (lo + hi);
        const double mu = response_.mean(mid);
        if (std::fabs(mu - mean_code) < 1e-10) break;
        (mu < mean_code ? lo : hi) = mid;
    }
    return {mid, PixelValidity::Ok};
}

TonemapResult tonemap_inverse(double mean_code, const SensorParams& params, int frames_per_group) {
    return ResponseInverter(params, frames_per_group).invert(mean_code);
}

LdrEstimate ldr_estimate(const std::vector<Frame>& group, double exposure_s,
                         const SensorParams& params) {
    if (group.empty()) throw DomainError("ldr_estimate: empty frame group");
    if (!(exposure_s > 0.0) || !std::isfinite(exposure_s))
        throw DomainError("ldr_estimate: exposure must be finite and > 0");

    const int k = static_cast<int>(group.size());
    const ResponseInverter inverter(params, k);

    LdrEstimate out;
    out.exposure_s = exposure_s;
    out.frames = k;
    out.width = group.front().width;
    out.height = group.front().height;
    const std::size_t count =
        static_cast<std::size_t>(out.width) * static_cast<std::size_t>(out.height);
    out.flux.resize(count);
    out.validity.resize(count);

    // Per-pixel means are integer sums / K, so there are at most L*K + 1
    // distinct values; invert each distinct sum once.
    std::vector<long long> sums(count, 0);
    for (const Frame& f : group) {
        if (f.width != out.width || f.height != out.height)
            throw DomainError("ldr_estimate: frames in a group must share dimensions");
        for (std::size_t i = 0; i < count; ++i) sums[i] += f.codes[i];
    }

    std::unordered_map<long long, TonemapResult> memo;
    const double inv_dt = 1.0 / exposure_s;
    const double inv_k = 1.0 / static_cast<double>(k);
    for (std::size_t i = 0; i < count; ++i) {
        auto it = memo.find(sums[i]);
        if (it == memo.end())
            it = memo.emplace(sums[i], inverter.invert(static_cast<double>(sums[i]) * inv_k)).first;
        out.flux[i] = it->second.theta * inv_dt;
        out.validity[i] = it->second.validity;
    }
    return out;
}

} // namespace qishdr
