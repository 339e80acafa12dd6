#include "qishdr/cis_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qishdr {

void CisParams::validate() const {
    if (full_well < 1) throw DomainError("CisParams: full_well must be >= 1");
    if (!(read_noise >= 0.0) || !std::isfinite(read_noise))
        throw DomainError("CisParams: read_noise must be finite and >= 0");
}

double cis_mean(double theta, const CisParams& params) {
    params.validate();
    if (!(theta >= 0.0) || !std::isfinite(theta))
        throw DomainError("cis_mean: theta must be finite and >= 0");
    return std::min(theta, static_cast<double>(params.full_well));
}

double cis_snr_h(double theta, const CisParams& params, int frames) {
    params.validate();
    if (frames < 1) throw DomainError("cis_snr_h: frames must be >= 1");
    if (!(theta > 0.0) || !std::isfinite(theta))
        throw DomainError("cis_snr_h: theta must be finite and > 0");
    if (theta >= params.full_well) return -std::numeric_limits<double>::infinity();
    const double noise = std::sqrt(theta + params.read_noise * params.read_noise);
    return 20.0 * std::log10(std::sqrt(static_cast<double>(frames)) * theta / noise);
}

CisWeights cis_optimal_weights(const std::vector<double>& exposures_s, double flux_estimate,
                               int full_well) {
    if (exposures_s.empty()) throw DomainError("cis_optimal_weights: empty exposure list");
    if (full_well < 1) throw DomainError("cis_optimal_weights: full_well must be >= 1");
    for (double dt : exposures_s) {
        if (!(dt > 0.0) || !std::isfinite(dt))
            throw DomainError("cis_optimal_weights: exposures must be finite and > 0");
    }

    CisWeights out;
    out.weights.assign(exposures_s.size(), 0.0);
    double total = 0.0;
    for (std::size_t m = 0; m < exposures_s.size(); ++m) {
        if (exposures_s[m] * flux_estimate < full_well) {
            out.weights[m] = exposures_s[m];
            total += exposures_s[m];
        }
    }
    if (total > 0.0) {
        for (double& w : out.weights) w /= total;
        return out;
    }

    out.all_saturated = true;
    const auto shortest =
        std::min_element(exposures_s.begin(), exposures_s.end()) - exposures_s.begin();
    out.weights[static_cast<std::size_t>(shortest)] = 1.0;
    return out;
}

} // namespace qishdr
