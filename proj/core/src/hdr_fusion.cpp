#include "qishdr/hdr_fusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qishdr/cis_model.hpp"
#include "qishdr/parallel.hpp"

namespace qishdr {

void FusionConfig::validate() const {
    if (max_iterations < 1) throw DomainError("FusionConfig: max_iterations must be >= 1");
    if (!(convergence_tol > 0.0)) throw DomainError("FusionConfig: convergence_tol must be > 0");
    if (lut_points < 16) throw DomainError("FusionConfig: lut_points must be >= 16");
    if (!(lut_theta_min > 0.0)) throw DomainError("FusionConfig: lut_theta_min must be > 0");
    if (lut_theta_max != 0.0 && !(lut_theta_max > lut_theta_min))
        throw DomainError("FusionConfig: lut_theta_max must exceed lut_theta_min");
}

double snr_per_exposure(double flux, double exposure_s, int frames,
                        const PixelResponse& response) {
    if (!(exposure_s > 0.0) || !std::isfinite(exposure_s))
        throw DomainError("snr_per_exposure: exposure must be finite and > 0");
    if (frames < 1) throw DomainError("snr_per_exposure: frames must be >= 1");
    if (!(flux > 0.0)) return 0.0;

    const double theta_signal = exposure_s * flux;
    const double theta_total = theta_signal + response.params().dark_current * exposure_s;
    const PixelStats s = response.stats(theta_total);
    if (s.dmean_dtheta < 1e-300) return 0.0;
    const double noise =
        std::sqrt(static_cast<double>(frames)) * std::sqrt(s.variance) / s.dmean_dtheta;
    if (!std::isfinite(noise) || noise == 0.0) return 0.0;
    return theta_signal / noise;
}

double snr_per_exposure(double flux, double exposure_s, int frames, const SensorParams& params) {
    return snr_per_exposure(flux, exposure_s, frames, PixelResponse(params));
}

OptimalWeights optimal_weights(const std::vector<double>& snr_values) {
    if (snr_values.empty()) throw DomainError("optimal_weights: empty SNR vector");
    double total = 0.0;
    for (double s : snr_values) {
        if (!(s >= 0.0) || !std::isfinite(s))
            throw DomainError("optimal_weights: SNR values must be finite and >= 0");
        total += s * s;
    }
    OptimalWeights out;
    out.weights.resize(snr_values.size());
    if (total == 0.0) {
        out.degenerate = true;
        std::fill(out.weights.begin(), out.weights.end(), 1.0 / snr_values.size());
        return out;
    }
    for (std::size_t m = 0; m < snr_values.size(); ++m)
        out.weights[m] = snr_values[m] * snr_values[m] / total;
    return out;
}

SnrLut::SnrLut(std::vector<double> theta_grid, std::vector<std::vector<double>> rows)
    : theta_grid_(std::move(theta_grid)), rows_(std::move(rows)) {
    if (theta_grid_.size() < 2) throw DomainError("SnrLut: grid needs at least 2 points");
    for (std::size_t i = 1; i < theta_grid_.size(); ++i) {
        if (!(theta_grid_[i] > theta_grid_[i - 1]))
            throw DomainError("SnrLut: grid must be strictly increasing");
    }
    for (const auto& row : rows_) {
        if (row.size() != theta_grid_.size()) throw DomainError("SnrLut: row size mismatch");
    }
    log_grid_.resize(theta_grid_.size());
    for (std::size_t i = 0; i < theta_grid_.size(); ++i) log_grid_[i] = std::log(theta_grid_[i]);
}

double SnrLut::lookup(int exposure, double theta) const {
    const auto& row = rows_[static_cast<std::size_t>(exposure)];
    if (theta <= theta_grid_.front()) return row.front();
    if (theta >= theta_grid_.back()) return row.back();
    const double lt = std::log(theta);
    const double step = (log_grid_.back() - log_grid_.front()) / (log_grid_.size() - 1);
    auto i = static_cast<std::size_t>((lt - log_grid_.front()) / step);
    i = std::min(i, log_grid_.size() - 2);
    if (lt < log_grid_[i]) --i;
    else if (lt >= log_grid_[i + 1]) ++i;
    const double t = (lt - log_grid_[i]) / (log_grid_[i + 1] - log_grid_[i]);
    return row[i] + t * (row[i + 1] - row[i]);
}

SnrLut build_snr_lut(const ExposureSchedule& schedule, const SensorParams& params,
                     const FusionConfig& config) {
    schedule.validate();
    config.validate();
    const PixelResponse response(params);
    const double theta_max =
        config.lut_theta_max > 0.0 ? config.lut_theta_max : 10.0 * params.clip_level;

    std::vector<double> grid(static_cast<std::size_t>(config.lut_points));
    const double l0 = std::log(config.lut_theta_min);
    const double l1 = std::log(theta_max);
    for (std::size_t i = 0; i < grid.size(); ++i)
        grid[i] = std::exp(l0 + (l1 - l0) * static_cast<double>(i) / (grid.size() - 1));

    std::vector<std::vector<double>> rows(schedule.groups.size());
    for (std::size_t m = 0; m < schedule.groups.size(); ++m) {
        const auto& g = schedule.groups[m];
        rows[m].resize(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i)
            rows[m][i] = snr_per_exposure(grid[i] / g.exposure_s, g.exposure_s, g.frames, response);
    }
    return SnrLut(std::move(grid), std::move(rows));
}

namespace {

void check_ldrs(const std::vector<LdrEstimate>& ldrs) {
    if (ldrs.empty()) throw DomainError("fuse: no LDR estimates");
    for (const auto& l : ldrs) {
        if (l.width != ldrs.front().width || l.height != ldrs.front().height)
            throw DomainError("fuse: LDR estimates must share dimensions");
    }
}

} // namespace

std::vector<double> fuse(const std::vector<LdrEstimate>& ldrs, const WeightMap& weights) {
    check_ldrs(ldrs);
    const std::size_t count = ldrs.front().flux.size();
    if (weights.num_exposures != static_cast<int>(ldrs.size()) ||
        weights.pixel_count() != count)
        throw DomainError("fuse: weight map shape mismatch");

    for (std::size_t p = 0; p < count; ++p) {
        double sum = 0.0;
        for (int m = 0; m < weights.num_exposures; ++m) {
            const double w = weights.at(m, p);
            if (!(w >= 0.0)) throw DomainError("fuse: weights must be >= 0");
            sum += w;
        }
        if (std::fabs(sum - 1.0) > 1e-12) throw DomainError("fuse: weights must sum to 1");
    }

    std::vector<double> out(count, 0.0);
    for (std::size_t m = 0; m < ldrs.size(); ++m) {
        for (std::size_t p = 0; p < count; ++p)
            out[p] += weights.at(static_cast<int>(m), p) * ldrs[m].flux[p];
    }
    return out;
}

std::vector<double> fuse_fixed(const std::vector<LdrEstimate>& ldrs,
                               const std::vector<double>& weights) {
    check_ldrs(ldrs);
    if (weights.size() != ldrs.size()) throw DomainError("fuse_fixed: weight count mismatch");
    const std::size_t count = ldrs.front().flux.size();
    std::vector<double> out(count, 0.0);
    for (std::size_t m = 0; m < ldrs.size(); ++m) {
        for (std::size_t p = 0; p < count; ++p) out[p] += weights[m] * ldrs[m].flux[p];
    }
    return out;
}

std::vector<double> fuse_equal_weight(const std::vector<LdrEstimate>& ldrs) {
    check_ldrs(ldrs);
    return fuse_fixed(ldrs, std::vector<double>(ldrs.size(), 1.0 / ldrs.size()));
}

std::vector<double> fuse_cis_weights(const std::vector<LdrEstimate>& ldrs, int full_well) {
    check_ldrs(ldrs);
    const std::vector<double> pilot = fuse_equal_weight(ldrs);
    std::vector<double> exposures(ldrs.size());
    for (std::size_t m = 0; m < ldrs.size(); ++m) exposures[m] = ldrs[m].exposure_s;

    std::vector<double> out(pilot.size(), 0.0);
    for (std::size_t p = 0; p < pilot.size(); ++p) {
        const CisWeights cw = cis_optimal_weights(exposures, pilot[p], full_well);
        for (std::size_t m = 0; m < ldrs.size(); ++m) out[p] += cw.weights[m] * ldrs[m].flux[p];
    }
    return out;
}

ReconstructionResult iterative_reconstruct(const FrameStack& stack, const FusionConfig& config) {
    config.validate();
    stack.schedule.validate();
    if (stack.groups.empty()) throw DomainError("iterative_reconstruct: empty stack");
    const int num_groups = static_cast<int>(stack.groups.size());
    if (num_groups != stack.schedule.num_groups())
        throw DomainError("iterative_reconstruct: stack groups do not match its schedule");

    // Step 2: per-exposure LDR estimates.
    std::vector<LdrEstimate> ldrs;
    ldrs.reserve(static_cast<std::size_t>(num_groups));
    for (int m = 0; m < num_groups; ++m)
        ldrs.push_back(
            ldr_estimate(stack.groups[static_cast<std::size_t>(m)],
                         stack.schedule.groups[static_cast<std::size_t>(m)].exposure_s, stack.params));

    const std::size_t count = ldrs.front().flux.size();
    const SnrLut lut = build_snr_lut(stack.schedule, stack.params, config);

    int shortest = 0;
    double max_dt = 0.0;
    for (int m = 0; m < num_groups; ++m) {
        const double dt = stack.schedule.groups[static_cast<std::size_t>(m)].exposure_s;
        if (dt < stack.schedule.groups[static_cast<std::size_t>(shortest)].exposure_s) shortest = m;
        max_dt = std::max(max_dt, dt);
    }
    const double flux_floor = config.lut_theta_min / max_dt;

    ReconstructionResult result;
    result.width = ldrs.front().width;
    result.height = ldrs.front().height;
    result.weights = WeightMap(result.width, result.height, num_groups);
    result.all_clipped.assign(count, 0);
    std::vector<double> flux(count, 0.0);
    std::vector<double> previous(count, 0.0);

    // Step 3: uniform initial weights.
    std::fill(result.weights.weights.begin(), result.weights.weights.end(),
              1.0 / static_cast<double>(num_groups));

    int iterations = 0;
    for (int iter = 1; iter <= config.max_iterations; ++iter) {
        iterations = iter;

        // Step 4: fuse with the current weights.
        parallel_for(count, config.threads, [&](std::size_t begin, std::size_t end) {
            for (std::size_t p = begin; p < end; ++p) {
                double acc = 0.0;
                for (int m = 0; m < num_groups; ++m)
                    acc += result.weights.at(m, p) * ldrs[static_cast<std::size_t>(m)].flux[p];
                flux[p] = acc;
            }
        });

        if (num_groups == 1) break;  // weights are pinned at [1]

        if (iter >= 2) {
            double max_rel = 0.0;
            for (std::size_t p = 0; p < count; ++p) {
                const double rel =
                    std::fabs(flux[p] - previous[p]) / std::max(previous[p], flux_floor);
                max_rel = std::max(max_rel, rel);
            }
            if (max_rel < config.convergence_tol) break;
        }
        previous = flux;
        if (iter == config.max_iterations) break;

        // Steps 5-6: refresh per-pixel SNRs at the current estimate and
        // renormalize the squared-SNR weights.
        parallel_for(count, config.threads, [&](std::size_t begin, std::size_t end) {
            std::vector<double> snr(static_cast<std::size_t>(num_groups));
            for (std::size_t p = begin; p < end; ++p) {
                double total = 0.0;
                for (int m = 0; m < num_groups; ++m) {
                    const double theta =
                        stack.schedule.groups[static_cast<std::size_t>(m)].exposure_s * flux[p];
                    const double s = theta > 0.0 ? lut.lookup(m, theta) : 0.0;
                    snr[static_cast<std::size_t>(m)] = s;
                    total += s * s;
                }
                if (total == 0.0) {
                    // Every exposure clipped: keep the shortest-exposure LDR.
                    result.all_clipped[p] = 1;
                    for (int m = 0; m < num_groups; ++m) result.weights.at(m, p) = 0.0;
                    result.weights.at(shortest, p) = 1.0;
                } else {
                    result.all_clipped[p] = 0;
                    for (int m = 0; m < num_groups; ++m) {
                        const double s = snr[static_cast<std::size_t>(m)];
                        result.weights.at(m, p) = s * s / total;
                    }
                }
            }
        });
    }

    result.flux = std::move(flux);
    result.iterations = iterations;
    return result;
}

} // namespace qishdr
