#include "qishdr/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qishdr {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

void SnrCurve::validate() const {
    if (abscissa.size() != snr_db.size()) throw DomainError("SnrCurve: size mismatch");
    if (abscissa.size() < 2) throw DomainError("SnrCurve: needs at least 2 samples");
    for (std::size_t i = 0; i < abscissa.size(); ++i) {
        if (!(abscissa[i] > 0.0) || !std::isfinite(abscissa[i]))
            throw DomainError("SnrCurve: abscissae must be finite and > 0");
        if (i > 0 && !(abscissa[i] > abscissa[i - 1]))
            throw DomainError("SnrCurve: abscissae must be strictly increasing");
    }
}

std::vector<double> log_grid(double lo, double hi, int n) {
    if (!(lo > 0.0) || !(hi > lo)) throw DomainError("log_grid: need 0 < lo < hi");
    if (n < 2) throw DomainError("log_grid: need n >= 2");
    std::vector<double> grid(static_cast<std::size_t>(n));
    const double l0 = std::log(lo);
    const double l1 = std::log(hi);
    for (int i = 0; i < n; ++i)
        grid[static_cast<std::size_t>(i)] = std::exp(l0 + (l1 - l0) * i / (n - 1));
    grid.front() = lo;
    grid.back() = hi;
    return grid;
}

SnrCurve qis_snr_curve(const SensorParams& params, double exposure_s, int frames,
                       const std::vector<double>& flux_grid) {
    if (!(exposure_s > 0.0)) throw DomainError("qis_snr_curve: exposure must be > 0");
    const PixelResponse response(params);
    SnrCurve curve;
    curve.abscissa = flux_grid;
    curve.snr_db.resize(flux_grid.size());
    for (std::size_t i = 0; i < flux_grid.size(); ++i) {
        const double theta = exposure_s * flux_grid[i] + params.dark_current * exposure_s;
        const PixelStats s = response.stats(theta);
        const double sigma = std::sqrt(s.variance);
        double db = -kInf;
        if (sigma > 0.0 && s.dmean_dtheta >= 1e-300) {
            const double ratio =
                std::sqrt(static_cast<double>(frames)) * theta * s.dmean_dtheta / sigma;
            if (ratio > 0.0) db = 20.0 * std::log10(ratio);
        }
        curve.snr_db[i] = db;
    }
    curve.validate();
    return curve;
}

SnrCurve cis_snr_curve(const CisParams& params, double exposure_s, int frames,
                       const std::vector<double>& flux_grid) {
    if (!(exposure_s > 0.0)) throw DomainError("cis_snr_curve: exposure must be > 0");
    SnrCurve curve;
    curve.abscissa = flux_grid;
    curve.snr_db.resize(flux_grid.size());
    for (std::size_t i = 0; i < flux_grid.size(); ++i)
        curve.snr_db[i] = cis_snr_h(exposure_s * flux_grid[i], params, frames);
    curve.validate();
    return curve;
}

SnrCurve fused_snr_curve(const SensorParams& params, const ExposureSchedule& schedule,
                         WeightRule rule, const std::vector<double>& flux_grid) {
    schedule.validate();
    const PixelResponse response(params);
    const int num_groups = schedule.num_groups();

    std::vector<double> exposures(static_cast<std::size_t>(num_groups));
    for (int m = 0; m < num_groups; ++m)
        exposures[static_cast<std::size_t>(m)] = schedule.groups[static_cast<std::size_t>(m)].exposure_s;

    SnrCurve curve;
    curve.abscissa = flux_grid;
    curve.snr_db.resize(flux_grid.size());

    std::vector<double> noise_per_flux(static_cast<std::size_t>(num_groups));
    std::vector<double> snr(static_cast<std::size_t>(num_groups));
    for (std::size_t i = 0; i < flux_grid.size(); ++i) {
        const double lambda = flux_grid[i];

        // Per-exposure noise of the flux-unit LDR estimate:
        // std(S[m]) = sigma_H[m] / (K_m dt_m) with sigma_H = sqrt(K) sigma_Y / mu_Y'.
        for (int m = 0; m < num_groups; ++m) {
            const auto& g = schedule.groups[static_cast<std::size_t>(m)];
            const double theta = g.exposure_s * lambda + params.dark_current * g.exposure_s;
            const PixelStats s = response.stats(theta);
            double sigma_h = kInf;
            if (s.dmean_dtheta >= 1e-300)
                sigma_h = std::sqrt(static_cast<double>(g.frames)) * std::sqrt(s.variance) /
                          s.dmean_dtheta;
            noise_per_flux[static_cast<std::size_t>(m)] = sigma_h / (g.frames * g.exposure_s);
            snr[static_cast<std::size_t>(m)] =
                std::isinf(sigma_h) ? 0.0 : g.exposure_s * lambda / sigma_h;
        }

        std::vector<double> w(static_cast<std::size_t>(num_groups));
        switch (rule) {
        case WeightRule::Optimal:
            w = optimal_weights(snr).weights;
            break;
        case WeightRule::Equal:
            std::fill(w.begin(), w.end(), 1.0 / num_groups);
            break;
        case WeightRule::CisIndicator:
            w = cis_optimal_weights(exposures, lambda, params.clip_level).weights;
            break;
        }

        double noise_sq = 0.0;
        for (int m = 0; m < num_groups; ++m) {
            const double wn = w[static_cast<std::size_t>(m)] * noise_per_flux[static_cast<std::size_t>(m)];
            noise_sq += wn * wn;
        }
        const double noise = std::sqrt(noise_sq);
        curve.snr_db[i] =
            (noise > 0.0 && std::isfinite(noise)) ? 20.0 * std::log10(lambda / noise) : -kInf;
    }
    curve.validate();
    return curve;
}

DynamicRangeReport dynamic_range(const SnrCurve& curve, double threshold_db) {
    curve.validate();
    const auto& x = curve.abscissa;
    const auto& y = curve.snr_db;
    const std::size_t n = x.size();

    std::size_t first = n, last = n;
    for (std::size_t i = 0; i < n; ++i) {
        if (y[i] >= threshold_db) {
            if (first == n) first = i;
            last = i;
        }
    }

    DynamicRangeReport report;
    report.threshold_db = threshold_db;
    if (first == n) return report;  // nothing reaches the threshold

    // Crossing between samples i (below) and j (above), interpolated in
    // (log10 x, dB); an infinite neighbour pins the crossing at the finite sample.
    auto cross = [&](std::size_t below, std::size_t above) {
        const double ya = y[below];
        const double yb = y[above];
        if (!std::isfinite(ya) || !std::isfinite(yb)) return x[above];
        const double t = (threshold_db - ya) / (yb - ya);
        const double lx = std::log10(x[below]) + t * (std::log10(x[above]) - std::log10(x[below]));
        return std::pow(10.0, lx);
    };

    report.valid = true;
    report.floor = first > 0 ? cross(first - 1, first) : x.front();
    report.ceiling = last + 1 < n ? cross(last + 1, last) : x.back();
    report.range_db = 20.0 * std::log10(report.ceiling / report.floor);
    return report;
}

double histogram_fit(const std::vector<double>& samples, double sigma_read, double dark_current,
                     double dt) {
    if (samples.size() < 1000) throw DomainError("histogram_fit: need at least 1000 samples");
    if (!(sigma_read > 0.0)) throw DomainError("histogram_fit: sigma_read must be > 0");
    if (!(dt > 0.0)) throw DomainError("histogram_fit: dt must be > 0");
    if (!(dark_current >= 0.0)) throw DomainError("histogram_fit: dark current must be >= 0");

    // 0.05 e- bins centred on multiples of the bin width.
    constexpr double kBin = 0.05;
    long long lo_idx = std::numeric_limits<long long>::max();
    long long hi_idx = std::numeric_limits<long long>::min();
    for (double z : samples) {
        if (!std::isfinite(z)) throw DomainError("histogram_fit: samples must be finite");
        const long long idx = std::llround(z / kBin);
        lo_idx = std::min(lo_idx, idx);
        hi_idx = std::max(hi_idx, idx);
    }
    if (lo_idx == hi_idx) throw DomainError("histogram_fit: degenerate single-bin histogram");

    const std::size_t bins = static_cast<std::size_t>(hi_idx - lo_idx + 1);
    std::vector<double> density(bins, 0.0);
    const double unit = 1.0 / (static_cast<double>(samples.size()) * kBin);
    for (double z : samples) density[static_cast<std::size_t>(std::llround(z / kBin) - lo_idx)] += unit;

    std::vector<double> centers(bins);
    for (std::size_t b = 0; b < bins; ++b)
        centers[b] = static_cast<double>(lo_idx + static_cast<long long>(b)) * kBin;

    double mean = 0.0;
    for (double z : samples) mean += z;
    mean /= static_cast<double>(samples.size());

    auto mse_at = [&](double log_lambda) {
        const double lambda = std::exp(log_lambda);
        const double theta = lambda * dt + dark_current * dt;
        double err = 0.0;
        for (std::size_t b = 0; b < bins; ++b) {
            const double d = pz_density(centers[b], theta, sigma_read) - density[b];
            err += d * d;
        }
        return err / static_cast<double>(bins);
    };

    // Bracket the flux around the sample mean (theta estimate), with generous
    // margins so near-zero fits stay reachable.
    const double theta_guess = std::max(mean, 0.0);
    double lo = std::log(std::max(theta_guess / 100.0, 1e-6) / dt);
    double hi = std::log((theta_guess * 100.0 + 10.0) / dt);

    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double x1 = b - phi * (b - a);
    double x2 = a + phi * (b - a);
    double f1 = mse_at(x1), f2 = mse_at(x2);
    for (int i = 0; i < 200 && (b - a) > 1e-10; ++i) {
        if (f1 < f2) {
            b = x2; x2 = x1; f2 = f1;
            x1 = b - phi * (b - a);
            f1 = mse_at(x1);
        } else {
            a = x1; x1 = x2; f1 = f2;
            x2 = a + phi * (b - a);
            f2 = mse_at(x2);
        }
    }
    return std::exp(0.5 * (a + b));
}

double lmse(const std::vector<double>& estimate, const std::vector<double>& truth) {
    if (estimate.size() != truth.size() || truth.empty())
        throw DomainError("lmse: estimate and truth must have the same nonzero size");
    double max_truth = 0.0;
    for (double t : truth) {
        if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("lmse: truth must be finite and >= 0");
        max_truth = std::max(max_truth, t);
    }
    const double eps = 1e-4 * max_truth;
    if (!(eps > 0.0)) throw DomainError("lmse: ground truth is identically zero");

    double acc = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double e = std::max(estimate[i], 0.0);
        const double d = std::log10(e + eps) - std::log10(truth[i] + eps);
        acc += d * d;
    }
    return acc / static_cast<double>(truth.size());
}

} // namespace qishdr
