#include "qishdr/sensor_stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qishdr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Standard normal CDF.
double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Standard normal upper tail.
double norm_sf(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

/// Regularized lower incomplete gamma P(a,x) by power series (x < a+1).
double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double term = sum;
    for (int n = 0; n < 500; ++n) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
    }
    double lg = -x + a * std::log(x) - std::lgamma(a);
    return sum * std::exp(lg);
}

/// Regularized upper incomplete gamma Q(a,x) by Lentz continued fraction (x >= a+1).
double gamma_q_cf(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 500; ++i) {
        double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-16) break;
    }
    double lg = -x + a * std::log(x) - std::lgamma(a);
    return h * std::exp(lg);
}

/// Regularized upper incomplete gamma Q(a, x) = Gamma(a,x)/Gamma(a).
double gamma_q(double a, double x) {
    if (x <= 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
    return gamma_q_cf(a, x);
}

/// Regularized lower incomplete gamma P(a, x) = 1 - Q(a, x), computed on the
/// branch that avoids cancellation.
double gamma_p(double a, double x) {
    if (x <= 0.0) return 0.0;
    if (x < a + 1.0) return gamma_p_series(a, x);
    return 1.0 - gamma_q_cf(a, x);
}

} // namespace

void SensorParams::validate() const {
    if (clip_level < 1) throw DomainError("SensorParams: clip_level must be >= 1");
    if (!(read_noise >= 0.0) || !std::isfinite(read_noise))
        throw DomainError("SensorParams: read_noise must be finite and >= 0");
    if (!(dark_current >= 0.0) || !std::isfinite(dark_current))
        throw DomainError("SensorParams: dark_current must be finite and >= 0");
}

double incomplete_gamma_psi(int q, double theta) {
    if (q < 0) throw DomainError("incomplete_gamma_psi: q must be >= 0");
    if (!(theta >= 0.0) || !std::isfinite(theta))
        throw DomainError("incomplete_gamma_psi: theta must be finite and >= 0");
    if (q == 0) return 0.0;
    return gamma_q(static_cast<double>(q), theta);
}

double poisson_pmf(long long j, double theta) {
    if (j < 0) return 0.0;
    if (theta == 0.0) return j == 0 ? 1.0 : 0.0;
    return std::exp(static_cast<double>(j) * std::log(theta) - theta -
                    std::lgamma(static_cast<double>(j) + 1.0));
}

ReadNoisePmf read_noise_pmf(double sigma_read, double epsilon) {
    if (!(sigma_read >= 0.0) || !std::isfinite(sigma_read))
        throw DomainError("read_noise_pmf: sigma_read must be finite and >= 0");
    if (!(epsilon > 0.0 && epsilon < 1e-3))
        throw DomainError("read_noise_pmf: epsilon must lie in (0, 1e-3)");

    ReadNoisePmf pmf;
    pmf.truncation_epsilon = epsilon;
    if (sigma_read == 0.0) {
        pmf.k_max = 0;
        pmf.probs = {1.0};
        return pmf;
    }

    // Extend the support until the two omitted Gaussian tails carry < epsilon.
    int k_max = 1;
    while (2.0 * norm_sf((k_max + 0.5) / sigma_read) >= epsilon) ++k_max;

    pmf.k_max = k_max;
    pmf.probs.resize(static_cast<std::size_t>(2 * k_max + 1));
    double total = 0.0;
    for (int k = -k_max; k <= k_max; ++k) {
        double p = norm_cdf((k + 0.5) / sigma_read) - norm_cdf((k - 0.5) / sigma_read);
        pmf.probs[static_cast<std::size_t>(k + k_max)] = p;
        total += p;
    }
    for (double& p : pmf.probs) p /= total;
    return pmf;
}

PixelResponse::PixelResponse(const SensorParams& params, double pmf_epsilon)
    : params_(params), pmf_(read_noise_pmf(params.read_noise, pmf_epsilon)) {
    params_.validate();
}

// The digitized value is Y = clamp(K + gamma, 0, L) with K ~ Poisson(theta)
// and gamma the rounded read noise (pmf p_k). Conditioning on gamma = k,
// every moment reduces to partial Poisson sums, which telescope into the
// incomplete gamma function Psi_q:
//   sum_{j=a..b} P(j)     = Psi_{b+1} - Psi_a
//   sum_{j=a..b} j P(j)   = theta (Psi_b - Psi_{a-1})
//   sum_{j=a..b} j^2 P(j) = theta^2 (Psi_{b-1} - Psi_{a-2}) + theta (Psi_b - Psi_{a-1})
// and d Psi_q / d theta = -P(q-1). This evaluates the full statistics in
// O(k_max) incomplete-gamma calls independent of L and theta.
PixelStats PixelResponse::stats(double theta) const {
    if (!(theta >= 0.0) || !std::isfinite(theta))
        throw DomainError("pixel_stats: theta must be finite and >= 0");

    const int L = params_.clip_level;
    auto psi = [&](int q) { return q <= 0 ? 0.0 : gamma_q(static_cast<double>(q), theta); };
    auto pois = [&](int j) { return poisson_pmf(j, theta); };
    auto dpsi = [&](int q) { return q <= 0 ? 0.0 : -pois(q - 1); };

    double mean = 0.0;
    double second = 0.0;
    double dmean = 0.0;
    for (int k = pmf_.support_min(); k <= pmf_.support_max(); ++k) {
        const double pk = pmf_.at(k);
        const int a = std::max(-k, 0);
        const int b = L - 1 - k;

        double sum1 = 0.0, sum2 = 0.0, dsum1 = 0.0;
        if (b >= a) {
            const double s0 = psi(b + 1) - psi(a);
            const double s1 = theta * (psi(b) - psi(a - 1));
            const double s2 = theta * theta * (psi(b - 1) - psi(a - 2)) + s1;
            const double ds0 = dpsi(b + 1) - dpsi(a);
            const double ds1 = (psi(b) - psi(a - 1)) + theta * (dpsi(b) - dpsi(a - 1));
            sum1 = s1 + k * s0;                       // sum_q q P(K = q - k), q in [max(k,0), L-1]
            sum2 = s2 + 2.0 * k * s1 + double(k) * k * s0;
            dsum1 = ds1 + k * ds0;
        }

        const int lk = std::max(L - k, 0);
        const double tail = 1.0 - psi(lk);            // P(K >= L - k), clamps to code L
        const double dtail = lk >= 1 ? pois(lk - 1) : 0.0;

        mean += pk * (sum1 + L * tail);
        second += pk * (sum2 + double(L) * L * tail);
        dmean += pk * (dsum1 + L * dtail);
    }

    PixelStats out;
    out.mean = mean;
    out.variance = std::max(second - mean * mean, 0.0);
    out.dmean_dtheta = dmean;
    return out;
}

double PixelResponse::mean(double theta) const {
    if (!(theta >= 0.0) || !std::isfinite(theta))
        throw DomainError("pixel_stats: theta must be finite and >= 0");

    const int L = params_.clip_level;
    auto psi = [&](int q) { return q <= 0 ? 0.0 : gamma_q(static_cast<double>(q), theta); };

    double mean = 0.0;
    for (int k = pmf_.support_min(); k <= pmf_.support_max(); ++k) {
        const double pk = pmf_.at(k);
        const int a = std::max(-k, 0);
        const int b = L - 1 - k;
        double sum1 = 0.0;
        if (b >= a) {
            const double s0 = psi(b + 1) - psi(a);
            const double s1 = theta * (psi(b) - psi(a - 1));
            sum1 = s1 + k * s0;
        }
        const int lk = std::max(L - k, 0);
        mean += pk * (sum1 + L * (1.0 - psi(lk)));
    }
    return mean;
}

PixelStats pixel_stats(double theta, const SensorParams& params) {
    return PixelResponse(params).stats(theta);
}

double exposure_referred_noise(double theta, const SensorParams& params, int frames) {
    if (frames < 1) throw DomainError("exposure_referred_noise: frames must be >= 1");
    const PixelStats s = pixel_stats(theta, params);
    if (s.dmean_dtheta < 1e-300) return kInf;
    return std::sqrt(static_cast<double>(frames)) * std::sqrt(s.variance) / s.dmean_dtheta;
}

double snr_h(double theta, const SensorParams& params, int frames) {
    if (frames < 1) throw DomainError("snr_h: frames must be >= 1");
    if (!(theta >= 0.0) || !std::isfinite(theta))
        throw DomainError("snr_h: theta must be finite and >= 0");
    if (theta == 0.0) return -kInf;
    const PixelStats s = pixel_stats(theta, params);
    const double sigma = std::sqrt(s.variance);
    if (s.dmean_dtheta < 1e-300 || sigma == 0.0) {
        // sigma == 0 only happens at theta == 0 (handled above) or in total
        // saturation, where the exposure-referred SNR has collapsed.
        return sigma == 0.0 && s.dmean_dtheta > 0.0 ? kInf : -kInf;
    }
    const double ratio = std::sqrt(static_cast<double>(frames)) * theta * s.dmean_dtheta / sigma;
    if (ratio <= 0.0) return -kInf;
    return 20.0 * std::log10(ratio);
}

double pz_density(double z, double theta, double sigma_read) {
    if (!(sigma_read > 0.0))
        throw DomainError("pz_density: sigma_read must be > 0 (use the Poisson pmf otherwise)");
    if (!(theta >= 0.0) || !std::isfinite(theta))
        throw DomainError("pz_density: theta must be finite and >= 0");

    // Truncate the Poisson mixture where the remaining tail mass is < 1e-12.
    long long l_max = static_cast<long long>(theta + 10.0 * std::sqrt(theta) + 20.0);
    while (gamma_p(static_cast<double>(l_max + 1), theta) >= 1e-12) ++l_max;

    const double inv_norm = 1.0 / (std::sqrt(2.0 * M_PI) * sigma_read);
    const double inv_two_var = 1.0 / (2.0 * sigma_read * sigma_read);
    double density = 0.0;
    for (long long l = 0; l <= l_max; ++l) {
        const double d = z - static_cast<double>(l);
        density += poisson_pmf(l, theta) * inv_norm * std::exp(-d * d * inv_two_var);
    }
    return density;
}

} // namespace qishdr
