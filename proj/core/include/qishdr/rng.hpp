#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace qishdr {

/// Philox4x32-10 counter-based generator block function.
///
/// Counter-based generation lets every (seed, group, frame, pixel) tuple own
/// an independent stream, so simulation output is identical regardless of how
/// the work is split across threads.
struct Philox4x32 {
    using Key = std::array<std::uint32_t, 2>;
    using Counter = std::array<std::uint32_t, 4>;

    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

    static Counter block(Counter ctr, Key key) noexcept {
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
            const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const auto lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const auto lo1 = static_cast<std::uint32_t>(p1);
            ctr = Counter{hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        return ctr;
    }
};

/// Deterministic random stream for one pixel of one frame.
///
/// Words are drawn from Philox blocks keyed by the 64-bit seed with the
/// counter laid out as (block index, pixel, frame, group). Consuming a
/// variable number of values (e.g. Poisson rejection loops) never perturbs
/// any other stream.
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::uint32_t group, std::uint32_t frame,
                 std::uint32_t pixel) noexcept
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          base_{0u, pixel, frame, group} {}

    std::uint32_t next_word() noexcept {
        if (word_pos_ == 4) {
            Philox4x32::Counter ctr = base_;
            ctr[0] = block_index_++;
            words_ = Philox4x32::block(ctr, key_);
            word_pos_ = 0;
        }
        return words_[word_pos_++];
    }

    /// Uniform double in (0, 1), 53 random bits.
    double uniform() noexcept {
        const std::uint64_t hi = next_word();
        const std::uint64_t lo = next_word();
        const std::uint64_t bits = (hi << 32) | lo;
        return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; pairs are cached.
    double normal() noexcept {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    /// Poisson(theta) draw: sequential inversion below 30, Hormann's PTRS
    /// transformed rejection above (exact for the full dynamic range).
    long long poisson(double theta) noexcept {
        if (theta <= 0.0) return 0;
        return theta < 30.0 ? poisson_inversion(theta) : poisson_ptrs(theta);
    }

private:
    long long poisson_inversion(double theta) noexcept {
        const double u = uniform();
        double p = std::exp(-theta);
        double cum = p;
        long long k = 0;
        const long long k_cap = static_cast<long long>(theta + 60.0 * std::sqrt(theta) + 60.0);
        while (u > cum && k < k_cap) {
            ++k;
            p *= theta / static_cast<double>(k);
            cum += p;
        }
        return k;
    }

    long long poisson_ptrs(double theta) noexcept {
        const double log_theta = std::log(theta);
        const double b = 0.931 + 2.53 * std::sqrt(theta);
        const double a = -0.059 + 0.02483 * b;
        const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        const double v_r = 0.9277 - 3.6224 / (b - 2.0);
        for (;;) {
            const double u = uniform() - 0.5;
            const double v = uniform();
            const double us = 0.5 - std::fabs(u);
            const double kf = std::floor((2.0 * a / us + b) * u + theta + 0.43);
            if (us >= 0.07 && v <= v_r) return static_cast<long long>(kf);
            if (kf < 0.0 || (us < 0.013 && v > us)) continue;
            const long long k = static_cast<long long>(kf);
            const double lhs = std::log(v * inv_alpha / (a / (us * us) + b));
            const double rhs =
                kf * log_theta - theta - std::lgamma(kf + 1.0);
            if (lhs <= rhs) return k;
        }
    }

    Philox4x32::Key key_;
    Philox4x32::Counter base_;
    Philox4x32::Counter words_{};
    std::uint32_t block_index_ = 0;
    int word_pos_ = 4;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace qishdr
