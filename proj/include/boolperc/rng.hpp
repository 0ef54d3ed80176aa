#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

#include "boolperc/geometry.hpp"

namespace boolperc {

// Counter-based random streams (Philox4x32-10, Salmon et al. SC'11).
// A stream is identified by a 64-bit key; draws walk a 128-bit counter.
// Keys are derived by hashing (seed, domain tag, indices...) so that any
// coordinate of a simulation can be resampled independently and parallel
// replicates are reproducible regardless of scheduling.

namespace detail {

inline void philox_round(std::array<uint32_t, 4>& ctr, std::array<uint32_t, 2>& key) {
    constexpr uint64_t kM0 = 0xD2511F53ull;
    constexpr uint64_t kM1 = 0xCD9E8D57ull;
    const uint64_t p0 = kM0 * ctr[0];
    const uint64_t p1 = kM1 * ctr[2];
    const uint32_t hi0 = static_cast<uint32_t>(p0 >> 32), lo0 = static_cast<uint32_t>(p0);
    const uint32_t hi1 = static_cast<uint32_t>(p1 >> 32), lo1 = static_cast<uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += 0x9E3779B9u;
    key[1] += 0xBB67AE85u;
}

inline std::array<uint32_t, 4> philox4x32_10(std::array<uint32_t, 4> ctr,
                                             std::array<uint32_t, 2> key) {
    for (int i = 0; i < 10; ++i) philox_round(ctr, key);
    return ctr;
}

// splitmix64 finalizer; used to derive stream keys from tuples.
inline uint64_t mix64(uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

}  // namespace detail

// Hash-combine a sequence of 64-bit values into a stream key.
inline uint64_t derive_key(uint64_t seed) { return detail::mix64(seed); }

template <typename... Rest>
inline uint64_t derive_key(uint64_t seed, uint64_t first, Rest... rest) {
    return derive_key(detail::mix64(seed ^ detail::mix64(first)), rest...);
}

// Domain tags keep unrelated stream families apart.
namespace stream_tag {
inline constexpr uint64_t kReplicate = 0x5245504Cull;   // per-replicate streams
inline constexpr uint64_t kCell = 0x43454C4Cull;        // per-(x,n) cell streams
inline constexpr uint64_t kGhost = 0x47484F53ull;       // the aggregated far coordinate
inline constexpr uint64_t kCouple = 0x434F5550ull;      // superposition increment
inline constexpr uint64_t kInsert = 0x494E5352ull;      // pivotal insertion proposals
inline constexpr uint64_t kResample = 0x52534D50ull;    // influence resampling
inline constexpr uint64_t kProbe = 0x50524F42ull;       // bisection probes
}  // namespace stream_tag

class RandomStream {
public:
    explicit RandomStream(uint64_t key) : key_{static_cast<uint32_t>(key),
                                               static_cast<uint32_t>(key >> 32)} {}

    uint64_t next_u64() {
        if (avail_ == 0) refill();
        return block_[--avail_];
    }

    // Uniform in [0, 1), 53-bit resolution.
    double u01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in (0, 1]; safe as an argument to log().
    double u01_open() { return 1.0 - u01(); }

    double uniform(double a, double b) { return a + (b - a) * u01(); }

    uint64_t uniform_index(uint64_t n) {
        // Modulo bias is < 2^-52 for the desk-scale n used here.
        return next_u64() % n;
    }

    double normal() {
        const double u1 = u01_open();
        const double u2 = u01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    // Poisson: inversion for small means, Hormann's PTRS rejection above.
    uint64_t poisson(double mean) {
        if (!(mean > 0.0)) return 0;
        if (mean < 10.0) return poisson_inversion(mean);
        return poisson_ptrs(mean);
    }

    // Uniform point in the closed ball of radius R around `center`.
    Vec point_in_ball(const Vec& center, double R, int d) {
        Vec p;
        if (d == 1) {
            p[0] = uniform(-1.0, 1.0);
        } else if (d == 2) {
            const double ang = uniform(0.0, 2.0 * std::numbers::pi);
            const double rad = std::sqrt(u01());
            p[0] = rad * std::cos(ang);
            p[1] = rad * std::sin(ang);
        } else if (d == 3) {
            const double cosg = uniform(-1.0, 1.0);
            const double sing = std::sqrt(std::max(0.0, 1.0 - cosg * cosg));
            const double ang = uniform(0.0, 2.0 * std::numbers::pi);
            const double rad = std::cbrt(u01());
            p[0] = rad * sing * std::cos(ang);
            p[1] = rad * sing * std::sin(ang);
            p[2] = rad * cosg;
        } else {
            double n2 = 0.0;
            for (int i = 0; i < d; ++i) {
                p[i] = normal();
                n2 += p[i] * p[i];
            }
            const double rad = std::pow(u01(), 1.0 / d) / std::sqrt(n2);
            for (int i = 0; i < d; ++i) p[i] *= rad;
        }
        for (int i = 0; i < d; ++i) p[i] = center[i] + R * p[i];
        return p;
    }

    // Uniform point in the box x + [-1/2, 1/2)^d.
    Vec point_in_box(const LatticePoint& x, int d) {
        Vec p;
        for (int i = 0; i < d; ++i) p[i] = x[i] - 0.5 + u01();
        return p;
    }

private:
    void refill() {
        const auto out = detail::philox4x32_10(
            {static_cast<uint32_t>(counter_), static_cast<uint32_t>(counter_ >> 32), 0, 0},
            key_);
        ++counter_;
        block_[0] = (static_cast<uint64_t>(out[1]) << 32) | out[0];
        block_[1] = (static_cast<uint64_t>(out[3]) << 32) | out[2];
        avail_ = 2;
    }

    uint64_t poisson_inversion(double mean) {
        const double g = std::exp(-mean);
        uint64_t k = 0;
        double t = u01_open();
        while (t > g) {
            ++k;
            t *= u01_open();
        }
        return k;
    }

    uint64_t poisson_ptrs(double mean) {
        const double b = 0.931 + 2.53 * std::sqrt(mean);
        const double a = -0.059 + 0.02483 * b;
        const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        const double v_r = 0.9277 - 3.6224 / (b - 2.0);
        const double log_mean = std::log(mean);
        for (;;) {
            const double u = u01() - 0.5;
            const double v = u01_open();
            const double us = 0.5 - std::abs(u);
            const double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
            if (us >= 0.07 && v <= v_r) return static_cast<uint64_t>(kf);
            if (kf < 0.0 || (us < 0.013 && v > us)) continue;
            if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
                kf * log_mean - mean - std::lgamma(kf + 1.0)) {
                return static_cast<uint64_t>(kf);
            }
        }
    }

    std::array<uint32_t, 2> key_;
    uint64_t counter_ = 0;
    std::array<uint64_t, 2> block_{};
    int avail_ = 0;
};

}  // namespace boolperc
