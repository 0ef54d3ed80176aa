#pragma once

#include <cmath>
#include <cstdint>
#include <string>

namespace boolperc {

// Universal Monte Carlo return type. Bernoulli estimates use the exact
// binomial standard error; real-valued ones the sample standard error.
struct Estimate {
    double mean = 0.0;
    double stderr_ = 0.0;
    uint64_t n = 0;
    uint64_t seed = 0;
    std::string meta;

    static Estimate bernoulli(uint64_t hits, uint64_t n, uint64_t seed,
                              std::string meta = {}) {
        Estimate e;
        e.n = n;
        e.seed = seed;
        e.meta = std::move(meta);
        if (n > 0) {
            e.mean = static_cast<double>(hits) / static_cast<double>(n);
            e.stderr_ = std::sqrt(e.mean * (1.0 - e.mean) / static_cast<double>(n));
        }
        return e;
    }

    static Estimate from_moments(double sum, double sumsq, uint64_t n, uint64_t seed,
                                 std::string meta = {}) {
        Estimate e;
        e.n = n;
        e.seed = seed;
        e.meta = std::move(meta);
        if (n > 0) {
            e.mean = sum / static_cast<double>(n);
            if (n > 1) {
                const double var =
                    std::max(0.0, (sumsq - sum * e.mean) / static_cast<double>(n - 1));
                e.stderr_ = std::sqrt(var / static_cast<double>(n));
            }
        }
        return e;
    }
};

// Wilson score interval for a binomial proportion.
struct WilsonInterval {
    double lo = 0.0;
    double hi = 1.0;
    bool contains(double p) const { return lo <= p && p <= hi; }
};

inline WilsonInterval wilson_interval(uint64_t hits, uint64_t n, double z = 2.0) {
    if (n == 0) return {};
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(hits) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double center = (p + z2 / (2.0 * nn)) / denom;
    const double half =
        z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
    return {center - half, center + half};
}

}  // namespace boolperc
