#include <doctest.h>

#include <cmath>
#include <map>

#include "boolperc/rng.hpp"

using namespace boolperc;

TEST_CASE("philox4x32-10 known answer (zero key and counter)") {
    const auto out = detail::philox4x32_10({0, 0, 0, 0}, {0, 0});
    CHECK(out[0] == 0x6627e8d5u);
    CHECK(out[1] == 0xe169c58du);
    CHECK(out[2] == 0xbc57ac4cu);
    CHECK(out[3] == 0x9b00dbd8u);
}

TEST_CASE("streams are deterministic and keyed independently") {
    RandomStream a(derive_key(42, 7));
    RandomStream b(derive_key(42, 7));
    RandomStream c(derive_key(42, 8));
    bool all_equal = true, any_diff = false;
    for (int i = 0; i < 100; ++i) {
        const uint64_t va = a.next_u64();
        all_equal &= (va == b.next_u64());
        any_diff |= (va != c.next_u64());
    }
    CHECK(all_equal);
    CHECK(any_diff);
}

TEST_CASE("u01 moments") {
    RandomStream rng(derive_key(1));
    const int n = 200000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = rng.u01();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        sum += u;
        sumsq += u * u;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    CHECK(std::abs(mean - 0.5) < 4.0 / std::sqrt(12.0 * n));
    CHECK(std::abs(var - 1.0 / 12.0) < 5e-3);
}

TEST_CASE("poisson mean and variance at small and large rates") {
    for (double mean : {0.2, 3.0, 17.5, 480.0}) {
        RandomStream rng(derive_key(99, static_cast<uint64_t>(mean * 100)));
        const int n = 40000;
        double s = 0.0, s2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double k = static_cast<double>(rng.poisson(mean));
            s += k;
            s2 += k * k;
        }
        const double m = s / n;
        const double v = s2 / n - m * m;
        // mean and variance both equal the rate; allow 5 sigma
        CHECK(std::abs(m - mean) < 5.0 * std::sqrt(mean / n));
        CHECK(std::abs(v - mean) < 5.0 * mean * std::sqrt(3.0 / n) + 0.05);
    }
}

TEST_CASE("poisson zero rate") {
    RandomStream rng(derive_key(5));
    CHECK(rng.poisson(0.0) == 0);
    CHECK(rng.poisson(-1.0) == 0);
}

TEST_CASE("point_in_ball lands in the ball with uniform radial law") {
    for (int d : {2, 3, 5}) {
        RandomStream rng(derive_key(7, static_cast<uint64_t>(d)));
        Vec center;
        center[0] = 1.5;
        const double R = 2.0;
        const int n = 50000;
        int inside_half = 0;
        for (int i = 0; i < n; ++i) {
            const Vec p = rng.point_in_ball(center, R, d);
            const double dd = dist(p, center, d);
            CHECK(dd <= R + 1e-12);
            if (dd <= R * std::pow(0.5, 1.0 / d)) ++inside_half;
        }
        // P[||p|| <= R * (1/2)^{1/d}] = 1/2 for the uniform law in the ball
        CHECK(std::abs(inside_half / static_cast<double>(n) - 0.5) <
              5.0 * std::sqrt(0.25 / n));
    }
}

TEST_CASE("point_in_box stays in the half-open unit box") {
    RandomStream rng(derive_key(11));
    LatticePoint x;
    x[0] = -3;
    x[1] = 2;
    for (int i = 0; i < 1000; ++i) {
        const Vec p = rng.point_in_box(x, 2);
        CHECK(p[0] >= -3.5);
        CHECK(p[0] < -2.5);
        CHECK(p[1] >= 1.5);
        CHECK(p[1] < 2.5);
        CHECK(cell_of(p, 2) == x);
    }
}
