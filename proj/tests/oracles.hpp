#pragma once

// Test-only oracles, independent of the library's computation paths:
// brute-force clustering, an adaptive Simpson integrator, and a raster
// flood fill for occupied-set connectivity.

#include <cmath>
#include <functional>
#include <numeric>
#include <queue>
#include <vector>

#include "boolperc/sampler.hpp"

namespace oracle {

// O(n^2) union-find over all ball pairs.
class BruteClusters {
public:
    BruteClusters(const std::vector<boolperc::Ball>& balls, int d) : parent_(balls.size()) {
        std::iota(parent_.begin(), parent_.end(), 0);
        for (size_t i = 0; i < balls.size(); ++i) {
            for (size_t j = i + 1; j < balls.size(); ++j) {
                const double rr = balls[i].radius + balls[j].radius;
                if (boolperc::dist2(balls[i].center, balls[j].center, d) <= rr * rr)
                    unite(i, j);
            }
        }
    }

    size_t find(size_t i) const {
        while (parent_[i] != i) i = parent_[i] = parent_[parent_[i]];
        return i;
    }

    size_t component_count() const {
        size_t c = 0;
        for (size_t i = 0; i < parent_.size(); ++i)
            if (find(i) == i) ++c;
        return c;
    }

    bool same(size_t i, size_t j) const { return find(i) == find(j); }

private:
    void unite(size_t a, size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent_[b] = a;
    }
    mutable std::vector<size_t> parent_;
};

// Recursive adaptive Simpson; deliberately a different scheme from the
// library's Gauss-Kronrod integrator.
inline double simpson_step(const std::function<double(double)>& f, double a, double b,
                           double fa, double fm, double fb, double whole, double tol,
                           int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
           simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

inline double integrate_simpson(const std::function<double(double)>& f, double a, double b,
                                double tol = 1e-10, int depth = 40) {
    if (!(b > a)) return 0.0;
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_step(f, a, b, fa, fm, fb, whole, tol, depth);
}

// Occupied-set connectivity between B_inner and the sphere of radius outer,
// by flood fill over a raster of pitch h (d = 2).
inline bool raster_ball_to_sphere(const std::vector<boolperc::Ball>& balls, double inner,
                                  double outer, double h) {
    const int M = static_cast<int>(std::ceil(outer / h)) + 2;
    const int side = 2 * M + 1;
    std::vector<uint8_t> occ(static_cast<size_t>(side) * side, 0);
    const auto idx = [&](int i, int j) {
        return static_cast<size_t>(i + M) * side + static_cast<size_t>(j + M);
    };
    for (const auto& b : balls) {
        const int ilo = std::max(-M, (int)std::ceil((b.center[0] - b.radius) / h));
        const int ihi = std::min(M, (int)std::floor((b.center[0] + b.radius) / h));
        for (int i = ilo; i <= ihi; ++i) {
            const double dx = i * h - b.center[0];
            const double rem = b.radius * b.radius - dx * dx;
            if (rem < 0) continue;
            const double half = std::sqrt(rem);
            const int jlo = std::max(-M, (int)std::ceil((b.center[1] - half) / h));
            const int jhi = std::min(M, (int)std::floor((b.center[1] + half) / h));
            for (int j = jlo; j <= jhi; ++j) occ[idx(i, j)] = 1;
        }
    }
    std::vector<uint8_t> seen(occ.size(), 0);
    std::queue<std::pair<int, int>> q;
    for (int i = -M; i <= M; ++i) {
        for (int j = -M; j <= M; ++j) {
            const double x = i * h, y = j * h;
            if (occ[idx(i, j)] && x * x + y * y <= inner * inner) {
                q.emplace(i, j);
                seen[idx(i, j)] = 1;
            }
        }
    }
    while (!q.empty()) {
        const auto [i, j] = q.front();
        q.pop();
        const double x = i * h, y = j * h;
        if (x * x + y * y >= outer * outer) return true;
        constexpr int di[8] = {1, -1, 0, 0, 1, 1, -1, -1};
        constexpr int dj[8] = {0, 0, 1, -1, 1, -1, 1, -1};
        for (int k = 0; k < 8; ++k) {
            const int ni = i + di[k], nj = j + dj[k];
            if (ni < -M || ni > M || nj < -M || nj > M) continue;
            if (seen[idx(ni, nj)] || !occ[idx(ni, nj)]) continue;
            seen[idx(ni, nj)] = 1;
            q.emplace(ni, nj);
        }
    }
    return false;
}

}  // namespace oracle
