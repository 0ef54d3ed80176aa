#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

#include "boolperc/errors.hpp"

namespace boolperc {

// Points live in R^d for a runtime dimension d <= kMaxDim. Components beyond
// d are kept at zero so value comparisons work across contexts.
inline constexpr int kMaxDim = 8;

struct Vec {
    std::array<double, kMaxDim> c{};

    double& operator[](int i) { return c[static_cast<size_t>(i)]; }
    double operator[](int i) const { return c[static_cast<size_t>(i)]; }
    bool operator==(const Vec&) const = default;
};

inline Vec origin_vec() { return Vec{}; }

inline double dot(const Vec& a, const Vec& b, int d) {
    double s = 0.0;
    for (int i = 0; i < d; ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const Vec& a, int d) { return dot(a, a, d); }
inline double norm(const Vec& a, int d) { return std::sqrt(norm2(a, d)); }

inline double dist2(const Vec& a, const Vec& b, int d) {
    double s = 0.0;
    for (int i = 0; i < d; ++i) {
        const double t = a[i] - b[i];
        s += t * t;
    }
    return s;
}

inline double dist(const Vec& a, const Vec& b, int d) { return std::sqrt(dist2(a, b, d)); }

// Lattice coordinates of the unit box S^x = x + [-1/2, 1/2)^d that contains z.
struct LatticePoint {
    std::array<int32_t, kMaxDim> c{};

    int32_t& operator[](int i) { return c[static_cast<size_t>(i)]; }
    int32_t operator[](int i) const { return c[static_cast<size_t>(i)]; }
    bool operator==(const LatticePoint&) const = default;
};

inline LatticePoint cell_of(const Vec& z, int d) {
    LatticePoint x;
    for (int i = 0; i < d; ++i) x[i] = static_cast<int32_t>(std::floor(z[i] + 0.5));
    return x;
}

inline double lattice_norm2(const LatticePoint& x, int d) {
    double s = 0.0;
    for (int i = 0; i < d; ++i) s += static_cast<double>(x[i]) * x[i];
    return s;
}

// Distance from a point to the closed box x + [-1/2, 1/2]^d.
inline double dist2_point_box(const Vec& p, const LatticePoint& x, int d) {
    double s = 0.0;
    for (int i = 0; i < d; ++i) {
        const double lo = x[i] - 0.5, hi = x[i] + 0.5;
        double g = 0.0;
        if (p[i] < lo) g = lo - p[i];
        else if (p[i] > hi) g = p[i] - hi;
        s += g * g;
    }
    return s;
}

inline double dist_point_box(const Vec& p, const LatticePoint& x, int d) {
    return std::sqrt(dist2_point_box(p, x, d));
}

// Min and max of ||p|| over the closed box around x.
inline double box_min_norm(const LatticePoint& x, int d) {
    double s = 0.0;
    for (int i = 0; i < d; ++i) {
        const double lo = x[i] - 0.5, hi = x[i] + 0.5;
        double v = 0.0;
        if (lo > 0.0) v = lo;
        else if (hi < 0.0) v = -hi;
        s += v * v;
    }
    return std::sqrt(s);
}

inline double box_max_norm(const LatticePoint& x, int d) {
    double s = 0.0;
    for (int i = 0; i < d; ++i) {
        const double v = std::max(std::abs(x[i] - 0.5), std::abs(x[i] + 0.5));
        s += v * v;
    }
    return std::sqrt(s);
}

// Distance between the closed boxes around lattice points x and y
// (unit boxes: per-axis gap is |dx|-1 when the boxes do not overlap).
inline double box_box_min_dist(const LatticePoint& x, const LatticePoint& y, int d) {
    double s = 0.0;
    for (int i = 0; i < d; ++i) {
        const double g = std::max(0.0, std::abs(static_cast<double>(x[i]) - y[i]) - 1.0);
        s += g * g;
    }
    return std::sqrt(s);
}

inline double box_box_max_dist(const LatticePoint& x, const LatticePoint& y, int d) {
    double s = 0.0;
    for (int i = 0; i < d; ++i) {
        const double g = std::abs(static_cast<double>(x[i]) - y[i]) + 1.0;
        s += g * g;
    }
    return std::sqrt(s);
}

// Distance from the closed box around x to the sphere ||p|| = s
// (zero when the box straddles the sphere).
inline double dist_box_sphere(const LatticePoint& x, double s, int d) {
    const double lo = box_min_norm(x, d);
    const double hi = box_max_norm(x, d);
    if (s < lo) return lo - s;
    if (s > hi) return s - hi;
    return 0.0;
}

// Distance from the closed box around x to the closed ball B_R^z.
inline double dist_box_ball(const LatticePoint& x, const Vec& z, double R, int d) {
    return std::max(0.0, dist_point_box(z, x, d) - R);
}

// Volume of the unit ball and surface area of the unit sphere in R^d.
struct GeometryConstants {
    int d;
    double v_d;  // volume of B_1
    double c_d;  // area of the unit sphere, c_d = d * v_d

    explicit GeometryConstants(int dim) : d(dim) {
        if (dim < 1 || dim > kMaxDim) throw infeasible_error("dimension out of range");
        v_d = std::pow(std::numbers::pi, dim / 2.0) / std::tgamma(dim / 2.0 + 1.0);
        c_d = dim * v_d;
    }
};

inline double unit_ball_volume(int d) { return GeometryConstants(d).v_d; }
inline double unit_sphere_area(int d) { return GeometryConstants(d).c_d; }

}  // namespace boolperc
