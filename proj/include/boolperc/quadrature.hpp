#pragma once

#include <algorithm>
#include <cmath>
#include <queue>
#include <vector>

#include "boolperc/errors.hpp"

namespace boolperc {

// Adaptive Gauss-Kronrod (G7/K15) integration, globally adaptive: the
// segment with the largest error estimate is bisected until the summed
// error meets the tolerance. Integrands here are piecewise smooth with
// known kinks (law support boundaries, geometric crossovers); callers pass
// the kinks so the integrator splits on them instead of hunting for them.

namespace detail {

// QUADPACK G7/K15 nodes and weights on [-1, 1] (positive half).
inline constexpr double kKronrodNodes[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.0,
};
inline constexpr double kKronrodWeights[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728,
};
// Gauss-7 weights aligned with Kronrod nodes 1, 3, 5, 7.
inline constexpr double kGaussWeights[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469,
};

template <typename F>
inline void gk15(const F& f, double a, double b, double& kronrod, double& err) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double resk = 0.0, resg = 0.0;
    for (int j = 0; j < 8; ++j) {
        const double off = half * kKronrodNodes[j];
        const double fsum = (j == 7) ? f(mid) : f(mid - off) + f(mid + off);
        resk += kKronrodWeights[j] * fsum;
        if (j % 2 == 1) resg += kGaussWeights[j / 2] * fsum;
        else if (j == 7) resg += kGaussWeights[3] * fsum;
    }
    kronrod = resk * half;
    err = std::abs((resk - resg) * half);
}

}  // namespace detail

struct QuadratureOptions {
    double rel_tol = 1e-10;
    double abs_floor = 1e-14;
    int max_segments = 2048;
};

// Integrate f on the finite interval [a, b].
template <typename F>
inline double integrate(const F& f, double a, double b, QuadratureOptions opt = {}) {
    if (!(b > a)) return 0.0;
    struct Seg {
        double err, a, b, value;
        bool operator<(const Seg& o) const { return err < o.err; }
    };
    std::priority_queue<Seg> queue;
    double total = 0.0, total_err = 0.0;
    const auto push = [&](double lo, double hi) {
        double v, e;
        detail::gk15(f, lo, hi, v, e);
        total += v;
        total_err += e;
        queue.push({e, lo, hi, v});
    };
    push(a, b);
    int n = 1;
    while (total_err > std::max(opt.abs_floor, opt.rel_tol * std::abs(total)) &&
           n < opt.max_segments) {
        const Seg s = queue.top();
        queue.pop();
        total -= s.value;
        total_err -= s.err;
        const double m = 0.5 * (s.a + s.b);
        if (!(m > s.a && m < s.b)) {  // interval at floating-point resolution
            total += s.value;
            total_err += s.err;
            break;
        }
        push(s.a, m);
        push(m, s.b);
        ++n;
    }
    return total;
}

// Integrate f on [a, b] splitting first at the interior points of `kinks`.
template <typename F>
inline double integrate_with_kinks(const F& f, double a, double b,
                                   std::vector<double> kinks, QuadratureOptions opt = {}) {
    if (!(b > a)) return 0.0;
    std::sort(kinks.begin(), kinks.end());
    double total = 0.0;
    double lo = a;
    for (double k : kinks) {
        if (k <= lo || k >= b) continue;
        total += integrate(f, lo, k, opt);
        lo = k;
    }
    total += integrate(f, lo, b, opt);
    return total;
}

// Integrate f on [a, infinity) via the substitution u = 1/r:
//   int_a^inf f(r) dr = int_0^{1/a} f(1/u) / u^2 du.
template <typename F>
inline double integrate_to_inf(const F& f, double a, QuadratureOptions opt = {}) {
    if (!(a > 0.0)) throw internal_error("integrate_to_inf requires a > 0");
    const auto g = [&f](double u) {
        if (u <= 0.0) return 0.0;
        const double r = 1.0 / u;
        return f(r) * r * r;
    };
    return integrate(g, 0.0, 1.0 / a, opt);
}

}  // namespace boolperc
