#pragma once

#include <cmath>
#include <vector>

#include "boolperc/geometry.hpp"
#include "boolperc/quadrature.hpp"
#include "boolperc/radius_law.hpp"

namespace boolperc {

// Closed-form probabilities of the Boolean model, evaluated by quadrature
// against the radius tail. All of them are void probabilities of a Poisson
// count: P = 1 - exp(-expected number of qualifying balls).

// A probability that may have saturated to 1 because the law's d-th moment
// diverges (Hall's regime: the whole space is covered a.s.).
struct SaturableProb {
    double value = 0.0;
    bool saturated = false;
};

namespace detail {

// Tail kink radii of a law (support convention boundaries, truncation cuts).
inline void collect_tail_kinks(const RadiusLaw& law, std::vector<double>& out) {
    std::visit(
        [&out](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, RadiusLaw::Dirac>) {
                out.push_back(v.r0);
            } else if constexpr (std::is_same_v<T, RadiusLaw::TruncatedAt>) {
                out.push_back(v.rmax);
                collect_tail_kinks(*v.inner, out);
            } else {
                (void)v;
                out.push_back(1.0);
            }
        },
        law.variant());
}

}  // namespace detail

// Expected number of balls meeting both B_{2*delta*r} and the sphere of
// radius (1-2*delta)*r:  lambda * c_d * int a^{d-1} tail(g(a)) da  with
// g(a) = max(|a - 2dr|, |r - 2dr - a|).
inline double pi_delta_exponent(const RadiusLaw& law, double lambda, int d, double r,
                                double delta) {
    const double in = 2.0 * delta * r;           // inner ball radius
    const double out = (1.0 - 2.0 * delta) * r;  // sphere radius
    const auto gap = [in, out](double a) {
        return std::max(std::abs(a - in), std::abs(out - a));
    };
    const auto integrand = [&law, &gap, d](double a) {
        const double t = law.tail(gap(a));
        return t == 0.0 ? 0.0 : std::pow(a, d - 1.0) * t;
    };

    // Kinks: the two branch points of g plus preimages of the law's tail
    // kinks under both branches.
    std::vector<double> law_kinks;
    detail::collect_tail_kinks(law, law_kinks);
    std::vector<double> kinks{in, out, 0.5 * r};
    for (double t : law_kinks) {
        kinks.push_back(out - t);  // decreasing branch g(a) = out - a
        kinks.push_back(in + t);   // increasing branch g(a) = a - in
    }

    const QuadratureOptions opt{1e-8, 1e-300, 4096};
    const double sup = law.support_sup();
    if (std::isfinite(sup)) {
        const double hi = in + sup;  // beyond, g(a) > sup so tail = 0
        if (!(hi > 0.0)) return 0.0;
        std::vector<double> ks;
        for (double k : kinks)
            if (k > 0.0 && k < hi) ks.push_back(k);
        const double c_d = unit_sphere_area(d);
        return lambda * c_d * integrate_with_kinks(integrand, 0.0, hi, ks, opt);
    }
    const double split = std::max(2.0 * r, in + 2.0);
    std::vector<double> ks;
    for (double k : kinks)
        if (k > 0.0 && k < split) ks.push_back(k);
    const double c_d = unit_sphere_area(d);
    const double head = integrate_with_kinks(integrand, 0.0, split, ks, opt);
    const double tail_part = integrate_to_inf(integrand, split, opt);
    return lambda * c_d * (head + tail_part);
}

// pi_r^delta: probability some ball meets both B_{2 delta r} and the sphere
// of radius (1 - 2 delta) r. Requires 0 <= delta < 1/4.
inline SaturableProb pi_delta(const RadiusLaw& law, double lambda, int d, double r,
                              double delta) {
    if (!(lambda >= 0.0)) throw infeasible_error("pi_delta: lambda must be >= 0");
    if (!(r > 0.0)) throw infeasible_error("pi_delta: r must be > 0");
    if (!(delta >= 0.0 && delta < 0.25)) throw infeasible_error("pi_delta: delta in [0, 1/4)");
    if (lambda == 0.0) return {0.0, false};
    if (!law.moment_is_finite(d)) return {1.0, true};
    return {-std::expm1(-pi_delta_exponent(law, lambda, d, r, delta)), false};
}

// phi_r: probability some single ball covers the origin and meets the
// sphere of radius r. Equals pi_r^0; r = 0 gives the coverage probability.
inline SaturableProb phi(const RadiusLaw& law, double lambda, int d, double r) {
    if (!(lambda >= 0.0)) throw infeasible_error("phi: lambda must be >= 0");
    if (!(r >= 0.0)) throw infeasible_error("phi: r must be >= 0");
    if (lambda == 0.0) return {0.0, false};
    if (!law.moment_is_finite(d)) return {1.0, true};
    return {-std::expm1(-pi_delta_exponent(law, lambda, d, r, 0.0)), false};
}

// Probability the origin is covered: 1 - exp(-lambda v_d E[R^d]).
inline SaturableProb coverage_prob(const RadiusLaw& law, double lambda, int d) {
    if (!(lambda >= 0.0)) throw infeasible_error("coverage_prob: lambda must be >= 0");
    if (lambda == 0.0) return {0.0, false};
    const Moment md = law.moment(static_cast<double>(d));
    if (!md.finite) return {1.0, true};
    return {-std::expm1(-lambda * unit_ball_volume(d) * md.value), false};
}

// Expected number of balls of radius >= N that intersect B_r:
//   lambda v_d int_N^inf (r + rho)^d dmu(rho)
// computed by parts as (r+N)^d tail(N) + int_N d (r+a)^{d-1} tail(a) da.
// Saturates (infinite) when the law's d-th moment diverges.
inline SaturableProb truncation_intensity(const RadiusLaw& law, double lambda, int d,
                                          double r, double N) {
    if (!(N >= 0.0)) throw infeasible_error("truncation_intensity: N must be >= 0");
    if (!(lambda >= 0.0) || !(r >= 0.0))
        throw infeasible_error("truncation_intensity: lambda, r must be >= 0");
    if (lambda == 0.0) return {0.0, false};
    if (!law.moment_is_finite(d))
        return {std::numeric_limits<double>::infinity(), true};
    const double tN = law.tail(N);
    const double sup = law.support_sup();
    const auto integrand = [&law, r, d](double a) {
        const double t = law.tail(a);
        return t == 0.0 ? 0.0 : d * std::pow(r + a, d - 1.0) * t;
    };
    std::vector<double> law_kinks;
    detail::collect_tail_kinks(law, law_kinks);
    const QuadratureOptions opt{1e-10, 1e-300, 4096};
    double integral = 0.0;
    if (std::isfinite(sup)) {
        if (N < sup) {
            std::vector<double> ks;
            for (double k : law_kinks)
                if (k > N && k < sup) ks.push_back(k);
            integral = integrate_with_kinks(integrand, N, sup, ks, opt);
        }
    } else {
        const double split = std::max(N + 1.0, 2.0);
        std::vector<double> ks;
        for (double k : law_kinks)
            if (k > N && k < split) ks.push_back(k);
        integral = integrate_with_kinks(integrand, N, split, ks, opt) +
                   integrate_to_inf(integrand, split, opt);
    }
    const double head = tN == 0.0 ? 0.0 : std::pow(r + N, static_cast<double>(d)) * tN;
    return {lambda * unit_ball_volume(d) * (head + integral), false};
}

}  // namespace boolperc
