#pragma once

#include <cmath>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <variant>

#include "boolperc/errors.hpp"
#include "boolperc/quadrature.hpp"
#include "boolperc/rng.hpp"

namespace boolperc {

// Radius distributions for the marked Poisson process. A law is described
// by its tail mu[r, inf) = P[R >= r]; sampling inverts the tail, so sampler
// and tail can never drift apart.
//
// The heavy/stretched families fix the tail only on r >= 1; the remaining
// mass 1 - tail(1) is spread uniformly on [0, 1), which keeps the law
// atomless and the inverse closed-form. The power-law family has no mass
// below 1 (tail identically 1 there).

struct Moment {
    double value = std::numeric_limits<double>::infinity();
    bool finite = false;

    static Moment of(double v) { return {v, true}; }
    static Moment infinite() { return {}; }
};

class RadiusLaw {
public:
    struct Dirac {
        double r0;
    };
    struct ExpTail {
        double c;
    };
    struct PowerLawC1 {
        double c;
        int d;
    };
    struct StretchedExpC2 {
        double c;
        double a;
    };
    struct TruncatedAt {
        std::shared_ptr<const RadiusLaw> inner;
        double rmax;
    };

    static RadiusLaw dirac(double r0) {
        if (!(r0 >= 0.0)) throw infeasible_error("dirac: r0 must be >= 0");
        return RadiusLaw(Dirac{r0});
    }
    static RadiusLaw exp_tail(double c) {
        if (!(c > 0.0)) throw infeasible_error("exp_tail: rate must be > 0");
        return RadiusLaw(ExpTail{c});
    }
    // tail(r) = r^-(d+c) for r >= 1. c <= 0 is accepted (with d + c > 0) and
    // yields an infinite d-th moment, i.e. the Hall-saturated regime.
    static RadiusLaw power_law_c1(double c, int d) {
        if (!(d + c > 0.0)) throw infeasible_error("power_law_c1: requires d + c > 0");
        return RadiusLaw(PowerLawC1{c, d});
    }
    static RadiusLaw stretched_exp_c2(double c, double a) {
        if (!(c > 0.0)) throw infeasible_error("stretched_exp_c2: rate must be > 0");
        if (!(a > 0.0 && a < 1.0)) throw infeasible_error("stretched_exp_c2: a must be in (0,1)");
        return RadiusLaw(StretchedExpC2{c, a});
    }
    static RadiusLaw truncated_at(RadiusLaw inner, double rmax) {
        if (!(rmax > 0.0)) throw infeasible_error("truncated_at: rmax must be > 0");
        return RadiusLaw(TruncatedAt{std::make_shared<RadiusLaw>(std::move(inner)), rmax});
    }

    // mu[r, inf) = P[R >= r].
    double tail(double r) const {
        if (r <= 0.0) return 1.0;
        return std::visit(
            [r](const auto& v) -> double {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, Dirac>) {
                    return r <= v.r0 ? 1.0 : 0.0;
                } else if constexpr (std::is_same_v<T, ExpTail>) {
                    if (r >= 1.0) return std::exp(-v.c * r);
                    return 1.0 - (1.0 - std::exp(-v.c)) * r;
                } else if constexpr (std::is_same_v<T, PowerLawC1>) {
                    if (r <= 1.0) return 1.0;
                    return std::pow(r, -(v.d + v.c));
                } else if constexpr (std::is_same_v<T, StretchedExpC2>) {
                    if (r >= 1.0) return std::exp(-v.c * std::pow(r, v.a));
                    return 1.0 - (1.0 - std::exp(-v.c)) * r;
                } else {
                    static_assert(std::is_same_v<T, TruncatedAt>);
                    return r <= v.rmax ? v.inner->tail(r) : 0.0;
                }
            },
            law_);
    }

    // Generalized inverse: smallest r with tail(r) <= u, mapped into the
    // support for the probability-zero edge u = 1. Valid for u in (0, 1].
    double inverse_tail(double u) const {
        return std::visit(
            [u](const auto& v) -> double {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, Dirac>) {
                    return v.r0;
                } else if constexpr (std::is_same_v<T, ExpTail>) {
                    const double t1 = std::exp(-v.c);
                    if (u <= t1) return -std::log(u) / v.c;
                    return (1.0 - u) / (1.0 - t1);
                } else if constexpr (std::is_same_v<T, PowerLawC1>) {
                    return std::pow(u, -1.0 / (v.d + v.c));
                } else if constexpr (std::is_same_v<T, StretchedExpC2>) {
                    const double t1 = std::exp(-v.c);
                    if (u <= t1) return std::pow(-std::log(u) / v.c, 1.0 / v.a);
                    return (1.0 - u) / (1.0 - t1);
                } else {
                    static_assert(std::is_same_v<T, TruncatedAt>);
                    return std::min(v.inner->inverse_tail(u), v.rmax);
                }
            },
            law_);
    }

    double sample(RandomStream& rng) const { return inverse_tail(rng.u01_open()); }

    // Sample conditioned on R in [lo, hi); requires mu[lo, hi) > 0.
    double sample_in_band(RandomStream& rng, double lo, double hi) const {
        const double tlo = tail(lo), thi = tail(hi);
        if (!(tlo > thi)) throw internal_error("sample_in_band: empty band");
        return inverse_tail(thi + (tlo - thi) * rng.u01_open());
    }

    double band_mass(double lo, double hi) const { return tail(lo) - tail(hi); }

    // Supremum of the support; +inf for unbounded laws.
    double support_sup() const {
        return std::visit(
            [](const auto& v) -> double {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, Dirac>) return v.r0;
                else if constexpr (std::is_same_v<T, TruncatedAt>)
                    return std::min(v.inner->support_sup(), v.rmax);
                else return std::numeric_limits<double>::infinity();
            },
            law_);
    }

    bool moment_is_finite(double k) const {
        return std::visit(
            [k](const auto& v) -> bool {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, PowerLawC1>) return k < v.d + v.c;
                else (void)v;
                return true;
            },
            law_);
    }

    // E[R^k] = k int_0^inf r^{k-1} tail(r) dr, by quadrature with the tail
    // substituted beyond r = 2; divergence is decided analytically first.
    Moment moment(double k) const {
        if (!(k >= 0.0)) throw infeasible_error("moment: k must be >= 0");
        if (k == 0.0) return Moment::of(1.0);
        if (!moment_is_finite(k)) return Moment::infinite();
        if (const auto* dl = std::get_if<Dirac>(&law_)) return Moment::of(std::pow(dl->r0, k));
        const auto integrand = [this, k](double r) {
            return k * std::pow(r, k - 1.0) * tail(r);
        };
        const double sup = support_sup();
        const QuadratureOptions opt{1e-10, 1e-30, 4096};
        if (std::isfinite(sup)) {
            return Moment::of(
                integrate_with_kinks(integrand, 0.0, sup, interior_kinks(sup), opt));
        }
        const double split = 2.0;
        const double head =
            integrate_with_kinks(integrand, 0.0, split, interior_kinks(split), opt);
        return Moment::of(head + integrate_to_inf(integrand, split, opt));
    }

    std::string describe() const {
        std::ostringstream os;
        std::visit(
            [&os](const auto& v) {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, Dirac>) os << "dirac(r0=" << v.r0 << ")";
                else if constexpr (std::is_same_v<T, ExpTail>) os << "exp_tail(c=" << v.c << ")";
                else if constexpr (std::is_same_v<T, PowerLawC1>)
                    os << "power_law_c1(c=" << v.c << ",d=" << v.d << ")";
                else if constexpr (std::is_same_v<T, StretchedExpC2>)
                    os << "stretched_exp_c2(c=" << v.c << ",a=" << v.a << ")";
                else os << "truncated_at(" << v.inner->describe() << ",rmax=" << v.rmax << ")";
            },
            law_);
        return os.str();
    }

    using Variant = std::variant<Dirac, ExpTail, PowerLawC1, StretchedExpC2, TruncatedAt>;
    const Variant& variant() const { return law_; }

private:
    explicit RadiusLaw(Variant v) : law_(std::move(v)) {}

    // Tail kinks at the support-convention boundary and any truncation cut.
    std::vector<double> interior_kinks(double hi) const {
        std::vector<double> ks;
        if (hi > 1.0) ks.push_back(1.0);
        if (const auto* t = std::get_if<TruncatedAt>(&law_)) {
            if (t->rmax < hi) ks.push_back(t->rmax);
        }
        return ks;
    }

    Variant law_;
};

// True when the radius law has the finite (5d-3)-th moment required for the
// sharpness analysis in dimension d; recorded in run metadata only.
inline bool satisfies_sharpness_moment(const RadiusLaw& law, int d) {
    return law.moment_is_finite(5.0 * d - 3.0);
}

}  // namespace boolperc
