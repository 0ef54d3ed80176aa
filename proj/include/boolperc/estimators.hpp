#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "boolperc/analytic.hpp"
#include "boolperc/connectivity.hpp"
#include "boolperc/estimate.hpp"
#include "boolperc/parallel.hpp"
#include "boolperc/sampler.hpp"

namespace boolperc {

// Monte Carlo estimators for the connection probabilities and the two
// critical intensities. Replicate i draws its configuration from the
// stream keyed (seed, replicate tag, i); tallies are integer counts, so
// results are identical for any thread count.

struct ThetaCurve {
    std::vector<double> s_grid;
    std::vector<Estimate> values;     // shared replicates: exactly non-increasing
    double theta0 = 0.0;              // coverage probability anchor at s = 0
    bool theta0_saturated = false;
    bool shared_replicates = true;
    ModelSpec model;
    uint64_t seed = 0;
    uint64_t n_reps = 0;
};

namespace detail {

struct CountTally {
    std::vector<uint64_t> counts;
    void merge(const CountTally& o) {
        if (counts.size() < o.counts.size()) counts.resize(o.counts.size(), 0);
        for (size_t i = 0; i < o.counts.size(); ++i) counts[i] += o.counts[i];
    }
};

inline uint64_t replicate_seed(uint64_t seed, uint64_t i) {
    return derive_key(seed, stream_tag::kReplicate, i);
}

}  // namespace detail

// One connectivity radius per replicate yields the whole curve, so the
// estimates are exactly non-increasing along the grid.
inline ThetaCurve estimate_theta_curve(const ModelSpec& model,
                                       const std::vector<double>& s_grid, uint64_t n_reps,
                                       uint64_t seed, int threads = 1) {
    if (s_grid.empty()) throw infeasible_error("theta curve: empty s grid");
    for (size_t i = 0; i < s_grid.size(); ++i) {
        if (!(s_grid[i] > 0.0) || (i > 0 && !(s_grid[i] > s_grid[i - 1])))
            throw infeasible_error("theta curve: s grid must be positive increasing");
    }
    const double window = s_grid.back();
    const SamplingPlan plan = make_plan(model, window);

    auto tally = run_replicates<detail::CountTally>(
        n_reps, threads, [&](uint64_t i, detail::CountTally& t) {
            if (t.counts.empty()) t.counts.assign(s_grid.size(), 0);
            const BallConfig cfg = sample_config(plan, detail::replicate_seed(seed, i));
            const auto rad = ClusterIndex(cfg).connectivity_radius();
            if (!rad) return;
            for (size_t j = 0; j < s_grid.size(); ++j) {
                if (*rad >= s_grid[j]) ++t.counts[j];
                else break;
            }
        });
    if (tally.counts.empty()) tally.counts.assign(s_grid.size(), 0);

    ThetaCurve curve;
    curve.s_grid = s_grid;
    curve.model = model;
    curve.seed = seed;
    curve.n_reps = n_reps;
    const SaturableProb cov = coverage_prob(model.law, model.lambda, model.d);
    curve.theta0 = cov.value;
    curve.theta0_saturated = cov.saturated;
    for (size_t j = 0; j < s_grid.size(); ++j) {
        std::ostringstream meta;
        meta << "theta_s s=" << s_grid[j] << " lambda=" << model.lambda;
        curve.values.push_back(
            Estimate::bernoulli(tally.counts[j], n_reps, seed, meta.str()));
    }
    return curve;
}

// P[B_{alpha r} <-> sphere of radius r]; alpha = 0 asks for a ball covering
// the origin, matching the theta_r convention.
inline Estimate estimate_theta_alpha(const ModelSpec& model, double r, double alpha,
                                     uint64_t n_reps, uint64_t seed, int threads = 1) {
    if (!(alpha >= 0.0 && alpha < 1.0))
        throw infeasible_error("theta_alpha: alpha must be in [0, 1)");
    if (!(r > 0.0)) throw infeasible_error("theta_alpha: r must be > 0");
    const SamplingPlan plan = make_plan(model, r);
    struct Tally {
        uint64_t hits = 0;
        void merge(const Tally& o) { hits += o.hits; }
    };
    const auto tally = run_replicates<Tally>(n_reps, threads, [&](uint64_t i, Tally& t) {
        const BallConfig cfg = sample_config(plan, detail::replicate_seed(seed, i));
        if (ClusterIndex(cfg).connected_ball_to_sphere(alpha * r, r)) ++t.hits;
    });
    std::ostringstream meta;
    meta << "theta_alpha r=" << r << " alpha=" << alpha << " lambda=" << model.lambda;
    return Estimate::bernoulli(tally.hits, n_reps, seed, meta.str());
}

// Crossing probability P[B_r <-> sphere of radius 2r].
inline Estimate estimate_crossing(const ModelSpec& model, double r, uint64_t n_reps,
                                  uint64_t seed, int threads = 1) {
    if (!(r > 0.0)) throw infeasible_error("crossing: r must be > 0");
    const SamplingPlan plan = make_plan(model, 2.0 * r);
    struct Tally {
        uint64_t hits = 0;
        void merge(const Tally& o) { hits += o.hits; }
    };
    const auto tally = run_replicates<Tally>(n_reps, threads, [&](uint64_t i, Tally& t) {
        const BallConfig cfg = sample_config(plan, detail::replicate_seed(seed, i));
        if (ClusterIndex(cfg).connected_ball_to_sphere(r, 2.0 * r)) ++t.hits;
    });
    std::ostringstream meta;
    meta << "crossing r=" << r << " lambda=" << model.lambda;
    return Estimate::bernoulli(tally.hits, n_reps, seed, meta.str());
}

// Rasterized vacant-set connection probability (d = 2 only).
inline Estimate estimate_vacant(const ModelSpec& model, double r, double h, uint64_t n_reps,
                                uint64_t seed, int threads = 1) {
    if (model.d != 2) throw infeasible_error("vacant estimator supports d = 2 only");
    const SamplingPlan plan = make_plan(model, r);
    struct Tally {
        uint64_t hits = 0;
        void merge(const Tally& o) { hits += o.hits; }
    };
    const auto tally = run_replicates<Tally>(n_reps, threads, [&](uint64_t i, Tally& t) {
        const BallConfig cfg = sample_config(plan, detail::replicate_seed(seed, i));
        if (vacant_connected(cfg, r, h)) ++t.hits;
    });
    std::ostringstream meta;
    meta << "vacant r=" << r << " h=" << h << " lambda=" << model.lambda;
    return Estimate::bernoulli(tally.hits, n_reps, seed, meta.str());
}

// Trapezoid rule over the curve on [0, r], anchored at (0, theta0).
inline double sigma_r(const ThetaCurve& curve, double r) {
    if (!(r >= 0.0)) throw infeasible_error("sigma_r: r must be >= 0");
    if (curve.s_grid.empty() || r > curve.s_grid.back() + 1e-12)
        throw infeasible_error("sigma_r: r beyond the curve grid");
    double total = 0.0;
    double s_prev = 0.0, v_prev = curve.theta0;
    for (size_t j = 0; j < curve.s_grid.size(); ++j) {
        const double s = curve.s_grid[j], v = curve.values[j].mean;
        if (s >= r) {
            // Linear interpolation of the last partial trapezoid.
            const double t = (r - s_prev) / (s - s_prev);
            const double v_r = v_prev + t * (v - v_prev);
            total += 0.5 * (v_prev + v_r) * (r - s_prev);
            return total;
        }
        total += 0.5 * (v_prev + v) * (s - s_prev);
        s_prev = s;
        v_prev = v;
    }
    return total;  // r == s_grid.back() up to tolerance
}

// ---------------------------------------------------------------------------
// Critical intensity estimation by stochastic bisection.

struct CrossingCurvePoint {
    double lambda;
    Estimate estimate;
};

struct CriticalEstimate {
    double lambda_hat = 0.0;
    double lo = 0.0, hi = 0.0;
    std::string method;
    // Probe history of the bisection (lambda, measured probability).
    std::vector<CrossingCurvePoint> probes;
    // Per-r probability-vs-lambda diagnostic curves.
    std::vector<std::pair<double, std::vector<CrossingCurvePoint>>> diagnostics;
};

namespace detail {

// Bisect lambda until the probe interval contains the target, the bracket
// collapses, or the step cap is hit.
template <typename Probe>  // Estimate probe(lambda, probe_index)
CriticalEstimate bisect_probability(const Probe& probe, double target, double lo, double hi,
                                    int max_steps = 30) {
    if (!(lo < hi)) throw infeasible_error("bisection: bracket must satisfy lo < hi");
    CriticalEstimate out;
    out.lo = lo;
    out.hi = hi;
    double mid = 0.5 * (lo + hi);
    for (int step = 0; step < max_steps; ++step) {
        mid = 0.5 * (out.lo + out.hi);
        const Estimate e = probe(mid, static_cast<uint64_t>(step));
        out.probes.push_back({mid, e});
        const auto w = wilson_interval(
            static_cast<uint64_t>(std::llround(e.mean * static_cast<double>(e.n))), e.n);
        if (w.contains(target)) break;  // statistically at the target
        if (e.mean < target) out.lo = mid;
        else out.hi = mid;
    }
    out.lambda_hat = 0.5 * (out.lo + out.hi);
    return out;
}

}  // namespace detail

// lambda_tilde: bisection targeting crossing probability 1/2 at the largest
// r in r_list. Requires the bracket to straddle the transition (crossing
// < 0.1 at lo, > 0.9 at hi). diag_grid > 0 adds crossing-vs-lambda curves
// for every r in r_list.
inline CriticalEstimate find_lambda_tilde(const ModelSpec& base,
                                          const std::vector<double>& r_list, double lambda_lo,
                                          double lambda_hi, uint64_t n_reps, uint64_t seed,
                                          int threads = 1, int diag_grid = 0) {
    if (r_list.empty()) throw infeasible_error("find_lambda_tilde: empty r list");
    if (!(lambda_lo < lambda_hi))
        throw infeasible_error("find_lambda_tilde: degenerate bracket");
    const double r = *std::max_element(r_list.begin(), r_list.end());
    const Estimate at_lo =
        estimate_crossing(base.with_lambda(lambda_lo), r, n_reps,
                          derive_key(seed, stream_tag::kProbe, 1001), threads);
    const Estimate at_hi =
        estimate_crossing(base.with_lambda(lambda_hi), r, n_reps,
                          derive_key(seed, stream_tag::kProbe, 1002), threads);
    if (!(at_lo.mean < 0.1 && at_hi.mean > 0.9)) {
        std::ostringstream os;
        os << "find_lambda_tilde: bracket does not straddle the transition:"
           << " crossing(" << lambda_lo << ")=" << at_lo.mean << ", crossing(" << lambda_hi
           << ")=" << at_hi.mean;
        throw infeasible_error(os.str());
    }
    CriticalEstimate est = detail::bisect_probability(
        [&](double lambda, uint64_t step) {
            return estimate_crossing(base.with_lambda(lambda), r, n_reps,
                                     derive_key(seed, stream_tag::kProbe, step), threads);
        },
        0.5, lambda_lo, lambda_hi);
    est.method = "crossing-bisection";
    if (diag_grid > 1) {
        for (double rr : r_list) {
            std::vector<CrossingCurvePoint> curve;
            for (int k = 0; k < diag_grid; ++k) {
                const double lambda =
                    lambda_lo + (lambda_hi - lambda_lo) * k / (diag_grid - 1.0);
                curve.push_back({lambda, estimate_crossing(
                                             base.with_lambda(lambda), rr, n_reps,
                                             derive_key(seed, stream_tag::kProbe, 2000 + k),
                                             threads)});
            }
            est.diagnostics.emplace_back(rr, std::move(curve));
        }
    }
    return est;
}

// lambda_c proxy: bisection targeting theta_r = threshold at a large fixed r.
inline CriticalEstimate find_lambda_c(const ModelSpec& base, double r, double lambda_lo,
                                      double lambda_hi, uint64_t n_reps,
                                      double threshold = 0.05, uint64_t seed = 1,
                                      int threads = 1) {
    if (!(lambda_lo < lambda_hi)) throw infeasible_error("find_lambda_c: degenerate bracket");
    if (!(threshold > 0.0 && threshold < 1.0))
        throw infeasible_error("find_lambda_c: threshold must be in (0, 1)");
    const auto theta_probe = [&](double lambda, uint64_t step) {
        return estimate_theta_alpha(base.with_lambda(lambda), r, 0.0, n_reps,
                                    derive_key(seed, stream_tag::kProbe, step), threads);
    };
    const Estimate at_lo = theta_probe(lambda_lo, 1001);
    const Estimate at_hi = theta_probe(lambda_hi, 1002);
    if (!(at_lo.mean < threshold && at_hi.mean > threshold)) {
        std::ostringstream os;
        os << "find_lambda_c: bracket does not straddle theta=" << threshold << ": theta("
           << lambda_lo << ")=" << at_lo.mean << ", theta(" << lambda_hi
           << ")=" << at_hi.mean;
        throw infeasible_error(os.str());
    }
    CriticalEstimate est =
        detail::bisect_probability(theta_probe, threshold, lambda_lo, lambda_hi);
    est.method = "theta-threshold";
    return est;
}

// ---------------------------------------------------------------------------
// Coupled estimates (superposition coupling shares the base process).

struct CoupledTheta {
    Estimate lo;
    Estimate hi;
    Estimate derivative;  // ((f_hi - f_lo) / (2 dlambda)) per replicate
};

// theta_r at lambda0 -+ dlambda with common random numbers; the per-replicate
// difference is nonnegative by the coupling.
inline CoupledTheta coupled_theta_difference(const ModelSpec& model, double r, double lambda0,
                                             double dlambda, uint64_t n_reps, uint64_t seed,
                                             int threads = 1) {
    if (!(dlambda > 0.0)) throw infeasible_error("coupled difference: dlambda must be > 0");
    if (!(lambda0 - dlambda >= 0.0))
        throw infeasible_error("coupled difference: lambda0 - dlambda must be >= 0");
    const double l_lo = lambda0 - dlambda, l_hi = lambda0 + dlambda;
    const ModelSpec m_hi = model.with_lambda(l_hi);
    const int64_t n_max = compute_n_max(m_hi, r);
    const SamplingPlan plan_lo = make_plan(model.with_lambda(l_lo), r, n_max);
    const SamplingPlan plan_inc = make_plan(model.with_lambda(l_hi - l_lo), r, n_max);

    struct Tally {
        uint64_t hits_lo = 0, hits_hi = 0;
        void merge(const Tally& o) {
            hits_lo += o.hits_lo;
            hits_hi += o.hits_hi;
        }
    };
    const auto tally = run_replicates<Tally>(n_reps, threads, [&](uint64_t i, Tally& t) {
        const uint64_t rs = detail::replicate_seed(seed, i);
        BallConfig cfg = sample_config(plan_lo, rs);
        const bool f_lo = ClusterIndex(cfg).connected_origin_to_sphere(r);
        RandomStream rng(derive_key(rs, stream_tag::kCouple));
        sample_into(plan_inc, rng, cfg.balls, kCoordNone,
                    [](const Vec&, double) { return false; });
        const bool f_hi = f_lo || ClusterIndex(cfg).connected_origin_to_sphere(r);
        t.hits_lo += f_lo;
        t.hits_hi += f_hi;
    });

    CoupledTheta out;
    out.lo = Estimate::bernoulli(tally.hits_lo, n_reps, seed, "theta lo");
    out.hi = Estimate::bernoulli(tally.hits_hi, n_reps, seed, "theta hi");
    // f_hi - f_lo is a Bernoulli variable scaled by 1/(2 dlambda).
    const uint64_t flips = tally.hits_hi - tally.hits_lo;
    const Estimate diff = Estimate::bernoulli(flips, n_reps, seed);
    out.derivative = Estimate::from_moments(0, 0, n_reps, seed, "theta derivative");
    out.derivative.mean = diff.mean / (2.0 * dlambda);
    out.derivative.stderr_ = diff.stderr_ / (2.0 * dlambda);
    return out;
}

}  // namespace boolperc
