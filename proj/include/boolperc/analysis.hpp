#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "boolperc/analytic.hpp"
#include "boolperc/estimators.hpp"

namespace boolperc {

// Desk-scale verification harnesses. Universal constants in the
// inequalities cannot be asserted directly, so the harnesses invert them:
// they report the constant a given inequality would require and let the
// caller check stability across scales.

// ---------------------------------------------------------------------------
// Renormalization inequality
//   theta^alpha_r <= pi^delta_r + c / (delta^2 alpha)^d * max_{u+v=1-alpha}
//                    theta^alpha_{ur} theta^alpha_{vr},  u, v >= delta.

struct RenormReport {
    double r = 0.0, alpha = 0.0, delta = 0.0;
    Estimate theta_alpha_r;
    double pi_delta_r = 0.0;
    double max_product = 0.0;
    double max_product_sigma = 0.0;
    double implied_constant = 0.0;  // (theta - pi) (delta^2 alpha)^d / max_product
    bool positive_gap = false;      // theta exceeded pi at all
    std::vector<std::pair<double, Estimate>> scaled_thetas;  // per scaled radius
};

inline RenormReport renorm_report(const ModelSpec& model, double r, double alpha,
                                  double delta, int u_grid_size, uint64_t n_reps,
                                  uint64_t seed, int threads = 1) {
    if (!(alpha > 0.0 && alpha <= delta && delta <= 0.25))
        throw infeasible_error("renorm_report: requires 0 < alpha <= delta <= 1/4");
    if (u_grid_size < 2) throw infeasible_error("renorm_report: grid needs >= 2 points");
    RenormReport rep;
    rep.r = r;
    rep.alpha = alpha;
    rep.delta = delta;
    rep.theta_alpha_r =
        estimate_theta_alpha(model, r, alpha, n_reps, derive_key(seed, 1), threads);
    rep.pi_delta_r = pi_delta(model.law, model.lambda, model.d, r, delta).value;

    // u runs over [delta, 1 - alpha - delta]; v = 1 - alpha - u. The grid is
    // symmetric, so the scaled radii {u r} and {v r} coincide as a set.
    const double u_lo = delta, u_hi = 1.0 - alpha - delta;
    std::vector<double> us(static_cast<size_t>(u_grid_size));
    for (int k = 0; k < u_grid_size; ++k)
        us[static_cast<size_t>(k)] = u_lo + (u_hi - u_lo) * k / (u_grid_size - 1.0);
    for (double u : us) {
        const double ur = u * r;
        rep.scaled_thetas.emplace_back(
            ur, estimate_theta_alpha(model, ur, alpha, n_reps,
                                     derive_key(seed, 2, static_cast<uint64_t>(
                                                             std::llround(u * 1e12))),
                                     threads));
    }
    double best = 0.0, best_sigma = 0.0;
    for (int k = 0; k < u_grid_size; ++k) {
        const auto& [ur, eu] = rep.scaled_thetas[static_cast<size_t>(k)];
        const auto& [vr, ev] = rep.scaled_thetas[static_cast<size_t>(u_grid_size - 1 - k)];
        const double prod = eu.mean * ev.mean;
        if (prod > best) {
            best = prod;
            best_sigma = std::sqrt(eu.mean * eu.mean * ev.stderr_ * ev.stderr_ +
                                   ev.mean * ev.mean * eu.stderr_ * eu.stderr_);
        }
    }
    rep.max_product = best;
    rep.max_product_sigma = best_sigma;

    const double gap = rep.theta_alpha_r.mean - rep.pi_delta_r;
    rep.positive_gap = gap > 0.0;
    if (gap > 0.0 && best > 0.0) {
        const double entropic = std::pow(delta * delta * alpha, model.d);
        rep.implied_constant = gap * entropic / best;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Heavy-tail comparison lemma: under
//   (f1) theta^alpha_s <= eps pi^alpha_r ^ ((s/r)^eta)  on [r0, r0/alpha]
//   (f2) pi^alpha_s    <= eps pi^alpha_r ^ ((s/r)^eta)  on [r0, (1-alpha) r]
// the conclusion theta^alpha_r <= (1 + eps) pi^alpha_r follows.

struct HeavyTailReport {
    double alpha = 0.0, eta = 0.0, eps = 0.0, r0 = 0.0, r = 0.0;
    double pi_alpha_r = 0.0;
    bool f1_holds = false, f2_holds = false, conclusion_holds = false;
    double f1_worst_margin = 0.0;  // min over grid of RHS + 4 sigma - theta
    double f2_worst_margin = 0.0;  // min over grid of RHS - pi
    double conclusion_margin = 0.0;
    std::vector<std::pair<double, Estimate>> f1_points;
    std::vector<std::pair<double, double>> f2_points;  // (s, pi_s)
    Estimate theta_alpha_r;
};

inline HeavyTailReport verify_heavy_tail_lemma(const ModelSpec& model, double alpha,
                                               double eta, double eps, double r0, double r,
                                               uint64_t n_reps, uint64_t seed,
                                               int threads = 1, int f1_grid = 5,
                                               int f2_grid = 17) {
    if (!(alpha > 0.0 && alpha < 0.25))
        throw infeasible_error("heavy_tail: requires alpha in (0, 1/4)");
    if (!(std::pow(alpha, eta) + std::pow(1.0 - alpha, eta) >= 1.0))
        throw infeasible_error("heavy_tail: requires alpha^eta + (1-alpha)^eta >= 1");
    if (!(r0 > 0.0 && r0 <= alpha * r))
        throw infeasible_error("heavy_tail: requires 0 < r0 <= alpha r");
    if (!(eps > 0.0)) throw infeasible_error("heavy_tail: requires eps > 0");

    HeavyTailReport rep;
    rep.alpha = alpha;
    rep.eta = eta;
    rep.eps = eps;
    rep.r0 = r0;
    rep.r = r;
    rep.pi_alpha_r = pi_delta(model.law, model.lambda, model.d, r, alpha).value;
    const auto rhs = [&](double s) {
        return eps * std::pow(rep.pi_alpha_r, std::pow(s / r, eta));
    };

    rep.f1_holds = true;
    rep.f1_worst_margin = std::numeric_limits<double>::infinity();
    for (int k = 0; k < f1_grid; ++k) {
        const double s = r0 + (r0 / alpha - r0) * k / (f1_grid - 1.0);
        const Estimate th = estimate_theta_alpha(
            model, s, alpha, n_reps, derive_key(seed, 3, static_cast<uint64_t>(k)), threads);
        const double margin = rhs(s) + 4.0 * th.stderr_ - th.mean;
        rep.f1_worst_margin = std::min(rep.f1_worst_margin, margin);
        if (margin < 0.0) rep.f1_holds = false;
        rep.f1_points.emplace_back(s, th);
    }

    rep.f2_holds = true;
    rep.f2_worst_margin = std::numeric_limits<double>::infinity();
    for (int k = 0; k < f2_grid; ++k) {
        const double s = r0 + ((1.0 - alpha) * r - r0) * k / (f2_grid - 1.0);
        const double pi_s = pi_delta(model.law, model.lambda, model.d, s, alpha).value;
        const double margin = rhs(s) - pi_s;
        rep.f2_worst_margin = std::min(rep.f2_worst_margin, margin);
        if (margin < 0.0) rep.f2_holds = false;
        rep.f2_points.emplace_back(s, pi_s);
    }

    rep.theta_alpha_r =
        estimate_theta_alpha(model, r, alpha, n_reps, derive_key(seed, 4), threads);
    rep.conclusion_margin = (1.0 + eps) * rep.pi_alpha_r + 4.0 * rep.theta_alpha_r.stderr_ -
                            rep.theta_alpha_r.mean;
    rep.conclusion_holds = rep.conclusion_margin >= 0.0;
    return rep;
}

// ---------------------------------------------------------------------------
// Exponential decay fit: least squares of log theta_s against s.

struct DecayFit {
    double rate = 0.0;       // theta_s ~ exp(-rate s)
    double intercept = 0.0;  // log theta at s = 0 from the fit
    double r_squared = 0.0;
    size_t points = 0;
};

inline DecayFit fit_exponential_decay(const ThetaCurve& curve, double s_min) {
    std::vector<double> xs, ys;
    for (size_t j = 0; j < curve.s_grid.size(); ++j) {
        if (curve.s_grid[j] < s_min) continue;
        const double v = curve.values[j].mean;
        if (!(v > 0.0))
            throw infeasible_error("decay fit: nonpositive theta on the fit range; trim s_min");
        xs.push_back(curve.s_grid[j]);
        ys.push_back(std::log(v));
    }
    if (xs.size() < 3) throw infeasible_error("decay fit: needs at least 3 points");
    const double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0) throw infeasible_error("decay fit: degenerate grid");
    const double slope = (n * sxy - sx * sy) / denom;
    const double inter = (sy - slope * sx) / n;
    double ss_res = 0.0, ss_tot = 0.0;
    const double ymean = sy / n;
    for (size_t i = 0; i < xs.size(); ++i) {
        const double fit = inter + slope * xs[i];
        ss_res += (ys[i] - fit) * (ys[i] - fit);
        ss_tot += (ys[i] - ymean) * (ys[i] - ymean);
    }
    DecayFit out;
    out.rate = -slope;
    out.intercept = inter;
    out.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    out.points = xs.size();
    return out;
}

// ---------------------------------------------------------------------------
// theta_r / phi_r ratio curve (heavy-tail decay law).

struct RatioPoint {
    double r = 0.0;
    double theta = 0.0, theta_sigma = 0.0;
    double phi = 0.0;
    double ratio = 0.0, ratio_sigma = 0.0;
};

inline std::vector<RatioPoint> ratio_curve(const ModelSpec& model,
                                           const std::vector<double>& r_grid,
                                           uint64_t n_reps, uint64_t seed, int threads = 1) {
    if (r_grid.empty()) throw infeasible_error("ratio_curve: empty r grid");
    std::vector<double> phis;
    for (double r : r_grid) {
        const double p = phi(model.law, model.lambda, model.d, r).value;
        if (!(p > 0.0)) {
            std::ostringstream os;
            os << "ratio_curve: phi_r = 0 at r = " << r
               << "; use the exponential decay fit for light-tailed laws";
            throw infeasible_error(os.str());
        }
        phis.push_back(p);
    }
    const ThetaCurve curve = estimate_theta_curve(model, r_grid, n_reps, seed, threads);
    std::vector<RatioPoint> out;
    for (size_t j = 0; j < r_grid.size(); ++j) {
        RatioPoint p;
        p.r = r_grid[j];
        p.theta = curve.values[j].mean;
        p.theta_sigma = curve.values[j].stderr_;
        p.phi = phis[j];
        p.ratio = p.theta / p.phi;
        p.ratio_sigma = p.theta_sigma / p.phi;
        out.push_back(p);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Differential inequality diagnostic: theta'_r Sigma_r / (r theta (1-theta)).

struct MlemDiagnostic {
    double ratio = 0.0;
    double theta = 0.0, theta_sigma = 0.0;
    double derivative = 0.0, derivative_sigma = 0.0;
    double sigma_r_value = 0.0;
};

inline MlemDiagnostic mlem_ratio(const ModelSpec& model, double r, double dlambda,
                                 uint64_t n_reps, uint64_t seed, int threads = 1,
                                 int curve_points = 24) {
    if (!(dlambda > 0.0)) throw infeasible_error("mlem_ratio: dlambda must be > 0");
    std::vector<double> s_grid;
    for (int k = 1; k <= curve_points; ++k) s_grid.push_back(r * k / curve_points);
    const ThetaCurve curve =
        estimate_theta_curve(model, s_grid, n_reps, derive_key(seed, 1), threads);
    const double theta = curve.values.back().mean;
    const double se = curve.values.back().stderr_;
    if (theta <= 4.0 * se || theta >= 1.0 - 4.0 * se)
        throw infeasible_error("mlem_ratio: theta_r degenerate (0 or 1 within noise)");
    const CoupledTheta d = coupled_theta_difference(model, r, model.lambda, dlambda, n_reps,
                                                    derive_key(seed, 2), threads);
    MlemDiagnostic out;
    out.theta = theta;
    out.theta_sigma = se;
    out.derivative = d.derivative.mean;
    out.derivative_sigma = d.derivative.stderr_;
    out.sigma_r_value = sigma_r(curve, r);
    out.ratio = d.derivative.mean * out.sigma_r_value / (r * theta * (1.0 - theta));
    return out;
}

// ---------------------------------------------------------------------------
// Supercritical scan: fit a line to theta(lambda) on the supercritical side.

struct SharpnessScan {
    std::vector<std::pair<double, Estimate>> points;
    double slope = 0.0;
    double intercept_lambda = 0.0;  // where the fitted line crosses zero
    size_t fit_points = 0;
};

inline SharpnessScan sharpness_scan(const ModelSpec& base, const std::vector<double>& lambdas,
                                    double r_proxy, uint64_t n_reps, uint64_t seed,
                                    int threads = 1) {
    SharpnessScan out;
    for (size_t i = 0; i < lambdas.size(); ++i) {
        out.points.emplace_back(
            lambdas[i],
            estimate_theta_alpha(base.with_lambda(lambdas[i]), r_proxy, 0.0, n_reps,
                                 derive_key(seed, static_cast<uint64_t>(i)), threads));
    }
    // Supercritical side: points clearly above zero.
    std::vector<double> xs, ys;
    for (const auto& [lambda, est] : out.points) {
        if (est.mean > 4.0 * est.stderr_ && est.mean > 0.02) {
            xs.push_back(lambda);
            ys.push_back(est.mean);
        }
    }
    if (xs.size() < 3)
        throw infeasible_error("sharpness_scan: needs >= 3 supercritical points to fit");
    const double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0) throw infeasible_error("sharpness_scan: degenerate lambda grid");
    out.slope = (n * sxy - sx * sy) / denom;
    const double inter = (sy - out.slope * sx) / n;
    out.intercept_lambda = out.slope != 0.0 ? -inter / out.slope : 0.0;
    out.fit_points = xs.size();
    return out;
}

}  // namespace boolperc
