#include <doctest.h>

#include <cmath>

#include "boolperc/analytic.hpp"
#include "boolperc/estimators.hpp"

using namespace boolperc;

namespace {
const ModelSpec kDirac(2, 0.0, RadiusLaw::dirac(1.0));
}

TEST_CASE("theta curve at lambda = 0 is identically zero") {
    const ThetaCurve curve =
        estimate_theta_curve(kDirac, {1.0, 2.0, 3.0}, 500, 42);
    for (const auto& e : curve.values) CHECK(e.mean == 0.0);
    CHECK(curve.theta0 == 0.0);
}

TEST_CASE("theta curve grid validation") {
    CHECK_THROWS_AS(estimate_theta_curve(kDirac, {}, 10, 1), infeasible_error);
    CHECK_THROWS_AS(estimate_theta_curve(kDirac, {2.0, 1.0}, 10, 1), infeasible_error);
    CHECK_THROWS_AS(estimate_theta_curve(kDirac, {-1.0, 1.0}, 10, 1), infeasible_error);
}

TEST_CASE("shared-replicate curve is exactly non-increasing") {
    const ModelSpec m(2, 0.35, RadiusLaw::dirac(1.0));
    const ThetaCurve curve = estimate_theta_curve(
        m, {1.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0}, 4000, 7, 2);
    for (size_t j = 1; j < curve.values.size(); ++j)
        CHECK(curve.values[j].mean <= curve.values[j - 1].mean);
}

TEST_CASE("theta at small s approaches the coverage anchor for dense models") {
    const ModelSpec m(2, 3.0, RadiusLaw::dirac(1.0));
    const ThetaCurve curve = estimate_theta_curve(m, {1.0, 4.0, 8.0}, 3000, 11, 2);
    CHECK(curve.theta0 == doctest::Approx(1.0 - std::exp(-3.0 * 3.14159265358979)));
    // far above criticality the window is essentially covered
    CHECK(curve.values.back().mean >= 0.99);
    const double se = std::sqrt(curve.theta0 * (1 - curve.theta0) / 3000.0);
    CHECK(curve.values.front().mean >= curve.theta0 - 4.0 * se - 0.01);
}

TEST_CASE("theta_r dominates phi_r statistically") {
    const ModelSpec m(2, 0.3, RadiusLaw::power_law_c1(1.0, 2));
    const std::vector<double> grid = {2.0, 4.0, 8.0, 12.0};
    const ThetaCurve curve = estimate_theta_curve(m, grid, 8000, 13, 2);
    for (size_t j = 0; j < grid.size(); ++j) {
        const double lower = phi(m.law, m.lambda, m.d, grid[j]).value;
        CHECK(curve.values[j].mean >= lower - 4.0 * curve.values[j].stderr_);
    }
}

TEST_CASE("theta_alpha at alpha = 0 agrees with the theta curve point") {
    const ModelSpec m(2, 0.4, RadiusLaw::dirac(1.0));
    const Estimate a = estimate_theta_alpha(m, 6.0, 0.0, 20000, 3, 2);
    const ThetaCurve curve = estimate_theta_curve(m, {6.0}, 20000, 1003, 2);
    const double se = std::hypot(a.stderr_, curve.values[0].stderr_);
    CHECK(std::abs(a.mean - curve.values[0].mean) <= 4.0 * se);
}

TEST_CASE("theta_alpha is monotone in alpha under shared seeds") {
    const ModelSpec m(2, 0.3, RadiusLaw::dirac(1.0));
    double prev = -1.0;
    for (double alpha : {0.0, 0.25, 0.5}) {
        // same seed => shared configurations => exact event inclusion
        const Estimate e = estimate_theta_alpha(m, 8.0, alpha, 3000, 5, 2);
        CHECK(e.mean >= prev);
        prev = e.mean;
    }
}

TEST_CASE("crossing probability: zero, saturation, coupling") {
    CHECK(estimate_crossing(kDirac.with_lambda(0.0), 4.0, 200, 1).mean == 0.0);
    const Estimate sat = estimate_crossing(kDirac.with_lambda(10.0), 5.0, 500, 2, 2);
    CHECK(sat.mean >= 0.99);
}

TEST_CASE("estimates are independent of the thread count") {
    const ModelSpec m(2, 0.35, RadiusLaw::exp_tail(0.9));
    const ThetaCurve c1 = estimate_theta_curve(m, {2.0, 5.0}, 5000, 99, 1);
    const ThetaCurve c8 = estimate_theta_curve(m, {2.0, 5.0}, 5000, 99, 8);
    for (size_t j = 0; j < c1.values.size(); ++j) {
        CHECK(c1.values[j].mean == c8.values[j].mean);
        CHECK(c1.values[j].stderr_ == c8.values[j].stderr_);
    }
    const Estimate x1 = estimate_crossing(m, 3.0, 3000, 5, 1);
    const Estimate x8 = estimate_crossing(m, 3.0, 3000, 5, 8);
    CHECK(x1.mean == x8.mean);
}

TEST_CASE("sigma_r integrates synthetic curves exactly") {
    ThetaCurve curve;
    curve.s_grid = {1.0, 2.0, 3.0, 4.0};
    curve.theta0 = 1.0;
    for (double v : {1.0, 1.0, 1.0, 1.0})
        curve.values.push_back(Estimate::bernoulli(static_cast<uint64_t>(v * 100), 100, 0));
    CHECK(sigma_r(curve, 4.0) == doctest::Approx(4.0));
    CHECK(sigma_r(curve, 2.5) == doctest::Approx(2.5));

    // linear curve theta_s = 1 - s/4 integrates to r/2 at r = 4
    ThetaCurve lin;
    lin.s_grid = {1.0, 2.0, 3.0, 4.0};
    lin.theta0 = 1.0;
    for (double s : lin.s_grid)
        lin.values.push_back(
            Estimate::bernoulli(static_cast<uint64_t>((1.0 - s / 4.0) * 1000), 1000, 0));
    CHECK(sigma_r(lin, 4.0) == doctest::Approx(2.0));

    ThetaCurve zero;
    zero.s_grid = {1.0, 2.0};
    zero.theta0 = 0.0;
    zero.values = {Estimate::bernoulli(0, 10, 0), Estimate::bernoulli(0, 10, 0)};
    CHECK(sigma_r(zero, 2.0) == 0.0);
    CHECK_THROWS_AS(sigma_r(zero, 3.0), infeasible_error);
}

TEST_CASE("coupled difference is nonnegative with tiny variance") {
    const ModelSpec m(2, 0.3, RadiusLaw::dirac(1.0));
    const CoupledTheta d = coupled_theta_difference(m, 6.0, 0.3, 0.02, 4000, 21, 2);
    CHECK(d.hi.mean >= d.lo.mean);  // exact under the coupling
    CHECK(d.derivative.mean >= 0.0);
    // the coupled estimator must beat independent sampling variance by far
    const double indep_se = std::hypot(d.lo.stderr_, d.hi.stderr_) / (2.0 * 0.02);
    CHECK(d.derivative.stderr_ < 0.5 * indep_se);
    CHECK_THROWS_AS(coupled_theta_difference(m, 6.0, 0.3, 0.0, 10, 1), infeasible_error);
}

TEST_CASE("lambda_tilde bisection brackets the transition for unit disks") {
    const ModelSpec base(2, 0.0, RadiusLaw::dirac(1.0));
    const CriticalEstimate est = find_lambda_tilde(base, {8.0}, 0.05, 1.2, 800, 17, 2);
    CHECK(est.method == "crossing-bisection");
    CHECK(est.lo <= est.lambda_hat);
    CHECK(est.lambda_hat <= est.hi);
    // the r = 8 proxy sits below the unit-disk threshold (~0.36) because the
    // annulus offers ~2 pi r independent crossing chances; it must still
    // land in a broad subcritical neighborhood
    CHECK(est.lambda_hat > 0.1);
    CHECK(est.lambda_hat < 0.6);

    CHECK_THROWS_AS(find_lambda_tilde(base, {8.0}, 0.5, 0.5, 100, 1), infeasible_error);
    // bracket that does not straddle reports the measured endpoints
    CHECK_THROWS_WITH_AS(find_lambda_tilde(base, {4.0}, 0.9, 1.2, 200, 1, 1),
                         doctest::Contains("does not straddle"), infeasible_error);
}

TEST_CASE("lambda_c threshold proxy validates inputs") {
    const ModelSpec base(2, 0.0, RadiusLaw::dirac(1.0));
    CHECK_THROWS_AS(find_lambda_c(base, 8.0, 0.05, 1.2, 100, 1.0, 1), infeasible_error);
    CHECK_THROWS_AS(find_lambda_c(base, 8.0, 0.5, 0.2, 100, 0.05, 1), infeasible_error);
}

TEST_CASE("truncating above the support changes nothing") {
    // min(R, 5) is the same law as a point mass at 1, so every draw and
    // every estimate is bit-identical
    const ModelSpec plain(2, 0.3, RadiusLaw::dirac(1.0));
    const ModelSpec trunc(2, 0.3, RadiusLaw::truncated_at(RadiusLaw::dirac(1.0), 5.0));
    const BallConfig a = sample_config(plain, 6.0, 11);
    const BallConfig b = sample_config(trunc, 6.0, 11);
    CHECK(a.balls == b.balls);
    const Estimate ea = estimate_crossing(plain, 3.0, 2000, 4, 2);
    const Estimate eb = estimate_crossing(trunc, 3.0, 2000, 4, 2);
    CHECK(ea.mean == eb.mean);
}

TEST_CASE("vacant estimator trivials") {
    CHECK(estimate_vacant(kDirac, 3.0, 0.1, 100, 1).mean == 1.0);  // lambda = 0
    const ModelSpec m3(3, 0.1, RadiusLaw::dirac(1.0));
    CHECK_THROWS_AS(estimate_vacant(m3, 3.0, 0.1, 10, 1), infeasible_error);
}
