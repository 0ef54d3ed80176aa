#include <doctest.h>

#include <cmath>
#include <numbers>

#include "boolperc/quadrature.hpp"
#include "oracles.hpp"

using namespace boolperc;

TEST_CASE("polynomials are exact") {
    const auto f = [](double x) { return 3.0 * x * x - 2.0 * x + 1.0; };
    CHECK(integrate(f, 0.0, 2.0) == doctest::Approx(8.0 - 4.0 + 2.0).epsilon(1e-12));
}

TEST_CASE("smooth transcendental") {
    CHECK(integrate([](double x) { return std::exp(-x) * std::sin(x); }, 0.0, 10.0) ==
          doctest::Approx(0.5 * (1.0 - std::exp(-10.0) * (std::sin(10.0) + std::cos(10.0))))
              .epsilon(1e-10));
}

TEST_CASE("kinked integrand splits cleanly") {
    const auto f = [](double x) { return std::abs(x - std::numbers::pi / 4.0); };
    const double a = 0.0, b = 2.0, k = std::numbers::pi / 4.0;
    const double exact = 0.5 * k * k + 0.5 * (b - k) * (b - k);
    CHECK(integrate_with_kinks(f, a, b, {k}) == doctest::Approx(exact).epsilon(1e-12));
}

TEST_CASE("heavy tail via 1/r substitution") {
    // int_2^inf r^-2.5 dr = 2^-1.5 / 1.5
    CHECK(integrate_to_inf([](double r) { return std::pow(r, -2.5); }, 2.0) ==
          doctest::Approx(std::pow(2.0, -1.5) / 1.5).epsilon(1e-9));
    // int_1^inf e^-r dr = e^-1
    CHECK(integrate_to_inf([](double r) { return std::exp(-r); }, 1.0) ==
          doctest::Approx(std::exp(-1.0)).epsilon(1e-9));
}

TEST_CASE("agrees with an independent adaptive Simpson") {
    const auto f = [](double x) { return std::sqrt(x) * std::exp(-0.3 * x); };
    const double gk = integrate(f, 0.0, 25.0);
    const double simpson = oracle::integrate_simpson(f, 0.0, 25.0, 1e-11);
    CHECK(gk == doctest::Approx(simpson).epsilon(1e-8));
}

TEST_CASE("empty and inverted intervals integrate to zero") {
    CHECK(integrate([](double) { return 1.0; }, 1.0, 1.0) == 0.0);
    CHECK(integrate([](double) { return 1.0; }, 2.0, 1.0) == 0.0);
}
