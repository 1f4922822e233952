#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "steklov/chebyshev.hpp"

using namespace steklov;
using Catch::Approx;

TEST_CASE("interpolation reproduces polynomials exactly") {
    ChebSeries p = ChebSeries::interpolate([](double x) { return 3 * x * x - 2 * x + 1; }, 8);
    for (double x : {0.0, 0.31, 0.5, 0.77, 1.0})
        REQUIRE(p(x) == Approx(3 * x * x - 2 * x + 1).margin(1e-13));
}

TEST_CASE("derivative recurrence matches analytic derivatives") {
    ChebSeries e = ChebSeries::interpolate([](double x) { return std::exp(2 * x); }, 40).chopped();
    ChebSeries d1 = e.derivative();
    ChebSeries d3 = e.derivative(3);
    for (double x : {0.0, 0.25, 0.6, 1.0}) {
        REQUIRE(d1(x) == Approx(2 * std::exp(2 * x)).epsilon(1e-9));
        REQUIRE(d3(x) == Approx(8 * std::exp(2 * x)).epsilon(1e-7));
    }
}

TEST_CASE("reflection flips odd coefficients and is an involution") {
    ChebSeries f = ChebSeries::interpolate([](double x) { return std::sin(3 * x) + x * x; }, 32);
    ChebSeries r = f.reflected();
    for (double x : {0.1, 0.42, 0.9})
        REQUIRE(r(x) == Approx(std::sin(3 * (1 - x)) + (1 - x) * (1 - x)).margin(1e-12));
    ChebSeries rr = r.reflected();
    for (int k = 0; k <= f.degree(); ++k)
        REQUIRE(rr.coeffs()[k] == Approx(f.coeffs()[k]).margin(1e-15));
}

TEST_CASE("product truncates in the Chebyshev basis") {
    ChebSeries a = ChebSeries::interpolate([](double x) { return 1 + x; }, 4);
    ChebSeries b = ChebSeries::interpolate([](double x) { return x * x; }, 4);
    ChebSeries ab = a.multiply(b);
    for (double x : {0.0, 0.3, 0.8, 1.0})
        REQUIRE(ab(x) == Approx((1 + x) * x * x).margin(1e-13));
}

TEST_CASE("chopped drops the roundoff tail") {
    ChebSeries c = ChebSeries::interpolate([](double) { return 1.0; }, 64);
    REQUIRE(c.chopped().degree() == 0);
    // second derivative of the chopped constant is exactly zero
    REQUIRE(c.chopped().derivative(2).max_abs_on_grid() == 0.0);
}
