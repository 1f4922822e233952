#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "steklov/ode.hpp"

using namespace steklov;
using Catch::Approx;

namespace {
Potential zero_potential() { return Potential(ChebSeries::constant(0.0), 0.0, 3); }
}

TEST_CASE("free fundamental solutions match sinh/cosh closed forms") {
    Potential q = zero_potential();

    SECTION("z = 1") {
        WeylData w = weyl_functions(q, 1.0);
        REQUIRE(w.s0_1.value() == Approx(std::sinh(1.0)).epsilon(1e-10));
        REQUIRE(w.c0_1.value() == Approx(std::cosh(1.0)).epsilon(1e-10));
        REQUIRE(w.s0p_1.value() == Approx(std::cosh(1.0)).epsilon(1e-10));
    }
    SECTION("z = 0: u'' = 0, s0 = x") {
        WeylData w = weyl_functions(q, 0.0);
        REQUIRE(w.s0_1.value() == Approx(1.0).epsilon(1e-10));
        REQUIRE(w.s0p_1.value() == Approx(1.0).epsilon(1e-10));
    }
    SECTION("z = 1e4 goes through the renormalization path") {
        WeylData w = weyl_functions(q, 1e4);
        // s0(1) = sinh(100)/100: ln = 100 - ln 200
        REQUIRE(w.s0_1.log_abs() == Approx(100.0 - std::log(200.0)).margin(1e-7));
        REQUIRE(w.s0_1.log_scale() > 30.0);  // renormalization actually kicked in
    }
}

TEST_CASE("free Weyl functions: M = N = -sqrt(z) coth(sqrt(z))") {
    Potential q = zero_potential();
    WeylData w1 = weyl_functions(q, 1.0);
    REQUIRE(w1.M == Approx(-1.0 / std::tanh(1.0)).epsilon(1e-10));
    REQUIRE(w1.N == Approx(w1.M).epsilon(1e-10));
    REQUIRE(relative_gap(w1.Delta, ScaledValue(std::sinh(1.0))) < 1e-9);

    WeylData w100 = weyl_functions(q, 100.0);
    REQUIRE(w100.M == Approx(-10.0 / std::tanh(10.0)).epsilon(1e-10));
}

TEST_CASE("symmetric potential gives M = N through independent integrations") {
    ConformalFactor f = make_factor({"gaussian-bump", {1.0, 0.4, 0.5, 0.15}, 96});
    Potential q = potential_from_factor(f, 3, 0.5);
    REQUIRE(q.symmetric());
    for (double z : {2.0, 37.0, 400.0}) {
        WeylData w = weyl_functions(q, z);
        REQUIRE(w.mn_symmetry_gap < 1e-8);
    }
}

TEST_CASE("Weyl relation residuals stay small for random admissible potentials") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 5; ++trial) {
        ConformalFactor f = oracles::random_factor(rng);
        Potential q = potential_from_factor(f, 3, 0.3);
        for (double z : {1.0, 10.0, 100.0, 1000.0}) {
            WeylData w = weyl_functions(q, z);
            REQUIRE(w.wronskian_residual < 1e-9);
            REQUIRE(w.rel_s0 < 1e-6);
            REQUIRE(w.rel_s0p < 1e-6);
            REQUIRE(w.rel_c0 < 1e-6);
            REQUIRE(w.rel_c0p < 1e-6);
        }
    }
}

TEST_CASE("leading Weyl asymptotics: residual decays like t^-2") {
    // q with q'(0) != 0 so the t^-2 term is present
    ChebSeries qs = ChebSeries::interpolate([](double x) { return x + 0.5; }, 16);
    Potential q(qs, 0.0, 3);
    OdeOptions opt;
    opt.rtol = 1e-12;
    double prev = 0.0;
    std::vector<double> res;
    for (double t : {20.0, 40.0, 80.0}) {
        WeylData w = weyl_functions(q, t * t, opt);
        res.push_back(std::fabs(-w.M - t - q(0.0) / (2 * t)));
    }
    double r1 = res[0] / res[1], r2 = res[1] / res[2];
    REQUIRE(r1 > 3.0);
    REQUIRE(r1 < 5.0);
    REQUIRE(r2 > 3.0);
    REQUIRE(r2 < 5.0);
    (void)prev;
}

TEST_CASE("cross-oracle: Delta zeros match finite-difference Dirichlet eigenvalues") {
    ChebSeries qs = ChebSeries::interpolate([](double x) { return std::cos(M_PI * x); }, 32);
    Potential q(qs, 0.0, 3);
    auto fd = oracles::dirichlet_eigenvalues_fd([&](double x) { return q(x); }, 10000, 4);

    // zeros of z -> Delta(z) on the negative axis sit at z = -E_k
    Potential qp = q;
    auto delta_at = [&](double z) {
        FundamentalSolutions fs = fundamental_solutions(qp, z, {});
        return fs.left_at(1.0).s_sv().value();  // s0(1, z) = Delta(z)
    };
    for (int k = 0; k < 4; ++k) {
        double lo = -fd[k] - 2.0, hi = -fd[k] + 2.0;
        REQUIRE(delta_at(lo) * delta_at(hi) < 0.0);
        for (int it = 0; it < 60; ++it) {
            double mid = 0.5 * (lo + hi);
            if (delta_at(lo) * delta_at(mid) <= 0) hi = mid;
            else lo = mid;
        }
        double root = 0.5 * (lo + hi);
        REQUIRE(root == Approx(-fd[k]).margin(1e-4 * (1 + fd[k])));
    }
}

TEST_CASE("pole proximity near a Dirichlet eigenvalue raises an error") {
    // q = -omega with omega = z + pi^2 makes z a Dirichlet eigenvalue:
    // u'' = (q + z) u = -pi^2 u
    double z = 2.0;
    Potential q(ChebSeries::constant(-(z + M_PI * M_PI)), 0.0, 3);
    REQUIRE_THROWS_AS(weyl_functions(q, z), PoleProximityError);
}

TEST_CASE("Wronskian conservation along the interval") {
    ConformalFactor f = make_factor({"fourier", {1.3, 0.2, 0.1}, 64});
    Potential q = potential_from_factor(f, 4, 0.6);
    for (double z : {5.0, 250.0, 2500.0}) {
        WeylData w = weyl_functions(q, z);
        REQUIRE(w.wronskian_residual < 1e-9);
    }
}
