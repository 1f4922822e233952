#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "steklov/muntz.hpp"

using namespace steklov;
using Catch::Approx;

TEST_CASE("exponent sequences") {
    SECTION("n = 2: lambda_k = 2k exactly") {
        MuntzSystem sys = muntz_sequence(2, 0, 20);
        for (int k = 0; k <= 20; ++k)
            REQUIRE(sys.lambda(k) == Approx(2.0 * k).margin(1e-12));
    }
    SECTION("n = 3, m0 = 1: first gap is 2(sqrt(6)-sqrt(2))") {
        MuntzSystem sys = muntz_sequence(3, 1, 10);
        REQUIRE(sys.lambda(0) == 0.0);
        REQUIRE(sys.lambda(1) - sys.lambda(0) ==
                Approx(2.0 * (std::sqrt(6.0) - std::sqrt(2.0))).margin(1e-12));
        REQUIRE(sys.lambda(1) - sys.lambda(0) >= 2.0);
    }
    SECTION("gaps approach 2 like O(1/m)") {
        MuntzSystem sys = muntz_sequence(3, 1, 150);
        for (int k = 100; k < 149; ++k) {
            double gap = sys.lambda(k + 1) - sys.lambda(k);
            REQUIRE(gap >= 2.0);
            REQUIRE(gap - 2.0 <= 0.01);
        }
        // |gap - 2| * m bounded
        for (int k = 10; k < 149; ++k)
            REQUIRE((sys.lambda(k + 1) - sys.lambda(k) - 2.0) * k < 2.0);
    }
    SECTION("gap violations are named") {
        REQUIRE_THROWS_WITH(MuntzSystem::from_exponents({0.0, 1.5, 4.0}),
                            Catch::Matchers::ContainsSubstring("k = 0"));
    }
}

TEST_CASE("Gram coefficients") {
    SECTION("L_0 = 1") {
        MuntzSystem sys = MuntzSystem::from_exponents({0.0, 2.0, 4.0});
        REQUIRE(sys.coeff(0, 0) == Approx(1.0));
        REQUIRE(sys.eval_Lp(0, 0.37) == Approx(1.0));
    }
    SECTION("lambda = (0,2): L_1 = sqrt(5)(3x^2-1)/2") {
        MuntzSystem sys = MuntzSystem::from_exponents({0.0, 2.0});
        REQUIRE(sys.coeff(1, 0) == Approx(-std::sqrt(5.0) / 2).epsilon(1e-14));
        REQUIRE(sys.coeff(1, 1) == Approx(3 * std::sqrt(5.0) / 2).epsilon(1e-14));
        // orthonormality by quadrature
        double n11 = integrate_gl([&](double x) { return sys.eval_Lp(1, x) * sys.eval_Lp(1, x); },
                                  0, 1, 64);
        double n01 = integrate_gl([&](double x) { return sys.eval_Lp(0, x) * sys.eval_Lp(1, x); },
                                  0, 1, 64);
        REQUIRE(n11 == Approx(1.0).margin(1e-13));
        REQUIRE(n01 == Approx(0.0).margin(1e-13));
    }
    SECTION("3x3 system orthonormal to machine precision") {
        MuntzSystem sys = MuntzSystem::from_exponents({0.0, 2.0, 4.0});
        const QuadRule& rule = gauss_legendre(64);
        for (int p = 0; p <= 2; ++p)
            for (int r = 0; r <= p; ++r) {
                double s = 0;
                for (int i = 0; i < 64; ++i) {
                    double x = 0.5 * (1 + rule.nodes[i]);
                    s += sys.eval_Lp(p, x) * sys.eval_Lp(r, x) * 0.5 * rule.weights[i];
                }
                REQUIRE(s == Approx(p == r ? 1.0 : 0.0).margin(1e-12));
            }
    }
    SECTION("orthonormality up to p = 20 via 256-node quadrature") {
        MuntzSystem sys = muntz_sequence(3, 1, 25);
        const QuadRule& rule = gauss_legendre(256);
        std::vector<double> xs(256);
        for (int i = 0; i < 256; ++i) xs[i] = 0.5 * (1 + rule.nodes[i]);
        auto tab = sys.eval_table(20, xs);
        double worst = 0.0;
        for (int p = 0; p <= 20; ++p)
            for (int r = 0; r <= p; ++r) {
                double s = 0.0;
                for (int i = 0; i < 256; ++i) s += tab[p][i] * tab[r][i] * 0.5 * rule.weights[i];
                worst = std::max(worst, std::fabs(s - (p == r ? 1.0 : 0.0)));
            }
        REQUIRE(worst < 1e-8);
    }
}

TEST_CASE("Blaschke index") {
    SECTION("single zero exponent: both routes give 1/3") {
        MuntzSystem sys = MuntzSystem::from_exponents({0.0});
        BlaschkeIndex b = blaschke_index(sys, 0);
        REQUIRE(b.eps2_product == Approx(1.0 / 3.0).epsilon(1e-12));
        REQUIRE(b.eps2_maxdef == Approx(1.0 / 3.0).epsilon(1e-9));
        REQUIRE(b.argmax_y == Approx(0.0).margin(1e-6));
    }
    SECTION("lambda = (0,2): 1/7") {
        MuntzSystem sys = MuntzSystem::from_exponents({0.0, 2.0});
        BlaschkeIndex b = blaschke_index(sys, 1);
        REQUIRE(b.eps2_product == Approx(1.0 / 7.0).epsilon(1e-12));
        REQUIRE(b.eps2_maxdef == Approx(1.0 / 7.0).epsilon(1e-6));
    }
    SECTION("m eps2 plateaus in [0.1, 10]") {
        MuntzSystem sys = muntz_sequence(2, 0, 110);
        for (int m : {20, 50, 100}) {
            BlaschkeIndex b = blaschke_index(sys, m);
            REQUIRE(m * b.eps2_product > 0.1);
            REQUIRE(m * b.eps2_product < 10.0);
        }
    }
}

TEST_CASE("modulus of continuity") {
    SECTION("constants have zero modulus") {
        auto h = [](double) { return 3.0; };
        REQUIRE(modulus_of_continuity(h, 0.2) == Approx(0.0).margin(1e-12));
    }
    SECTION("h(x) = x: w(h,u) = u sqrt(1-u)") {
        auto h = [](double x) { return x; };
        for (double u : {0.05, 0.2, 0.5})
            REQUIRE(modulus_of_continuity(h, u) ==
                    Approx(u * std::sqrt(1 - u)).epsilon(1e-6));
    }
    SECTION("piecewise-C1 h obeys the slope bound w(h,u) <= C u") {
        auto h = [](double t) {
            if (t < 1.0 / (M_E * M_E) || t > 1.0) return 0.0;
            double tau = -std::log(t);
            double g = tau <= 1.0 ? std::cos(1 - tau) : std::cos(tau - 1);
            return std::pow(t, 0.73) * g * (1.0 - std::exp(-5 * (1 - t)) * 0.0);
        };
        // slope on a u-grid: w(h,u)/u stable
        double c_ref = modulus_of_continuity(h, 0.02) / 0.02;
        for (double u : {0.04, 0.08, 0.12}) {
            double c = modulus_of_continuity(h, u) / u;
            REQUIRE(c < 3.0 * c_ref + 1.0);
        }
    }
}

TEST_CASE("truncation rule m(eps)") {
    SECTION("worked example: C = 1/2, M1 = 2, eps = 1/81") {
        REQUIRE(truncation_g(0, 0.5, 2.0) == Approx(3.0));
        TruncationChoice tc = truncation_rule(1.0 / 81.0, 0.5, 2.0);
        REQUIRE_FALSE(tc.eps_too_large);
        REQUIRE(tc.m == 0);
    }
    SECTION("monotone: halving eps never decreases m") {
        double eps = 1e-2;
        int prev = -1;
        for (int i = 0; i < 30; ++i) {
            TruncationChoice tc = truncation_rule(eps, 0.5, 2.0);
            REQUIRE(tc.m >= prev);
            prev = tc.m;
            eps *= 0.5;
        }
    }
    SECTION("asymptotics: m(eps) ln(1/eps)^{-1} approaches 1/(4 ln(9 M1/2))") {
        double M1 = 2.0, C = 0.5;
        double target = 1.0 / (4.0 * std::log(4.5 * M1));
        double eps = 1e-40;
        TruncationChoice tc = truncation_rule(eps, C, M1);
        double ratio = tc.m / std::log(1.0 / eps);
        REQUIRE(ratio == Approx(target).epsilon(0.25));
    }
    SECTION("eps too large flags and returns 0") {
        TruncationChoice tc = truncation_rule(0.9, 0.5, 2.0);
        REQUIRE(tc.eps_too_large);
        REQUIRE(tc.m == 0);
    }
}

TEST_CASE("moment bound") {
    MuntzSystem sys = muntz_sequence(2, 0, 12);

    SECTION("zero function: everything vanishes") {
        MomentBound mb = moment_bound(0.0, sys, [](double) { return 0.0; }, 6);
        REQUIRE(mb.norm_bound == Approx(0.0).margin(1e-20));
        REQUIRE(mb.h_norm2 == Approx(0.0).margin(1e-20));
        REQUIRE(mb.precondition_ok);
    }

    SECTION("h = L_5 with eps = 0: projections are delta_{k5}") {
        auto h = [&](double t) { return sys.eval_Lp(5, t); };
        MomentBound mb = moment_bound(0.0, sys, h, 6);
        REQUIRE_FALSE(mb.precondition_ok);  // true moments are nonzero
        REQUIRE(mb.worst_k >= 0);
        for (int k = 0; k <= 6; ++k)
            REQUIRE(mb.proj_coeffs[k] == Approx(k == 5 ? 1.0 : 0.0).margin(1e-8));
        REQUIRE(mb.h_norm2 == Approx(1.0).margin(1e-8));
        // measured-eps route keeps the bound above ||h||^2
        REQUIRE(mb.norm_bound + 1e-8 >= mb.h_norm2);
    }

    SECTION("h = t^{lambda_1} with m = 1: in-span, approx term vanishes") {
        double l1 = sys.lambda(1);
        auto h = [&](double t) { return std::pow(t, l1); };
        MomentBound mb = moment_bound(1.0, sys, h, 1);  // exact moments given eps=1
        REQUIRE(mb.precondition_ok);
        REQUIRE(mb.approx_term < 1e-12);
        double h2 = 1.0 / (2 * l1 + 1);
        REQUIRE(mb.h_norm2 == Approx(h2).margin(1e-10));
        REQUIRE(mb.norm_bound + 1e-8 >= h2);
    }

    SECTION("Pythagoras: ||h||^2 = ||pi h||^2 + ||h - pi h||^2") {
        auto h = [](double t) { return std::sin(3 * t) + t; };
        for (int m : {2, 5, 9}) {
            MomentBound mb = moment_bound(1.0, sys, h, m);
            double proj2 = 0.0;
            for (double c : mb.proj_coeffs) proj2 += c * c;
            REQUIRE(mb.h_norm2 == Approx(proj2 + mb.approx_term).margin(1e-8));
        }
    }

    SECTION("bound dominates the true norm for generic h") {
        auto h = [](double t) { return 0.3 * std::cos(5 * t) * t; };
        MomentBound mb = moment_bound(1e-4, sys, h, 8);
        REQUIRE(mb.h_norm2 <= mb.norm_bound + 1e-8);
    }
}

TEST_CASE("multinomial bound (j+p)!/(j! j! (p-j)!) <= 3^{j+p} exactly") {
    // exact integers in __int128: binom(j+p, j) * binom(p, j) vs 3^{j+p}
    auto binom = [](int n, int k) {
        unsigned __int128 r = 1;
        for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
        return r;
    };
    for (int p = 0; p <= 30; ++p)
        for (int j = 0; j <= p; ++j) {
            unsigned __int128 lhs = binom(j + p, j) * binom(p, j);
            unsigned __int128 rhs = 1;
            for (int i = 0; i < j + p; ++i) rhs *= 3;
            REQUIRE(lhs <= rhs);
        }
}

TEST_CASE("Muntz-Jackson constant is stable across m") {
    // E2(h, Lambda_m) <= C w(h, eps2(Lambda_m)): C is fit as the max ratio
    // over a corpus with members rough at every scale (a single smooth h
    // would push E2 to the spectral floor at large m and say nothing about C)
    MuntzSystem sys = muntz_sequence(2, 0, 45);
    std::vector<std::function<double(double)>> corpus;
    for (double nu : {2.0, 4.0, 8.0, 16.0, 32.0})
        corpus.push_back([nu](double t) { return std::cos(2 * M_PI * nu * t); });
    corpus.push_back([](double t) { return std::fabs(t - 0.4); });

    std::vector<double> cs;
    for (int m : {5, 10, 20, 40}) {
        double eps2 = blaschke_index(sys, m).eps2_product;
        double worst = 0.0;
        for (const auto& h : corpus) {
            MomentBound mb = moment_bound(1.0, sys, h, m);
            double e2 = std::sqrt(std::max(0.0, mb.approx_term));
            double w = modulus_of_continuity(h, std::min(0.999, eps2));
            if (w > 1e-12) worst = std::max(worst, e2 / w);
        }
        cs.push_back(worst);
    }
    double cmin = *std::min_element(cs.begin(), cs.end());
    double cmax = *std::max_element(cs.begin(), cs.end());
    REQUIRE(cmax <= 3.0 * cmin);
}
