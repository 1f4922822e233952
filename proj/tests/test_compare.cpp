#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "steklov/compare.hpp"

using namespace steklov;
using Catch::Approx;

namespace {

SteklovSpectrum free_spectrum(int n, int m_max) {
    ConformalFactor f = make_factor({"constant", {1.0}});
    return steklov_spectrum(f, n, 0.0, m_max);
}

}  // namespace

TEST_CASE("identical spectra are close at the noise floor") {
    SteklovSpectrum s = free_spectrum(3, 10);
    ClosenessReport rep = spectra_close(s, s, 1e-12);
    REQUIRE(rep.holds);
    for (const auto& r : rep.per_eigenvalue) {
        REQUIRE(r.gap == 0.0);
        REQUIRE(r.cardinality_ok);
    }
}

TEST_CASE("gauge invariance: factor vs its involution") {
    ConformalFactor f = ConformalFactor::from_function(
        [](double x) { return 1.0 + 0.3 * x + 0.1 * std::sin(2 * x); }, 64);
    ConformalFactor fi = apply_involution(f);
    int n = 3;
    SteklovSpectrum s = steklov_spectrum(f, n, 0.4, 12);
    SteklovSpectrum si = steklov_spectrum(fi, n, 0.4, 12);
    ClosenessReport rep = spectra_close(s, si, 1e-9);
    REQUIRE(rep.holds);
}

TEST_CASE("mismatched constant factors fail tight closeness at large m") {
    SteklovSpectrum a = free_spectrum(3, 20);
    ConformalFactor f2 = make_factor({"constant", {1.21}});
    SteklovSpectrum b = steklov_spectrum(f2, 3, 0.0, 20);
    ClosenessReport rep = spectra_close(a, b, 0.01);
    REQUIRE_FALSE(rep.holds);
    // the eigenvalue slopes differ by 1 - 1/1.1, so gaps grow linearly in m
    double last_gap = 0;
    for (const auto& r : rep.per_eigenvalue)
        if (r.m == 20) last_gap = std::max(last_gap, r.gap);
    REQUIRE(last_gap > 1.0);
}

TEST_CASE("cardinality condition catches duplicated eigenvalues") {
    SteklovSpectrum s = free_spectrum(2, 6);
    SteklovSpectrum dup = s;
    // duplicate one eigenvalue: bump the multiplicity of row 3
    dup.rows[3].multiplicity += 1;
    ClosenessReport rep = spectra_close(s, dup, 1e-9);
    REQUIRE_FALSE(rep.holds);
    // gaps themselves are all tiny: only the counts disagree
    bool some_card_fail = false;
    for (const auto& r : rep.per_eigenvalue) {
        REQUIRE(r.gap < 1e-12);
        if (!r.cardinality_ok) some_card_fail = true;
    }
    REQUIRE(some_card_fail);
}

TEST_CASE("closeness is reflexive and symmetric") {
    SteklovSpectrum s = free_spectrum(3, 8);
    ConformalFactor g = make_factor({"gaussian-bump", {1.0, 0.01, 0.5, 0.2}, 64});
    SteklovSpectrum t = steklov_spectrum(g, 3, 0.0, 8);
    for (double eps : {1e-9, 0.1, 10.0}) REQUIRE(spectra_close(s, s, eps).holds);
    double eps = measure_epsilon(s, t);
    REQUIRE(spectra_close(s, t, eps).holds == spectra_close(t, s, eps).holds);
}

TEST_CASE("measured epsilon is minimal-ish and reproducible") {
    SteklovSpectrum s = free_spectrum(3, 10);
    ConformalFactor g = make_factor({"gaussian-bump", {1.0, 0.05, 0.5, 0.15}, 64});
    SteklovSpectrum t = steklov_spectrum(g, 3, 0.0, 10);
    double eps = measure_epsilon(s, t);
    REQUIRE(spectra_close(s, t, eps).holds);
    REQUIRE_FALSE(spectra_close(s, t, eps / 4.0).holds);
}

TEST_CASE("exponential rate fit") {
    int n = 3;
    OdeOptions opt;
    opt.rtol = 1e-12;

    SECTION("identical factors: fit is invalid (noise floor)") {
        ConformalFactor f = make_factor({"constant", {1.5}});
        SteklovSpectrum s = steklov_spectrum(f, n, 0.0, 15, opt);
        REQUIRE_THROWS_AS(exponential_rate_fit(s, s, -1, 2, 15), NumericalError);
    }

    SECTION("factors equal on [1/2, 1]: rate approx 2a = 1 on the lambda- branch") {
        // difference supported in [0.05, 0.45]
        auto bump = [](double x) {
            if (x <= 0.05 || x >= 0.45) return 0.0;
            double u = (x - 0.05) / 0.4;
            return std::pow(4 * u * (1 - u), 4.0);
        };
        ConformalFactor f = make_factor({"constant", {1.0}});
        ConformalFactor ft = ConformalFactor::from_function(
            [&](double x) { return 1.0 + 0.1 * bump(x); }, 128);
        SteklovSpectrum s = steklov_spectrum(f, n, 0.0, 20, opt);
        SteklovSpectrum st = steklov_spectrum(ft, n, 0.0, 20, opt);
        // fit beyond the prefactor hump (gaps rise until m ~ 5)
        RateFit rf = exponential_rate_fit(s, st, -1, 8, 18);
        REQUIRE(rf.rate >= 0.9);     // >= 1.8 a with a = 1/2
        REQUIRE(rf.r_squared > 0.95);
        REQUIRE(rf.points_used >= 4);
    }
}

TEST_CASE("rate fit is invariant under taking involutions of both factors") {
    auto bump = [](double x) {
        if (x <= 0.05 || x >= 0.45) return 0.0;
        double u = (x - 0.05) / 0.4;
        return std::pow(4 * u * (1 - u), 4.0);
    };
    ConformalFactor f = make_factor({"constant", {1.0}});
    ConformalFactor ft = ConformalFactor::from_function(
        [&](double x) { return 1.0 + 0.1 * bump(x); }, 128);
    OdeOptions opt;
    opt.rtol = 1e-12;
    int n = 3;
    SteklovSpectrum s = steklov_spectrum(f, n, 0.0, 16, opt);
    SteklovSpectrum st = steklov_spectrum(ft, n, 0.0, 16, opt);
    RateFit a = exponential_rate_fit(s, st, -1, 8, 15);
    // the spectrum is gauge invariant, so the same branch fit must agree even
    // though the involuted pipeline integrates the reflected potentials
    SteklovSpectrum si = steklov_spectrum(apply_involution(f), n, 0.0, 16, opt);
    SteklovSpectrum sti = steklov_spectrum(apply_involution(ft), n, 0.0, 16, opt);
    RateFit b = exponential_rate_fit(si, sti, -1, 8, 15);
    REQUIRE(a.rate == Approx(b.rate).epsilon(1e-4));
}
