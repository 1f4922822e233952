#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "steklov/geometry.hpp"
#include "steklov/ode.hpp"
#include "steklov/scaled_value.hpp"
#include "steklov/util.hpp"

namespace steklov {

// kappa_m = m(m+n-2): sphere eigenvalues without multiplicity.
inline double sphere_kappa(int n, int m) { return static_cast<double>(m) * (m + n - 2); }

// Dimension of the degree-m spherical harmonics on S^{n-1}.
inline std::uint64_t sphere_multiplicity(int n, int m) {
    if (m == 0) return 1;
    if (n == 2) return 2;
    // (2m+n-2) (m+n-3)! / (m! (n-2)!)
    unsigned __int128 num = 2 * m + n - 2;
    for (int k = m + 1; k <= m + n - 3; ++k) num *= k;  // (m+n-3)!/m!
    std::uint64_t den = 1;
    for (int k = 2; k <= n - 2; ++k) den *= k;
    return static_cast<std::uint64_t>(num / den);
}

inline std::vector<std::pair<double, std::uint64_t>> sphere_eigenvalues(int n, int m_max) {
    if (n < 2 || m_max < 0) throw DomainError("dnmap", "need n >= 2 and m_max >= 0");
    std::vector<std::pair<double, std::uint64_t>> out;
    out.reserve(m_max + 1);
    for (int m = 0; m <= m_max; ++m) out.emplace_back(sphere_kappa(n, m), sphere_multiplicity(n, m));
    return out;
}

// One 2x2 block of the DN map on the mu-eigenspace.  Off-diagonals are
// ~ 1/Delta(mu) ~ e^{-sqrt(mu)} and are kept as ScaledValue until the
// eigenvalue formula collapses them.
struct DNBlock {
    double mu = 0;
    double a11 = 0, a22 = 0;          // diagonal entries
    ScaledValue a12, a21;             // off-diagonal entries
    double lambda_minus = 0, lambda_plus = 0;

    double trace() const { return a11 + a22; }
    double det() const { return a11 * a22 - (a12 * a21).value(); }
};

inline DNBlock dn_block_from_weyl(const ConformalFactor& f, int n, const WeylData& w) {
    DNBlock b;
    b.mu = w.z;
    double f0 = f(0.0), f1 = f(1.0);
    double sf0 = std::sqrt(f0), sf1 = std::sqrt(f1);
    double lh0 = (n - 2) * f.derivative(0.0) / f0;  // (ln h)'(0), h = f^{n-2}
    double lh1 = (n - 2) * f.derivative(1.0) / f1;
    double C0 = lh0 / (4.0 * sf0);
    double C1 = lh1 / (4.0 * sf1);

    b.a11 = -w.M / sf0 + C0;
    b.a22 = -w.N / sf1 - C1;

    // h^{1/4}(1)/h^{1/4}(0) = (f(1)/f(0))^{(n-2)/4}
    double ratio = std::pow(f1 / f0, (n - 2) / 4.0);
    b.a12 = -(ScaledValue(ratio / sf0) * w.inv_Delta);
    b.a21 = -(ScaledValue(1.0 / (ratio * sf1)) * w.inv_Delta);

    // eigenvalues via mean +- sqrt(half-gap^2 + offprod); offprod stays in log
    // space so e^{-2 sqrt(mu)} terms survive
    ScaledValue offprod = b.a12 * b.a21;  // = 1/(sf0 sf1 Delta^2) > 0
    double mean = 0.5 * (b.a11 + b.a22);
    double half_gap = 0.5 * (b.a11 - b.a22);
    ScaledValue disc2 = ScaledValue(half_gap * half_gap) + offprod;
    double disc = disc2.is_zero() ? 0.0 : std::exp(0.5 * disc2.log_abs());
    b.lambda_minus = mean - disc;
    b.lambda_plus = mean + disc;
    return b;
}

inline DNBlock dn_block(const ConformalFactor& f, int n, double omega, double mu,
                        OdeOptions opt = {}) {
    Potential q = potential_from_factor(f, n, omega);
    WeylData w = weyl_functions(q, mu, opt);
    return dn_block_from_weyl(f, n, w);
}

struct SpectrumRow {
    int m = 0;
    double kappa = 0;
    std::uint64_t multiplicity = 1;
    double lambda_minus = 0;
    double lambda_plus = 0;
};

struct SteklovSpectrum {
    int n = 2;
    double omega = 0;
    std::string factor_tag;
    std::vector<SpectrumRow> rows;
    int monotone_from = 0;  // both branches strictly increasing in m from here on

    // sigma(Lambda_g(omega)): all eigenvalues with sphere multiplicity, sorted
    std::vector<double> full_multiset() const {
        std::vector<double> v;
        for (const auto& r : rows)
            for (std::uint64_t i = 0; i < r.multiplicity; ++i) {
                v.push_back(r.lambda_minus);
                v.push_back(r.lambda_plus);
            }
        std::sort(v.begin(), v.end());
        return v;
    }
};

inline SteklovSpectrum steklov_spectrum(const ConformalFactor& f, int n, double omega, int m_max,
                                        OdeOptions opt = {}, int threads = 0) {
    SteklovSpectrum spec;
    spec.n = n;
    spec.omega = omega;
    spec.factor_tag = f.tag();
    spec.rows.resize(m_max + 1);
    Potential q = potential_from_factor(f, n, omega);

    std::vector<std::string> errors(m_max + 1);
    parallel_for(
        m_max + 1,
        [&](std::size_t mi) {
            int m = static_cast<int>(mi);
            try {
                double kappa = sphere_kappa(n, m);
                WeylData w = weyl_functions(q, kappa, opt);
                DNBlock b = dn_block_from_weyl(f, n, w);
                spec.rows[mi] = {m, kappa, sphere_multiplicity(n, m), b.lambda_minus,
                                 b.lambda_plus};
            } catch (const std::exception& e) {
                errors[mi] = e.what();
            }
        },
        threads);
    for (const auto& e : errors)
        if (!e.empty()) throw PoleProximityError("dnmap", e);
    for (std::size_t m = spec.rows.size(); m-- > 1;) {
        if (spec.rows[m].lambda_minus <= spec.rows[m - 1].lambda_minus ||
            spec.rows[m].lambda_plus <= spec.rows[m - 1].lambda_plus) {
            spec.monotone_from = static_cast<int>(m);
            break;
        }
    }
    return spec;
}

struct CalderonNorm {
    double sup_norm = 0;      // sup over blocks of the 2x2 spectral norm
    bool diverging = false;   // per-block norm grows ~ sqrt(mu): endpoint mismatch
    double slope = 0;         // fitted growth per unit sqrt(mu) over the top half
    std::vector<double> block_norms;   // indexed by m
    std::vector<double> sqrt_mu;
};

// Spectral norm of the 2x2 difference of blocks (symmetrized entries are
// near-symmetric; use the exact 2x2 singular value).
inline double block_diff_norm(const DNBlock& a, const DNBlock& b) {
    double d11 = a.a11 - b.a11;
    double d22 = a.a22 - b.a22;
    double d12 = (a.a12 - b.a12).value();
    double d21 = (a.a21 - b.a21).value();
    // largest singular value of [[d11,d12],[d21,d22]]
    double t = d11 * d11 + d12 * d12 + d21 * d21 + d22 * d22;
    double det = d11 * d22 - d12 * d21;
    double s = std::sqrt(std::max(0.0, t * t / 4.0 - det * det));
    return std::sqrt(std::max(0.0, t / 2.0 + s));
}

inline CalderonNorm calderon_norm_difference(const ConformalFactor& f,
                                             const ConformalFactor& f_tilde, int n, double omega,
                                             int m_max, OdeOptions opt = {}, int threads = 0) {
    Potential q = potential_from_factor(f, n, omega);
    Potential qt = potential_from_factor(f_tilde, n, omega);

    CalderonNorm out;
    out.block_norms.resize(m_max + 1);
    out.sqrt_mu.resize(m_max + 1);
    std::vector<std::string> errors(m_max + 1);
    parallel_for(
        m_max + 1,
        [&](std::size_t mi) {
            int m = static_cast<int>(mi);
            try {
                double kappa = sphere_kappa(n, m);
                DNBlock a = dn_block_from_weyl(f, n, weyl_functions(q, kappa, opt));
                DNBlock b = dn_block_from_weyl(f_tilde, n, weyl_functions(qt, kappa, opt));
                out.block_norms[mi] = block_diff_norm(a, b);
                out.sqrt_mu[mi] = std::sqrt(kappa);
            } catch (const std::exception& e) {
                errors[mi] = e.what();
            }
        },
        threads);
    for (const auto& e : errors)
        if (!e.empty()) throw PoleProximityError("dnmap", e);

    for (double v : out.block_norms) out.sup_norm = std::max(out.sup_norm, v);

    // growth fit over the top half of the m range
    std::vector<double> xs, ys;
    for (int m = m_max / 2; m <= m_max; ++m) {
        xs.push_back(out.sqrt_mu[m]);
        ys.push_back(out.block_norms[m]);
    }
    LinearFit fit = least_squares(xs, ys);
    out.slope = fit.slope;
    out.diverging = fit.slope > 1e-3;
    return out;
}

}  // namespace steklov
