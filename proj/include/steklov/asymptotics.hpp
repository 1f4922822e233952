#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "steklov/chebyshev.hpp"
#include "steklov/geometry.hpp"
#include "steklov/util.hpp"

namespace steklov {

// Coefficient functions of the large-z expansions
//   -M(z^2) = z + sum_j beta_j(0) / z^{j+1} + o(z^{-B-1})
//   -N(z^2) = z + sum_j gamma_j(0) / z^{j+1} + o(z^{-B-1}).
// The recursion below is the Riccati one for G = psi'/psi, G' + G^2 = q + z^2
// with G = -z - sum_j beta_j(x) z^{-j-1}:
//   beta_0 = q/2,
//   beta_{j+1} = beta_j'/2 - (1/2) sum_{l=0}^{j-1} beta_l beta_{j-1-l}.
// (Checked against the closed form -sqrt(z+c) coth(sqrt(z+c)) for constant q
// and against the classical endpoint coefficients q'/4, (q''-q^2)/8.)
struct ExpansionCoefficients {
    std::vector<ChebSeries> betas;
    std::vector<ChebSeries> gammas;
    int order_B = 0;
};

inline std::vector<ChebSeries> weyl_expansion_recursion(const ChebSeries& q_half, int B,
                                               int max_degree = 256) {
    std::vector<ChebSeries> beta;
    beta.push_back(q_half);  // beta_0 = q/2
    for (int j = 0; j < B; ++j) {
        ChebSeries next = beta[j].derivative() * 0.5;
        for (int l = 0; l + 1 <= j; ++l) {
            // sum_{l=0}^{j-1} beta_l beta_{j-1-l}
            next = next - beta[l].multiply(beta[j - 1 - l], max_degree) * 0.5;
        }
        beta.push_back(next.chopped());
    }
    return beta;
}

inline ExpansionCoefficients weyl_expansion_coefficients(const Potential& q, int B) {
    if (B < 0 || B > 10)
        throw DomainError("asymptotics", "expansion order B must be in [0,10]");
    ExpansionCoefficients e;
    e.order_B = B;
    e.betas = weyl_expansion_recursion(q.series() * 0.5, B);
    e.gammas = weyl_expansion_recursion(q.series().reflected() * 0.5, B);
    return e;
}

// Truncated expansion values M ~ -t - sum beta_j(0)/t^{j+1}, N with gamma.
inline std::pair<double, double> asymptotic_weyl(const ExpansionCoefficients& coeffs, double t,
                                                 int B) {
    double m = t, n = t;
    double tp = 1.0;
    for (int j = 0; j <= B && j <= coeffs.order_B; ++j) {
        tp *= t;  // t^{j+1}
        m += coeffs.betas[j](0.0) / tp;
        n += coeffs.gammas[j](0.0) / tp;
    }
    return {-m, -n};
}

struct EndpointEquivalence {
    std::optional<int> first_k;          // least k with q^(k)(0) != (-1)^k q^(k)(1)
    std::vector<double> beta_gamma_gap;  // beta_k(0) - gamma_k(0), k = 0..B
};

// Endpoint equivalence: the first k where the derivative symmetry of q
// fails coincides with the first k where beta_k(0) != gamma_k(0).
inline EndpointEquivalence endpoint_equivalence_test(const Potential& q, int B) {
    if (B > 10) throw DomainError("asymptotics", "B must be <= 10");
    EndpointEquivalence r;
    ChebSeries dk = q.series();
    for (int k = 0; k <= B; ++k) {
        if (k > 0) dk = dk.derivative();
        double q0 = dk(0.0), q1 = dk(1.0);
        double want = (k % 2 == 0) ? q1 : -q1;
        double scale = 1.0 + std::max(std::fabs(q0), std::fabs(q1));
        if (!r.first_k && std::fabs(q0 - want) > 1e-7 * scale) r.first_k = k;
    }
    ExpansionCoefficients e = weyl_expansion_coefficients(q, B);
    for (int k = 0; k <= B; ++k)
        r.beta_gamma_gap.push_back(e.betas[k](0.0) - e.gammas[k](0.0));
    return r;
}

// Leading eigenvalue asymptote of the DN blocks:
//   lambda^-(kappa_m) ~ m/sqrt(f(1)) + (n-2)/(2 sqrt(f(1))) - (ln h)'(1)/(4 sqrt(f(1)))
//   lambda^+(kappa_m) ~ m/sqrt(f(0)) + (n-2)/(2 sqrt(f(0))) + (ln h)'(0)/(4 sqrt(f(0)))
// with h = f^{n-2}.
inline double eigenvalue_asymptote(const ConformalFactor& f, int n, int m, int sign) {
    if (m < 1) throw DomainError("asymptotics", "m must be >= 1");
    double x = sign < 0 ? 1.0 : 0.0;
    double fr = f(x);
    double log_h_prime = (n - 2) * f.derivative(x) / fr;  // (ln h)'(x)
    double s = std::sqrt(fr);
    double val = m / s + (n - 2) / (2.0 * s);
    val += (sign < 0 ? -1.0 : 1.0) * log_h_prime / (4.0 * s);
    return val;
}

}  // namespace steklov
