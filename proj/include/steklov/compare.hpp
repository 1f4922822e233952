#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "steklov/dnmap.hpp"
#include "steklov/util.hpp"

namespace steklov {

struct ClosenessRow {
    double value = 0;
    double matched_value = 0;
    double gap = 0;
    bool cardinality_ok = false;
    int m = 0;  // block index the value came from
};

struct ClosenessReport {
    bool holds = false;
    std::vector<ClosenessRow> per_eigenvalue;
    bool symmetric = false;  // both one-sided relations checked
    // Alternative pairing bookkeeping: blocks where the same-branch pairing
    // fails but the crossed pairing (lambda- <-> lambda~+) is within eps.
    std::vector<int> crossed_pairing_blocks;
};

namespace detail {

// Count of multiset entries within [a-eps, a+eps]; v sorted.
inline std::size_t count_within(const std::vector<double>& v, double a, double eps) {
    auto lo = std::lower_bound(v.begin(), v.end(), a - eps);
    auto hi = std::upper_bound(v.begin(), v.end(), a + eps);
    return static_cast<std::size_t>(hi - lo);
}

inline double nearest(const std::vector<double>& v, double a) {
    auto it = std::lower_bound(v.begin(), v.end(), a);
    double best = std::numeric_limits<double>::infinity();
    if (it != v.end()) best = *it;
    if (it != v.begin()) {
        double cand = *(it - 1);
        if (std::fabs(cand - a) < std::fabs(best - a)) best = cand;
    }
    return best;
}

}  // namespace detail

// One-sided closeness of sigma(S) to sigma(S~) up to the sequence eps_m:
// every eigenvalue of block m has a partner within eps_m, and the eps_m-window
// counts agree on both sides.
inline ClosenessReport spectra_subset_close(const SteklovSpectrum& S,
                                            const SteklovSpectrum& S_tilde,
                                            const std::vector<double>& eps) {
    ClosenessReport rep;
    rep.holds = true;
    std::vector<double> mine = S.full_multiset();
    std::vector<double> theirs = S_tilde.full_multiset();
    for (const auto& row : S.rows) {
        double eps_m = row.m < static_cast<int>(eps.size()) ? eps[row.m]
                                                            : (eps.empty() ? 0.0 : eps.back());
        for (double a : {row.lambda_minus, row.lambda_plus}) {
            ClosenessRow r;
            r.m = row.m;
            r.value = a;
            r.matched_value = detail::nearest(theirs, a);
            r.gap = std::fabs(r.matched_value - a);
            std::size_t c_mine = detail::count_within(mine, a, eps_m);
            std::size_t c_theirs = detail::count_within(theirs, a, eps_m);
            r.cardinality_ok = (c_mine == c_theirs);
            if (r.gap > eps_m || !r.cardinality_ok) rep.holds = false;
            rep.per_eigenvalue.push_back(r);
        }
    }
    return rep;
}

inline ClosenessReport spectra_close(const SteklovSpectrum& S, const SteklovSpectrum& S_tilde,
                                     const std::vector<double>& eps) {
    ClosenessReport a = spectra_subset_close(S, S_tilde, eps);
    ClosenessReport b = spectra_subset_close(S_tilde, S, eps);
    ClosenessReport rep;
    rep.symmetric = true;
    rep.holds = a.holds && b.holds;
    rep.per_eigenvalue = a.per_eigenvalue;
    rep.per_eigenvalue.insert(rep.per_eigenvalue.end(), b.per_eigenvalue.begin(),
                              b.per_eigenvalue.end());

    // record blocks where only the crossed pairing works (interleaving case)
    std::size_t mm = std::min(S.rows.size(), S_tilde.rows.size());
    for (std::size_t i = 0; i < mm; ++i) {
        double eps_m = i < eps.size() ? eps[i] : (eps.empty() ? 0.0 : eps.back());
        const auto& r = S.rows[i];
        const auto& rt = S_tilde.rows[i];
        bool same = std::fabs(r.lambda_minus - rt.lambda_minus) <= eps_m &&
                    std::fabs(r.lambda_plus - rt.lambda_plus) <= eps_m;
        bool crossed = std::fabs(r.lambda_minus - rt.lambda_plus) <= eps_m &&
                       std::fabs(r.lambda_plus - rt.lambda_minus) <= eps_m;
        if (!same && crossed) rep.crossed_pairing_blocks.push_back(r.m);
    }
    return rep;
}

inline ClosenessReport spectra_close(const SteklovSpectrum& S, const SteklovSpectrum& S_tilde,
                                     double eps) {
    std::vector<double> e(std::max(S.rows.size(), S_tilde.rows.size()), eps);
    return spectra_close(S, S_tilde, e);
}

// Smallest constant eps for which spectra_close holds.  The candidate floor is
// the max nearest-partner distance; the cardinality condition is then checked
// and eps grown geometrically if it fails (it is not monotone in eps, so this
// is a scan, not a bisection).
inline double measure_epsilon(const SteklovSpectrum& S, const SteklovSpectrum& S_tilde) {
    std::vector<double> mine = S.full_multiset();
    std::vector<double> theirs = S_tilde.full_multiset();
    double floor_eps = 0.0;
    for (double a : mine) floor_eps = std::max(floor_eps, std::fabs(detail::nearest(theirs, a) - a));
    for (double a : theirs) floor_eps = std::max(floor_eps, std::fabs(detail::nearest(mine, a) - a));
    double eps = std::max(floor_eps * (1.0 + 1e-9), 1e-13);
    for (int i = 0; i < 60; ++i) {
        if (spectra_close(S, S_tilde, eps).holds) return eps;
        eps *= 1.2;
    }
    throw NumericalError("compare", "no epsilon found with matching cardinalities");
}

struct RateFit {
    double rate = 0;       // decay exponent in e^{-rate * sqrt(kappa_m)}
    double r_squared = 0;
    int points_used = 0;
};

// Least-squares fit of ln|lambda^b(kappa_m) - lambda~^b(kappa_m)| against
// sqrt(kappa_m); rate = -slope.  Gaps at or below the eigenvalue noise floor
// are excluded; non-decaying gaps are a fit-invalid error.
inline RateFit exponential_rate_fit(const SteklovSpectrum& S, const SteklovSpectrum& S_tilde,
                                    int branch /* -1 or +1 */, int m_lo, int m_hi,
                                    double noise_floor = 1e-11) {
    std::vector<double> xs, ys;
    std::size_t mm = std::min(S.rows.size(), S_tilde.rows.size());
    for (int m = m_lo; m <= m_hi && m < static_cast<int>(mm); ++m) {
        const auto& r = S.rows[m];
        const auto& rt = S_tilde.rows[m];
        double a = branch < 0 ? r.lambda_minus : r.lambda_plus;
        double b = branch < 0 ? rt.lambda_minus : rt.lambda_plus;
        double gap = std::fabs(a - b);
        double floor = noise_floor * (1.0 + std::fabs(a));
        if (gap <= 10.0 * floor) continue;
        xs.push_back(std::sqrt(r.kappa));
        ys.push_back(std::log(gap));
    }
    if (xs.size() < 4)
        throw NumericalError("compare", "rate fit invalid: too few points above noise floor");
    bool decaying = ys.front() > ys.back();
    if (!decaying) throw NumericalError("compare", "rate fit invalid: gaps not decaying");
    LinearFit f = least_squares(xs, ys);
    RateFit out;
    out.rate = -f.slope;
    out.r_squared = f.r_squared;
    out.points_used = static_cast<int>(xs.size());
    return out;
}

}  // namespace steklov
