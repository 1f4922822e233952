#pragma once

#include <cmath>
#include <limits>

namespace steklov {

// Double-double arithmetic (~32 significant digits). Needed only where the
// Muntz-Legendre coefficients C_{pj} (up to ~1e14 at p=20) cancel down to O(1)
// function values: plain doubles would leave ~2 digits, we need 1e-8 residuals.
struct DD {
    double hi = 0.0;
    double lo = 0.0;

    DD() = default;
    DD(double h) : hi(h), lo(0.0) {}
    DD(double h, double l) : hi(h), lo(l) {}

    double to_double() const { return hi + lo; }
};

namespace dd_detail {

inline DD two_sum(double a, double b) {
    double s = a + b;
    double bb = s - a;
    double err = (a - (s - bb)) + (b - bb);
    return {s, err};
}

inline DD quick_two_sum(double a, double b) {
    double s = a + b;
    return {s, b - (s - a)};
}

inline DD two_prod(double a, double b) {
    double p = a * b;
    return {p, std::fma(a, b, -p)};
}

}  // namespace dd_detail

inline DD dd_add(const DD& a, const DD& b) {
    using namespace dd_detail;
    DD s = two_sum(a.hi, b.hi);
    DD t = two_sum(a.lo, b.lo);
    s.lo += t.hi;
    s = quick_two_sum(s.hi, s.lo);
    s.lo += t.lo;
    return quick_two_sum(s.hi, s.lo);
}

inline DD dd_neg(const DD& a) { return {-a.hi, -a.lo}; }
inline DD dd_sub(const DD& a, const DD& b) { return dd_add(a, dd_neg(b)); }

inline DD dd_mul(const DD& a, const DD& b) {
    using namespace dd_detail;
    DD p = two_prod(a.hi, b.hi);
    p.lo += a.hi * b.lo + a.lo * b.hi;
    return quick_two_sum(p.hi, p.lo);
}

inline DD dd_div(const DD& a, const DD& b) {
    using namespace dd_detail;
    double q1 = a.hi / b.hi;
    DD r = dd_sub(a, dd_mul(DD(q1), b));
    double q2 = r.hi / b.hi;
    r = dd_sub(r, dd_mul(DD(q2), b));
    double q3 = r.hi / b.hi;
    DD q = quick_two_sum(q1, q2);
    return dd_add(q, DD(q3));
}

inline DD dd_sqrt(const DD& a) {
    if (a.hi <= 0.0) return DD(0.0);
    double s = std::sqrt(a.hi);
    // one Newton step in DD: s + (a - s^2) / (2 s)
    DD r = dd_sub(a, dd_mul(DD(s), DD(s)));
    return dd_add(DD(s), dd_div(r, DD(2.0 * s)));
}

// exp by argument reduction a = k ln 2 + r, |r| <= ln2/2, then Taylor in DD.
inline DD dd_exp(const DD& a) {
    static const DD LN2{0.6931471805599453, 2.3190468138462996e-17};
    if (a.hi > 709.0) return DD(std::numeric_limits<double>::infinity());
    if (a.hi < -709.0) return DD(0.0);
    double k = std::round(a.hi / LN2.hi);
    DD r = dd_sub(a, dd_mul(DD(k), LN2));
    DD term(1.0), sum(1.0);
    for (int n = 1; n <= 30; ++n) {
        term = dd_div(dd_mul(term, r), DD(static_cast<double>(n)));
        sum = dd_add(sum, term);
        if (std::fabs(term.hi) < 1e-35 * std::fabs(sum.hi)) break;
    }
    double scale = std::ldexp(1.0, static_cast<int>(k));
    return dd_mul(sum, DD(scale));
}

// ln via double seed + one correction: ln x = y0 + ln(x e^{-y0}).
inline DD dd_log(const DD& x) {
    double y0 = std::log(x.hi);
    DD e = dd_exp(DD(-y0));
    DD d = dd_sub(dd_mul(x, e), DD(1.0));  // |d| ~ 1e-16
    // ln(1+d) = d - d^2/2 + d^3/3, d^3 ~ 1e-48 negligible
    DD d2 = dd_mul(d, d);
    DD corr = dd_sub(d, dd_mul(DD(0.5), d2));
    return dd_add(DD(y0), corr);
}

// x^p for x in (0,1], accurate to ~1e-30 relative.
inline DD dd_pow(const DD& x, const DD& p) {
    if (x.hi <= 0.0) return (p.hi == 0.0) ? DD(1.0) : DD(0.0);
    if (p.hi == 0.0 && p.lo == 0.0) return DD(1.0);
    return dd_exp(dd_mul(p, dd_log(x)));
}

}  // namespace steklov
