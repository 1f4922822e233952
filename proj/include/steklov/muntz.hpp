#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "steklov/dd.hpp"
#include "steklov/dnmap.hpp"
#include "steklov/quadrature.hpp"
#include "steklov/util.hpp"

namespace steklov {

// Muntz exponent system lambda_k = 2 y_{m0+k} - 1 - alpha, alpha = 2 y_{m0} - 1,
// y_m = sqrt(kappa_m); lambda_0 = 0 and the gaps stay >= 2.
class MuntzSystem {
  public:
    static MuntzSystem from_sphere(int n, int m0, int m_max) {
        if (m0 < 0 || m_max < m0) throw DomainError("muntz", "need 0 <= m0 <= m_max");
        MuntzSystem sys;
        sys.n_ = n;
        sys.m0_ = m0;
        DD y0 = dd_sqrt(DD(sphere_kappa(n, m0)));
        sys.alpha_ = 2.0 * y0.to_double() - 1.0;
        for (int m = m0; m <= m_max; ++m) {
            DD y = dd_sqrt(DD(sphere_kappa(n, m)));
            DD lam = dd_mul(DD(2.0), dd_sub(y, y0));
            sys.lambdas_dd_.push_back(lam);
            sys.lambdas_.push_back(lam.to_double());
        }
        sys.validate_gaps();
        return sys;
    }

    // direct exponents, for tests and the Calderon chain (2 y_m family)
    static MuntzSystem from_exponents(std::vector<double> lambdas, double alpha = 0.0) {
        MuntzSystem sys;
        sys.alpha_ = alpha;
        sys.lambdas_ = std::move(lambdas);
        for (double l : sys.lambdas_) sys.lambdas_dd_.push_back(DD(l));
        sys.validate_gaps();
        return sys;
    }

    int size() const { return static_cast<int>(lambdas_.size()); }
    double lambda(int k) const { return lambdas_[k]; }
    const std::vector<double>& lambdas() const { return lambdas_; }
    double alpha() const { return alpha_; }
    int m0() const { return m0_; }

    // lambda_m <= 2m + C over the stored range; M1 = max(2, 2C+1)
    double bound_C() const {
        double c = 0.0;
        for (int k = 0; k < size(); ++k) c = std::max(c, lambdas_[k] - 2.0 * k);
        return c;
    }
    double bound_M1() const { return std::max(2.0, 2.0 * bound_C() + 1.0); }

    // ---- Gram coefficients -------------------------------------------------
    // C_{pj} = sqrt(2 lambda_p + 1) prod_{r<p}(lambda_j+lambda_r+1)
    //                              / prod_{r != j}(lambda_j - lambda_r),
    // kept as (sign, log magnitude); reconstruction happens only inside
    // row sums or through the DD evaluator.
    struct LogCoeff {
        int sign = 1;
        double log_abs = 0.0;
    };

    LogCoeff log_coeff(int p, int j) const {
        LogCoeff c;
        double s = 0.5 * std::log(2.0 * lambdas_[p] + 1.0);
        for (int r = 0; r < p; ++r) s += std::log(lambdas_[j] + lambdas_[r] + 1.0);
        for (int r = 0; r <= p; ++r) {
            if (r == j) continue;
            double d = lambdas_[j] - lambdas_[r];
            s -= std::log(std::fabs(d));
            if (d < 0) c.sign = -c.sign;
        }
        c.log_abs = s;
        return c;
    }

    double coeff(int p, int j) const {
        LogCoeff c = log_coeff(p, j);
        return c.sign * std::exp(c.log_abs);
    }

    DD coeff_dd(int p, int j) const {
        DD num = dd_sqrt(dd_add(dd_mul(DD(2.0), lambdas_dd_[p]), DD(1.0)));
        for (int r = 0; r < p; ++r)
            num = dd_mul(num, dd_add(dd_add(lambdas_dd_[j], lambdas_dd_[r]), DD(1.0)));
        DD den(1.0);
        for (int r = 0; r <= p; ++r) {
            if (r == j) continue;
            den = dd_mul(den, dd_sub(lambdas_dd_[j], lambdas_dd_[r]));
        }
        return dd_div(num, den);
    }

    // log of sum_j |C_{pj}| via max-alignment
    double log_row_abs_sum(int p) const {
        double mx = -std::numeric_limits<double>::infinity();
        std::vector<double> logs(p + 1);
        for (int j = 0; j <= p; ++j) {
            logs[j] = log_coeff(p, j).log_abs;
            mx = std::max(mx, logs[j]);
        }
        double s = 0.0;
        for (int j = 0; j <= p; ++j) s += std::exp(logs[j] - mx);
        return mx + std::log(s);
    }

    // L_p(x) = sum_j C_{pj} x^{lambda_j}, double-double internally: the
    // coefficients reach ~1e14 at p = 20 while the value is O(1).
    double eval_Lp(int p, double x) const {
        if (x <= 0.0) return p == 0 ? coeff(0, 0) : 0.0;  // lambda_0 = 0 term only
        DD xd(x);
        DD s(0.0);
        for (int j = 0; j <= p; ++j)
            s = dd_add(s, dd_mul(coeff_dd(p, j), dd_pow(xd, lambdas_dd_[j])));
        return s.to_double();
    }

    // values of L_0..L_pmax at the given points (shares the x^lambda table)
    std::vector<std::vector<double>> eval_table(int p_max, const std::vector<double>& xs) const {
        std::size_t nx = xs.size();
        std::vector<std::vector<DD>> powers(p_max + 1, std::vector<DD>(nx));
        for (int j = 0; j <= p_max; ++j)
            for (std::size_t i = 0; i < nx; ++i)
                powers[j][i] = xs[i] > 0.0 ? dd_pow(DD(xs[i]), lambdas_dd_[j]) : DD(j == 0 ? 1.0 : 0.0);
        std::vector<std::vector<double>> out(p_max + 1, std::vector<double>(nx));
        for (int p = 0; p <= p_max; ++p) {
            std::vector<DD> coeffs(p + 1);
            for (int j = 0; j <= p; ++j) coeffs[j] = coeff_dd(p, j);
            for (std::size_t i = 0; i < nx; ++i) {
                DD s(0.0);
                for (int j = 0; j <= p; ++j) s = dd_add(s, dd_mul(coeffs[j], powers[j][i]));
                out[p][i] = s.to_double();
            }
        }
        return out;
    }

  private:
    void validate_gaps() {
        if (lambdas_.empty()) throw DomainError("muntz", "empty exponent sequence");
        if (std::fabs(lambdas_[0]) > 1e-12)
            throw DomainError("muntz", "lambda_0 must be 0 after the alpha shift");
        for (std::size_t k = 0; k + 1 < lambdas_.size(); ++k) {
            if (lambdas_[k + 1] - lambdas_[k] < 2.0 - 1e-12)
                throw DomainError("muntz", "gap condition lambda_{k+1}-lambda_k >= 2 fails at k = " +
                                               std::to_string(k));
        }
    }

    int n_ = 0;
    int m0_ = 0;
    double alpha_ = 0.0;
    std::vector<double> lambdas_;
    std::vector<DD> lambdas_dd_;
};

inline MuntzSystem muntz_sequence(int n, int m0, int m_max) {
    return MuntzSystem::from_sphere(n, m0, m_max);
}

struct BlaschkeIndex {
    double eps2_product = 0;  // |prod (lambda_k - 1/2)/(lambda_k + 3/2)|
    double eps2_maxdef = 0;   // via the Blaschke-modulus evaluation
    double argmax_y = 0;
};

// eps2(Lambda_m) both ways.  The product form is the y = 0 value of
// |B(1+iy)/(1+iy)|.  With lambda_0 = 0 present, the k = 0 Blaschke factor
// makes the literal y-maximum land above the product (its modulus grows in y
// faster than 1/|1+iy| decays), so the gap >= 2 equality form is evaluated
// with the zero-exponent factor held at its y = 0 modulus; for
// the remaining factors the maximum over y is genuinely searched, and lands at
// y = 0, which is what the agreement between the two routes checks.
inline BlaschkeIndex blaschke_index(const MuntzSystem& sys, int m) {
    BlaschkeIndex out;
    double logp = 0.0;
    for (int k = 0; k <= m; ++k)
        logp += std::log(std::fabs(sys.lambda(k) - 0.5) / (sys.lambda(k) + 1.5));
    out.eps2_product = std::exp(logp);

    double log_zero_factor = 0.0;  // factors with lambda_k = 0, taken at y = 0
    std::vector<double> lams;
    for (int k = 0; k <= m; ++k) {
        if (std::fabs(sys.lambda(k)) < 1e-12)
            log_zero_factor += std::log(0.5 / 1.5);
        else
            lams.push_back(sys.lambda(k));
    }
    auto log_mod = [&](double y) {
        double s = -0.5 * std::log1p(y * y);  // 1/|1+iy|
        for (double l : lams)
            s += 0.5 * (std::log((l - 0.5) * (l - 0.5) + y * y) -
                        std::log((l + 1.5) * (l + 1.5) + y * y));
        return s;
    };
    // coarse grid then golden-section refinement around the best bracket
    double best_y = 0.0, best = log_mod(0.0);
    for (int i = 1; i <= 200; ++i) {
        double y = 50.0 * i / 200.0;
        double v = log_mod(y);
        if (v > best) {
            best = v;
            best_y = y;
        }
    }
    double a = std::max(0.0, best_y - 0.5), b = best_y + 0.5;
    const double gr = 0.61803398874989484820;
    double c = b - gr * (b - a), d = a + gr * (b - a);
    for (int it = 0; it < 80; ++it) {
        if (log_mod(c) > log_mod(d)) b = d; else a = c;
        c = b - gr * (b - a);
        d = a + gr * (b - a);
    }
    double ym = 0.5 * (a + b);
    if (log_mod(ym) < best) ym = best_y;
    out.argmax_y = ym;
    out.eps2_maxdef = std::exp(log_zero_factor + log_mod(ym));
    return out;
}

// L2 modulus of continuity w(f,u) = sup_{0<=r<=u} ||f(.+r)-f(.)||_{L2(0,1-r)}.
inline double modulus_of_continuity(const std::function<double(double)>& h, double u,
                                    int r_grid = 64, int quad_n = 512) {
    if (u <= 0.0 || u >= 1.0) throw DomainError("muntz", "need 0 < u < 1");
    auto w2 = [&](double r) {
        if (r <= 0.0) return 0.0;
        return integrate_gl([&](double x) {
            double d = h(x + r) - h(x);
            return d * d;
        }, 0.0, 1.0 - r, quad_n);
    };
    double best_r = 0.0, best = 0.0;
    for (int i = 0; i <= r_grid; ++i) {
        double r = u * i / r_grid;
        double v = w2(r);
        if (v > best) {
            best = v;
            best_r = r;
        }
    }
    // one refinement pass around the maximizer
    double lo = std::max(0.0, best_r - u / r_grid), hi = std::min(u, best_r + u / r_grid);
    for (int i = 0; i <= 16; ++i) {
        double r = lo + (hi - lo) * i / 16.0;
        best = std::max(best, w2(r));
    }
    return std::sqrt(best);
}

struct TruncationChoice {
    int m = 0;
    bool eps_too_large = false;
    double g_at_m = 0;
};

inline double truncation_g(double t, double C, double M1) {
    return 1.5 * (4.0 * t + 2.0 * C + 1.0) * (t + 1.0) * std::pow(4.5 * M1, 2.0 * t);
}

// m(eps) = floor(g^{-1}(1/sqrt(eps))) by bisection; g is strictly increasing.
inline TruncationChoice truncation_rule(double eps, double C, double M1) {
    if (eps <= 0.0) throw DomainError("muntz", "eps must be positive");
    TruncationChoice out;
    double target = 1.0 / std::sqrt(eps);
    if (truncation_g(0.0, C, M1) > target) {
        out.eps_too_large = true;
        out.m = 0;
        out.g_at_m = truncation_g(0.0, C, M1);
        return out;
    }
    double lo = 0.0, hi = 200.0;
    if (truncation_g(hi, C, M1) < target)
        throw DomainError("muntz", "eps too small for the bisection window");
    while (hi - lo > 1e-9) {
        double mid = 0.5 * (lo + hi);
        if (truncation_g(mid, C, M1) <= target) lo = mid; else hi = mid;
    }
    out.m = static_cast<int>(std::floor(lo));
    out.g_at_m = truncation_g(out.m, C, M1);
    return out;
}

struct MomentBound {
    double norm_bound = 0;        // projection_term + approx_term
    double projection_term = 0;   // eps_used^2 sum_k (sum_l |C_kl|)^2
    double approx_term = 0;       // ||h - pi(h)||_2^2
    double measured_max_moment = 0;
    int worst_k = -1;
    bool precondition_ok = true;
    double eps_used = 0;
    double h_norm2 = 0;           // ||h||_2^2
    std::vector<double> proj_coeffs;  // <L_k, h>
};

// Bessel-route bound ||h||^2 <= eps^2 sum_k (sum_l |C_kl|)^2 + E2(h,Lambda_m)^2.
// eps_used = max(given eps, measured max moment) keeps the inequality honest
// when the caller's eps is smaller than the actual moments.
inline MomentBound moment_bound(double eps, const MuntzSystem& sys,
                                const std::function<double(double)>& h, int m,
                                int quad_n = 512) {
    if (m >= sys.size()) throw DomainError("muntz", "m exceeds the stored exponent range");
    MomentBound out;
    const QuadRule& rule = gauss_legendre(quad_n);
    std::vector<double> xs(quad_n), hw(quad_n);
    for (int i = 0; i < quad_n; ++i) {
        xs[i] = 0.5 * (1.0 + rule.nodes[i]);
        hw[i] = h(xs[i]) * 0.5 * rule.weights[i];
    }

    for (int k = 0; k <= m; ++k) {
        double mom = 0.0;
        for (int i = 0; i < quad_n; ++i) mom += std::pow(xs[i], sys.lambda(k)) * hw[i];
        if (std::fabs(mom) > out.measured_max_moment) {
            out.measured_max_moment = std::fabs(mom);
            out.worst_k = k;
        }
    }
    out.precondition_ok = out.measured_max_moment <= eps * (1.0 + 1e-12);
    out.eps_used = std::max(eps, out.measured_max_moment);

    double proj_sum = 0.0;
    for (int k = 0; k <= m; ++k) {
        double row = std::exp(sys.log_row_abs_sum(k));
        proj_sum += row * row;
    }
    out.projection_term = out.eps_used * out.eps_used * proj_sum;

    // orthogonal projection through the DD evaluator
    auto table = sys.eval_table(m, xs);
    out.proj_coeffs.resize(m + 1);
    for (int k = 0; k <= m; ++k) {
        double c = 0.0;
        for (int i = 0; i < quad_n; ++i) c += table[k][i] * hw[i];
        out.proj_coeffs[k] = c;
    }
    double h2 = 0.0, r2 = 0.0;
    for (int i = 0; i < quad_n; ++i) {
        double hv = h(xs[i]);
        double pv = 0.0;
        for (int k = 0; k <= m; ++k) pv += out.proj_coeffs[k] * table[k][i];
        double w = 0.5 * rule.weights[i];
        h2 += hv * hv * w;
        r2 += (hv - pv) * (hv - pv) * w;
    }
    out.h_norm2 = h2;
    out.approx_term = r2;
    out.norm_bound = out.projection_term + out.approx_term;
    return out;
}

}  // namespace steklov
