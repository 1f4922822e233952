#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "steklov/chebyshev.hpp"
#include "steklov/util.hpp"

namespace steklov {

// Conformal factor f of the warped-product metric f(x)(dx^2 + g_S), stored as
// a Chebyshev series on [0,1]. Immutable after construction.
class ConformalFactor {
  public:
    ConformalFactor() : series_(ChebSeries::constant(1.0)) {}

    explicit ConformalFactor(ChebSeries s, std::string tag = {})
        : series_(std::move(s)), tag_(std::move(tag)) {
        if (series_.min_on_grid() <= 0.0)
            throw DomainError("geometry", "conformal factor must be positive on [0,1]");
    }

    static ConformalFactor from_function(const std::function<double(double)>& fn, int degree = 64,
                                         std::string tag = {}) {
        return ConformalFactor(ChebSeries::interpolate(fn, degree), std::move(tag));
    }

    double operator()(double x) const { return series_(x); }
    const ChebSeries& series() const { return series_; }
    const std::string& tag() const { return tag_; }
    int degree() const { return series_.degree(); }

    double derivative(double x, int order = 1) const { return series_.derivative(order)(x); }

    bool is_symmetric(double tol = 1e-10) const {
        ChebSeries d = series_ - series_.reflected();
        return d.max_abs_on_grid() <= tol * (1.0 + series_.max_abs_on_grid());
    }

  private:
    ChebSeries series_;
    std::string tag_;
};

// Potential q_f = (f^{(n-2)/4})'' / f^{(n-2)/4} - omega f of the 1D reduction.
class Potential {
  public:
    Potential() : series_(ChebSeries::constant(0.0)), omega_(0.0), dim_n_(2) {}

    Potential(ChebSeries s, double omega, int dim_n)
        : series_(std::move(s)), omega_(omega), dim_n_(dim_n) {
        symmetric_ = check_symmetric();
    }

    double operator()(double x) const { return series_(x); }
    const ChebSeries& series() const { return series_; }
    double omega() const { return omega_; }
    int dim_n() const { return dim_n_; }
    bool symmetric() const { return symmetric_; }

    double derivative_at(double x, int order) const { return series_.derivative(order)(x); }

    Potential reflected() const { return Potential(series_.reflected(), omega_, dim_n_); }

    double max_abs() const { return series_.max_abs_on_grid(); }

  private:
    bool check_symmetric() const {
        ChebSeries d = series_ - series_.reflected();
        return d.max_abs_on_grid() <= 1e-10 * (1.0 + series_.max_abs_on_grid());
    }

    ChebSeries series_;
    double omega_;
    int dim_n_;
    bool symmetric_ = false;
};

inline Potential potential_from_factor(const ConformalFactor& f, int n, double omega) {
    if (n < 2) throw DomainError("geometry", "dimension n must be >= 2");
    if (f.series().min_on_grid() <= 0.0)
        throw DomainError("geometry", "conformal factor must be positive");

    if (n == 2) {
        // the (f^{(n-2)/4})'' / f^{(n-2)/4} term vanishes identically
        return Potential(f.series() * (-omega), omega, n);
    }

    // (f^e)''/f^e = e f''/f + e(e-1) (f'/f)^2 with e = (n-2)/4; this form uses
    // only derivatives of f's own series, so q_{f o eta} = q_f o eta holds to
    // roundoff (reflection commutes exactly with the derivative recurrence)
    double e = (n - 2) / 4.0;
    int deg = std::max(2 * f.degree(), 64);
    ChebSeries fs = f.series().chopped();
    ChebSeries fp = fs.derivative();
    ChebSeries fpp = fp.derivative();
    ChebSeries q = ChebSeries::interpolate(
        [&](double x) {
            double fv = fs(x);
            double r1 = fp(x) / fv;
            return e * fpp(x) / fv + e * (e - 1.0) * r1 * r1 - omega * fv;
        },
        deg);
    // tail-ratio gate, with an absolute floor so q ~ 0 (pure roundoff
    // coefficients) is not flagged
    double floor = 1e-10 * (1.0 + (1.0 + std::fabs(omega)) * f.series().max_abs_coeff());
    if (q.tail_ratio() > 1e-8 && q.max_abs_coeff() > floor)
        throw ResolutionError("geometry",
                              "series degree too low to resolve q = F''/F - omega f "
                              "(tail ratio " + std::to_string(q.tail_ratio()) + ")");
    q = q.chopped_to_noise_floor();
    // symmetric factors have exactly symmetric potentials; zero the odd part
    // so construction roundoff cannot break the flag
    ChebSeries fdiff = fs - fs.reflected();
    if (fdiff.max_abs_on_grid() <= 1e-12 * (1.0 + fs.max_abs_on_grid())) {
        std::vector<double> c = q.coeffs();
        for (std::size_t k = 1; k < c.size(); k += 2) c[k] = 0.0;
        q = ChebSeries(std::move(c));
    }
    return Potential(std::move(q), omega, n);
}

inline ConformalFactor apply_involution(const ConformalFactor& f) {
    return ConformalFactor(f.series().reflected(), f.tag().empty() ? "" : f.tag() + "@eta");
}

struct ClassReport {
    bool in_Cb = false;
    bool in_Db = false;         // "not detected up to k_max" when false
    bool in_CA = false;
    int k_max = 0;
    std::optional<int> db_first_k;
    double cb_value_0 = 0.0;    // |f'(0)/f(0)|
    double cb_value_1 = 0.0;
    double ca_worst = 0.0;      // max_k (||f^(k)|| + ||1/f||)
};

inline ClassReport class_membership(const ConformalFactor& f, int n, double omega, double A,
                                    int k_max) {
    ClassReport rep;
    rep.k_max = k_max;

    rep.cb_value_0 = std::fabs(f.derivative(0.0) / f(0.0));
    rep.cb_value_1 = std::fabs(f.derivative(1.0) / f(1.0));
    if (n == 2) {
        rep.in_Cb = true;  // |f'/f| <= 1/(n-2) vacuous
    } else {
        double bound = 1.0 / (n - 2);
        double slack = 1.0 + 1e-12;
        rep.in_Cb = rep.cb_value_0 <= bound * slack && rep.cb_value_1 <= bound * slack;
    }

    // D_b detection: the asymmetry at order k must clear both the spec
    // tolerance and the construction-noise amplification.  A coefficient
    // noise level delta on a degree-d series contributes up to
    // ~delta (2 d^2)^k to the k-th derivative, which is what caps useful
    // detection depth in practice (hence the explicit k_max in the report).
    Potential q = potential_from_factor(f, n, omega);
    double deg = std::max(4, q.series().degree());
    double noise0 = 1e-13 * (1.0 + q.max_abs());
    ChebSeries dk = q.series();
    for (int k = 0; k <= k_max; ++k) {
        if (k > 0) dk = dk.derivative();
        double q0 = dk(0.0), q1 = dk(1.0);
        double want = (k % 2 == 0) ? q1 : -q1;
        double scale = 1.0 + std::max(std::fabs(q0), std::fabs(q1));
        double noise_k = noise0 * std::pow(2.0 * deg * deg, k);
        if (std::fabs(q0 - want) > 1e-8 * scale + 50.0 * noise_k) {
            rep.in_Db = true;
            rep.db_first_k = k;
            break;
        }
    }

    double inv_f_max = 0.0;
    for (int i = 0; i <= 1024; ++i)
        inv_f_max = std::max(inv_f_max, 1.0 / f(static_cast<double>(i) / 1024));
    double worst = 0.0;
    for (int k = 0; k <= 2; ++k)
        worst = std::max(worst, f.series().derivative(k).max_abs_on_grid() + inv_f_max);
    rep.ca_worst = worst;
    rep.in_CA = worst <= A * (1.0 + 1e-12);
    return rep;
}

// ---- factor families -------------------------------------------------------

struct FactorSpec {
    std::string kind;                 // constant | affine | gaussian-bump | fourier
    std::vector<double> params;
    int degree = 64;
};

// Exact evaluator for each family; registered so oracle tests can compare the
// series against the closed form.
inline std::function<double(double)> factor_evaluator(const FactorSpec& spec) {
    if (spec.kind == "constant") {
        double c = spec.params.at(0);
        return [c](double) { return c; };
    }
    if (spec.kind == "affine") {
        double a = spec.params.at(0), b = spec.params.at(1);
        return [a, b](double x) { return a + b * x; };
    }
    if (spec.kind == "gaussian-bump") {
        // base + amp * exp(-(x-center)^2 / (2 width^2))
        double base = spec.params.at(0), amp = spec.params.at(1);
        double center = spec.params.at(2), width = spec.params.at(3);
        return [=](double x) {
            double u = (x - center) / width;
            return base + amp * std::exp(-0.5 * u * u);
        };
    }
    if (spec.kind == "fourier") {
        // a0 + sum_k a_k cos(2 pi k x) + b_k sin(2 pi k x); params: a0, a1, b1, a2, b2, ...
        std::vector<double> p = spec.params;
        return [p](double x) {
            const double two_pi = 6.28318530717958647692;
            double s = p.empty() ? 1.0 : p[0];
            for (std::size_t k = 1; 2 * k - 1 < p.size(); ++k) {
                s += p[2 * k - 1] * std::cos(two_pi * k * x);
                if (2 * k < p.size()) s += p[2 * k] * std::sin(two_pi * k * x);
            }
            return s;
        };
    }
    throw ConfigError("unknown factor kind: " + spec.kind);
}

inline ConformalFactor make_factor(const FactorSpec& spec) {
    auto fn = factor_evaluator(spec);
    int deg = spec.kind == "constant" ? 2 : (spec.kind == "affine" ? 4 : spec.degree);
    return ConformalFactor::from_function(fn, deg, spec.kind);
}

}  // namespace steklov
