#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "steklov/geometry.hpp"
#include "steklov/scaled_value.hpp"
#include "steklov/util.hpp"

namespace steklov {

struct OdeOptions {
    double rtol = 1e-11;
    double renorm_log = 30.0;   // rescale once any component exceeds e^{30}
    long max_steps = 50'000'000;
};

// One x-location of a fundamental pair: true values are
//   c = c_m * e^{log_scale}, etc.  Both members of a pair share the scale so
// their Wronskian is (c*sp - cp*s) * e^{2 log_scale}.
struct PairSample {
    double x = 0;
    double c = 0, cp = 0, s = 0, sp = 0;
    double log_scale = 0;

    ScaledValue c_sv() const { return ScaledValue::from_parts(c, log_scale); }
    ScaledValue cp_sv() const { return ScaledValue::from_parts(cp, log_scale); }
    ScaledValue s_sv() const { return ScaledValue::from_parts(s, log_scale); }
    ScaledValue sp_sv() const { return ScaledValue::from_parts(sp, log_scale); }

    ScaledValue wronskian_cs() const {
        ScaledValue w = c_sv() * sp_sv() - cp_sv() * s_sv();
        return w;
    }

    // W = 1 hides under products ~ e^{2 sqrt(z) x} once the solutions grow;
    // the determinant is resolvable from the stored pair only while this
    // headroom is well above machine epsilon.
    double wronskian_headroom() const {
        double p = std::fabs(c * sp) + std::fabs(cp * s);
        double w = std::fabs(c * sp - cp * s);
        return p > 0 ? w / p : 1.0;
    }
};

// Integrates the pair u'' = (q(x)+z) u with Cauchy data (1,0) and (0,1) at
// x = `from`, marching to x = `to` (either direction), landing exactly on the
// requested sample points.  Dormand-Prince 5(4), PI-free step control.
class PairIntegrator {
  public:
    PairIntegrator(const Potential& q, double z, OdeOptions opt = {})
        : q_(&q), z_(z), opt_(opt) {}

    std::vector<PairSample> integrate(double from, double to,
                                      const std::vector<double>& sample_xs) const {
        std::vector<double> targets = sample_xs;
        bool forward = to > from;
        std::sort(targets.begin(), targets.end());
        if (!forward) std::reverse(targets.begin(), targets.end());
        if (targets.empty() || targets.back() != to) targets.push_back(to);

        std::array<double, 4> y{1.0, 0.0, 0.0, 1.0};  // (c, c', s, s')
        double x = from;
        double log_scale = 0.0;
        double span = std::fabs(to - from);
        double h = (forward ? 1.0 : -1.0) * std::min(1e-4, span) /
                   (1.0 + std::sqrt(std::fabs(z_)));

        std::vector<PairSample> out;
        out.reserve(targets.size());
        std::size_t ti = 0;
        // emit any samples exactly at the start
        while (ti < targets.size() && targets[ti] == from) {
            out.push_back({x, y[0], y[1], y[2], y[3], log_scale});
            ++ti;
        }

        long steps = 0;
        double h_nat = h;  // natural step kept across clips to sample points
        while (ti < targets.size()) {
            double target = targets[ti];
            double h_try = h_nat;
            bool clipped = false;
            if (forward ? (x + h_try >= target) : (x + h_try <= target)) {
                h_try = target - x;
                clipped = true;
            }
            std::array<double, 4> y_new;
            double err = step(y, x, h_try, y_new);
            double tol = opt_.rtol;
            double fac = err > 0 ? 0.9 * std::pow(tol / err, 0.2) : 5.0;
            fac = std::clamp(fac, 0.2, 5.0);
            if (err <= tol) {
                x = clipped ? target : x + h_try;
                y = y_new;
                double m = max_abs(y);
                while (m > std::exp(opt_.renorm_log)) {
                    double s = std::exp(-opt_.renorm_log);
                    for (double& v : y) v *= s;
                    log_scale += opt_.renorm_log;
                    m *= s;
                }
                while (ti < targets.size() && x == targets[ti]) {
                    out.push_back({x, y[0], y[1], y[2], y[3], log_scale});
                    ++ti;
                }
                if (!clipped) h_nat = h_try * fac;  // keep h_nat across clips
            } else {
                h_nat = h_try * fac;
            }
            if (std::fabs(h_nat) < 1e-15 * (1.0 + std::fabs(x)))
                throw IntegrationError("ode",
                                       "step size underflow at x = " + std::to_string(x));
            if (++steps > opt_.max_steps)
                throw IntegrationError("ode", "step budget exhausted");
        }
        return out;
    }

  private:
    static double max_abs(const std::array<double, 4>& y) {
        return std::max(std::max(std::fabs(y[0]), std::fabs(y[1])),
                        std::max(std::fabs(y[2]), std::fabs(y[3])));
    }

    void rhs(double x, const std::array<double, 4>& y, std::array<double, 4>& dy) const {
        double w = (*q_)(x) + z_;
        dy[0] = y[1];
        dy[1] = w * y[0];
        dy[2] = y[3];
        dy[3] = w * y[2];
    }

    // One DP5(4) step; returns the scaled error estimate.
    double step(const std::array<double, 4>& y, double x, double h,
                std::array<double, 4>& y_out) const {
        static constexpr double a21 = 1.0 / 5;
        static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
        static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
        static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                                a53 = 64448.0 / 6561, a54 = -212.0 / 729;
        static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                                a64 = 49.0 / 176, a65 = -5103.0 / 18656;
        static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                                b5 = -2187.0 / 6784, b6 = 11.0 / 84;
        static constexpr double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                                e4 = 125.0 / 192 - 393.0 / 640,
                                e5 = -2187.0 / 6784 + 92097.0 / 339200,
                                e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;

        std::array<double, 4> k1, k2, k3, k4, k5, k6, k7, tmp;
        rhs(x, y, k1);
        for (int i = 0; i < 4; ++i) tmp[i] = y[i] + h * a21 * k1[i];
        rhs(x + h / 5, tmp, k2);
        for (int i = 0; i < 4; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        rhs(x + 3 * h / 10, tmp, k3);
        for (int i = 0; i < 4; ++i) tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        rhs(x + 4 * h / 5, tmp, k4);
        for (int i = 0; i < 4; ++i)
            tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        rhs(x + 8 * h / 9, tmp, k5);
        for (int i = 0; i < 4; ++i)
            tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        rhs(x + h, tmp, k6);
        for (int i = 0; i < 4; ++i)
            y_out[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        rhs(x + h, y_out, k7);

        // mixed control: components passing through zero (c' at the launch
        // point, solutions near a turning point) are measured against a small
        // fraction of the largest component instead of their own magnitude
        double maxcomp = 0.0;
        for (int i = 0; i < 4; ++i)
            maxcomp = std::max(maxcomp, std::max(std::fabs(y[i]), std::fabs(y_out[i])));
        double err = 0.0;
        for (int i = 0; i < 4; ++i) {
            double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                            e7 * k7[i]);
            double scale = 1e-300 + std::max({std::fabs(y[i]), std::fabs(y_out[i]),
                                              1e-4 * maxcomp});
            err = std::max(err, std::fabs(e) / scale);
        }
        return err;
    }

    const Potential* q_;
    double z_;
    OdeOptions opt_;
};

struct FundamentalSolutions {
    double z = 0;
    std::vector<PairSample> left;    // (c0,s0): data at requested xs, ascending
    std::vector<PairSample> right;   // (c1,s1): data at requested xs, ascending

    const PairSample& left_at(double x) const { return find(left, x); }
    const PairSample& right_at(double x) const { return find(right, x); }

  private:
    static const PairSample& find(const std::vector<PairSample>& v, double x) {
        for (const auto& s : v)
            if (std::fabs(s.x - x) <= 1e-14) return s;
        throw NumericalError("ode", "no sample stored at x = " + std::to_string(x));
    }
};

// Solves from both endpoints with the four Cauchy data sets of the fundamental
// systems; `sample_xs` are honored for both directions.
inline FundamentalSolutions fundamental_solutions(const Potential& q, double z,
                                                  std::vector<double> sample_xs = {},
                                                  OdeOptions opt = {}) {
    for (double x0 : {0.0, 0.5, 1.0})
        if (std::find(sample_xs.begin(), sample_xs.end(), x0) == sample_xs.end())
            sample_xs.push_back(x0);

    FundamentalSolutions fs;
    fs.z = z;
    PairIntegrator integ(q, z, opt);
    fs.left = integ.integrate(0.0, 1.0, sample_xs);
    fs.right = integ.integrate(1.0, 0.0, sample_xs);
    std::sort(fs.right.begin(), fs.right.end(),
              [](const PairSample& a, const PairSample& b) { return a.x < b.x; });
    return fs;
}

struct WeylData {
    double z = 0;
    double M = 0;
    double N = 0;
    ScaledValue Delta;
    ScaledValue inv_Delta;
    // endpoint values of the fundamental systems
    ScaledValue c0_1, c0p_1, s0_1, s0p_1;
    ScaledValue c1_0, c1p_0, s1_0, s1p_0;
    double wronskian_residual = 0;
    // residuals of the four endpoint / Weyl relations
    double rel_s0 = 0, rel_s0p = 0, rel_c0 = 0, rel_c0p = 0;
    double mn_symmetry_gap = 0;  // |M-N|/|M|, meaningful for symmetric q
};

// Scale of Delta for the free problem, used for pole proximity detection.
inline double free_delta_log(double z) {
    if (z <= 0.0) return 0.0;
    double y = std::sqrt(z);
    if (y < 1e-8) return 0.0;
    // ln(sinh(y)/y)
    if (y > 30.0) return y - std::log(2.0 * y);
    return std::log(std::sinh(y) / y);
}

inline WeylData weyl_functions(const Potential& q, double z, OdeOptions opt = {},
                               int conservation_samples = 32) {
    std::vector<double> xs;
    for (int i = 1; i <= conservation_samples; ++i)
        xs.push_back(static_cast<double>(i) / (conservation_samples + 1));
    FundamentalSolutions fs = fundamental_solutions(q, z, xs, opt);

    WeylData w;
    w.z = z;

    // Wronskian conservation of each pair, sampled along the interval where
    // the determinant is numerically resolvable (headroom above cancellation)
    double worst = 0.0;
    auto check_conservation = [&](const std::vector<PairSample>& pair) {
        for (const auto& smp : pair) {
            if (smp.wronskian_headroom() < 1e-5) continue;
            ScaledValue wr = smp.wronskian_cs();
            ScaledValue scale2 = ScaledValue::from_log(1, 2.0 * smp.log_scale);
            worst = std::max(worst, relative_gap(wr * scale2, ScaledValue(1.0)));
        }
    };
    check_conservation(fs.left);
    check_conservation(fs.right);
    w.wronskian_residual = worst;

    // Wronskians of the cross pairs at x = 1/2 where both scales are comparable
    const PairSample& L = fs.left_at(0.5);
    const PairSample& R = fs.right_at(0.5);
    ScaledValue s0 = L.s_sv(), s0p = L.sp_sv(), c0 = L.c_sv(), c0p = L.cp_sv();
    ScaledValue s1 = R.s_sv(), s1p = R.sp_sv(), c1 = R.c_sv(), c1p = R.cp_sv();
    ScaledValue delta = s0 * s1p - s0p * s1;  // W(s0, s1)
    ScaledValue D = c0 * s1p - c0p * s1;      // W(c0, s1)
    ScaledValue E = c1 * s0p - c1p * s0;      // W(c1, s0)

    if (delta.is_zero() || delta.log_abs() < free_delta_log(z) - 20.0)
        throw PoleProximityError("ode",
                                 "Delta(z) vanishes near z = " + std::to_string(z) +
                                     " (omega near Dirichlet spectrum)");

    w.Delta = delta;
    w.inv_Delta = ScaledValue(1.0) / delta;
    w.M = -(D / delta).value();
    w.N = -(E / delta).value();

    const PairSample& L1 = fs.left_at(1.0);
    const PairSample& R0 = fs.right_at(0.0);
    w.s0_1 = L1.s_sv();
    w.s0p_1 = L1.sp_sv();
    w.c0_1 = L1.c_sv();
    w.c0p_1 = L1.cp_sv();
    w.c1_0 = R0.c_sv();
    w.c1p_0 = R0.cp_sv();
    w.s1_0 = R0.s_sv();
    w.s1p_0 = R0.sp_sv();

    ScaledValue Msv(w.M), Nsv(w.N);
    w.rel_s0 = relative_gap(w.s0_1, delta);
    w.rel_s0p = relative_gap(w.s0p_1, -(Nsv * delta));
    w.rel_c0 = relative_gap(w.c0_1, -(Msv * delta));
    w.rel_c0p = relative_gap(w.c0p_1, Msv * Nsv * delta - w.inv_Delta);
    if (w.M != 0.0) w.mn_symmetry_gap = std::fabs(w.M - w.N) / std::fabs(w.M);
    return w;
}

}  // namespace steklov
