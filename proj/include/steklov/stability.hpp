#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "steklov/compare.hpp"
#include "steklov/dnmap.hpp"
#include "steklov/muntz.hpp"
#include "steklov/transform.hpp"

namespace steklov {

struct WeylGapRow {
    int m = 0;
    double kappa = 0;
    double det_combination_gap = 0;  // |(MN - 1/D^2) - (M~N~ - 1/D~^2)|
    double trace_gap = 0;            // |Tr block - Tr block~|
};

// Per-m discrete Weyl-Titchmarsh gaps of the two factors; requires symmetric
// factors (the endpoint-matching argument behind the estimate needs it).
inline std::vector<WeylGapRow> discrete_weyl_gaps(const ConformalFactor& f,
                                                  const ConformalFactor& f_tilde, int n,
                                                  double omega, int m_lo, int m_hi,
                                                  OdeOptions opt = {}) {
    if (!f.is_symmetric() || !f_tilde.is_symmetric())
        throw DomainError("stability", "discrete_weyl_gaps requires symmetric factors");
    Potential q = potential_from_factor(f, n, omega);
    Potential qt = potential_from_factor(f_tilde, n, omega);

    std::vector<WeylGapRow> rows(m_hi - m_lo + 1);
    parallel_for(rows.size(), [&](std::size_t i) {
        int m = m_lo + static_cast<int>(i);
        double kappa = sphere_kappa(n, m);
        WeylData w = weyl_functions(q, kappa, opt);
        WeylData wt = weyl_functions(qt, kappa, opt);
        ScaledValue comb = ScaledValue(w.M) * ScaledValue(w.N) -
                           w.inv_Delta * w.inv_Delta;
        ScaledValue combt = ScaledValue(wt.M) * ScaledValue(wt.N) -
                            wt.inv_Delta * wt.inv_Delta;
        double f0 = f(0.0), f1 = f(1.0);
        double C0 = (n - 2) * f.derivative(0.0) / f0 / (4.0 * std::sqrt(f0));
        double C1 = (n - 2) * f.derivative(1.0) / f1 / (4.0 * std::sqrt(f1));
        double g0 = f_tilde(0.0), g1 = f_tilde(1.0);
        double C0t = (n - 2) * f_tilde.derivative(0.0) / g0 / (4.0 * std::sqrt(g0));
        double C1t = (n - 2) * f_tilde.derivative(1.0) / g1 / (4.0 * std::sqrt(g1));
        double tr = -w.M / std::sqrt(f0) + C0 - w.N / std::sqrt(f1) - C1;
        double trt = -wt.M / std::sqrt(g0) + C0t - wt.N / std::sqrt(g1) - C1t;
        rows[i] = {m, kappa, std::fabs((comb - combt).value()), std::fabs(tr - trt)};
    });
    return rows;
}

struct StabilityConfig {
    int m_max = 60;
    int kernel_grid = 256;
    double kernel_tol = 1e-10;
    int n_tau = 257;
    OdeOptions ode{};
    // family-level modulus slope sup_u w(h,u)/u; 0 means "measure on this h"
    double modulus_const = 0.0;
    // Jackson-constant floor for E2 <= C_J w(h, eps2)
    double jackson_const = 2.0;
    int threads = 0;
};

struct ExperimentRecord {
    std::string mode;  // "steklov" | "calderon"
    double delta = 0.0;
    double eps = 0.0;
    bool closeness_holds = false;
    int pairing_k0_first_m = -1;
    std::vector<WeylGapRow> trace_det_gaps;

    double q_gap_L2 = 0;         // moment-chain bound on ||q - q~||_2
    double q_gap_L2_direct = 0;  // true L2 gap
    double q_gap_sup = 0;        // true sup gap
    double q_gap_H1 = 0;
    double f_gap_sup = 0;        // true sup gap of the factors
    double f_gap_pathway = 0;    // factor-gap bound via the quotient-derivative chain
    double bound_product = 0;    // q_gap_L2 * ln(1/eps)

    double h_norm_direct = 0;    // ||h||_2
    double h_norm_bound = 0;     // moment-chain bound on ||h||_2
    double measured_moment_const = 0;
    double modulus_slope = 0;    // measured sup_u w(h,u)/u
    double jackson_ratio = 0;    // measured E2 / w(h,eps2)
    int muntz_m = 0;
    double eps2_at_m = 0;
    double b_inv_norm_bound = 0;
    double bl_norm_bound = 0;    // chain bound on ||BL||_2 (or ||DL||)
    double bl_norm_direct = 0;
    bool diverging = false;      // Calderon endpoint gate
    double calderon_slope = 0;
    double mean_q_gap = 0;       // |int (q - q~)|
};

namespace stability_detail {

// first m with the same-index pairing within eps from there on (the k = 0
// block alignment regime)
inline int pairing_k0_first(const SteklovSpectrum& S, const SteklovSpectrum& St, double eps) {
    for (std::size_t m = 0; m < std::min(S.rows.size(), St.rows.size()); ++m) {
        bool ok = true;
        for (std::size_t j = m; j < std::min(S.rows.size(), St.rows.size()); ++j) {
            if (std::fabs(S.rows[j].lambda_minus - St.rows[j].lambda_minus) > eps ||
                std::fabs(S.rows[j].lambda_plus - St.rows[j].lambda_plus) > eps) {
                ok = false;
                break;
            }
        }
        if (ok) return static_cast<int>(m);
    }
    return -1;
}

struct FoldedMoments {
    std::function<double(double)> h;  // h(t) = t^alpha g(-ln t)
    double alpha = 0;
};

// g(tau) = GL(1-tau) 1_[0,1] + GL(tau-1) 1_[1,2]; h(t) = t^alpha g(-ln t).
inline FoldedMoments fold_operator_output(const std::function<double(double)>& GL, double alpha) {
    FoldedMoments fm;
    fm.alpha = alpha;
    fm.h = [GL, alpha](double t) {
        if (t <= 0.0 || t > 1.0) return 0.0;
        double tau = -std::log(t);
        double g;
        if (tau <= 1.0)
            g = GL(1.0 - tau);
        else if (tau <= 2.0)
            g = GL(tau - 1.0);
        else
            return 0.0;
        return std::pow(t, alpha) * g;
    };
    return fm;
}

}  // namespace stability_detail

// Full Steklov stability chain: measure eps, build BL, fold into the moment
// problem, bound ||h|| by the Muntz projection estimate, convert back to a
// bound on ||q - q~||_2 through the Neumann bound on B^{-1}.  The directly
// computed gaps ride along for comparison.
inline ExperimentRecord run_steklov_stability(const ConformalFactor& f,
                                              const ConformalFactor& f_tilde, int n, double omega,
                                              const StabilityConfig& cfg = {}) {
    if (!f.is_symmetric() || !f_tilde.is_symmetric())
        throw DomainError("stability", "Steklov chain requires symmetric factors");

    ExperimentRecord rec;
    rec.mode = "steklov";

    Potential q = potential_from_factor(f, n, omega);
    Potential qt = potential_from_factor(f_tilde, n, omega);

    // 1. spectra + measured eps
    SteklovSpectrum S = steklov_spectrum(f, n, omega, cfg.m_max, cfg.ode, cfg.threads);
    SteklovSpectrum St = steklov_spectrum(f_tilde, n, omega, cfg.m_max, cfg.ode, cfg.threads);
    rec.eps = measure_epsilon(S, St);
    rec.closeness_holds = spectra_close(S, St, rec.eps).holds;
    rec.pairing_k0_first_m = stability_detail::pairing_k0_first(S, St, rec.eps);

    // 2. discrete Weyl gaps over the top half of the range
    rec.trace_det_gaps =
        discrete_weyl_gaps(f, f_tilde, n, omega, cfg.m_max / 2, cfg.m_max, cfg.ode);

    // 3. kernels and the B operator
    KernelGrid kq(q, cfg.kernel_grid, cfg.kernel_tol);
    KernelGrid kqt(qt, cfg.kernel_grid, cfg.kernel_tol);
    TransformOperators ops(kq, kqt);
    IntegralOperator B(OperatorKind::B, ops, cfg.n_tau);

    auto L_fn = [&](double x) { return q(x) - qt(x); };
    std::vector<double> Lg = B.sample(L_fn);
    std::vector<double> BLg = B.apply(Lg);
    const std::vector<double>& grid = B.grid();
    auto BL = [&](double tau) {
        // cubic read of the grid values
        double g = std::clamp(tau, 0.0, 1.0) * (B.size() - 1);
        int i = std::clamp(static_cast<int>(g), 0, B.size() - 2);
        double a = g - i;
        auto at = [&](int j) { return BLg[std::clamp(j, 0, B.size() - 1)]; };
        double c0 = at(i - 1), c1 = at(i), c2 = at(i + 1), c3 = at(i + 2);
        return 0.5 * ((-c0 + 3 * c1 - 3 * c2 + c3) * a * a * a +
                      (2 * c0 - 5 * c1 + 4 * c2 - c3) * a * a + (-c0 + c2) * a + 2 * c1);
    };
    rec.bl_norm_direct = grid_l2(BLg);

    // 4. Muntz system and m(eps)
    int m0 = (n == 2) ? 0 : 1;
    MuntzSystem sys = muntz_sequence(n, m0, std::max(cfg.m_max, m0 + 40));
    double alpha = 2.0 * std::sqrt(sphere_kappa(n, m0)) - 1.0;
    TruncationChoice tc = truncation_rule(rec.eps, sys.bound_C(), sys.bound_M1());
    rec.muntz_m = tc.m;
    rec.eps2_at_m = blaschke_index(sys, tc.m).eps2_product;

    // 5. fold BL into h and take moments
    auto fm = stability_detail::fold_operator_output(BL, alpha);
    MomentBound mb = moment_bound(rec.eps, sys, fm.h, tc.m);
    rec.h_norm_direct = std::sqrt(mb.h_norm2);
    rec.measured_moment_const = mb.measured_max_moment / std::max(rec.eps, 1e-300);

    // 6. E2 term through Jackson + modulus; the modulus slope may be supplied
    // at family level so the bound does not inherit the member's delta scale
    double u_ref = std::min(std::max(rec.eps2_at_m, 1e-4), 0.3);
    double w_at = modulus_of_continuity(fm.h, u_ref);
    rec.modulus_slope = w_at / u_ref;
    double e2_true = std::sqrt(mb.approx_term);
    double w_eps2 = modulus_of_continuity(fm.h, std::min(std::max(rec.eps2_at_m, 1e-6), 0.999));
    rec.jackson_ratio = w_eps2 > 0 ? e2_true / w_eps2 : 0.0;
    double c_fam = cfg.modulus_const > 0 ? cfg.modulus_const : rec.modulus_slope;
    double c_jackson = std::max(cfg.jackson_const, rec.jackson_ratio);
    double e2_bound = c_jackson * c_fam * rec.eps2_at_m;

    double proj_bound = mb.projection_term;  // eps_used^2 sum (row sums)^2
    rec.h_norm_bound = std::sqrt(proj_bound + e2_bound * e2_bound);

    // 7. ||BL|| <= e^{max(0, 2a+1)/2} ||h||-bound; ||L|| <= ||B^{-1}|| ||BL||
    double conv = std::exp(0.5 * std::max(0.0, 2.0 * alpha + 1.0));
    rec.bl_norm_bound = conv * rec.h_norm_bound;
    double h1sup = B.norm_bound();
    rec.b_inv_norm_bound = 1.0 + h1sup * std::exp(h1sup);
    rec.q_gap_L2 = rec.b_inv_norm_bound * rec.bl_norm_bound;
    rec.bound_product = rec.q_gap_L2 * std::log(1.0 / rec.eps);

    // 8. direct gaps
    ChebSeries Ld = q.series() - qt.series();
    rec.q_gap_L2_direct = l2_norm([&](double x) { return Ld(x); }, 0.0, 1.0);
    rec.q_gap_sup = Ld.max_abs_on_grid();
    ChebSeries Ldp = Ld.derivative();
    double h1 = std::sqrt(rec.q_gap_L2_direct * rec.q_gap_L2_direct +
                          std::pow(l2_norm([&](double x) { return Ldp(x); }, 0.0, 1.0), 2));
    rec.q_gap_H1 = h1;
    rec.f_gap_sup = (f.series() - f_tilde.series()).max_abs_on_grid();

    // 9. factor-gap pathway (omega = 0, n >= 3): with Phi = f^{(n-2)/4}
    // (the power that makes q = Phi''/Phi), (Phi~ Phi' - Phi~' Phi)' =
    // Phi~ Phi (q - q~); the zero x0 of f~f' - f f~' exists because the
    // endpoint values match.
    if (omega == 0.0 && n >= 3) {
        double p = (n - 2) / 4.0;
        auto F = [&](double x) { return std::pow(f(x), p); };
        auto Ft = [&](double x) { return std::pow(f_tilde(x), p); };
        auto phi = [&](double x) { return f_tilde(x) * f.derivative(x) - f(x) * f_tilde.derivative(x); };
        // sign-change bisection for x0 with phi(x0) = 0
        double x0 = 0.5;
        bool found = false;
        double prev = phi(0.0);
        for (int i = 1; i <= 256 && !found; ++i) {
            double x = static_cast<double>(i) / 256;
            double cur = phi(x);
            if (prev == 0.0 || prev * cur <= 0.0) {
                double a = (i - 1) / 256.0, b = x;
                for (int it = 0; it < 60; ++it) {
                    double mid = 0.5 * (a + b);
                    if (phi(a) * phi(mid) <= 0) b = mid; else a = mid;
                }
                x0 = 0.5 * (a + b);
                found = true;
            }
            prev = cur;
        }
        if (found) {
            auto G = [&](double x) {
                return integrate_gl([&](double t) { return Ft(t) * F(t) * (q(t) - qt(t)); },
                                    x0, x, 128);
            };
            // |f - f~| = |Phi^s - Phi~^s| <= s max(Phi,Phi~)^{s-1} |Phi - Phi~|
            // with s = 4/(n-2) (s >= 1 up to n = 6; below use the min instead)
            double s = 4.0 / (n - 2);
            double phi_max = 0.0, phi_min = 1e300;
            for (int i = 0; i <= 64; ++i) {
                double x = static_cast<double>(i) / 64;
                phi_max = std::max({phi_max, F(x), Ft(x)});
                phi_min = std::min({phi_min, F(x), Ft(x)});
            }
            double conv_pow = s * std::max(std::pow(phi_max, s - 1.0), std::pow(phi_min, s - 1.0));
            double worst = 0.0;
            for (int i = 0; i <= 64; ++i) {
                double x = static_cast<double>(i) / 64;
                double ratio_drift = std::fabs(integrate_gl(
                    [&](double t) { return G(t) / (Ft(t) * Ft(t)); }, 0.0, x, 64));
                double Fgap = Ft(x) * ratio_drift;  // |Phi - Phi~| <= Phi~ |Phi/Phi~ - 1|
                worst = std::max(worst, conv_pow * Fgap);
            }
            rec.f_gap_pathway = worst;
        } else {
            rec.f_gap_pathway = -1.0;  // diagnostic: no sign change located
        }
    }
    return rec;
}

// Calderon chain: endpoint gate, eps = |int(q-q~)| + ||Lambda - Lambda~||_*,
// then the D-operator moment problem with exponents 2 y_m.
inline ExperimentRecord run_calderon_stability(const ConformalFactor& f,
                                               const ConformalFactor& f_tilde, int n, double omega,
                                               const StabilityConfig& cfg = {}) {
    ExperimentRecord rec;
    rec.mode = "calderon";

    double e0 = std::fabs(f(0.0) - f_tilde(0.0));
    double e1 = std::fabs(f(1.0) - f_tilde(1.0));
    if (e0 > 1e-9 * (1.0 + f(0.0)) || e1 > 1e-9 * (1.0 + f(1.0)))
        throw DomainError("stability",
                          "Calderon chain requires f(0)=f~(0) and f(1)=f~(1); the operator "
                          "difference is unbounded otherwise");

    Potential q = potential_from_factor(f, n, omega);
    Potential qt = potential_from_factor(f_tilde, n, omega);

    CalderonNorm cn = calderon_norm_difference(f, f_tilde, n, omega, cfg.m_max, cfg.ode,
                                               cfg.threads);
    rec.diverging = cn.diverging;
    rec.calderon_slope = cn.slope;
    rec.mean_q_gap = std::fabs(integrate_gl([&](double x) { return q(x) - qt(x); }, 0, 1, 256));
    rec.eps = std::max(rec.mean_q_gap + cn.sup_norm, 1e-14);  // identical factors: floor

    // kernels and the D operator
    KernelGrid kq(q, cfg.kernel_grid, cfg.kernel_tol);
    KernelGrid kqt(qt, cfg.kernel_grid, cfg.kernel_tol);
    TransformOperators ops(kq, kqt);
    IntegralOperator D(OperatorKind::D, ops, cfg.n_tau);

    auto L_fn = [&](double x) { return q(x) - qt(x); };
    std::vector<double> Lg = D.sample(L_fn);
    std::vector<double> DLg = D.apply(Lg);
    auto DL = [&](double tau) {
        double g = std::clamp(tau, 0.0, 1.0) * (D.size() - 1);
        int i = std::clamp(static_cast<int>(g), 0, D.size() - 2);
        double a = g - i;
        auto at = [&](int j) { return DLg[std::clamp(j, 0, D.size() - 1)]; };
        double c0 = at(i - 1), c1 = at(i), c2 = at(i + 1), c3 = at(i + 2);
        return 0.5 * ((-c0 + 3 * c1 - 3 * c2 + c3) * a * a * a +
                      (2 * c0 - 5 * c1 + 4 * c2 - c3) * a * a + (-c0 + c2) * a + 2 * c1);
    };
    rec.bl_norm_direct = grid_l2(DLg);

    // moment problem with exponents 2 y_m: lambda'_k = 2(y_{m0+k} - y_{m0}),
    // alpha' = 2 y_{m0}
    int m0 = (n == 2) ? 0 : 1;
    MuntzSystem sys = muntz_sequence(n, m0, std::max(cfg.m_max, m0 + 40));
    double alpha = 2.0 * std::sqrt(sphere_kappa(n, m0));
    TruncationChoice tc = truncation_rule(rec.eps, sys.bound_C(), sys.bound_M1());
    rec.muntz_m = tc.m;
    rec.eps2_at_m = blaschke_index(sys, tc.m).eps2_product;

    auto fm = stability_detail::fold_operator_output(DL, alpha);
    MomentBound mb = moment_bound(rec.eps, sys, fm.h, tc.m);
    rec.h_norm_direct = std::sqrt(mb.h_norm2);
    rec.measured_moment_const = mb.measured_max_moment / std::max(rec.eps, 1e-300);

    double u_ref = std::min(std::max(rec.eps2_at_m, 1e-4), 0.3);
    double w_at = modulus_of_continuity(fm.h, u_ref);
    rec.modulus_slope = w_at / u_ref;
    double e2_true = std::sqrt(mb.approx_term);
    double w_eps2 = modulus_of_continuity(fm.h, std::min(std::max(rec.eps2_at_m, 1e-6), 0.999));
    rec.jackson_ratio = w_eps2 > 0 ? e2_true / w_eps2 : 0.0;
    double c_fam = cfg.modulus_const > 0 ? cfg.modulus_const : rec.modulus_slope;
    double c_jackson = std::max(cfg.jackson_const, rec.jackson_ratio);
    double e2_bound = c_jackson * c_fam * rec.eps2_at_m;
    rec.h_norm_bound = std::sqrt(mb.projection_term + e2_bound * e2_bound);

    double conv = std::exp(0.5 * std::max(0.0, 2.0 * alpha + 1.0));
    rec.bl_norm_bound = conv * rec.h_norm_bound;
    // D = I/2 + CD: ||D^{-1}|| <= 2 (1 + 2||HD|| e^{2||HD||})
    double hd_sup = 0.0;
    for (int i = 0; i <= 64; ++i)
        for (int j = 0; j <= 64; ++j) {
            double tau = i / 64.0;
            double x = tau + (1.0 - tau) * j / 64.0;
            hd_sup = std::max(hd_sup, std::fabs(ops.HD(x, tau)));
        }
    rec.b_inv_norm_bound = 2.0 * (1.0 + 2.0 * hd_sup * std::exp(2.0 * hd_sup));
    rec.q_gap_L2 = rec.b_inv_norm_bound * rec.bl_norm_bound;
    rec.bound_product = rec.q_gap_L2 * std::log(1.0 / rec.eps);

    ChebSeries Ld = q.series() - qt.series();
    rec.q_gap_L2_direct = l2_norm([&](double x) { return Ld(x); }, 0.0, 1.0);
    rec.q_gap_sup = Ld.max_abs_on_grid();
    rec.f_gap_sup = (f.series() - f_tilde.series()).max_abs_on_grid();
    return rec;
}

// delta-family driver: f~ = f + delta * bump.  The modulus constant measured
// on the largest member is reused for the whole family so the chain bound
// carries one family-level constant, as the log-stability statement intends.
struct FamilyResult {
    std::vector<ExperimentRecord> records;
    double family_modulus_const = 0;
};

inline FamilyResult run_delta_family(const ConformalFactor& f,
                                     const std::function<double(double)>& bump,
                                     const std::vector<double>& deltas, int n, double omega,
                                     StabilityConfig cfg = {}, const std::string& mode = "steklov") {
    if (deltas.empty()) throw ConfigError("delta list must not be empty");
    FamilyResult out;
    for (std::size_t i = 0; i < deltas.size(); ++i) {
        double d = deltas[i];
        ConformalFactor ft = ConformalFactor::from_function(
            [&](double x) { return f(x) + d * bump(x); }, std::max(f.degree(), 64),
            f.tag() + "+bump");
        ExperimentRecord rec = (mode == "calderon")
                                   ? run_calderon_stability(f, ft, n, omega, cfg)
                                   : run_steklov_stability(f, ft, n, omega, cfg);
        rec.delta = d;
        if (i == 0) {
            out.family_modulus_const = rec.modulus_slope;
            cfg.modulus_const = out.family_modulus_const;
            // rerun the first member with the family constant for uniformity
            rec = (mode == "calderon") ? run_calderon_stability(f, ft, n, omega, cfg)
                                       : run_steklov_stability(f, ft, n, omega, cfg);
            rec.delta = d;
        }
        out.records.push_back(std::move(rec));
    }
    return out;
}

}  // namespace steklov
