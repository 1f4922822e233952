#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "steklov/geometry.hpp"
#include "steklov/ode.hpp"
#include "steklov/quadrature.hpp"
#include "steklov/scaled_value.hpp"
#include "steklov/util.hpp"

namespace steklov {

// Transformation-operator kernel for -u'' + q u.  Solved in the characteristic
// coordinates J(u,v) = K(u+v, u-v) through the Volterra fixed point
//   J(u,v) = (1/2) int_0^u q + int_0^u int_0^v q(s+b) J(s,b) db ds,
// whose v-derivative reproduces the companion equation
//   dJ/dv = int_0^u q(v+a) J(a,v) da.
// J lives on [0,1]^2 at spacing 1/(2 grid_n); q is evaluated by reflection
// beyond x = 1 (only points outside the physical triangle u+v <= 1 see it, and
// those matter solely as interpolation padding).
class KernelGrid {
  public:
    KernelGrid(const Potential& q, int grid_n = 512, double tol = 1e-10)
        : q_(q), grid_n_(grid_n) {
        if (grid_n < 64) throw DomainError("transform", "grid_n must be >= 64");
        N_ = 2 * grid_n;
        h_ = 1.0 / N_;
        solve(tol);
    }

    const Potential& q() const { return q_; }
    int grid_n() const { return grid_n_; }
    double spacing() const { return 1.0 / grid_n_; }
    int iterations() const { return iterations_; }
    double residual() const { return residual_; }

    // K(x,t) on |t| <= x <= 1
    double K(double x, double t) const { return J_interp(0.5 * (x + t), 0.5 * (x - t)); }
    double H(double x, double t) const { return K(x, t) - K(x, -t); }
    double P(double x, double t) const { return K(x, t) + K(x, -t); }

    // diagonal K(x,x) = J(x,0)
    double K_diag(double x) const { return J_interp(x, 0.0); }

    // w(u) = max_{0<=xi<=u} |int_0^xi q|, sigma_0 = int |q|, sigma_1 = int sigma_0
    double w_bound(double u) const { return interp1(w_, u); }
    double sigma1(double x) const { return interp1(sig1_, x); }

    // Marchenko estimate |K(x,t)| <= (1/2) w((x+t)/2) exp(sigma1(x) -
    // sigma1((x+t)/2) - sigma1((x-t)/2))
    double marchenko_bound(double x, double t) const {
        double a = 0.5 * (x + t), b = 0.5 * (x - t);
        return 0.5 * w_bound(a) * std::exp(sigma1(x) - sigma1(a) - sigma1(b));
    }

  private:
    double q_ext(double s) const { return s <= 1.0 ? q_(s) : q_(2.0 - s); }

    void solve(double tol) {
        int n = N_ + 1;
        std::vector<double> qsum(2 * N_ + 1);
        for (int k = 0; k <= 2 * N_; ++k) qsum[k] = q_ext(k * h_);

        // base(i) = (1/2) int_0^{u_i} q, per-cell Gauss so the diagonal
        // identity is quadrature-exact
        std::vector<double> base(n, 0.0);
        for (int i = 1; i < n; ++i)
            base[i] = base[i - 1] +
                      0.5 * integrate_gl([this](double s) { return q_(std::min(s, 1.0)); },
                                         (i - 1) * h_, i * h_, 4);

        J_.assign(static_cast<std::size_t>(n) * n, 0.0);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) J_[idx(i, j)] = base[i];

        std::vector<double> Jn(J_.size());
        std::vector<double> colint(J_.size());
        iterations_ = 0;
        residual_ = 0.0;
        for (int sweep = 0; sweep < 200; ++sweep) {
            // colint(i,j) = int_0^{v_j} q(u_i + b) J(u_i, b) db  (trapezoid)
            for (int i = 0; i < n; ++i) {
                colint[idx(i, 0)] = 0.0;
                double w_prev = qsum[i] * J_[idx(i, 0)];
                for (int j = 1; j < n; ++j) {
                    double w_cur = qsum[i + j] * J_[idx(i, j)];
                    colint[idx(i, j)] = colint[idx(i, j - 1)] + 0.5 * h_ * (w_prev + w_cur);
                    w_prev = w_cur;
                }
            }
            // cum(i,j) = int_0^{u_i} colint db du, then J_new = base + cum
            double delta = 0.0;
            for (int j = 0; j < n; ++j) Jn[idx(0, j)] = base[0];
            std::vector<double> cum(n, 0.0);
            for (int i = 1; i < n; ++i) {
                for (int j = 0; j < n; ++j) {
                    cum[j] += 0.5 * h_ * (colint[idx(i - 1, j)] + colint[idx(i, j)]);
                    double v = base[i] + cum[j];
                    delta = std::max(delta, std::fabs(v - J_[idx(i, j)]));
                    Jn[idx(i, j)] = v;
                }
            }
            J_.swap(Jn);
            ++iterations_;
            residual_ = delta;
            if (delta < tol) break;
        }
        if (residual_ >= tol && iterations_ >= 200)
            throw IterationError("transform", "kernel Picard iteration did not converge");

        build_bounds();
    }

    void build_bounds() {
        int n = 4096;
        w_.assign(n + 1, 0.0);
        sig1_.assign(n + 1, 0.0);
        std::vector<double> iq(n + 1, 0.0), s0(n + 1, 0.0);
        double h = 1.0 / n;
        double runmax = 0.0;
        for (int i = 1; i <= n; ++i) {
            iq[i] = iq[i - 1] + integrate_gl([this](double s) { return q_(s); }, (i - 1) * h,
                                             i * h, 4);
            s0[i] = s0[i - 1] + integrate_gl([this](double s) { return std::fabs(q_(s)); },
                                             (i - 1) * h, i * h, 4);
            runmax = std::max(runmax, std::fabs(iq[i]));
            w_[i] = runmax;
            sig1_[i] = sig1_[i - 1] + 0.5 * h * (s0[i - 1] + s0[i]);
        }
    }

    static double interp1(const std::vector<double>& tab, double x) {
        int n = static_cast<int>(tab.size()) - 1;
        double g = std::clamp(x, 0.0, 1.0) * n;
        int i = std::min(static_cast<int>(g), n - 1);
        double a = g - i;
        return tab[i] * (1 - a) + tab[i + 1] * a;
    }

    std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * (N_ + 1) + j; }

    double J_node(int i, int j) const {
        i = std::clamp(i, 0, N_);
        j = std::clamp(j, 0, N_);
        return J_[idx(i, j)];
    }

    // Catmull-Rom in both directions; clamped stencil at the edges.
    double J_interp(double u, double v) const {
        double gu = std::clamp(u, 0.0, 1.0) / h_;
        double gv = std::clamp(v, 0.0, 1.0) / h_;
        int iu = std::min(static_cast<int>(gu), N_ - 1);
        int iv = std::min(static_cast<int>(gv), N_ - 1);
        double au = gu - iu, av = gv - iv;
        double wu[4], wv[4];
        cr_weights(au, wu);
        cr_weights(av, wv);
        double s = 0.0;
        for (int a = 0; a < 4; ++a) {
            double row = 0.0;
            for (int b = 0; b < 4; ++b) row += wv[b] * J_node(iu + a - 1, iv + b - 1);
            s += wu[a] * row;
        }
        return s;
    }

    static void cr_weights(double a, double w[4]) {
        double a2 = a * a, a3 = a2 * a;
        w[0] = 0.5 * (-a3 + 2 * a2 - a);
        w[1] = 0.5 * (3 * a3 - 5 * a2 + 2);
        w[2] = 0.5 * (-3 * a3 + 4 * a2 + a);
        w[3] = 0.5 * (a3 - a2);
    }

    Potential q_;
    int grid_n_;
    int N_ = 0;
    double h_ = 0;
    std::vector<double> J_;
    std::vector<double> w_, sig1_;
    int iterations_ = 0;
    double residual_ = 0;
};

inline KernelGrid solve_kernel(const Potential& q, int grid_n = 512, double tol = 1e-10) {
    return KernelGrid(q, grid_n, tol);
}

inline double sinh_ratio(double y, double t) {
    // sinh(y t)/y with the y -> 0 limit
    if (std::fabs(y) < 1e-12) return t;
    return std::sinh(y * t) / y;
}

struct RepresentationResiduals {
    double s0 = 0;
    double c0 = 0;
};

// Compares the kernel representations
//   s0(x,kappa) = sinh(yx)/y + int_0^x H(x,t) sinh(yt)/y dt
//   c0(x,kappa) = cosh(yx)   + int_0^x P(x,t) cosh(yt)  dt
// against the shooting integrator, in log space.
inline RepresentationResiduals representation_check(const KernelGrid& kg, double kappa, double x,
                                                    OdeOptions opt = {}) {
    double y = std::sqrt(std::max(0.0, kappa));
    double s_rep = sinh_ratio(y, x) +
                   integrate_gl([&](double t) { return kg.H(x, t) * sinh_ratio(y, t); }, 0.0, x,
                                256);
    double c_rep = std::cosh(y * x) +
                   integrate_gl([&](double t) { return kg.P(x, t) * std::cosh(y * t); }, 0.0, x,
                                256);
    FundamentalSolutions fs = fundamental_solutions(kg.q(), kappa, {x}, opt);
    const PairSample& L = fs.left_at(x);
    RepresentationResiduals r;
    r.s0 = relative_gap(ScaledValue(s_rep), L.s_sv());
    r.c0 = relative_gap(ScaledValue(c_rep), L.c_sv());
    return r;
}

enum class OperatorKind { Q, R, B, C, D, CD };

// Integral operators built from the transformation kernels of q and q~.
// Q and R transport the mixed products c0 s~0 and c~0 s0 onto sinh moments:
//   int_0^1 [c0 s~0 + c~0 s0] L dx = (1/y) int_0^1 sinh(2 tau y) BL(tau) dtau
// with B = Q + R = I + C, C Volterra upper-triangular.  D does the same for
// s0 s~0 with cosh moments:
//   int_0^1 L s0 s~0 dx = (1/y^2) int cosh(2 tau y) DL - (1/(2 y^2)) int L,
// DL = L/2 + (CD L).
//
// The x-kernels below follow the derivation of the sinh/cosh product splits;
// the two tail terms enter with opposite signs for Q/R and both negative for
// D (the printed forms elsewhere drop the sign flip of the tau < 0 half).
class TransformOperators {
  public:
    TransformOperators(const KernelGrid& kq, const KernelGrid& kqt) : kq_(&kq), kqt_(&kqt) {}

    // kernel of C (B = I + C): contributions of Q and R without the diagonal
    double H1(double x, double tau) const {
        double t0 = 2 * tau - x;
        double s = kqt_->P(x, t0) + kq_->H(x, t0) + kq_->P(x, t0) + kqt_->H(x, t0);
        s += cross_plus(*kq_, *kqt_, x, tau);   // int P~(x,2tau-t) H(x,t)
        s += cross_plus(*kqt_, *kq_, x, tau);   // int P(x,2tau-t) H~(x,t)
        if (x >= 2 * tau) {
            s += tail_a(*kq_, *kqt_, x, tau);   // + int H(x,t) P~(x,t-2tau)
            s -= tail_b(*kq_, *kqt_, x, tau);   // - int P~(x,t) H(x,t-2tau)
            s += tail_a(*kqt_, *kq_, x, tau);   // + int H~(x,t) P(x,t-2tau)
            s -= tail_b(*kqt_, *kq_, x, tau);   // - int P(x,t) H~(x,t-2tau)
        }
        return s;
    }

    // kernel of CD (D = I/2 + CD acting with the same Volterra structure)
    double HD(double x, double tau) const {
        double t0 = 2 * tau - x;
        double s = kq_->H(x, t0) + kqt_->H(x, t0);
        s += cross_hh(x, tau);                  // int H~(x,2tau-t) H(x,t)
        if (x >= 2 * tau) {
            s -= tail_hh(*kq_, *kqt_, x, tau);  // - int H(x,t) H~(x,t-2tau)
            s -= tail_hh(*kqt_, *kq_, x, tau);  // - int H~(x,t) H(x,t-2tau)
        }
        return s;
    }

    // (C L)(tau) = int_tau^1 H1(x,tau) L(x) dx, split at the x = 2tau kink
    double apply_C(const std::function<double(double)>& L, double tau, int n_quad = 48) const {
        return volterra_apply([this](double x, double t) { return H1(x, t); }, L, tau, n_quad);
    }

    double apply_B(const std::function<double(double)>& L, double tau, int n_quad = 48) const {
        return L(tau) + apply_C(L, tau, n_quad);
    }

    double apply_CD(const std::function<double(double)>& L, double tau, int n_quad = 48) const {
        return volterra_apply([this](double x, double t) { return HD(x, t); }, L, tau, n_quad);
    }

    double apply_D(const std::function<double(double)>& L, double tau, int n_quad = 48) const {
        return 0.5 * L(tau) + apply_CD(L, tau, n_quad);
    }

    double h1_sup(int samples = 96) const {
        double m = 0.0;
        for (int i = 0; i <= samples; ++i)
            for (int j = 0; j <= samples; ++j) {
                double tau = static_cast<double>(i) / samples;
                double x = tau + (1.0 - tau) * j / samples;
                m = std::max(m, std::fabs(H1(x, tau)));
            }
        return m;
    }

  private:
    template <class Kfn>
    double volterra_apply(Kfn kernel, const std::function<double(double)>& L, double tau,
                          int n_quad) const {
        if (tau >= 1.0) return 0.0;
        double split = 2 * tau;
        auto f = [&](double x) { return kernel(x, tau) * L(x); };
        if (split > tau && split < 1.0)
            return integrate_gl(f, tau, split, n_quad) + integrate_gl(f, split, 1.0, n_quad);
        return integrate_gl(f, tau, 1.0, n_quad);
    }

    // int_{max(2tau-x,0)}^{min(2tau,x)} A.P(x, 2tau - t) B.H(x, t) dt
    static double cross_plus(const KernelGrid& hker, const KernelGrid& pker, double x,
                             double tau) {
        double lo = std::max(2 * tau - x, 0.0), hi = std::min(2 * tau, x);
        if (hi <= lo) return 0.0;
        return integrate_gl(
            [&](double t) { return pker.P(x, 2 * tau - t) * hker.H(x, t); }, lo, hi, 32);
    }

    // int_{2tau}^{x} hker.H(x,t) pker.P(x, t - 2tau) dt
    static double tail_a(const KernelGrid& hker, const KernelGrid& pker, double x, double tau) {
        if (x <= 2 * tau) return 0.0;
        return integrate_gl(
            [&](double t) { return hker.H(x, t) * pker.P(x, t - 2 * tau); }, 2 * tau, x, 32);
    }

    // int_{2tau}^{x} pker.P(x,t) hker.H(x, t - 2tau) dt
    static double tail_b(const KernelGrid& hker, const KernelGrid& pker, double x, double tau) {
        if (x <= 2 * tau) return 0.0;
        return integrate_gl(
            [&](double t) { return pker.P(x, t) * hker.H(x, t - 2 * tau); }, 2 * tau, x, 32);
    }

    double cross_hh(double x, double tau) const {
        double lo = std::max(2 * tau - x, 0.0), hi = std::min(2 * tau, x);
        if (hi <= lo) return 0.0;
        return integrate_gl(
            [&](double t) { return kqt_->H(x, 2 * tau - t) * kq_->H(x, t); }, lo, hi, 32);
    }

    static double tail_hh(const KernelGrid& a, const KernelGrid& b, double x, double tau) {
        if (x <= 2 * tau) return 0.0;
        return integrate_gl(
            [&](double t) { return a.H(x, t) * b.H(x, t - 2 * tau); }, 2 * tau, x, 32);
    }

    const KernelGrid* kq_;
    const KernelGrid* kqt_;
};

// Nystrom form of one Volterra operator on a uniform tau grid; rows are exact
// Gauss rules with the grid function read through cubic interpolation, so the
// matrix action is a linear map on grid values.
class IntegralOperator {
  public:
    IntegralOperator(OperatorKind kind, const TransformOperators& ops, int n_grid = 257,
                     int n_quad = 48)
        : kind_(kind), n_(n_grid) {
        grid_.resize(n_);
        for (int i = 0; i < n_; ++i) grid_[i] = static_cast<double>(i) / (n_ - 1);
        switch (kind) {
            case OperatorKind::C:
            case OperatorKind::B:
                diagonal_ = (kind == OperatorKind::B) ? 1.0 : 0.0;
                build([&](double x, double t) { return ops.H1(x, t); }, n_quad);
                norm_bound_ = ops.h1_sup();
                break;
            case OperatorKind::CD:
            case OperatorKind::D:
                diagonal_ = (kind == OperatorKind::D) ? 0.5 : 0.0;
                build([&](double x, double t) { return ops.HD(x, t); }, n_quad);
                norm_bound_ = 0.0;
                break;
            default:
                throw DomainError("transform", "matrix form only built for B/C/D/CD");
        }
    }

    int size() const { return n_; }
    const std::vector<double>& grid() const { return grid_; }
    double norm_bound() const { return norm_bound_; }
    double diagonal() const { return diagonal_; }

    // pure kernel part: (C h)(tau_i)
    std::vector<double> apply_kernel(const std::vector<double>& h) const {
        std::vector<double> out(n_, 0.0);
        for (int i = 0; i < n_; ++i) {
            double s = 0.0;
            const double* row = &mat_[static_cast<std::size_t>(i) * n_];
            for (int j = 0; j < n_; ++j) s += row[j] * h[j];
            out[i] = s;
        }
        return out;
    }

    std::vector<double> apply(const std::vector<double>& h) const {
        std::vector<double> out = apply_kernel(h);
        if (diagonal_ != 0.0)
            for (int i = 0; i < n_; ++i) out[i] += diagonal_ * h[i];
        return out;
    }

    std::vector<double> sample(const std::function<double(double)>& f) const {
        std::vector<double> v(n_);
        for (int i = 0; i < n_; ++i) v[i] = f(grid_[i]);
        return v;
    }

  private:
    template <class Kfn>
    void build(Kfn kernel, int n_quad) {
        mat_.assign(static_cast<std::size_t>(n_) * n_, 0.0);
        const QuadRule& rule = gauss_legendre(n_quad);
        parallel_for(n_, [&](std::size_t ii) {
            int i = static_cast<int>(ii);
            double tau = grid_[i];
            double* row = &mat_[ii * n_];
            auto add_segment = [&](double a, double b) {
                if (b <= a) return;
                double mid = 0.5 * (a + b), half = 0.5 * (b - a);
                for (int qn = 0; qn < n_quad; ++qn) {
                    double x = mid + half * rule.nodes[qn];
                    double w = rule.weights[qn] * half * kernel(x, tau);
                    scatter(row, x, w);
                }
            };
            double split = 2 * tau;
            if (split > tau && split < 1.0) {
                add_segment(tau, split);
                add_segment(split, 1.0);
            } else {
                add_segment(tau, 1.0);
            }
        });
    }

    // distribute weight w at point x onto the cubic interpolation stencil
    void scatter(double* row, double x, double w) {
        double g = std::clamp(x, 0.0, 1.0) * (n_ - 1);
        int i = std::clamp(static_cast<int>(g), 0, n_ - 2);
        double a = g - i;
        double cw[4];
        double a2 = a * a, a3 = a2 * a;
        cw[0] = 0.5 * (-a3 + 2 * a2 - a);
        cw[1] = 0.5 * (3 * a3 - 5 * a2 + 2);
        cw[2] = 0.5 * (-3 * a3 + 4 * a2 + a);
        cw[3] = 0.5 * (a3 - a2);
        for (int k = 0; k < 4; ++k) {
            int j = std::clamp(i + k - 1, 0, n_ - 1);
            row[j] += w * cw[k];
        }
    }

    OperatorKind kind_;
    int n_;
    double diagonal_ = 0.0;
    double norm_bound_ = 0.0;
    std::vector<double> grid_;
    std::vector<double> mat_;
};

struct NeumannResult {
    std::vector<double> h;
    std::vector<double> term_norms;  // sup norms of C^k g
    int terms_used = 0;
};

// B^{-1} g = sum_k (-1)^k C^k g; the factorial decay of the Volterra powers
// makes this unconditional.  The result is checked against B h = g before
// returning.
inline NeumannResult invert_B(const IntegralOperator& B, const std::vector<double>& g,
                              double term_tol = 1e-12, int max_terms = 80) {
    if (B.diagonal() != 1.0)
        throw DomainError("transform", "invert_B expects the B = I + C operator");
    NeumannResult res;
    res.h = g;
    std::vector<double> term = g;
    double prev_norm = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= max_terms; ++k) {
        term = B.apply_kernel(term);
        double norm = 0.0;
        for (double v : term) norm = std::max(norm, std::fabs(v));
        res.term_norms.push_back(norm);
        double sign = (k % 2 == 0) ? 1.0 : -1.0;
        for (int i = 0; i < B.size(); ++i) res.h[i] += sign * term[i];
        res.terms_used = k;
        if (norm < term_tol) break;
        if (k > 30 && norm >= prev_norm)
            throw IterationError("transform", "Neumann series stopped decreasing");
        prev_norm = norm;
    }
    // residual gate ||B h - g||_2 <= 1e-9 ||g||_2
    std::vector<double> bh = B.apply(res.h);
    double num = 0.0, den = 0.0;
    for (int i = 0; i < B.size(); ++i) {
        double w = (i == 0 || i == B.size() - 1) ? 0.5 : 1.0;
        num += w * (bh[i] - g[i]) * (bh[i] - g[i]);
        den += w * g[i] * g[i];
    }
    if (std::sqrt(num) > 1e-9 * std::sqrt(den) + 1e-300)
        throw IterationError("transform", "Neumann inverse residual above 1e-9");
    return res;
}

inline double grid_l2(const std::vector<double>& v) {
    // trapezoid L2 on the uniform grid
    double s = 0.0;
    int n = static_cast<int>(v.size());
    for (int i = 0; i < n; ++i) {
        double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
        s += w * v[i] * v[i];
    }
    return std::sqrt(s / (n - 1));
}

// Residuals of the exact Wronskian-derived identities linking Weyl data of two
// potentials:
//   1)  D~ D (MN - 1/D^2) - M N~ D D~ + 1 = int (q - q~) c0 s~0
//   2)  D D~ (M~ N~ - 1/D~^2) - M~ N D D~ + 1 = int (q~ - q) c~0 s0
//   3)  (N - N~) D D~ = int (q~ - q) s0 s~0        (D here is Delta)
// In 3) the orientation follows s0'(1) = -N Delta: the Wronskian
// theta = s0 s~0' - s0' s~0 integrates (q~ - q) s0 s~0.
inline double integral_identity_residual(const Potential& q, const Potential& q_tilde, double z,
                                         OdeOptions opt = {}, int n_quad = 512) {
    const QuadRule& rule = gauss_legendre(n_quad);
    std::vector<double> xs(n_quad);
    for (int i = 0; i < n_quad; ++i) xs[i] = 0.5 * (1.0 + rule.nodes[i]);

    WeylData w = weyl_functions(q, z, opt);
    WeylData wt = weyl_functions(q_tilde, z, opt);
    FundamentalSolutions fs = fundamental_solutions(q, z, xs, opt);
    FundamentalSolutions fst = fundamental_solutions(q_tilde, z, xs, opt);

    auto filter = [&](const std::vector<PairSample>& v) {
        std::vector<PairSample> out;
        for (const auto& s : v)
            for (double x : xs)
                if (s.x == x) {
                    out.push_back(s);
                    break;
                }
        return out;
    };
    std::vector<PairSample> A = filter(fs.left), B = filter(fst.left);

    auto quad_sv = [&](const std::function<ScaledValue(const PairSample&, const PairSample&)>& f,
                       const std::function<double(double)>& weight) {
        std::vector<ScaledValue> terms;
        terms.reserve(n_quad);
        for (int i = 0; i < n_quad; ++i) {
            ScaledValue t = f(A[i], B[i]);
            terms.push_back(t * ScaledValue(weight(A[i].x) * rule.weights[i] * 0.5));
        }
        return scaled_sum(std::span<const ScaledValue>(terms));
    };

    ScaledValue M(w.M), N(w.N), Mt(wt.M), Nt(wt.N);
    ScaledValue DD = w.Delta * wt.Delta;
    ScaledValue one(1.0);

    auto dq = [&](double x) { return q(x) - q_tilde(x); };

    // identity 1
    ScaledValue lhs1 =
        scaled_sum({DD * M * N, -(wt.Delta / w.Delta), -(M * Nt * DD), one});
    ScaledValue rhs1 = quad_sv(
        [](const PairSample& a, const PairSample& b) { return a.c_sv() * b.s_sv(); }, dq);
    // identity 2
    ScaledValue lhs2 =
        scaled_sum({DD * Mt * Nt, -(w.Delta / wt.Delta), -(Mt * N * DD), one});
    ScaledValue rhs2 = quad_sv(
        [](const PairSample& a, const PairSample& b) { return b.c_sv() * a.s_sv(); },
        [&](double x) { return -dq(x); });
    // identity 3
    ScaledValue lhs3 = (N - Nt) * DD;
    ScaledValue rhs3 = quad_sv(
        [](const PairSample& a, const PairSample& b) { return a.s_sv() * b.s_sv(); },
        [&](double x) { return -dq(x); });

    auto resid = [](const ScaledValue& l, const ScaledValue& r) {
        ScaledValue num = l - r;
        if (num.is_zero()) return 0.0;
        ScaledValue den = scaled_sum({l.abs(), r.abs(), ScaledValue(1.0)});
        return std::exp(num.log_abs() - den.log_abs());
    };
    return std::max({resid(lhs1, rhs1), resid(lhs2, rhs2), resid(lhs3, rhs3)});
}

}  // namespace steklov
