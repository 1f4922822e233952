#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "steklov/util.hpp"

namespace steklov {

// Chebyshev series on [0,1] (first kind, mapped argument t = 2x-1):
//   f(x) = sum_k a_k T_k(2x-1).
// Derivatives are exact linear maps on the coefficients, which is what the
// beta_j recursion needs; finite differences would not survive 6+ rounds of
// differentiation.
class ChebSeries {
  public:
    ChebSeries() : coeffs_(1, 0.0) {}

    explicit ChebSeries(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
        if (coeffs_.empty()) coeffs_.push_back(0.0);
    }

    static ChebSeries constant(double c) { return ChebSeries(std::vector<double>{c}); }

    // Interpolate fn on the degree-n Chebyshev-Lobatto grid (n+1 points).
    static ChebSeries interpolate(const std::function<double(double)>& fn, int degree) {
        int n = degree;
        const double pi = 3.14159265358979323846;
        std::vector<double> vals(n + 1);
        for (int j = 0; j <= n; ++j) {
            double t = std::cos(pi * j / n);  // Lobatto node on [-1,1]
            vals[j] = fn(0.5 * (t + 1.0));
        }
        // DCT-I style transform (O(n^2); degrees are <= a few hundred)
        std::vector<double> a(n + 1, 0.0);
        for (int k = 0; k <= n; ++k) {
            double s = 0.0;
            for (int j = 0; j <= n; ++j) {
                double w = (j == 0 || j == n) ? 0.5 : 1.0;
                s += w * vals[j] * std::cos(pi * k * j / n);
            }
            a[k] = 2.0 * s / n;
        }
        a[0] *= 0.5;
        a[n] *= 0.5;
        return ChebSeries(std::move(a));
    }

    int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
    const std::vector<double>& coeffs() const { return coeffs_; }

    // Clenshaw at x in [0,1].
    double operator()(double x) const {
        double t = 2.0 * x - 1.0;
        double b1 = 0.0, b2 = 0.0;
        for (int k = degree(); k >= 1; --k) {
            double b0 = 2.0 * t * b1 - b2 + coeffs_[k];
            b2 = b1;
            b1 = b0;
        }
        return t * b1 - b2 + coeffs_[0];
    }

    // d/dx; factor 2 from the [0,1] -> [-1,1] map.
    ChebSeries derivative() const {
        int n = degree();
        if (n == 0) return constant(0.0);
        std::vector<double> b(n + 2, 0.0);
        for (int k = n - 1; k >= 0; --k)
            b[k] = b[k + 2] + 2.0 * (k + 1) * coeffs_[k + 1];
        b[0] *= 0.5;
        b.resize(n);  // derivative has degree n-1
        for (double& c : b) c *= 2.0;
        return ChebSeries(std::move(b));
    }

    ChebSeries derivative(int order) const {
        ChebSeries d = *this;
        for (int i = 0; i < order; ++i) d = d.derivative();
        return d;
    }

    // x -> 1-x maps T_k(t) -> T_k(-t) = (-1)^k T_k(t): exact sign flip.
    ChebSeries reflected() const {
        std::vector<double> c = coeffs_;
        for (std::size_t k = 1; k < c.size(); k += 2) c[k] = -c[k];
        return ChebSeries(std::move(c));
    }

    ChebSeries operator*(double s) const {
        std::vector<double> c = coeffs_;
        for (double& v : c) v *= s;
        return ChebSeries(std::move(c));
    }

    ChebSeries operator+(const ChebSeries& o) const {
        std::vector<double> c(std::max(coeffs_.size(), o.coeffs_.size()), 0.0);
        for (std::size_t k = 0; k < coeffs_.size(); ++k) c[k] += coeffs_[k];
        for (std::size_t k = 0; k < o.coeffs_.size(); ++k) c[k] += o.coeffs_[k];
        return ChebSeries(std::move(c));
    }

    ChebSeries operator-(const ChebSeries& o) const { return *this + (o * -1.0); }

    // Product via T_i T_j = (T_{i+j} + T_{|i-j|})/2, truncated at max_degree.
    ChebSeries multiply(const ChebSeries& o, int max_degree = 256) const {
        int n1 = degree(), n2 = o.degree();
        int n = std::min(n1 + n2, max_degree);
        std::vector<double> c(n + 1, 0.0);
        for (int i = 0; i <= n1; ++i) {
            if (coeffs_[i] == 0.0) continue;
            for (int j = 0; j <= n2; ++j) {
                double p = 0.5 * coeffs_[i] * o.coeffs_[j];
                if (p == 0.0) continue;
                int s = i + j, d = std::abs(i - j);
                if (s <= n) c[s] += p;
                if (d <= n) c[d] += p;
            }
        }
        return ChebSeries(std::move(c));
    }

    double max_abs_coeff() const {
        double m = 0.0;
        for (double c : coeffs_) m = std::max(m, std::fabs(c));
        return m;
    }

    // Relative size of the trailing coefficients; the resolution gate used by
    // potential_from_factor.
    double tail_ratio(int tail = 4) const {
        double all = max_abs_coeff();
        if (all == 0.0) return 0.0;
        int n = degree();
        double t = 0.0;
        for (int k = std::max(0, n - tail + 1); k <= n; ++k)
            t = std::max(t, std::fabs(coeffs_[k]));
        return t / all;
    }

    ChebSeries truncated(int max_degree) const {
        if (degree() <= max_degree) return *this;
        std::vector<double> c(coeffs_.begin(), coeffs_.begin() + max_degree + 1);
        return ChebSeries(std::move(c));
    }

    // Drop the roundoff tail: coefficients below rel_tol * max|a_k|.  Keeps
    // derivative recurrences from amplifying interpolation noise.
    ChebSeries chopped(double rel_tol = 1e-14) const {
        double m = max_abs_coeff();
        if (m == 0.0) return constant(0.0);
        int last = 0;
        for (int k = 0; k <= degree(); ++k)
            if (std::fabs(coeffs_[k]) > rel_tol * m) last = k;
        std::vector<double> c(coeffs_.begin(), coeffs_.begin() + last + 1);
        return ChebSeries(std::move(c));
    }

    // Chop at the noise plateau: coefficients of a resolved series decay and
    // then sit flat at the construction noise level; everything at or near
    // that plateau is dropped.  Series whose tail is exactly zero (true
    // polynomials) are kept whole.
    ChebSeries chopped_to_noise_floor() const {
        int n = degree();
        if (n < 8) return chopped();
        double floor = 0.0;
        for (int k = n - n / 4; k <= n; ++k) floor = std::max(floor, std::fabs(coeffs_[k]));
        if (floor == 0.0) return chopped();
        int last = 0;
        for (int k = 0; k <= n; ++k)
            if (std::fabs(coeffs_[k]) > 30.0 * floor) last = k;
        std::vector<double> c(coeffs_.begin(), coeffs_.begin() + last + 1);
        return ChebSeries(std::move(c)).chopped();
    }

    double max_abs_on_grid(int n_grid = 1024) const {
        double m = 0.0;
        for (int i = 0; i <= n_grid; ++i)
            m = std::max(m, std::fabs((*this)(static_cast<double>(i) / n_grid)));
        return m;
    }

    double min_on_grid(int n_grid = 1024) const {
        double m = (*this)(0.0);
        for (int i = 1; i <= n_grid; ++i)
            m = std::min(m, (*this)(static_cast<double>(i) / n_grid));
        return m;
    }

  private:
    std::vector<double> coeffs_;
};

}  // namespace steklov
