#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <span>
#include <vector>

#include "steklov/scaled_value.hpp"

namespace steklov {

struct QuadRule {
    std::vector<double> nodes;    // on [-1,1]
    std::vector<double> weights;
};

// Gauss-Legendre nodes/weights by Newton iteration on P_n; cached per order.
inline const QuadRule& gauss_legendre(int n) {
    static std::map<int, QuadRule> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;

    QuadRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const double pi = 3.14159265358979323846;
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            pp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / pp;
            x -= dx;
            if (std::fabs(dx) < 1e-15) break;
        }
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = 2.0 / ((1.0 - x * x) * pp * pp);
        rule.weights[n - 1 - i] = rule.weights[i];
    }
    auto [pos, inserted] = cache.emplace(n, std::move(rule));
    return pos->second;
}

inline double integrate_gl(const std::function<double(double)>& f, double a, double b, int n) {
    if (a == b) return 0.0;
    const QuadRule& r = gauss_legendre(n);
    double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += r.weights[i] * f(mid + half * r.nodes[i]);
    return s * half;
}

// Quadrature where the integrand arrives as ScaledValue terms; the sum is
// aligned against the largest term so e^{800}-sized integrands are fine.
inline ScaledValue integrate_gl_scaled(const std::function<ScaledValue(double)>& f, double a,
                                       double b, int n) {
    if (a == b) return ScaledValue{};
    const QuadRule& r = gauss_legendre(n);
    double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    std::vector<ScaledValue> terms;
    terms.reserve(n);
    ScaledValue w_half(half);
    for (int i = 0; i < n; ++i) {
        ScaledValue v = f(mid + half * r.nodes[i]);
        terms.push_back(v * ScaledValue(r.weights[i]) * w_half);
    }
    return scaled_sum(std::span<const ScaledValue>(terms));
}

// Composite Simpson over a uniform sample (odd point count required).
inline double simpson_uniform(std::span<const double> y, double h) {
    std::size_t n = y.size();
    if (n < 3 || n % 2 == 0) {
        // fall back to trapezoid
        double s = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i) s += 0.5 * (y[i] + y[i + 1]);
        return s * h;
    }
    double s = y[0] + y[n - 1];
    for (std::size_t i = 1; i + 1 < n; i += 2) s += 4.0 * y[i];
    for (std::size_t i = 2; i + 1 < n; i += 2) s += 2.0 * y[i];
    return s * h / 3.0;
}

inline double l2_norm(const std::function<double(double)>& f, double a, double b, int n = 512) {
    double s = integrate_gl([&](double x) { return f(x) * f(x); }, a, b, n);
    return std::sqrt(std::max(0.0, s));
}

}  // namespace steklov
