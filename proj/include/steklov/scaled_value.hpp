#pragma once

#include <cmath>
#include <cstdlib>
#include <limits>
#include <span>
#include <vector>

namespace steklov {

// Real number stored as sign * mantissa * e^{log_scale}, |mantissa| in [1,2) or 0.
// Keeps quantities like Delta(z) ~ e^{sqrt(z)} representable far beyond double
// range.  Multiplication and division act on log_scale exactly; addition aligns
// the two scales first and keeps only the dominant term once the scales differ
// by more than 700 (the smaller term is then below 1 ulp of the larger).
class ScaledValue {
  public:
    ScaledValue() : mantissa_(0.0), log_scale_(0.0) {}

    explicit ScaledValue(double v) { assign(v, 0.0); }

    static ScaledValue from_parts(double mantissa, double log_scale) {
        ScaledValue s;
        s.assign(mantissa, log_scale);
        return s;
    }

    // sign * e^{log_magnitude}
    static ScaledValue from_log(int sign, double log_magnitude) {
        ScaledValue s;
        if (sign == 0) return s;
        s.mantissa_ = sign > 0 ? 1.0 : -1.0;
        s.log_scale_ = log_magnitude;
        return s;
    }

    double mantissa() const { return mantissa_; }
    double log_scale() const { return log_scale_; }
    bool is_zero() const { return mantissa_ == 0.0; }
    int sign() const { return mantissa_ > 0 ? 1 : (mantissa_ < 0 ? -1 : 0); }

    // ln |value|; -inf for zero
    double log_abs() const {
        if (is_zero()) return -std::numeric_limits<double>::infinity();
        return std::log(std::fabs(mantissa_)) + log_scale_;
    }

    // Collapse back to double; overflows to +-inf, underflows to 0.
    double value() const {
        if (is_zero()) return 0.0;
        if (log_scale_ > 700.0) {
            return mantissa_ > 0 ? std::numeric_limits<double>::infinity()
                                 : -std::numeric_limits<double>::infinity();
        }
        if (log_scale_ < -700.0) return 0.0;
        return mantissa_ * std::exp(log_scale_);
    }

    ScaledValue operator-() const {
        ScaledValue s = *this;
        s.mantissa_ = -s.mantissa_;
        return s;
    }

    ScaledValue operator*(const ScaledValue& o) const {
        ScaledValue s;
        if (is_zero() || o.is_zero()) return s;
        s.assign(mantissa_ * o.mantissa_, log_scale_ + o.log_scale_);
        return s;
    }

    ScaledValue operator/(const ScaledValue& o) const {
        ScaledValue s;
        if (is_zero()) return s;
        s.assign(mantissa_ / o.mantissa_, log_scale_ - o.log_scale_);
        return s;
    }

    ScaledValue operator+(const ScaledValue& o) const {
        if (is_zero()) return o;
        if (o.is_zero()) return *this;
        const ScaledValue& big = (log_scale_ >= o.log_scale_) ? *this : o;
        const ScaledValue& small = (log_scale_ >= o.log_scale_) ? o : *this;
        double d = small.log_scale_ - big.log_scale_;
        if (d < -700.0) return big;
        ScaledValue s;
        s.assign(big.mantissa_ + small.mantissa_ * std::exp(d), big.log_scale_);
        return s;
    }

    ScaledValue operator-(const ScaledValue& o) const { return *this + (-o); }

    ScaledValue& operator*=(const ScaledValue& o) { return *this = *this * o; }
    ScaledValue& operator+=(const ScaledValue& o) { return *this = *this + o; }

    ScaledValue abs() const {
        ScaledValue s = *this;
        s.mantissa_ = std::fabs(s.mantissa_);
        return s;
    }

    bool abs_less(const ScaledValue& o) const {
        if (is_zero()) return !o.is_zero();
        if (o.is_zero()) return false;
        return log_abs() < o.log_abs();
    }

  private:
    void assign(double m, double ls) {
        if (m == 0.0 || !std::isfinite(m)) {
            mantissa_ = std::isfinite(m) ? 0.0 : m;
            log_scale_ = 0.0;
            return;
        }
        int e;
        double frac = std::frexp(m, &e);  // |frac| in [0.5,1)
        mantissa_ = frac * 2.0;           // |mantissa_| in [1,2)
        log_scale_ = ls + (e - 1) * 0.6931471805599453094172321;
    }

    double mantissa_;
    double log_scale_;
};

inline ScaledValue sv_mul(const ScaledValue& a, const ScaledValue& b, const ScaledValue& c) {
    return a * b * c;
}

// Sum of scaled values by alignment against the largest magnitude term.
inline ScaledValue scaled_sum(std::span<const ScaledValue> terms) {
    double max_log = -std::numeric_limits<double>::infinity();
    for (const auto& t : terms)
        if (!t.is_zero()) max_log = std::max(max_log, t.log_abs());
    if (!std::isfinite(max_log)) return ScaledValue{};
    double acc = 0.0;
    for (const auto& t : terms) {
        if (t.is_zero()) continue;
        double d = t.log_abs() - max_log;
        if (d > -745.0) acc += (t.sign() > 0 ? 1.0 : -1.0) * std::exp(d);
    }
    return ScaledValue::from_parts(acc, max_log);
}

inline ScaledValue scaled_sum(std::initializer_list<ScaledValue> terms) {
    std::vector<ScaledValue> v(terms);
    return scaled_sum(std::span<const ScaledValue>(v));
}

// |a-b| / max(|a|,|b|), safe for huge magnitudes; 0 if both zero.
inline double relative_gap(const ScaledValue& a, const ScaledValue& b) {
    if (a.is_zero() && b.is_zero()) return 0.0;
    ScaledValue diff = a - b;
    if (diff.is_zero()) return 0.0;
    double ref = std::max(a.log_abs(), b.log_abs());
    return std::exp(diff.log_abs() - ref);
}

}  // namespace steklov
