#pragma once

#include <cmath>

namespace s2c {

// Value with first and second derivative with respect to one variable.
struct Jet2 {
    double v = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;

    Jet2() = default;
    Jet2(double value, double first = 0.0, double second = 0.0) : v(value), d1(first), d2(second) {}
};

inline Jet2 operator+(const Jet2& a, const Jet2& b) { return {a.v + b.v, a.d1 + b.d1, a.d2 + b.d2}; }
inline Jet2 operator-(const Jet2& a, const Jet2& b) { return {a.v - b.v, a.d1 - b.d1, a.d2 - b.d2}; }
inline Jet2 operator-(const Jet2& a) { return {-a.v, -a.d1, -a.d2}; }
inline Jet2 operator*(const Jet2& a, const Jet2& b)
{
    return {a.v * b.v, a.d1 * b.v + a.v * b.d1, a.d2 * b.v + 2.0 * a.d1 * b.d1 + a.v * b.d2};
}
inline Jet2 operator*(double s, const Jet2& a) { return {s * a.v, s * a.d1, s * a.d2}; }
inline Jet2 operator*(const Jet2& a, double s) { return s * a; }
inline Jet2 operator+(double s, const Jet2& a) { return {s + a.v, a.d1, a.d2}; }
inline Jet2 operator-(double s, const Jet2& a) { return {s - a.v, -a.d1, -a.d2}; }

// applies a scalar function with derivatives (f, f', f'') to a jet
inline Jet2 compose(const Jet2& a, double f, double f1, double f2)
{
    return {f, f1 * a.d1, f2 * a.d1 * a.d1 + f1 * a.d2};
}

inline Jet2 reciprocal(const Jet2& a)
{
    const double r = 1.0 / a.v;
    return compose(a, r, -r * r, 2.0 * r * r * r);
}

inline Jet2 operator/(const Jet2& a, const Jet2& b) { return a * reciprocal(b); }
inline Jet2 operator/(double s, const Jet2& b) { return s * reciprocal(b); }

inline Jet2 sin(const Jet2& a) { return compose(a, std::sin(a.v), std::cos(a.v), -std::sin(a.v)); }
inline Jet2 cos(const Jet2& a) { return compose(a, std::cos(a.v), -std::sin(a.v), -std::cos(a.v)); }
inline Jet2 exp(const Jet2& a)
{
    const double e = std::exp(a.v);
    return compose(a, e, e, e);
}
inline Jet2 log(const Jet2& a) { return compose(a, std::log(a.v), 1.0 / a.v, -1.0 / (a.v * a.v)); }
inline Jet2 sqrt(const Jet2& a)
{
    const double s = std::sqrt(a.v);
    return compose(a, s, 0.5 / s, -0.25 / (s * a.v));
}

}  // namespace s2c
