#pragma once

#include <cmath>
#include <limits>

#include "gradbound/common.hpp"

namespace gradbound {

/// Second-order forward-mode number: value, d/dt, d2/dt2, plus the spatial
/// channels d/dx_k and the mixed d2/(dx_k dt) needed for g_{t x_k}.
struct Dual2 {
    double v = 0.0;
    double dt = 0.0;
    double dtt = 0.0;
    Point dx{0.0, 0.0, 0.0};
    Point dtx{0.0, 0.0, 0.0};

    Dual2() = default;
    Dual2(double value) : v(value) {}

    static Dual2 var_t(double t) {
        Dual2 d(t);
        d.dt = 1.0;
        return d;
    }
    static Dual2 var_x(double value, int axis) {
        Dual2 d(value);
        d.dx[axis] = 1.0;
        return d;
    }
    /// Coefficient seed: value and spatial gradient, no t-dependence.
    static Dual2 coefficient(double value, const Point& grad) {
        Dual2 d(value);
        d.dx = grad;
        return d;
    }
};

inline Dual2 operator+(const Dual2& a, const Dual2& b) {
    Dual2 r;
    r.v = a.v + b.v;
    r.dt = a.dt + b.dt;
    r.dtt = a.dtt + b.dtt;
    for (int k = 0; k < kMaxDim; ++k) {
        r.dx[k] = a.dx[k] + b.dx[k];
        r.dtx[k] = a.dtx[k] + b.dtx[k];
    }
    return r;
}

inline Dual2 operator-(const Dual2& a, const Dual2& b) {
    Dual2 r;
    r.v = a.v - b.v;
    r.dt = a.dt - b.dt;
    r.dtt = a.dtt - b.dtt;
    for (int k = 0; k < kMaxDim; ++k) {
        r.dx[k] = a.dx[k] - b.dx[k];
        r.dtx[k] = a.dtx[k] - b.dtx[k];
    }
    return r;
}

inline Dual2 operator-(const Dual2& a) {
    Dual2 r;
    r.v = -a.v;
    r.dt = -a.dt;
    r.dtt = -a.dtt;
    for (int k = 0; k < kMaxDim; ++k) {
        r.dx[k] = -a.dx[k];
        r.dtx[k] = -a.dtx[k];
    }
    return r;
}

/// Product with the seed convention 0 * inf = 0, so singular derivative
/// factors (e.g. sqrt'(0)) do not poison channels whose seeds vanish.
inline double mul0(double a, double b) {
    if (a == 0.0 || b == 0.0) return 0.0;
    return a * b;
}

inline Dual2 operator*(const Dual2& a, const Dual2& b) {
    Dual2 r;
    r.v = a.v * b.v;
    r.dt = mul0(a.dt, b.v) + mul0(a.v, b.dt);
    r.dtt = mul0(a.dtt, b.v) + 2.0 * mul0(a.dt, b.dt) + mul0(a.v, b.dtt);
    for (int k = 0; k < kMaxDim; ++k) {
        r.dx[k] = mul0(a.dx[k], b.v) + mul0(a.v, b.dx[k]);
        r.dtx[k] = mul0(a.dtx[k], b.v) + mul0(a.dt, b.dx[k]) +
                   mul0(a.dx[k], b.dt) + mul0(a.v, b.dtx[k]);
    }
    return r;
}

/// Lift a scalar map with derivatives f', f'' through the chain rule.
inline Dual2 chain(const Dual2& u, double f, double fp, double fpp) {
    Dual2 r;
    r.v = f;
    r.dt = mul0(fp, u.dt);
    r.dtt = mul0(fpp, mul0(u.dt, u.dt)) + mul0(fp, u.dtt);
    for (int k = 0; k < kMaxDim; ++k) {
        r.dx[k] = mul0(fp, u.dx[k]);
        r.dtx[k] = mul0(fpp, mul0(u.dx[k], u.dt)) + mul0(fp, u.dtx[k]);
    }
    return r;
}

inline Dual2 operator/(const Dual2& a, const Dual2& b) {
    const double w = b.v;
    return a * chain(b, 1.0 / w, -1.0 / (w * w), 2.0 / (w * w * w));
}

inline Dual2 operator+(const Dual2& a, double c) { return a + Dual2(c); }
inline Dual2 operator+(double c, const Dual2& a) { return Dual2(c) + a; }
inline Dual2 operator-(const Dual2& a, double c) { return a - Dual2(c); }
inline Dual2 operator-(double c, const Dual2& a) { return Dual2(c) - a; }
inline Dual2 operator*(const Dual2& a, double c) { return a * Dual2(c); }
inline Dual2 operator*(double c, const Dual2& a) { return Dual2(c) * a; }
inline Dual2 operator/(const Dual2& a, double c) { return a / Dual2(c); }
inline Dual2 operator/(double c, const Dual2& a) { return Dual2(c) / a; }

inline Dual2 exp(const Dual2& u) {
    const double e = std::exp(u.v);
    return chain(u, e, e, e);
}

inline Dual2 log(const Dual2& u) {
    return chain(u, std::log(u.v), 1.0 / u.v, -1.0 / (u.v * u.v));
}

inline Dual2 sqrt(const Dual2& u) {
    const double s = std::sqrt(u.v);
    return chain(u, s, 0.5 / s, -0.25 / (s * u.v));
}

inline Dual2 sin(const Dual2& u) {
    return chain(u, std::sin(u.v), std::cos(u.v), -std::sin(u.v));
}

inline Dual2 cos(const Dual2& u) {
    return chain(u, std::cos(u.v), -std::sin(u.v), -std::cos(u.v));
}

/// sqrt(u^2 + delta^2) - delta: a C^2 stand-in for |u|.
inline Dual2 abs_smooth(const Dual2& u, double delta = 1e-8) {
    const double s = std::sqrt(u.v * u.v + delta * delta);
    const double fp = u.v / s;
    const double fpp = delta * delta / (s * s * s);
    return chain(u, s - delta, fp, fpp);
}

/// u^c for a constant exponent, with the exact limit cases at u = 0.
inline Dual2 pow_const(const Dual2& u, double c) {
    if (u.v == 0.0) {
        if (c == 0.0) return Dual2(1.0);
        if (c == 1.0) return u;
        Dual2 r;  // value 0
        if (c == 2.0) {
            r.dtt = 2.0 * u.dt * u.dt;
            for (int k = 0; k < kMaxDim; ++k) r.dtx[k] = 2.0 * u.dx[k] * u.dt;
            return r;
        }
        if (c > 2.0) return r;  // all channels vanish
        if (c > 1.0) {
            // Second derivative genuinely diverges at the origin.
            r.dtt = u.dt == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
            return r;
        }
        throw RangeError("pow: exponent " + fmt_double(c) + " at zero base");
    }
    const double f = std::pow(u.v, c);
    return chain(u, f, c * f / u.v, c * (c - 1.0) * f / (u.v * u.v));
}

}  // namespace gradbound
