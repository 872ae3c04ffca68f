#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "gradbound/common.hpp"

namespace gradbound {

/// Convex extension coefficients on [0, t0] for profiles like t - a sqrt(t)
/// whose raw form is unusable near 0. q(t) = A t^3 + B t^2, and for the
/// quadratic fallback the value mismatch at t0 moves into `offset`, added to
/// the raw profile on [t0, inf).
struct KnotSpline {
    bool cubic = true;
    double A = 0.0;
    double B = 0.0;
    double offset = 0.0;
};

/// Fit q with q(0)=0, q'(0)=0, q(t0)=g0, q'(t0)=g1. The cubic matches both
/// value and slope; it is convex on [0,t0] iff q'' >= 0 at both endpoints.
inline bool knot_cubic_is_convex(double g0, double g1, double t0) {
    const double A = (g1 * t0 - 2.0 * g0) / (t0 * t0 * t0);
    const double B = (3.0 * g0 - g1 * t0) / (t0 * t0);
    return B >= -1e-14 && 3.0 * A * t0 + B >= -1e-14;
}

inline KnotSpline fit_knot_spline(double g0, double g1, double t0, bool force_quadratic) {
    KnotSpline s;
    if (!force_quadratic && knot_cubic_is_convex(g0, g1, t0)) {
        s.cubic = true;
        s.A = (g1 * t0 - 2.0 * g0) / (t0 * t0 * t0);
        s.B = (3.0 * g0 - g1 * t0) / (t0 * t0);
        s.offset = 0.0;
    } else {
        s.cubic = false;
        s.A = 0.0;
        s.B = g1 / (2.0 * t0);  // slope matched at t0
        s.offset = 0.5 * g1 * t0 - g0;
    }
    return s;
}

// ---------------------------------------------------------------------------
// Growth descriptor
// ---------------------------------------------------------------------------

/// Asymptotic behaviour of h, used for the analytic beta-window arithmetic.
/// Slow profiles carry the decay exponents d1, d2 with
/// h'(t)/t ~ t^-d1 and h''(t) ~ t^-d2 (up to log factors, flagged strict).
struct GrowthDescriptor {
    enum class Class { Fast, Borderline, Slow };
    Class cls = Class::Fast;
    double d1 = 0.0;
    double d2 = 0.0;
    bool strict = false;  // log factor at the critical rate

    /// Smallest admissible beta beyond the generic 1/n bound, or 0 when the
    /// profile imposes none. The lower h-condition needs
    /// 2 beta - d2 + d1 (n-2)/n >= 0 (strictly when `strict`).
    double beta_floor(int n) const {
        if (cls != Class::Slow) return 0.0;
        return 0.5 * (d2 - d1 * static_cast<double>(n - 2) / n);
    }
};

// ---------------------------------------------------------------------------
// HProfile
// ---------------------------------------------------------------------------

/// The comparison function h of the structural assumptions: convex,
/// increasing, h(0) = 0, with first and second derivatives. Log-scale
/// accessors avoid overflow for exponential profiles.
struct HProfile {
    std::string name;
    double t0 = 1.0;
    std::function<double(double)> h;
    std::function<double(double)> hp;
    std::function<double(double)> hpp;
    // Optional log-scale forms; defaulted from the value forms when absent.
    std::function<double(double)> log_hp;
    std::function<double(double)> log_hpp;
    std::function<double(double)> log1p_h;
    GrowthDescriptor growth;
    double t_representable = std::numeric_limits<double>::infinity();

    double log_hp_at(double t) const {
        return log_hp ? log_hp(t) : std::log(hp(t));
    }
    double log_hpp_at(double t) const {
        return log_hpp ? log_hpp(t) : std::log(hpp(t));
    }
    double log1p_h_at(double t) const {
        return log1p_h ? log1p_h(t) : std::log1p(h(t));
    }
};

inline double K_M(const HProfile& h, double t) {
    if (t < 1e-14) t = 1e-14;
    return std::max(h.hpp(t), h.hp(t) / t);
}

inline double K_m(const HProfile& h, double t) {
    if (t < 1e-14) t = 1e-14;
    return std::min(h.hpp(t), h.hp(t) / t);
}

inline double log_K_M(const HProfile& h, double t) {
    if (t < 1e-14) t = 1e-14;
    return std::max(h.log_hpp_at(t), h.log_hp_at(t) - std::log(t));
}

inline double log_K_m(const HProfile& h, double t) {
    if (t < 1e-14) t = 1e-14;
    return std::min(h.log_hpp_at(t), h.log_hp_at(t) - std::log(t));
}

/// Numerically classify an unlabelled profile from its large-t behaviour.
/// Sampled estimate; slow profiles are marked strict (open window endpoint).
inline void estimate_growth(HProfile& p) {
    const double T = std::isfinite(p.t_representable)
                         ? std::min(256.0, 0.5 * p.t_representable)
                         : 256.0;
    const double r2 = p.hp(T) / T;
    const double r1 = p.hp(0.5 * T) / (0.5 * T);
    if (r2 > 2.0 * r1) {
        p.growth.cls = GrowthDescriptor::Class::Fast;
        return;
    }
    const double d1 = -std::log2(r2 / r1);
    const double d2 = -std::log2(p.hpp(T) / p.hpp(0.5 * T));
    if (std::fabs(d1) < 0.05 && std::fabs(d2) < 0.05) {
        p.growth.cls = GrowthDescriptor::Class::Borderline;
    } else {
        p.growth.cls = GrowthDescriptor::Class::Slow;
        p.growth.d1 = std::max(0.0, d1);
        p.growth.d2 = std::max(0.0, d2);
        p.growth.strict = true;
    }
}

// ---------------------------------------------------------------------------
// Builtin profiles
// ---------------------------------------------------------------------------

/// h(t) = t^2 / 2.
inline HProfile h_quadratic() {
    HProfile p;
    p.name = "t^2/2";
    p.h = [](double t) { return 0.5 * t * t; };
    p.hp = [](double t) { return t; };
    p.hpp = [](double) { return 1.0; };
    p.growth.cls = GrowthDescriptor::Class::Borderline;
    return p;
}

/// h(t) = t^q, q > 1.
inline HProfile h_power(double q) {
    if (q <= 1.0) throw InputError("h_power: exponent must exceed 1");
    HProfile p;
    p.name = "t^" + fmt_double(q);
    p.h = [q](double t) { return std::pow(t, q); };
    p.hp = [q](double t) { return q * std::pow(t, q - 1.0); };
    p.hpp = [q](double t) { return q * (q - 1.0) * std::pow(t, q - 2.0); };
    if (q > 2.0) {
        p.growth.cls = GrowthDescriptor::Class::Fast;
    } else if (q == 2.0) {
        p.growth.cls = GrowthDescriptor::Class::Borderline;
    } else {
        p.growth.cls = GrowthDescriptor::Class::Slow;
        p.growth.d1 = 2.0 - q;
        p.growth.d2 = 2.0 - q;
        p.growth.strict = false;
    }
    return p;
}

/// h(t) = e^{c t^2} - 1.
inline HProfile h_exponential(double c) {
    if (c <= 0.0) throw InputError("h_exponential: coefficient must be positive");
    HProfile p;
    p.name = "exp(" + fmt_double(c) + " t^2)-1";
    p.h = [c](double t) { return std::expm1(c * t * t); };
    p.hp = [c](double t) { return 2.0 * c * t * std::exp(c * t * t); };
    p.hpp = [c](double t) {
        return 2.0 * c * std::exp(c * t * t) * (1.0 + 2.0 * c * t * t);
    };
    p.log_hp = [c](double t) { return std::log(2.0 * c * t) + c * t * t; };
    p.log_hpp = [c](double t) {
        return std::log(2.0 * c) + c * t * t + std::log1p(2.0 * c * t * t);
    };
    p.log1p_h = [c](double t) { return c * t * t; };
    p.growth.cls = GrowthDescriptor::Class::Fast;
    p.t_representable = std::sqrt(690.0 / c);
    return p;
}

/// h(t) = t^q log(1+t), q >= 1.
inline HProfile h_orlicz_log(double q = 1.0) {
    if (q < 1.0) throw InputError("h_orlicz_log: exponent must be at least 1");
    HProfile p;
    p.name = "t^" + fmt_double(q) + " log(1+t)";
    p.h = [q](double t) { return std::pow(t, q) * std::log1p(t); };
    p.hp = [q](double t) {
        return q * std::pow(t, q - 1.0) * std::log1p(t) + std::pow(t, q) / (1.0 + t);
    };
    p.hpp = [q](double t) {
        const double l = std::log1p(t);
        return q * (q - 1.0) * std::pow(t, q - 2.0) * l +
               2.0 * q * std::pow(t, q - 1.0) / (1.0 + t) -
               std::pow(t, q) / ((1.0 + t) * (1.0 + t));
    };
    if (q >= 2.0) {
        p.growth.cls = GrowthDescriptor::Class::Fast;
    } else {
        p.growth.cls = GrowthDescriptor::Class::Slow;
        p.growth.d1 = 2.0 - q;
        p.growth.d2 = 2.0 - q;
        p.growth.strict = true;  // log factor at the critical rate
    }
    return p;
}

/// h(t) = t - sqrt(t) for t >= t0, convex spline extension below. Matches
/// the slow-growth integrand family at unit coefficient.
inline HProfile h_linear_minus_sqrt(double t0 = 1.0) {
    if (t0 <= 0.0) throw InputError("h_linear_minus_sqrt: t0 must be positive");
    const double g0 = t0 - std::sqrt(t0);
    const double g1 = 1.0 - 0.5 / std::sqrt(t0);
    if (g1 <= 0.0)
        throw InputError("h_linear_minus_sqrt: profile not increasing at t0");
    const KnotSpline s = fit_knot_spline(g0, g1, t0, /*force_quadratic=*/false);
    HProfile p;
    p.name = "t-sqrt(t)";
    p.t0 = t0;
    p.h = [s, t0](double t) {
        if (t < t0) return (s.A * t + s.B) * t * t;
        return t - std::sqrt(t) + s.offset;
    };
    p.hp = [s, t0](double t) {
        if (t < t0) return (3.0 * s.A * t + 2.0 * s.B) * t;
        return 1.0 - 0.5 / std::sqrt(t);
    };
    p.hpp = [s, t0](double t) {
        if (t < t0) return 6.0 * s.A * t + 2.0 * s.B;
        return 0.25 / (t * std::sqrt(t));
    };
    p.growth.cls = GrowthDescriptor::Class::Slow;
    p.growth.d1 = 1.0;
    p.growth.d2 = 1.5;
    p.growth.strict = false;
    return p;
}

}  // namespace gradbound
