#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace gradbound {

inline constexpr int kMaxDim = 3;

/// Spatial point. Coordinates beyond the active dimension are zero.
using Point = std::array<double, kMaxDim>;

inline Point make_point(double x0, double x1 = 0.0, double x2 = 0.0) {
    return Point{x0, x1, x2};
}

/// Axis-aligned box in R^dim.
struct Box {
    int dim = 2;
    Point lo{0.0, 0.0, 0.0};
    Point hi{1.0, 1.0, 1.0};

    bool contains(const Point& x, double slack = 1e-12) const {
        for (int k = 0; k < dim; ++k) {
            if (x[k] < lo[k] - slack || x[k] > hi[k] + slack) return false;
        }
        return true;
    }
    Point center() const {
        Point c{0.0, 0.0, 0.0};
        for (int k = 0; k < dim; ++k) c[k] = 0.5 * (lo[k] + hi[k]);
        return c;
    }
    double side(int k) const { return hi[k] - lo[k]; }
};

inline Box unit_box(int dim) {
    Box b;
    b.dim = dim;
    for (int k = 0; k < dim; ++k) {
        b.lo[k] = 0.0;
        b.hi[k] = 1.0;
    }
    return b;
}

// ---------------------------------------------------------------------------
// Error types
// ---------------------------------------------------------------------------

/// Caller passed arguments outside an operation's contract.
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A value left the representable floating range (e.g. exp overflow).
struct RangeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A numeric procedure (quadrature, line search) failed to converge.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Expression text rejected by the parser. `offset` is a byte offset.
struct ParseError : std::runtime_error {
    std::size_t offset;
    ParseError(std::size_t off, const std::string& what)
        : std::runtime_error(what), offset(off) {}
};

/// Config file rejected by the loader. `line` is 1-based, 0 = whole file.
struct ConfigError : std::runtime_error {
    int line;
    ConfigError(int ln, const std::string& what)
        : std::runtime_error(what), line(ln) {}
};

// ---------------------------------------------------------------------------
// Small numeric helpers
// ---------------------------------------------------------------------------

inline bool nearly_equal(double a, double b, double rel, double abs = 0.0) {
    double scale = std::max(std::fabs(a), std::fabs(b));
    return std::fabs(a - b) <= std::max(abs, rel * scale);
}

/// log(exp(a) + exp(b)) without overflow.
inline double log_add(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    double m = std::max(a, b);
    return m + std::log1p(std::exp(-std::fabs(a - b)));
}

/// log(1 + exp(a)), stable for large |a|.
inline double log1p_exp(double a) {
    if (a > 36.0) return a + std::exp(-a);
    if (a < -36.0) return std::exp(a);
    return std::log1p(std::exp(a));
}

/// Shortest round-trippable decimal form of a double.
inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// Deterministic sampling helpers
// ---------------------------------------------------------------------------

/// Radical-inverse (van der Corput) value of `index` in base `base`.
inline double radical_inverse(std::uint64_t index, std::uint32_t base) {
    double inv = 1.0 / base;
    double f = inv;
    double r = 0.0;
    while (index > 0) {
        r += f * static_cast<double>(index % base);
        index /= base;
        f *= inv;
    }
    return r;
}

/// Low-discrepancy point sequence over [0,1)^dim, deterministic given seed.
class HaltonSequence {
public:
    HaltonSequence(int dim, std::uint64_t seed) : dim_(dim) {
        offset_ = seed * 7919u + 1u;
    }
    std::array<double, 4> next() {
        static constexpr std::uint32_t bases[4] = {2, 3, 5, 7};
        std::array<double, 4> p{};
        for (int k = 0; k < dim_; ++k) p[k] = radical_inverse(offset_, bases[k]);
        ++offset_;
        return p;
    }

private:
    int dim_;
    std::uint64_t offset_;
};

}  // namespace gradbound
