#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "gradbound/common.hpp"

namespace gradbound {

/// Scalar coefficient a(x) with an exact gradient and box statistics.
/// Kinds: Constant, Affine (c0 + slope.x), SmoothPeriodic
/// (c0 + amp sin(2 pi wave.x + phase)).
class CoefficientField {
public:
    enum class Kind { Constant, Affine, SmoothPeriodic };

    static CoefficientField constant(double c) {
        CoefficientField f;
        f.kind_ = Kind::Constant;
        f.c0_ = c;
        return f;
    }
    static CoefficientField affine(double c0, const Point& slope) {
        CoefficientField f;
        f.kind_ = Kind::Affine;
        f.c0_ = c0;
        f.slope_ = slope;
        return f;
    }
    static CoefficientField periodic(double c0, double amp, const Point& wave,
                                     double phase = 0.0) {
        CoefficientField f;
        f.kind_ = Kind::SmoothPeriodic;
        f.c0_ = c0;
        f.amp_ = amp;
        f.slope_ = wave;
        f.phase_ = phase;
        return f;
    }

    Kind kind() const { return kind_; }
    bool is_constant() const { return kind_ == Kind::Constant; }

    double value(const Point& x) const {
        switch (kind_) {
            case Kind::Constant: return c0_;
            case Kind::Affine: return c0_ + dot(slope_, x);
            case Kind::SmoothPeriodic:
                return c0_ + amp_ * std::sin(two_pi * dot(slope_, x) + phase_);
        }
        return c0_;
    }

    Point gradient(const Point& x) const {
        Point g{0.0, 0.0, 0.0};
        switch (kind_) {
            case Kind::Constant: break;
            case Kind::Affine: g = slope_; break;
            case Kind::SmoothPeriodic: {
                const double c = amp_ * two_pi *
                                 std::cos(two_pi * dot(slope_, x) + phase_);
                for (int k = 0; k < kMaxDim; ++k) g[k] = c * slope_[k];
                break;
            }
        }
        return g;
    }

    /// Lipschitz constant on any box (global bound for these kinds).
    double lipschitz_bound() const {
        switch (kind_) {
            case Kind::Constant: return 0.0;
            case Kind::Affine: return norm(slope_);
            case Kind::SmoothPeriodic: return std::fabs(amp_) * two_pi * norm(slope_);
        }
        return 0.0;
    }

    double min_on(const Box& box) const { return extremum_on(box, /*want_min=*/true); }
    double max_on(const Box& box) const { return extremum_on(box, /*want_min=*/false); }

    std::string describe() const {
        switch (kind_) {
            case Kind::Constant: return "constant:" + fmt_double(c0_);
            case Kind::Affine:
                return "affine:" + fmt_double(c0_) + "," + fmt_double(slope_[0]) +
                       "," + fmt_double(slope_[1]) + "," + fmt_double(slope_[2]);
            case Kind::SmoothPeriodic:
                return "periodic:" + fmt_double(c0_) + "," + fmt_double(amp_);
        }
        return "";
    }

private:
    static constexpr double two_pi = 2.0 * std::numbers::pi;

    static double dot(const Point& a, const Point& b) {
        return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    }
    static double norm(const Point& a) { return std::sqrt(dot(a, a)); }

    double extremum_on(const Box& box, bool want_min) const {
        if (kind_ == Kind::Constant) return c0_;
        if (kind_ == Kind::Affine) {
            // Extremum of an affine map over a box sits at a corner.
            double best = want_min ? 1e300 : -1e300;
            const int corners = 1 << box.dim;
            for (int c = 0; c < corners; ++c) {
                Point x{0.0, 0.0, 0.0};
                for (int k = 0; k < box.dim; ++k)
                    x[k] = (c >> k) & 1 ? box.hi[k] : box.lo[k];
                const double v = value(x);
                best = want_min ? std::min(best, v) : std::max(best, v);
            }
            return best;
        }
        // Periodic: dense deterministic sampling, padded by the Lipschitz
        // bound times the covering radius so the result brackets the true
        // extremum from the declared side.
        const int per_axis = box.dim == 3 ? 24 : 96;
        double best = want_min ? 1e300 : -1e300;
        Point x{0.0, 0.0, 0.0};
        const int nj = box.dim >= 2 ? per_axis : 0;
        const int nk = box.dim >= 3 ? per_axis : 0;
        for (int i = 0; i <= per_axis; ++i) {
            x[0] = box.lo[0] + box.side(0) * i / per_axis;
            for (int j = 0; j <= nj; ++j) {
                if (box.dim >= 2) x[1] = box.lo[1] + box.side(1) * j / per_axis;
                for (int k = 0; k <= nk; ++k) {
                    if (box.dim >= 3) x[2] = box.lo[2] + box.side(2) * k / per_axis;
                    const double v = value(x);
                    best = want_min ? std::min(best, v) : std::max(best, v);
                    if (box.dim < 3) break;
                }
                if (box.dim < 2) break;
            }
        }
        double cover2 = 0.0;
        for (int k = 0; k < box.dim; ++k) {
            const double step = box.side(k) / per_axis;
            cover2 += 0.25 * step * step;
        }
        const double pad = lipschitz_bound() * std::sqrt(cover2);
        return want_min ? best - pad : best + pad;
    }

    Kind kind_ = Kind::Constant;
    double c0_ = 1.0;
    double amp_ = 0.0;
    double phase_ = 0.0;
    Point slope_{0.0, 0.0, 0.0};
};

}  // namespace gradbound
