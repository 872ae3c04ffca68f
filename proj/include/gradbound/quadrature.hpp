#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "gradbound/common.hpp"

namespace gradbound {

namespace detail {

template <class F>
double adaptive_simpson_rec(const F& f, double a, double b, double fa, double fm,
                            double fb, double whole, double tol, double rel_tol,
                            int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (std::fabs(delta) <= 15.0 * tol || (b - a) < 1e-14 * (1.0 + std::fabs(a)))
        return left + right + delta / 15.0;
    if (depth <= 0) {
        // A kink pinned to a sliver: the committed error is O(|delta|) on an
        // interval of negligible width. Give up only on wide intervals.
        if (b - a < 1e-9 * (1.0 + std::fabs(a) + std::fabs(b)))
            return left + right + delta / 15.0;
        throw NumericError("adaptive Simpson: max recursion depth reached on [" +
                           fmt_double(a) + ", " + fmt_double(b) + "]");
    }
    // Keep the refinement tolerance above the requested relative accuracy
    // and the cancellation noise floor.
    const double floor_tol =
        std::max(rel_tol, 4.0 * std::numeric_limits<double>::epsilon()) *
        (std::fabs(left) + std::fabs(right));
    const double next = std::max(0.5 * tol, floor_tol);
    return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, next, rel_tol,
                                depth - 1) +
           adaptive_simpson_rec(f, m, b, fm, frm, fb, right, next, rel_tol,
                                depth - 1);
}

}  // namespace detail

/// Integrate f over [a,b] with adaptive Simpson: absolute tolerance `tol`,
/// never refining past the relative accuracy `rel_tol` of the local value.
template <class F>
double integrate(const F& f, double a, double b, double tol = 1e-10,
                 int max_depth = 48, double rel_tol = 0.0) {
    if (a == b) return 0.0;
    if (b < a) return -integrate(f, b, a, tol, max_depth, rel_tol);
    const double fa = f(a);
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    const double fb = f(b);
    if (!std::isfinite(fa) || !std::isfinite(fm) || !std::isfinite(fb))
        throw NumericError("adaptive Simpson: non-finite integrand on [" +
                           fmt_double(a) + ", " + fmt_double(b) + "]");
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return detail::adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, rel_tol,
                                        max_depth);
}

/// Cumulative integral of a fixed 1-D integrand, cached on a growing knot
/// grid so repeated queries cost one short quadrature each. Not safe for
/// concurrent first use; call warm_up() before sharing across workers.
class CumulativeIntegral {
public:
    CumulativeIntegral() = default;
    CumulativeIntegral(std::function<double(double)> f, double knot_step,
                       double tol = 3e-14)
        : f_(std::move(f)), step_(knot_step), tol_(tol) {
        knots_ = {0.0};
        sums_ = {0.0};
    }

    bool valid() const { return static_cast<bool>(f_); }

    void warm_up(double t_max) const { extend(t_max); }

    /// Integral of f over [0, t], t >= 0.
    double operator()(double t) const {
        if (t <= 0.0) return 0.0;
        extend(t);
        // Last knot <= t.
        std::size_t idx = static_cast<std::size_t>(t / step_);
        if (idx >= knots_.size()) idx = knots_.size() - 1;
        while (idx > 0 && knots_[idx] > t) --idx;
        const double base = sums_[idx];
        const double lo = knots_[idx];
        if (t - lo < 1e-15) return base;
        return base + integrate(f_, lo, t, tol_);
    }

private:
    void extend(double t) const {
        while (knots_.back() < t) {
            const double lo = knots_.back();
            const double hi = lo + step_;
            sums_.push_back(sums_.back() + integrate(f_, lo, hi, tol_));
            knots_.push_back(hi);
        }
    }

    std::function<double(double)> f_;
    double step_ = 1.0 / 64.0;
    double tol_ = 1e-12;
    mutable std::vector<double> knots_;
    mutable std::vector<double> sums_;
};

}  // namespace gradbound
