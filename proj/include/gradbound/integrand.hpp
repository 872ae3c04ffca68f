#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "gradbound/coefficients.hpp"
#include "gradbound/common.hpp"
#include "gradbound/hprofile.hpp"
#include "gradbound/quadrature.hpp"

namespace gradbound {

/// Energy density and its t/x derivatives at one (x, t).
struct IntegrandValues {
    double g = 0.0;
    double g_t = 0.0;
    double g_tt = 0.0;
    Point g_tx{0.0, 0.0, 0.0};
};

/// Log-scale derivatives for structural quotients; -inf encodes zero.
struct LogDerivs {
    double log_g_t = 0.0;
    double log_g_tt = 0.0;
    double log_g_tx_max = 0.0;  // log of max_k |g_tx_k|
};

/// Two-sided ellipticity bounds of the supplementary assumption.
struct RegularizationClamp {
    double lower = 1e-3;  // N
    double upper = 1e3;   // M

    void validate() const {
        if (!(lower > 0.0) || !(upper > 0.0))
            throw InputError("clamp bounds must be strictly positive");
        if (lower > upper) throw InputError("clamp requires N <= M");
    }
    double apply(double v) const { return std::min(std::max(v, lower), upper); }
};

enum class Family {
    Exponential,
    VariableExponent,
    OrliczLog,
    ComposedH,
    LinearMinusSqrt,
    Custom
};

inline const char* family_name(Family f) {
    switch (f) {
        case Family::Exponential: return "exponential";
        case Family::VariableExponent: return "variable_exponent";
        case Family::OrliczLog: return "orlicz_log";
        case Family::ComposedH: return "composed_h";
        case Family::LinearMinusSqrt: return "linear_minus_sqrt";
        case Family::Custom: return "custom";
    }
    return "?";
}

enum class InnerProfile { Exp, TLog };

/// Coefficient bag for the builtin families. Unused members keep defaults.
struct BuiltinParams {
    CoefficientField a = CoefficientField::constant(1.0);
    CoefficientField b = CoefficientField::constant(1.0);
    CoefficientField p = CoefficientField::constant(2.0);
    InnerProfile inner = InnerProfile::Exp;
};

// ---------------------------------------------------------------------------
// Implementation interface
// ---------------------------------------------------------------------------

namespace detail {

class IntegrandImpl {
public:
    virtual ~IntegrandImpl() = default;
    /// Raw evaluation; may return infinities (the public wrapper screens).
    virtual IntegrandValues eval(const Point& x, double t) const = 0;
    /// g, g_t, g_tt only; the regularized wrapper skips its mixed-derivative
    /// reconstruction here, which the cell loops never read.
    virtual IntegrandValues eval_radial(const Point& x, double t) const {
        return eval(x, t);
    }
    virtual LogDerivs log_derivs(const Point& x, double t) const {
        const IntegrandValues v = eval(x, t);
        double mx = 0.0;
        for (int k = 0; k < kMaxDim; ++k) mx = std::max(mx, std::fabs(v.g_tx[k]));
        return {std::log(v.g_t), std::log(v.g_tt), std::log(mx)};
    }
    virtual bool x_dependent() const = 0;
    virtual double gtt_at_zero(const Point& x) const = 0;
    virtual double t_representable() const {
        return std::numeric_limits<double>::infinity();
    }
    virtual void warm_up(double) const {}
};

inline double max_abs_component(const Point& p) {
    return std::max({std::fabs(p[0]), std::fabs(p[1]), std::fabs(p[2])});
}

// g(x,t) = e^{a(x) t^2} - 1
class ExponentialImpl final : public IntegrandImpl {
public:
    explicit ExponentialImpl(CoefficientField a) : a_(std::move(a)) {}

    IntegrandValues eval(const Point& x, double t) const override {
        const double av = a_.value(x);
        const double w = av * t * t;
        IntegrandValues v;
        if (w > 709.0) {
            const double inf = std::numeric_limits<double>::infinity();
            v.g = v.g_t = v.g_tt = inf;
            return v;  // screened by the caller
        }
        const double e = std::exp(w);
        v.g = std::expm1(w);
        v.g_t = 2.0 * av * t * e;
        v.g_tt = 2.0 * av * e * (1.0 + 2.0 * w);
        const Point ax = a_.gradient(x);
        const double c = 2.0 * t * e * (1.0 + w);
        for (int k = 0; k < kMaxDim; ++k) v.g_tx[k] = ax[k] == 0.0 ? 0.0 : c * ax[k];
        return v;
    }

    LogDerivs log_derivs(const Point& x, double t) const override {
        const double av = a_.value(x);
        const double w = av * t * t;
        LogDerivs d;
        d.log_g_t = std::log(2.0 * av * t) + w;
        d.log_g_tt = std::log(2.0 * av) + w + std::log1p(2.0 * w);
        const double axm = max_abs_component(a_.gradient(x));
        d.log_g_tx_max = axm == 0.0
                             ? -std::numeric_limits<double>::infinity()
                             : std::log(2.0 * t * (1.0 + w)) + w + std::log(axm);
        return d;
    }

    bool x_dependent() const override { return !a_.is_constant(); }
    double gtt_at_zero(const Point& x) const override { return 2.0 * a_.value(x); }
    double t_representable() const override { return t_repr_; }
    void set_t_repr(double v) { t_repr_ = v; }
    const CoefficientField& a() const { return a_; }

private:
    CoefficientField a_;
    double t_repr_ = std::numeric_limits<double>::infinity();
};

// g(x,t) = a(x) t^{p(x)}
class VariableExponentImpl final : public IntegrandImpl {
public:
    VariableExponentImpl(CoefficientField a, CoefficientField p)
        : a_(std::move(a)), p_(std::move(p)) {}

    IntegrandValues eval(const Point& x, double t) const override {
        const double av = a_.value(x);
        const double pv = p_.value(x);
        IntegrandValues v;
        if (t == 0.0) {
            v.g = 0.0;
            v.g_t = 0.0;
            if (pv > 2.0)
                v.g_tt = 0.0;
            else if (pv == 2.0)
                v.g_tt = 2.0 * av;
            else
                v.g_tt = std::numeric_limits<double>::infinity();
            return v;
        }
        const double tp = std::pow(t, pv);
        v.g = av * tp;
        v.g_t = av * pv * tp / t;
        v.g_tt = av * pv * (pv - 1.0) * tp / (t * t);
        const Point ax = a_.gradient(x);
        const Point px = p_.gradient(x);
        const double lt = std::log(t);
        for (int k = 0; k < kMaxDim; ++k) {
            double s = 0.0;
            if (ax[k] != 0.0) s += ax[k] * pv;
            if (px[k] != 0.0) s += av * px[k] * (1.0 + pv * lt);
            v.g_tx[k] = s == 0.0 ? 0.0 : tp / t * s;
        }
        return v;
    }

    bool x_dependent() const override {
        return !a_.is_constant() || !p_.is_constant();
    }
    double gtt_at_zero(const Point& x) const override {
        const double pv = p_.value(x);
        if (pv > 2.0) return 0.0;
        if (pv == 2.0) return 2.0 * a_.value(x);
        return std::numeric_limits<double>::infinity();
    }
    const CoefficientField& a() const { return a_; }
    const CoefficientField& p() const { return p_; }

private:
    CoefficientField a_, p_;
};

// g(x,t) = a(x) t^{p(x)} log(1+t)
class OrliczLogImpl final : public IntegrandImpl {
public:
    OrliczLogImpl(CoefficientField a, CoefficientField p)
        : a_(std::move(a)), p_(std::move(p)) {}

    IntegrandValues eval(const Point& x, double t) const override {
        const double av = a_.value(x);
        const double pv = p_.value(x);
        IntegrandValues v;
        if (t == 0.0) {
            v.g_tt = pv == 1.0 ? 2.0 * av : 0.0;
            return v;
        }
        const double tp = std::pow(t, pv);
        const double l = std::log1p(t);
        const double u = 1.0 + t;
        v.g = av * tp * l;
        v.g_t = av * (pv * tp / t * l + tp / u);
        v.g_tt = av * (pv * (pv - 1.0) * tp / (t * t) * l +
                       2.0 * pv * tp / (t * u) - tp / (u * u));
        const Point ax = a_.gradient(x);
        const Point px = p_.gradient(x);
        const double lt = std::log(t);
        for (int k = 0; k < kMaxDim; ++k) {
            double s = 0.0;
            if (ax[k] != 0.0) s += ax[k] * (pv * tp / t * l + tp / u);
            if (px[k] != 0.0)
                s += av * px[k] * (tp / t * l * (1.0 + pv * lt) + tp * lt / u);
            v.g_tx[k] = s;
        }
        return v;
    }

    bool x_dependent() const override {
        return !a_.is_constant() || !p_.is_constant();
    }
    double gtt_at_zero(const Point& x) const override {
        return p_.value(x) == 1.0 ? 2.0 * a_.value(x) : 0.0;
    }
    const CoefficientField& a() const { return a_; }
    const CoefficientField& p() const { return p_; }

private:
    CoefficientField a_, p_;
};

// g(x,t) = b(x) H(a(x) t) for an inner profile H
class ComposedHImpl final : public IntegrandImpl {
public:
    ComposedHImpl(CoefficientField a, CoefficientField b, InnerProfile which)
        : a_(std::move(a)), b_(std::move(b)), which_(which),
          inner_(which == InnerProfile::Exp ? h_exponential(1.0) : h_orlicz_log(1.0)) {}

    IntegrandValues eval(const Point& x, double t) const override {
        const double av = a_.value(x);
        const double bv = b_.value(x);
        const double s = av * t;
        IntegrandValues v;
        if (which_ == InnerProfile::Exp && s * s > 709.0) {
            const double inf = std::numeric_limits<double>::infinity();
            v.g = v.g_t = v.g_tt = inf;
            return v;
        }
        const double H = inner_.h(s);
        const double Hp = inner_.hp(s);
        const double Hpp = inner_.hpp(s);
        v.g = bv * H;
        v.g_t = bv * av * Hp;
        v.g_tt = bv * av * av * Hpp;
        const Point ax = a_.gradient(x);
        const Point bx = b_.gradient(x);
        for (int k = 0; k < kMaxDim; ++k) {
            double acc = 0.0;
            if (bx[k] != 0.0) acc += bx[k] * av * Hp;
            if (ax[k] != 0.0) acc += bv * ax[k] * (Hp + av * t * Hpp);
            v.g_tx[k] = acc;
        }
        return v;
    }

    LogDerivs log_derivs(const Point& x, double t) const override {
        if (which_ != InnerProfile::Exp) return IntegrandImpl::log_derivs(x, t);
        const double av = a_.value(x);
        const double bv = b_.value(x);
        const double s = av * t;
        const double w = s * s;
        LogDerivs d;
        d.log_g_t = std::log(bv * av) + std::log(2.0 * s) + w;
        d.log_g_tt = std::log(bv * av * av) + std::log(2.0) + w + std::log1p(2.0 * w);
        const Point ax = a_.gradient(x);
        const Point bx = b_.gradient(x);
        // |g_tx| <= |b_x| a H' + b |a_x| (H' + a t H'');  use the exact sum in logs
        double lo = -std::numeric_limits<double>::infinity();
        for (int k = 0; k < kMaxDim; ++k) {
            double term = -std::numeric_limits<double>::infinity();
            if (bx[k] != 0.0)
                term = std::log(std::fabs(bx[k]) * av * 2.0 * s) + w;
            if (ax[k] != 0.0) {
                const double inner_term =
                    std::log(bv * std::fabs(ax[k])) +
                    std::log(2.0 * s + 2.0 * s * (1.0 + 2.0 * w) * t * av) + w;
                term = log_add(term, inner_term);
            }
            lo = std::max(lo, term);
        }
        d.log_g_tx_max = lo;
        return d;
    }

    bool x_dependent() const override {
        return !a_.is_constant() || !b_.is_constant();
    }
    double gtt_at_zero(const Point& x) const override {
        const double av = a_.value(x);
        return b_.value(x) * av * av * 2.0;
    }
    double t_representable() const override { return t_repr_; }
    void set_t_repr(double v) { t_repr_ = v; }
    const CoefficientField& a() const { return a_; }
    const CoefficientField& b() const { return b_; }
    InnerProfile which() const { return which_; }

private:
    CoefficientField a_, b_;
    InnerProfile which_;
    HProfile inner_;
    double t_repr_ = std::numeric_limits<double>::infinity();
};

// g(x,t) = t - a(x) sqrt(t) + offset(x) for t >= t0, spline below.
class LinearMinusSqrtImpl final : public IntegrandImpl {
public:
    LinearMinusSqrtImpl(CoefficientField a, double t0, bool force_quadratic)
        : a_(std::move(a)), t0_(t0), force_quadratic_(force_quadratic) {}

    IntegrandValues eval(const Point& x, double t) const override {
        const double av = a_.value(x);
        const Point ax = a_.gradient(x);
        const KnotSpline s = spline_at(av);
        IntegrandValues v;
        const double sqt0 = std::sqrt(t0_);
        if (t < t0_) {
            v.g = (s.A * t + s.B) * t * t;
            v.g_t = (3.0 * s.A * t + 2.0 * s.B) * t;
            v.g_tt = 6.0 * s.A * t + 2.0 * s.B;
            // Spline coefficients depend on x through g0, g1.
            const double g0x = -sqt0;            // d g0 / d a
            const double g1x = -0.5 / sqt0;      // d g1 / d a
            double dA, dB;
            if (s.cubic) {
                dA = (g1x * t0_ - 2.0 * g0x) / (t0_ * t0_ * t0_);
                dB = (3.0 * g0x - g1x * t0_) / (t0_ * t0_);
            } else {
                dA = 0.0;
                dB = g1x / (2.0 * t0_);
            }
            const double dgt_da = (3.0 * dA * t + 2.0 * dB) * t;
            for (int k = 0; k < kMaxDim; ++k)
                v.g_tx[k] = ax[k] == 0.0 ? 0.0 : dgt_da * ax[k];
        } else {
            const double sq = std::sqrt(t);
            v.g = t - av * sq + s.offset;
            v.g_t = 1.0 - 0.5 * av / sq;
            v.g_tt = 0.25 * av / (t * sq);
            for (int k = 0; k < kMaxDim; ++k)
                v.g_tx[k] = ax[k] == 0.0 ? 0.0 : -0.5 / sq * ax[k];
        }
        return v;
    }

    bool x_dependent() const override { return !a_.is_constant(); }
    double gtt_at_zero(const Point& x) const override {
        const KnotSpline s = spline_at(a_.value(x));
        return 2.0 * s.B;
    }
    const CoefficientField& a() const { return a_; }
    double t0() const { return t0_; }
    bool quadratic_branch() const { return force_quadratic_; }

private:
    KnotSpline spline_at(double av) const {
        const double sqt0 = std::sqrt(t0_);
        const double g0 = t0_ - av * sqt0;
        const double g1 = 1.0 - 0.5 * av / sqt0;
        return fit_knot_spline(g0, g1, t0_, force_quadratic_);
    }

    CoefficientField a_;
    double t0_;
    bool force_quadratic_;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// IntegrandSpec
// ---------------------------------------------------------------------------

/// Immutable, shareable handle for an integrand family instance. All
/// evaluators are pure in (x, t).
class IntegrandSpec {
public:
    IntegrandSpec() = default;
    IntegrandSpec(Family fam, std::shared_ptr<const detail::IntegrandImpl> impl,
                  double t0, Box domain, BuiltinParams params = {},
                  std::vector<std::string> warnings = {})
        : family_(fam), impl_(std::move(impl)), t0_(t0), domain_(domain),
          params_(std::move(params)), warnings_(std::move(warnings)) {}

    Family family() const { return family_; }
    double t0() const { return t0_; }
    const Box& domain() const { return domain_; }
    const BuiltinParams& params() const { return params_; }
    const std::vector<std::string>& warnings() const { return warnings_; }
    bool x_dependent() const { return impl_->x_dependent(); }
    double t_representable() const { return impl_->t_representable(); }
    bool valid() const { return static_cast<bool>(impl_); }
    const detail::IntegrandImpl& impl() const { return *impl_; }
    std::shared_ptr<const detail::IntegrandImpl> impl_ptr() const { return impl_; }
    bool clamped() const { return clamped_; }
    RegularizationClamp clamp() const { return clamp_; }

    IntegrandValues eval(const Point& x, double t) const {
        if (t < 0.0)
            throw InputError("integrand evaluated at negative t = " + fmt_double(t));
        if (!domain_.contains(x))
            throw InputError("integrand evaluated outside the declared box at x = (" +
                             fmt_double(x[0]) + ", " + fmt_double(x[1]) + ")");
        IntegrandValues v = impl_->eval(x, t);
        if (!std::isfinite(v.g) || !std::isfinite(v.g_t) ||
            (t > 0.0 && !std::isfinite(v.g_tt)))
            throw RangeError("integrand value left the floating range at t = " +
                             fmt_double(t) + " (x1 = " + fmt_double(x[0]) + ")");
        return v;
    }

    /// g, g_t, g_tt only; cheaper than eval for regularized specs.
    IntegrandValues eval_radial(const Point& x, double t) const {
        if (t < 0.0)
            throw InputError("integrand evaluated at negative t = " + fmt_double(t));
        if (!domain_.contains(x))
            throw InputError("integrand evaluated outside the declared box at x = (" +
                             fmt_double(x[0]) + ", " + fmt_double(x[1]) + ")");
        IntegrandValues v = impl_->eval_radial(x, t);
        if (!std::isfinite(v.g) || !std::isfinite(v.g_t) ||
            (t > 0.0 && !std::isfinite(v.g_tt)))
            throw RangeError("integrand value left the floating range at t = " +
                             fmt_double(t) + " (x1 = " + fmt_double(x[0]) + ")");
        return v;
    }

    LogDerivs log_derivs(const Point& x, double t) const {
        return impl_->log_derivs(x, t);
    }

    double second_derivative_at_zero(const Point& x) const {
        return impl_->gtt_at_zero(x);
    }

    void warm_up(double t_max) const { impl_->warm_up(t_max); }

    void mark_clamped(RegularizationClamp c) {
        clamped_ = true;
        clamp_ = c;
    }

private:
    Family family_ = Family::Custom;
    std::shared_ptr<const detail::IntegrandImpl> impl_;
    double t0_ = 1.0;
    Box domain_ = unit_box(2);
    BuiltinParams params_;
    std::vector<std::string> warnings_;
    bool clamped_ = false;
    RegularizationClamp clamp_{};
};

inline IntegrandValues eval_all(const IntegrandSpec& spec, const Point& x, double t) {
    return spec.eval(x, t);
}

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

namespace detail {

/// Sampled sanity checks shared by every constructor: convexity and
/// monotonicity of the profile plus the g(x,0) = g_t(x,0) = 0 normalization.
inline void verify_profile(const IntegrandImpl& impl, const Box& domain,
                           double t_hi, std::vector<std::string>* warnings,
                           bool throw_on_nonconvex) {
    const int nx = 12, nt = 48;
    HaltonSequence seq(domain.dim, 1);
    for (int ix = 0; ix < nx; ++ix) {
        Point x = domain.lo;
        const auto u = seq.next();
        for (int k = 0; k < domain.dim; ++k)
            x[k] = domain.lo[k] + domain.side(k) * u[k];
        const IntegrandValues at0 = impl.eval(x, 0.0);
        if (std::fabs(at0.g) > 1e-12 || std::fabs(at0.g_t) > 1e-12)
            throw InputError("integrand normalization failed: g(x,0) or g_t(x,0) != 0");
        for (int it = 1; it <= nt; ++it) {
            const double t = t_hi * it / nt;
            const IntegrandValues v = impl.eval(x, t);
            if (v.g_tt < -1e-12 || v.g_t < -1e-12) {
                const std::string msg =
                    "sampled non-convexity at t = " + fmt_double(t) +
                    " (g_tt = " + fmt_double(v.g_tt) + ")";
                if (throw_on_nonconvex) throw InputError(msg);
                if (warnings) warnings->push_back(msg);
                return;
            }
        }
    }
}

}  // namespace detail

inline IntegrandSpec make_builtin(Family fam, const BuiltinParams& params,
                                  double t0, const Box& domain) {
    if (t0 <= 0.0) throw InputError("t0 must be positive");
    std::shared_ptr<detail::IntegrandImpl> impl;
    switch (fam) {
        case Family::Exponential: {
            const double a_min = params.a.min_on(domain);
            if (a_min <= 0.0)
                throw InputError("exponential family requires a(x) >= c > 0");
            auto p = std::make_shared<detail::ExponentialImpl>(params.a);
            p->set_t_repr(std::sqrt(690.0 / params.a.max_on(domain)));
            impl = p;
            break;
        }
        case Family::VariableExponent: {
            if (params.a.min_on(domain) <= 0.0)
                throw InputError("variable exponent family requires a(x) >= c > 0");
            if (params.p.min_on(domain) <= 1.0)
                throw InputError("variable exponent family requires p(x) >= c > 1");
            impl = std::make_shared<detail::VariableExponentImpl>(params.a, params.p);
            break;
        }
        case Family::OrliczLog: {
            const double p_min = params.p.min_on(domain);
            if (params.a.min_on(domain) <= 0.0)
                throw InputError("orlicz log family requires a(x) >= c > 0");
            if (p_min < 1.0)
                throw InputError("orlicz log family requires p(x) >= 1");
            if (p_min < 1.0 + 1e-12 &&
                !(params.p.is_constant() && params.a.is_constant()))
                throw InputError(
                    "orlicz log with p touching 1 requires constant a and p");
            impl = std::make_shared<detail::OrliczLogImpl>(params.a, params.p);
            break;
        }
        case Family::ComposedH: {
            const double a_min = params.a.min_on(domain);
            if (a_min <= 0.0 || params.b.min_on(domain) <= 0.0)
                throw InputError("composed family requires positive a(x), b(x)");
            auto p = std::make_shared<detail::ComposedHImpl>(params.a, params.b,
                                                             params.inner);
            if (params.inner == InnerProfile::Exp)
                p->set_t_repr(std::sqrt(690.0) / params.a.max_on(domain));
            impl = p;
            break;
        }
        case Family::LinearMinusSqrt: {
            const double a_min = params.a.min_on(domain);
            const double a_max = params.a.max_on(domain);
            if (a_min <= 0.0)
                throw InputError("slow growth family requires a(x) >= c > 0");
            if (a_max >= 2.0 * std::sqrt(t0))
                throw InputError(
                    "slow growth family requires a(x) < 2 sqrt(t0): profile "
                    "would decrease at the knot");
            // One spline branch for the whole coefficient range: the cubic is
            // kept only when it is convex at both coefficient extremes.
            auto convex_at = [t0](double av) {
                const double sqt0 = std::sqrt(t0);
                return knot_cubic_is_convex(t0 - av * sqt0, 1.0 - 0.5 * av / sqt0, t0);
            };
            const bool quad = !(convex_at(a_min) && convex_at(a_max));
            impl = std::make_shared<detail::LinearMinusSqrtImpl>(params.a, t0, quad);
            break;
        }
        case Family::Custom:
            throw InputError("custom integrands are built from expressions");
    }
    std::vector<std::string> warnings;
    const double t_hi = std::min(impl->t_representable(), 1e3);
    detail::verify_profile(*impl, domain, t_hi, &warnings, /*throw_on_nonconvex=*/true);
    return IntegrandSpec(fam, std::move(impl), t0, domain, params, std::move(warnings));
}

inline IntegrandSpec make_exponential(CoefficientField a, double t0, const Box& domain) {
    BuiltinParams p;
    p.a = std::move(a);
    return make_builtin(Family::Exponential, p, t0, domain);
}

inline IntegrandSpec make_variable_exponent(CoefficientField a, CoefficientField pexp,
                                            double t0, const Box& domain) {
    BuiltinParams p;
    p.a = std::move(a);
    p.p = std::move(pexp);
    return make_builtin(Family::VariableExponent, p, t0, domain);
}

inline IntegrandSpec make_orlicz_log(CoefficientField a, CoefficientField pexp,
                                     double t0, const Box& domain) {
    BuiltinParams p;
    p.a = std::move(a);
    p.p = std::move(pexp);
    return make_builtin(Family::OrliczLog, p, t0, domain);
}

inline IntegrandSpec make_composed(CoefficientField a, CoefficientField b,
                                   InnerProfile inner, double t0, const Box& domain) {
    BuiltinParams p;
    p.a = std::move(a);
    p.b = std::move(b);
    p.inner = inner;
    return make_builtin(Family::ComposedH, p, t0, domain);
}

inline IntegrandSpec make_linear_minus_sqrt(CoefficientField a, double t0,
                                            const Box& domain) {
    BuiltinParams p;
    p.a = std::move(a);
    return make_builtin(Family::LinearMinusSqrt, p, t0, domain);
}

/// g = t^2/2: the variable-exponent family at a = 1/2, p = 2.
inline IntegrandSpec make_quadratic(const Box& domain) {
    return make_variable_exponent(CoefficientField::constant(0.5),
                                  CoefficientField::constant(2.0), 1.0, domain);
}

// ---------------------------------------------------------------------------
// Clamp regularization
// ---------------------------------------------------------------------------

namespace detail {

class ClampedImpl final : public IntegrandImpl {
public:
    ClampedImpl(std::shared_ptr<const IntegrandImpl> base, RegularizationClamp clamp,
                const Box& domain)
        : base_(std::move(base)), clamp_(clamp), x_dep_(base_->x_dependent()),
          cache_x_(domain.center()) {
        if (!x_dep_) {
            auto raw = base_;
            auto cx = cache_x_;
            auto cl = clamp_;
            I1_ = CumulativeIntegral(
                [raw, cx, cl](double s) { return cl.apply(raw->eval(cx, s).g_tt); },
                1.0 / 64.0);
            I2_ = CumulativeIntegral(
                [raw, cx, cl](double s) { return s * cl.apply(raw->eval(cx, s).g_tt); },
                1.0 / 64.0);
        }
    }

    IntegrandValues eval_radial(const Point& x, double t) const override {
        IntegrandValues v;
        try {
            v.g_tt = clamp_.apply(base_->eval(x, t).g_tt);
            if (t == 0.0) {
                v.g_tt = clamp_.apply(base_->gtt_at_zero(x));
                return v;
            }
            double i1, i2;
            if (!x_dep_) {
                i1 = I1_(t);
                i2 = I2_(t);
            } else {
                auto c = [&](double s) { return clamp_.apply(base_->eval(x, s).g_tt); };
                i1 = integrate(c, 0.0, t, 1e-10);
                i2 = integrate([&](double s) { return s * c(s); }, 0.0, t, 1e-10);
            }
            v.g_t = i1;
            v.g = t * i1 - i2;
        } catch (const NumericError& e) {
            throw NumericError(std::string(e.what()) + " while clamping at (x1 = " +
                               fmt_double(x[0]) + ", t = " + fmt_double(t) + ")");
        }
        return v;
    }

    IntegrandValues eval(const Point& x, double t) const override {
        IntegrandValues v = eval_radial(x, t);
        if (x_dep_ && t > 0.0) {
            // Mixed derivative of the regularized spec via central differences
            // of g~_t in x; exact zero in the x-independent case.
            for (int k = 0; k < kMaxDim; ++k) {
                const double d = 1e-5 * (1.0 + std::fabs(x[k]));
                Point xp = x, xm = x;
                xp[k] += d;
                xm[k] -= d;
                auto gt_at = [&](const Point& q) {
                    return integrate(
                        [&](double s) { return clamp_.apply(base_->eval(q, s).g_tt); },
                        0.0, t, 1e-10);
                };
                v.g_tx[k] = (gt_at(xp) - gt_at(xm)) / (2.0 * d);
            }
        }
        return v;
    }

    bool x_dependent() const override { return x_dep_; }
    double gtt_at_zero(const Point& x) const override {
        return clamp_.apply(base_->gtt_at_zero(x));
    }
    double t_representable() const override {
        return std::numeric_limits<double>::infinity();
    }
    void warm_up(double t_max) const override {
        if (!x_dep_) {
            I1_.warm_up(t_max);
            I2_.warm_up(t_max);
        }
    }

private:
    std::shared_ptr<const IntegrandImpl> base_;
    RegularizationClamp clamp_;
    bool x_dep_;
    Point cache_x_;
    CumulativeIntegral I1_, I2_;
};

}  // namespace detail

/// Replace g_tt by min(max(g_tt, N), M) and rebuild g_t, g by integration,
/// so that both g~_tt and g~_t / t land in [N, M].
inline IntegrandSpec clamp_regularize(const IntegrandSpec& spec,
                                      RegularizationClamp clamp) {
    clamp.validate();
    auto impl = std::make_shared<detail::ClampedImpl>(spec.impl_ptr(), clamp,
                                                      spec.domain());
    IntegrandSpec out(spec.family(), std::move(impl), spec.t0(), spec.domain(),
                      spec.params(), spec.warnings());
    out.mark_clamped(clamp);
    return out;
}

// ---------------------------------------------------------------------------
// Ellipticity
// ---------------------------------------------------------------------------

/// (H_m, H_M) = (min, max) of {g_tt, g_t / t}.
inline std::pair<double, double> ellipticity_bounds(const IntegrandSpec& spec,
                                                    const Point& x, double t) {
    if (t <= 0.0)
        throw InputError("ellipticity bounds need t > 0 (g_t/t undefined at 0)");
    const IntegrandValues v = spec.eval_radial(x, t);
    const double ratio = v.g_t / t;
    return {std::min(v.g_tt, ratio), std::max(v.g_tt, ratio)};
}

/// m x n gradient-shaped matrix, m components by n space dimensions.
struct MatMN {
    int m = 1;
    int n = 2;
    std::array<double, kMaxDim * kMaxDim> a{};

    double& operator()(int comp, int i) { return a[comp * kMaxDim + i]; }
    double operator()(int comp, int i) const { return a[comp * kMaxDim + i]; }

    double dot(const MatMN& o) const {
        double s = 0.0;
        for (int c = 0; c < m; ++c)
            for (int i = 0; i < n; ++i) s += (*this)(c, i) * o(c, i);
        return s;
    }
    double norm() const { return std::sqrt(dot(*this)); }
};

/// Hessian quadratic form sum f_{xi_i^a xi_j^b} lambda_i^a lambda_j^b through
/// the rank-one plus isotropic decomposition of f(x, xi) = g(x, |xi|).
inline double hessian_quadratic_form(const IntegrandSpec& spec, const Point& x,
                                     const MatMN& xi, const MatMN& lambda) {
    const double t = xi.norm();
    if (t <= 0.0) throw InputError("hessian form needs |xi| > 0");
    const IntegrandValues v = spec.eval_radial(x, t);
    const double radial = xi.dot(lambda) / t;
    return (v.g_tt - v.g_t / t) * radial * radial +
           v.g_t / t * lambda.dot(lambda);
}

// ---------------------------------------------------------------------------
// Integrand -> comparison profile pairing
// ---------------------------------------------------------------------------

/// Scale an inner profile: h(t) = inner(c t).
inline HProfile h_scaled(const HProfile& inner, double c, const std::string& name) {
    HProfile p = inner;
    p.name = name;
    auto ih = inner.h, ihp = inner.hp, ihpp = inner.hpp;
    p.h = [ih, c](double t) { return ih(c * t); };
    p.hp = [ihp, c](double t) { return c * ihp(c * t); };
    p.hpp = [ihpp, c](double t) { return c * c * ihpp(c * t); };
    p.log_hp = nullptr;
    p.log_hpp = nullptr;
    p.log1p_h = nullptr;
    if (std::isfinite(inner.t_representable))
        p.t_representable = inner.t_representable / c;
    return p;
}

/// The comparison function used to certify a builtin family on a subdomain.
inline HProfile pair_profile(const IntegrandSpec& spec, const Box& subdomain) {
    switch (spec.family()) {
        case Family::Exponential:
            return h_exponential(spec.params().a.min_on(subdomain));
        case Family::VariableExponent:
            return h_power(spec.params().p.min_on(subdomain));
        case Family::OrliczLog:
            return h_orlicz_log(spec.params().p.min_on(subdomain));
        case Family::ComposedH: {
            const double am = spec.params().a.min_on(subdomain);
            if (spec.params().inner == InnerProfile::Exp)
                return h_exponential(am * am);
            return h_scaled(h_orlicz_log(1.0), am,
                            "tlog(" + fmt_double(am) + " t)");
        }
        case Family::LinearMinusSqrt:
            return h_linear_minus_sqrt(spec.t0());
        case Family::Custom: {
            // Profile of the spec itself at the subdomain center, with a
            // numerically estimated growth class.
            const Point c = subdomain.center();
            auto impl = spec.impl_ptr();
            HProfile p;
            p.name = "g(x_center, t)";
            p.t0 = spec.t0();
            p.h = [impl, c](double t) { return impl->eval(c, t).g; };
            p.hp = [impl, c](double t) { return impl->eval(c, t).g_t; };
            p.hpp = [impl, c](double t) { return impl->eval(c, t).g_tt; };
            p.t_representable = spec.t_representable();
            estimate_growth(p);
            return p;
        }
    }
    throw InputError("unknown family");
}

}  // namespace gradbound
