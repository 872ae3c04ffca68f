#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "gradbound/common.hpp"
#include "gradbound/hprofile.hpp"
#include "gradbound/integrand.hpp"
#include "gradbound/quadrature.hpp"

namespace gradbound {

// ---------------------------------------------------------------------------
// Parameters and exponents
// ---------------------------------------------------------------------------

inline double default_two_star(int n) {
    // Sobolev exponent for n >= 3; any finite exponent > 2 stands in at n = 2.
    return n >= 3 ? 2.0 * n / (n - 2.0) : 10.0;
}

struct StructuralParams {
    int n = 3;
    double theta = 1.0;
    double beta = 0.5;
    double alpha = 1.25;
    double epsilon = 0.1;
    double t0 = 1.0;
    double T_max = 1e3;
    double two_star = 0.0;  // 0 = derive from n
    Box subdomain = unit_box(2);

    void validate() const {
        if (n < 2) throw InputError("n must be at least 2");
        if (!(beta > 1.0 / n && beta < 2.0 / n))
            throw InputError("beta = " + fmt_double(beta) +
                             " violates 1/n < beta < 2/n for n = " +
                             std::to_string(n));
        if (!(alpha > 1.0 && alpha <= static_cast<double>(n) / (n - 1)))
            throw InputError("alpha = " + fmt_double(alpha) +
                             " violates 1 < alpha <= n/(n-1) for n = " +
                             std::to_string(n));
        if (theta < 1.0) throw InputError("theta must be at least 1");
        if (t0 <= 0.0 || T_max <= t0)
            throw InputError("need 0 < t0 < T_max");
        if (two_star != 0.0 && two_star <= 2.0)
            throw InputError("two_star must exceed 2");
    }
    double resolved_two_star() const {
        return two_star > 0.0 ? two_star : default_two_star(n);
    }
};

struct ExponentSet {
    double tau = 1.0;
    double two_star = 6.0;
    double lhs_exponent = 0.0;  // (1 - beta - 2 tau / 2*) n
    double rhs_exponent = 0.0;  // tau / (1 - beta) + epsilon
    double epsilon = 0.1;
    bool feasible = false;
};

inline ExponentSet exponents(int n, double theta, double beta, double epsilon,
                             double two_star = 0.0) {
    ExponentSet e;
    e.tau = (2.0 * theta - 1.0) * theta;
    e.two_star = two_star > 0.0 ? two_star : default_two_star(n);
    e.lhs_exponent = (1.0 - beta - 2.0 * e.tau / e.two_star) * n;
    e.rhs_exponent = e.tau / (1.0 - beta) + epsilon;
    e.epsilon = epsilon;
    e.feasible = e.tau < (1.0 - beta) * e.two_star / 2.0;
    return e;
}

// ---------------------------------------------------------------------------
// Test-function family Phi
// ---------------------------------------------------------------------------

struct PhiFamily {
    enum class Branch { Power, Quadratic };
    double gamma = 0.0;
    Branch branch = Branch::Quadratic;
    double c_phi = 2.0;  // constant in Phi'(t) t <= c_phi (1 + Phi(t))
};

inline PhiFamily make_phi(double gamma) {
    if (gamma < 0.0) throw InputError("phi family needs gamma >= 0");
    PhiFamily f;
    f.gamma = gamma;
    f.branch = gamma > 1.0 ? PhiFamily::Branch::Power : PhiFamily::Branch::Quadratic;
    f.c_phi = 2.0 * gamma + 2.0;
    return f;
}

/// (Phi, Phi') with the branch-correct formula; zero on [0, 1].
inline std::pair<double, double> phi_eval(const PhiFamily& fam, double t) {
    if (t <= 1.0) return {0.0, 0.0};
    const double g = fam.gamma;
    if (fam.branch == PhiFamily::Branch::Power) {
        const double u = t - 1.0;
        return {std::pow(u, g), g * std::pow(u, g - 1.0)};
    }
    const double u = t - 1.0;
    const double phi = u * u * std::pow(t, g - 2.0);
    const double dphi = u * std::pow(t, g - 3.0) * (g * u + 2.0);
    return {phi, dphi};
}

/// G(t) = 1 + int_0^t sqrt(Phi K_m); the integrand vanishes below 1.
inline double g_function(const HProfile& h, const PhiFamily& fam, double t,
                         double tol = 1e-10) {
    if (t <= 1.0) return 1.0;
    auto f = [&](double s) {
        if (s <= 1.0) return 0.0;
        return std::sqrt(phi_eval(fam, s).first * K_m(h, s));
    };
    return 1.0 + integrate(f, 1.0, t, tol);
}

// ---------------------------------------------------------------------------
// Sampling plan
// ---------------------------------------------------------------------------

struct SamplePlan {
    int x_grid = 64;        // tensor points over the subdomain
    int t_grid = 64;        // log-spaced points in [t0, T]
    int quasi = 1 << 14;    // quasi-random (x, t) pairs
    std::uint64_t seed = 0;
    int levels = 3;         // refinement levels for the divergence heuristic
};

namespace detail {

inline std::vector<double> log_spaced(double lo, double hi, int count) {
    std::vector<double> out;
    out.reserve(count);
    const double r = std::log(hi / lo);
    for (int i = 0; i < count; ++i)
        out.push_back(lo * std::exp(r * i / (count - 1)));
    return out;
}

/// Map a uniform variate to [t0, T] log-scaled, with extra mass near both
/// endpoints (the conditions are most delicate at t0 and at the range cap).
inline double endpoint_biased(double u, double lo, double hi) {
    const double w = u < 0.5 ? 0.5 * std::pow(2.0 * u, 1.5)
                             : 1.0 - 0.5 * std::pow(2.0 * (1.0 - u), 1.5);
    return lo * std::exp(std::log(hi / lo) * w);
}

inline std::vector<Point> tensor_points(const Box& box, int count) {
    const int per_axis = std::max(
        2, static_cast<int>(std::lround(std::pow(double(count), 1.0 / box.dim))));
    std::vector<Point> pts;
    Point x{0.0, 0.0, 0.0};
    const int nj = box.dim >= 2 ? per_axis : 1;
    const int nk = box.dim >= 3 ? per_axis : 1;
    for (int i = 0; i < per_axis; ++i) {
        x[0] = box.lo[0] + box.side(0) * (i + 0.5) / per_axis;
        for (int j = 0; j < nj; ++j) {
            if (box.dim >= 2) x[1] = box.lo[1] + box.side(1) * (j + 0.5) / per_axis;
            for (int k = 0; k < nk; ++k) {
                if (box.dim >= 3) x[2] = box.lo[2] + box.side(2) * (k + 0.5) / per_axis;
                pts.push_back(x);
            }
        }
    }
    return pts;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Assumption reports
// ---------------------------------------------------------------------------

struct InequalityRecord {
    std::string name;
    bool lower = false;      // lower bounds track the infimum of the quotient
    bool certified = false;
    double constant = 0.0;   // measured inf (lower) or sup (upper)
    Point worst_x{0.0, 0.0, 0.0};
    double worst_t = 0.0;
    double worst_quotient = 0.0;
    std::string note;
};

struct AssumptionReport {
    std::vector<InequalityRecord> rows;
    double m = std::numeric_limits<double>::quiet_NaN();
    double M_theta = std::numeric_limits<double>::quiet_NaN();
    double m_beta = std::numeric_limits<double>::quiet_NaN();
    double M_alpha = std::numeric_limits<double>::quiet_NaN();
    double t_lo = 1.0, t_hi = 1e3;
    Box subdomain = unit_box(2);
    std::string range_note;

    bool certified() const {
        for (const auto& r : rows)
            if (!r.certified) return false;
        return !rows.empty();
    }
};

namespace detail {

/// Track sup or inf of a sampled quotient across refinement levels.
class QuotientTracker {
public:
    QuotientTracker(std::string name, bool lower)
        : rec_{}, lower_(lower) {
        rec_.name = std::move(name);
        rec_.lower = lower;
    }

    void observe(int level, double q, const Point& x, double t) {
        if (!std::isfinite(q)) {
            finite_ = false;
            rec_.note = "non-finite quotient at t = " + fmt_double(t);
            rec_.worst_x = x;
            rec_.worst_t = t;
            return;
        }
        double& ext = level_ext_[level];
        const bool better = lower_ ? q < ext : q > ext;
        if (better) ext = q;
        const bool worst = lower_ ? q < rec_.worst_quotient : q > rec_.worst_quotient;
        if (first_ || worst) {
            rec_.worst_quotient = q;
            rec_.worst_x = x;
            rec_.worst_t = t;
            first_ = false;
        }
    }

    void begin_level(int level) {
        while (static_cast<int>(level_ext_.size()) <= level)
            level_ext_.push_back(lower_ ? 1e300 : -1e300);
    }

    InequalityRecord finish() {
        const int L = static_cast<int>(level_ext_.size());
        double ext = lower_ ? 1e300 : -1e300;
        for (double v : level_ext_) ext = lower_ ? std::min(ext, v) : std::max(ext, v);
        rec_.constant = ext;
        bool divergent = false;
        if (L >= 2) {
            const double first = level_ext_.front();
            const double last = level_ext_.back();
            if (lower_)
                divergent = last < first / 10.0 && std::fabs(first) > 0.0;
            else
                divergent = last > 10.0 * first && first > 0.0;
        }
        rec_.certified = finite_ && !divergent && (!lower_ || ext > 0.0);
        if (divergent) rec_.note = "not certifiable on sampled range (quotient " +
                                   std::string(lower_ ? "collapses" : "grows") +
                                   " x10 under refinement)";
        return rec_;
    }

private:
    InequalityRecord rec_;
    bool lower_;
    bool finite_ = true;
    bool first_ = true;
    std::vector<double> level_ext_;
};

}  // namespace detail

/// Certify the three growth-condition lines linking g to the comparison
/// profile h on subdomain x [t0, T]. Five inequality rows: two-sided bounds
/// for g_t and g_tt plus the mixed-derivative line. Quotients are evaluated
/// in log scale so exponential families stay in range.
inline AssumptionReport check_main_assumptions(const IntegrandSpec& spec,
                                               const HProfile& h,
                                               const StructuralParams& params,
                                               const SamplePlan& plan = {}) {
    params.validate();
    if (std::fabs(spec.t0() - params.t0) > 1e-12)
        throw InputError("spec and params disagree on t0");
    const double theta = params.theta;
    AssumptionReport rep;
    rep.subdomain = params.subdomain;
    rep.t_lo = params.t0;
    rep.t_hi = std::min({params.T_max, spec.t_representable(), h.t_representable});
    if (rep.t_hi < params.T_max)
        rep.range_note = "t range capped at " + fmt_double(rep.t_hi) +
                         " by the floating range of the family";
    if (rep.t_hi <= rep.t_lo)
        throw InputError("empty t range for certification");

    detail::QuotientTracker rows[5] = {
        {"g_t_lower", true},   {"g_t_upper", false}, {"g_tt_lower", true},
        {"g_tt_upper", false}, {"mixed_derivative", false}};

    for (int level = 0; level < plan.levels; ++level) {
        for (auto& r : rows) r.begin_level(level);
        const int scale = 1 << level;
        auto visit = [&](const Point& x, double t) {
            const LogDerivs d = spec.log_derivs(x, t);
            const double lt = std::log(t);
            const double lhp = h.log_hp_at(t);
            const double lhpp = h.log_hpp_at(t);
            rows[0].observe(level, std::exp(d.log_g_t - lhp), x, t);
            rows[1].observe(level,
                            std::exp(d.log_g_t - theta * lhp - (1.0 - theta) * lt),
                            x, t);
            rows[2].observe(level, std::exp(d.log_g_tt - lhpp), x, t);
            rows[3].observe(level, std::exp(d.log_g_tt - theta * lhpp), x, t);
            const double lmin = std::min(d.log_g_t, lt + d.log_g_tt);
            const double q5 =
                d.log_g_tx_max == -std::numeric_limits<double>::infinity()
                    ? 0.0
                    : std::exp(d.log_g_tx_max - theta * lmin);
            rows[4].observe(level, q5, x, t);
        };
        const auto xs = detail::tensor_points(params.subdomain, plan.x_grid);
        const auto ts =
            detail::log_spaced(rep.t_lo, rep.t_hi, std::max(2, plan.t_grid * scale));
        for (const Point& x : xs)
            for (double t : ts) visit(x, t);
        HaltonSequence seq(params.subdomain.dim + 1, plan.seed + level);
        const int nq = plan.quasi * scale / 2;
        for (int i = 0; i < nq; ++i) {
            const auto u = seq.next();
            Point x{0.0, 0.0, 0.0};
            for (int k = 0; k < params.subdomain.dim; ++k)
                x[k] = params.subdomain.lo[k] + params.subdomain.side(k) * u[k];
            visit(x, detail::endpoint_biased(u[params.subdomain.dim], rep.t_lo,
                                             rep.t_hi));
        }
    }
    for (auto& r : rows) rep.rows.push_back(r.finish());
    rep.m = std::min(rep.rows[0].constant, rep.rows[2].constant);
    rep.M_theta = std::max({rep.rows[1].constant, rep.rows[3].constant,
                            rep.rows[4].constant});
    return rep;
}

/// Certify the two-sided condition on h itself: the t^{-2 beta} lower line
/// (constant m_beta) and the alpha-power upper line (constant M_alpha).
inline AssumptionReport check_h_growth(const HProfile& h, int n, double beta,
                                       double alpha, double t0, double T_max,
                                       const SamplePlan& plan = {}) {
    if (!(beta > 1.0 / n && beta < 2.0 / n))
        throw InputError("beta outside (1/n, 2/n)");
    if (!(alpha > 1.0)) throw InputError("alpha must exceed 1");
    AssumptionReport rep;
    rep.t_lo = t0;
    rep.t_hi = std::min(T_max, h.t_representable);
    if (rep.t_hi < T_max)
        rep.range_note = "t range capped at " + fmt_double(rep.t_hi) +
                         " by the floating range of the profile";
    detail::QuotientTracker rows[2] = {{"h_lower_m_beta", true},
                                       {"h_upper_M_alpha", false}};
    const double frac = static_cast<double>(n - 2) / n;
    for (int level = 0; level < plan.levels; ++level) {
        for (auto& r : rows) r.begin_level(level);
        const auto ts = detail::log_spaced(
            rep.t_lo, rep.t_hi, std::max(2, plan.t_grid * (1 << level) * 8));
        for (double t : ts) {
            const double lt = std::log(t);
            const double lr = h.log_hp_at(t) - lt;  // log(h'/t)
            const double lhpp = h.log_hpp_at(t);
            const double lo_den = log_add(frac * lr, lr) - 2.0 * beta * lt;
            rows[0].observe(level, std::exp(lhpp - lo_den), Point{}, t);
            const double up_den = log_add(alpha * lr, lr);
            rows[1].observe(level, std::exp(lhpp - up_den), Point{}, t);
        }
    }
    for (auto& r : rows) rep.rows.push_back(r.finish());
    rep.m_beta = rep.rows[0].constant;
    rep.M_alpha = rep.rows[1].constant;
    return rep;
}

// ---------------------------------------------------------------------------
// Admissible parameter window
// ---------------------------------------------------------------------------

struct ParameterWindow {
    int n = 3;
    double two_star = 6.0;
    // [beta_lo, beta_hi) with a closed left end when beta_lo_closed.
    double beta_lo = 0.0, beta_hi = 0.0;
    bool beta_lo_closed = false;
    bool beta_nonempty = false;
    // [theta_lo, theta_hi); pinned means the family forces theta exactly.
    double theta_lo = 1.0, theta_hi = 1.0;
    bool theta_pinned = false;
    bool theta_strict_above_one = false;
    bool theta_nonempty = false;
    double default_beta = 0.0, default_theta = 1.0, default_alpha = 1.2;
    bool feasible = false;
    std::string first_failing;
    // Fraction of numerically scanned (beta, theta) cells agreeing with the
    // analytic window. Finite-range sampling may certify below an asymptotic
    // floor; disagreement there is expected and recorded, not an error.
    double corroboration = -1.0;
    std::string note;
};

namespace detail {

struct ThetaRule {
    double lo = 1.0;
    bool strict = false;  // window open at 1 (theta must exceed 1)
    bool pinned = false;  // family admits exactly theta = lo
    bool empty = false;
    std::string why;
};

inline ThetaRule theta_rule_for(const IntegrandSpec& spec, const Box& sub) {
    ThetaRule r;
    const BuiltinParams& bp = spec.params();
    switch (spec.family()) {
        case Family::Exponential: {
            if (bp.a.is_constant()) break;
            r.lo = std::max(1.0, bp.a.max_on(sub) / bp.a.min_on(sub));
            r.strict = true;
            break;
        }
        case Family::ComposedH: {
            if (bp.inner == InnerProfile::Exp && !bp.a.is_constant()) {
                const double ratio = bp.a.max_on(sub) / bp.a.min_on(sub);
                r.lo = std::max(1.0, ratio * ratio);
                r.strict = true;
            }
            break;
        }
        case Family::VariableExponent:
        case Family::OrliczLog: {
            if (bp.p.is_constant()) break;
            const double p_min = bp.p.min_on(sub);
            const double p_max = bp.p.max_on(sub);
            if (p_min <= 2.0) {
                r.empty = true;
                r.why = "oscillating exponent below 2 forces theta < 1";
                break;
            }
            r.lo = std::max(1.0, (p_max - 2.0) / (p_min - 2.0));
            r.strict = true;
            break;
        }
        case Family::LinearMinusSqrt:
            r.pinned = true;  // the upper g_t line forces theta = 1 exactly
            break;
        case Family::Custom:
            break;  // no analytic rule; the numeric scan stands alone
    }
    return r;
}

}  // namespace detail

/// Analytic beta/theta windows for the family paired with profile h, plus a
/// numeric corroboration scan of the certification checks on a coarse grid.
/// The theta rule and the scan run on the certification subdomain.
inline ParameterWindow admissible_window_search(const IntegrandSpec& spec,
                                                const HProfile& h, int n,
                                                double two_star = 0.0,
                                                double T_max = 0.0,
                                                bool corroborate = true,
                                                const Box* subdomain = nullptr) {
    if (n < 2) throw InputError("n must be at least 2");
    const Box sub = subdomain ? *subdomain : spec.domain();
    ParameterWindow w;
    w.n = n;
    w.two_star = two_star > 0.0 ? two_star : default_two_star(n);
    if (T_max <= 0.0)
        T_max = std::isfinite(spec.t_representable()) ? 30.0 : 1e3;

    // Beta window from the profile's asymptotics.
    w.beta_hi = 2.0 / n;
    const double generic_lo = 1.0 / n;
    const double floor = h.growth.beta_floor(n);
    if (h.growth.cls == GrowthDescriptor::Class::Slow && floor > generic_lo) {
        w.beta_lo = floor;
        w.beta_lo_closed = !h.growth.strict;
    } else {
        w.beta_lo = generic_lo;
        w.beta_lo_closed = false;
    }
    w.beta_nonempty = w.beta_lo_closed ? w.beta_lo < w.beta_hi
                                       : w.beta_lo < w.beta_hi - 1e-15;
    if (w.beta_nonempty) {
        if (w.beta_lo_closed)
            w.default_beta = w.beta_lo;
        else if (3.0 / (2.0 * n) > w.beta_lo)
            w.default_beta = 3.0 / (2.0 * n);
        else
            w.default_beta = 0.5 * (w.beta_lo + w.beta_hi);
    }

    // Theta window: family floor and the feasibility gate at the default beta.
    const detail::ThetaRule rule = detail::theta_rule_for(spec, sub);
    const double K = (1.0 - w.default_beta) * w.two_star / 2.0;
    const double theta_sup = (1.0 + std::sqrt(1.0 + 8.0 * K)) / 4.0;
    w.theta_strict_above_one = rule.strict;
    if (rule.empty) {
        w.theta_nonempty = false;
        w.first_failing = "theta window empty: " + rule.why;
    } else if (rule.pinned) {
        w.theta_pinned = true;
        w.theta_lo = w.theta_hi = 1.0;
        w.theta_nonempty = 1.0 < theta_sup;
        w.default_theta = 1.0;
    } else {
        w.theta_lo = rule.lo;
        w.theta_hi = theta_sup;
        w.theta_nonempty = w.theta_lo < w.theta_hi;
        w.default_theta = rule.strict
                              ? w.theta_lo + 0.25 * (w.theta_hi - w.theta_lo)
                              : w.theta_lo;
    }
    w.default_alpha = 0.5 * (1.0 + static_cast<double>(n) / (n - 1));

    if (!w.beta_nonempty) {
        w.feasible = false;
        w.first_failing = "beta window empty";
        return w;
    }
    if (!w.theta_nonempty) {
        w.feasible = false;
        if (w.first_failing.empty())
            w.first_failing = "theta window empty: exponent gate";
        return w;
    }
    const ExponentSet gate =
        exponents(n, w.default_theta, w.default_beta, 0.1, w.two_star);
    w.feasible = gate.feasible;
    if (!w.feasible) {
        w.first_failing = "exponent gate: tau >= (1-beta) 2*/2 at the defaults";
        return w;
    }

    if (corroborate && sub.dim <= kMaxDim) {
        SamplePlan quick;
        quick.x_grid = 16;
        quick.t_grid = 16;
        quick.quasi = 512;
        quick.levels = 2;
        int agree = 0, total = 0;
        for (int bi = 1; bi <= 5; ++bi) {
            const double beta = 1.0 / n + (2.0 / n - 1.0 / n) * bi / 6.0;
            for (int ti = 0; ti < 3; ++ti) {
                const double theta = 1.0 + 0.45 * ti * (theta_sup - 1.0);
                StructuralParams p;
                p.n = n;
                p.beta = beta;
                p.theta = theta;
                p.alpha = w.default_alpha;
                p.t0 = spec.t0();
                p.T_max = T_max;
                p.two_star = w.two_star;
                p.subdomain = sub;
                bool numeric_ok = false;
                try {
                    const auto main_rep = check_main_assumptions(spec, h, p, quick);
                    const auto h_rep =
                        check_h_growth(h, n, beta, w.default_alpha, p.t0, T_max, quick);
                    numeric_ok = main_rep.certified() && h_rep.certified() &&
                                 exponents(n, theta, beta, 0.1, w.two_star).feasible;
                } catch (const std::exception&) {
                    numeric_ok = false;
                }
                const bool analytic_ok =
                    (w.beta_lo_closed ? beta >= w.beta_lo - 1e-12 : beta > w.beta_lo) &&
                    beta < w.beta_hi &&
                    (w.theta_pinned
                         ? std::fabs(theta - 1.0) < 1e-12
                         : theta >= w.theta_lo - 1e-12 && theta < w.theta_hi) &&
                    (!w.theta_strict_above_one || theta > 1.0) &&
                    exponents(n, theta, beta, 0.1, w.two_star).feasible;
                ++total;
                if (numeric_ok == analytic_ok) ++agree;
            }
        }
        w.corroboration = static_cast<double>(agree) / total;
        if (w.corroboration < 1.0)
            w.note = "finite-range sampling certifies beyond the asymptotic "
                     "window on part of the grid";
    }
    return w;
}

// ---------------------------------------------------------------------------
// Lemma suite
// ---------------------------------------------------------------------------

struct LemmaRecord {
    std::string name;
    bool pass = false;
    long violations = 0;     // zero-violation rows
    double sup_constant = 0.0;
    double drift = 0.0;      // relative change of the sup between half and full
    double worst_t = 0.0;
    double worst_gamma = 0.0;
    double worst_sigma = 0.0;
    std::string note;
};

struct LemmaReport {
    std::vector<LemmaRecord> rows;
    std::uint64_t seed = 0;
    long samples = 0;
    double t_hi = 0.0;
    double alpha_global_max = 0.0;   // n/(n-1)
    double alpha_lemma9_max = 0.0;   // 2 n tau / (n (1+tau) - 1)

    bool all_pass() const {
        for (const auto& r : rows)
            if (!r.pass) return false;
        return !rows.empty();
    }
};

namespace detail {

class SupTracker {
public:
    void observe(double ratio, double t, double gamma, double sigma) {
        ++count_;
        if (!std::isfinite(ratio)) {
            finite_ = false;
            return;
        }
        if (ratio > sup_) {
            sup_ = ratio;
            worst_t_ = t;
            worst_g_ = gamma;
            worst_s_ = sigma;
        }
        if (half_pending_) half_sup_ = sup_;
    }
    void mark_half() { half_pending_ = false; }

    void fill(LemmaRecord& rec) const {
        rec.sup_constant = sup_;
        rec.drift = sup_ > 0.0 ? (sup_ - half_sup_) / sup_ : 0.0;
        rec.worst_t = worst_t_;
        rec.worst_gamma = worst_g_;
        rec.worst_sigma = worst_s_;
        rec.pass = finite_ && rec.drift <= 0.01;
    }

private:
    double sup_ = 0.0, half_sup_ = 0.0;
    double worst_t_ = 0.0, worst_g_ = 0.0, worst_s_ = 0.0;
    long count_ = 0;
    bool half_pending_ = true;
    bool finite_ = true;
};

}  // namespace detail

/// Numerical verification of the preparatory lemmas. Explicit-constant
/// inequalities (the Phi lemmas) must hold with zero violations; the
/// existence-of-a-constant lemmas are checked by empirical-sup stabilization
/// (the running sup must move at most 1% between half and full sample).
inline LemmaReport lemma_suite(const IntegrandSpec& spec, const HProfile& h,
                               const StructuralParams& params, std::uint64_t seed,
                               long samples) {
    params.validate();
    LemmaReport rep;
    rep.seed = seed;
    rep.samples = samples;
    const double two_star = params.resolved_two_star();
    const double tau = (2.0 * params.theta - 1.0) * params.theta;
    const double alpha = params.alpha;
    const double beta = params.beta;
    rep.alpha_global_max = static_cast<double>(params.n) / (params.n - 1);
    rep.alpha_lemma9_max =
        2.0 * params.n * tau / (params.n * (1.0 + tau) - 1.0);
    rep.t_hi = std::min(params.T_max, h.t_representable);

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto rand_t = [&](double lo, double hi) {
        return lo * std::exp(std::log(hi / lo) * unit(rng));
    };

    // Zero-violation rows for the explicit Phi inequalities.
    {
        LemmaRecord power{"phi_power_inequality"};
        LemmaRecord quad{"phi_quadratic_inequality"};
        LemmaRecord unified{"phi_unified_inequality"};
        double worst_slack[3] = {0.0, 0.0, 0.0};
        for (long i = 0; i < samples; ++i) {
            const double t = unit(rng) < 0.25 ? 2.0 * unit(rng)
                                              : rand_t(1e-2, 1e3);
            {
                const double g = 1.0 + 9.0 * unit(rng);
                PhiFamily f;
                f.gamma = g;
                f.branch = PhiFamily::Branch::Power;
                const auto [phi, dphi] = phi_eval(f, t);
                const double lhs = dphi * t;
                const double rhs = g * (1.0 + 2.0 * phi);
                if (lhs < -1e-12 || lhs > rhs * (1.0 + 1e-12) + 1e-12) {
                    ++power.violations;
                    power.worst_t = t;
                    power.worst_gamma = g;
                }
                worst_slack[0] = std::max(worst_slack[0], lhs - rhs);
            }
            {
                const double g = unit(rng);
                PhiFamily f;
                f.gamma = g;
                f.branch = PhiFamily::Branch::Quadratic;
                const auto [phi, dphi] = phi_eval(f, t);
                const double lhs = dphi * t;
                const double rhs = 2.0 + (g + 2.0) * phi;
                if (lhs < -1e-12 || lhs > rhs * (1.0 + 1e-12) + 1e-12) {
                    ++quad.violations;
                    quad.worst_t = t;
                    quad.worst_gamma = g;
                }
            }
            {
                const double g = 10.0 * unit(rng);
                const PhiFamily f = make_phi(g);
                const auto [phi, dphi] = phi_eval(f, t);
                const double lhs = dphi * t;
                const double rhs = (2.0 * g + 2.0) * (1.0 + phi);
                if (lhs < -1e-12 || lhs > rhs * (1.0 + 1e-12) + 1e-12) {
                    ++unified.violations;
                    unified.worst_t = t;
                    unified.worst_gamma = g;
                }
            }
        }
        power.pass = power.violations == 0;
        quad.pass = quad.violations == 0;
        unified.pass = unified.violations == 0;
        rep.rows.push_back(power);
        rep.rows.push_back(quad);
        rep.rows.push_back(unified);
    }

    // Existence-of-constant rows. Each empirical sup starts from a
    // deterministic stratified sweep over (gamma, sigma, t), then random
    // samples refine it; the drift criterion watches the random phase.
    const double sigma_min = 2.0 * alpha / (two_star * (2.0 - alpha));
    const bool sigma_ok = sigma_min <= 1.0;
    const long k_samples = std::max<long>(512, samples / 16);
    const double t_lo = 1.0 + 1e-6;

    auto sigma_at = [&](int si) {
        return sigma_min + (1.0 - sigma_min) * si / 7.0;
    };

    auto stabilized_sup = [&](LemmaRecord& rec, double g_lo, double g_hi,
                              bool use_sigma,
                              const std::function<double(double, double, double)>&
                                  ratio) {
        detail::SupTracker sup;
        const int n_g = g_hi > g_lo ? 10 : 1;
        const int n_s = use_sigma ? 8 : 1;
        const int n_t = 24;
        for (int gi = 0; gi < n_g; ++gi) {
            const double gamma =
                n_g == 1 ? g_lo : g_lo + (g_hi - g_lo) * gi / (n_g - 1);
            for (int si = 0; si < n_s; ++si) {
                const double sigma = use_sigma ? sigma_at(si) : 0.0;
                for (int ti = 0; ti < n_t; ++ti) {
                    const double t =
                        t_lo * std::pow(rep.t_hi / t_lo, (ti + 0.5) / n_t);
                    sup.observe(ratio(gamma, sigma, t), t, gamma, sigma);
                }
            }
        }
        for (long i = 0; i < k_samples; ++i) {
            if (i == k_samples / 2) sup.mark_half();
            const double gamma = g_lo + (g_hi - g_lo) * unit(rng);
            const double sigma =
                use_sigma ? sigma_at(static_cast<int>(unit(rng) * 8.0)) : 0.0;
            const double t = rand_t(t_lo, rep.t_hi);
            sup.observe(ratio(gamma, sigma, t), t, gamma, sigma);
        }
        sup.fill(rec);
    };

    auto lhs_integral_power = [&](double gamma, double t) {
        return 1.0 + integrate(
                         [&](double s) {
                             return std::pow(s - 1.0, gamma) * std::sqrt(K_m(h, s));
                         },
                         1.0, t, 1e-8, 48, 1e-9);
    };
    auto lhs_integral_phi = [&](double gamma, double t) {
        const PhiFamily f = make_phi(gamma);
        return 1.0 + integrate(
                         [&](double s) {
                             if (s <= 1.0) return 0.0;
                             return std::sqrt(phi_eval(f, s).first * K_m(h, s));
                         },
                         1.0, t, 1e-8, 48, 1e-9);
    };

    {
        LemmaRecord rec{"growth_lemma_power"};
        if (sigma_ok)
            stabilized_sup(rec, 1.0, 6.0, true, [&](double g, double s, double t) {
                const double logA =
                    two_star * ((g + 1.0) * std::log(t - 1.0) -
                                beta * std::log(t) - std::log(g + 1.0)) +
                    log_K_M(h, t) / s;
                return std::exp(log1p_exp(logA) / two_star -
                                std::log(lhs_integral_power(g, t)));
            });
        else {
            rec.pass = false;
            rec.note = "sigma window empty (alpha too large for 2*)";
        }
        rep.rows.push_back(rec);
    }
    {
        LemmaRecord rec{"growth_lemma_unified"};
        if (sigma_ok)
            stabilized_sup(rec, 0.0, 6.0, true, [&](double g, double s, double t) {
                const double logA =
                    two_star * ((0.5 * g + 1.0) * std::log(t - 1.0) -
                                beta * std::log(t) - std::log(g + 1.0)) +
                    log_K_M(h, t) / s;
                return std::exp(log1p_exp(logA) / two_star -
                                std::log(lhs_integral_phi(g, t)));
            });
        else {
            rec.pass = false;
            rec.note = "sigma window empty (alpha too large for 2*)";
        }
        rep.rows.push_back(rec);
    }

    // Corollary at sigma = 1/tau (the K_M^tau form).
    {
        LemmaRecord rec{"growth_lemma_sigma_tau"};
        if (tau >= 1.0 && 1.0 / tau >= sigma_min - 1e-12 && sigma_ok) {
            stabilized_sup(rec, 0.0, 6.0, false, [&](double g, double, double t) {
                const double logA =
                    two_star * ((0.5 * g + 1.0) * std::log(t - 1.0) -
                                beta * std::log(t) - std::log(g + 1.0)) +
                    tau * log_K_M(h, t);
                return std::exp(log1p_exp(logA) / two_star -
                                std::log(lhs_integral_phi(g, t)));
            });
            rec.worst_sigma = 1.0 / tau;
        } else {
            rec.pass = true;
            rec.note = "skipped: 1/tau outside the sigma window";
        }
        rep.rows.push_back(rec);
    }

    // Corollary with exponent 2* sigma and a bare K_M factor.
    {
        LemmaRecord rec{"growth_lemma_KM_linear"};
        if (sigma_ok)
            stabilized_sup(rec, 0.0, 6.0, true, [&](double g, double s, double t) {
                const double logA =
                    two_star * s *
                        ((0.5 * g + 1.0) * std::log(t - 1.0) -
                         beta * std::log(t) - std::log(g + 1.0)) +
                    log_K_M(h, t);
                return std::exp(log1p_exp(logA) / (two_star * s) -
                                std::log(lhs_integral_phi(g, t)));
            });
        else {
            rec.pass = false;
            rec.note = "sigma window empty (alpha too large for 2*)";
        }
        rep.rows.push_back(rec);
    }

    // h'(t) t <= C (1 + h(t))^{1/(2-alpha)}.
    {
        LemmaRecord rec{"hprime_lemma"};
        stabilized_sup(rec, 0.0, 0.0, false, [&](double, double, double t) {
            return std::exp(h.log_hp_at(t) + std::log(t) -
                            h.log1p_h_at(t) / (2.0 - alpha));
        });
        rep.rows.push_back(rec);
    }

    // 1 + K_M^tau t^{2 tau} <= C (1 + h)^{tau alpha / (2 - alpha)}.
    {
        LemmaRecord rec{"K_lemma"};
        if (tau < two_star * (2.0 - alpha) / (2.0 * alpha)) {
            const double eta = tau * alpha / (2.0 - alpha);
            stabilized_sup(rec, 0.0, 0.0, false, [&](double, double, double t) {
                const double log_lhs =
                    log1p_exp(tau * log_K_M(h, t) + 2.0 * tau * std::log(t));
                return std::exp(log_lhs - eta * h.log1p_h_at(t));
            });
        } else {
            rec.pass = true;
            rec.note = "skipped: tau outside the K-lemma window";
        }
        rep.rows.push_back(rec);
    }

    // Ellipticity sandwich for the paired integrand.
    {
        LemmaRecord rec{"ellipticity_sandwich"};
        std::uniform_real_distribution<double> sym(-1.0, 1.0);
        const Box& dom = spec.domain();
        const double t_cap = std::min(spec.t_representable(), 50.0);
        long done = 0;
        while (done < std::max<long>(1000, samples / 10)) {
            MatMN xi, lambda;
            xi.m = lambda.m = 2;
            xi.n = lambda.n = 2;
            for (int c = 0; c < 2; ++c)
                for (int k = 0; k < 2; ++k) {
                    xi(c, k) = sym(rng);
                    lambda(c, k) = sym(rng);
                }
            const double nrm = xi.norm();
            if (nrm < 1e-3) continue;
            const double scale = rand_t(1e-2, 0.45 * t_cap) / nrm;
            for (auto& v : xi.a) v *= scale;
            Point x{0.0, 0.0, 0.0};
            for (int k = 0; k < dom.dim; ++k)
                x[k] = dom.lo[k] + dom.side(k) * unit(rng);
            ++done;
            const double form = hessian_quadratic_form(spec, x, xi, lambda);
            auto [hm, hM] = ellipticity_bounds(spec, x, xi.norm());
            const double l2 = lambda.dot(lambda);
            if (form < hm * l2 * (1.0 - 1e-9) - 1e-12 ||
                form > hM * l2 * (1.0 + 1e-9) + 1e-12) {
                ++rec.violations;
                rec.worst_t = xi.norm();
            }
        }
        rec.pass = rec.violations == 0;
        rep.rows.push_back(rec);
    }

    // Informational: the global alpha cap and the tighter iteration cap.
    {
        LemmaRecord rec{"lemma9_alpha_window"};
        rec.pass = true;
        rec.sup_constant = rep.alpha_lemma9_max;
        rec.note = "alpha = " + fmt_double(alpha) + ", global max " +
                   fmt_double(rep.alpha_global_max) + ", lemma-9 proof max " +
                   fmt_double(rep.alpha_lemma9_max) +
                   (alpha <= rep.alpha_lemma9_max ? " (inside)" : " (outside)");
        rep.rows.push_back(rec);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Moser schedule
// ---------------------------------------------------------------------------

struct MoserSchedule {
    std::vector<double> gamma_seq;  // gamma_0 .. gamma_imax
    std::vector<double> radii;      // rho_0 .. rho_imax
    std::vector<double> k_seq;      // k_0 .. k_imax
    double limit_exponent = 0.0;
};

/// The dimension-like factor in the closed form: equals n whenever 2* is the
/// Sobolev exponent 2n/(n-2); for n = 2 with a chosen 2* it generalizes to
/// 2 2*/(2* - 2).
inline double moser_dimension_factor(int n, double two_star) {
    if (n >= 3 && two_star == default_two_star(n)) return n;
    return 2.0 * two_star / (two_star - 2.0);
}

/// gamma_0 = 0, gamma_{i+1} = (2*/2)(gamma_i + 2) - (2 tau + 2* beta);
/// rho_i = rho + (R - rho)/2^i; k_i -> (1 - beta - 2 tau/2*) n.
inline MoserSchedule moser_schedule(int n, double beta, double tau, double rho_bar,
                                    double R_bar, int i_max, double two_star = 0.0) {
    if (!(rho_bar > 0.0 && rho_bar < R_bar))
        throw InputError("need 0 < rho < R");
    if (i_max < 1) throw InputError("i_max must be at least 1");
    const double ts = two_star > 0.0 ? two_star : default_two_star(n);
    if (!(tau < (1.0 - beta) * ts / 2.0))
        throw InputError("infeasible exponents: tau >= (1 - beta) 2*/2");
    MoserSchedule s;
    const double half = ts / 2.0;
    const double slope = 1.0 - beta - 2.0 * tau / ts;
    const double nf = moser_dimension_factor(n, ts);
    s.limit_exponent = slope * nf;
    double gamma = 0.0;
    for (int i = 0; i <= i_max; ++i) {
        s.gamma_seq.push_back(gamma);
        s.radii.push_back(rho_bar + (R_bar - rho_bar) / std::pow(2.0, i));
        s.k_seq.push_back(slope * (1.0 - std::pow(half, -(i + 1.0))) * nf);
        gamma = half * (gamma + 2.0) - (2.0 * tau + ts * beta);
    }
    return s;
}

/// Closed form for gamma_i in the Moser recurrence.
inline double moser_gamma_closed_form(int n, double beta, double tau, int i,
                                      double two_star = 0.0) {
    const double ts = two_star > 0.0 ? two_star : default_two_star(n);
    return (1.0 - beta - 2.0 * tau / ts) * (std::pow(ts / 2.0, i) - 1.0) *
           moser_dimension_factor(n, ts);
}

// ---------------------------------------------------------------------------
// Report serialization
// ---------------------------------------------------------------------------

inline std::string structural_report_csv(const AssumptionReport& rep) {
    std::string out = "name,certified,constant,worst_x,worst_t,quotient\n";
    for (const auto& r : rep.rows) {
        std::string wx = fmt_double(r.worst_x[0]);
        for (int k = 1; k < rep.subdomain.dim; ++k)
            wx += ";" + fmt_double(r.worst_x[k]);
        out += r.name + "," + (r.certified ? "yes" : "no") + "," +
               fmt_double(r.constant) + "," + wx + "," + fmt_double(r.worst_t) +
               "," + fmt_double(r.worst_quotient) + "\n";
    }
    return out;
}

inline std::string lemma_report_csv(const LemmaReport& rep) {
    std::string out =
        "name,pass,violations,sup_constant,drift,worst_t,worst_gamma,worst_sigma\n";
    for (const auto& r : rep.rows)
        out += r.name + "," + (r.pass ? "yes" : "no") + "," +
               std::to_string(r.violations) + "," + fmt_double(r.sup_constant) +
               "," + fmt_double(r.drift) + "," + fmt_double(r.worst_t) + "," +
               fmt_double(r.worst_gamma) + "," + fmt_double(r.worst_sigma) + "\n";
    return out;
}

}  // namespace gradbound
