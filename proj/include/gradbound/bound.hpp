#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "gradbound/common.hpp"
#include "gradbound/solver.hpp"
#include "gradbound/structural.hpp"

namespace gradbound {

/// One evaluation of the a-priori inequality on solver output:
/// sup-norm side, energy-integral side, and their ratio, plus the
/// intermediate V-integral of the two-lemma chain as a diagnostic.
struct BoundSample {
    double rho = 0.0, R = 0.0;
    Point center{0.0, 0.0, 0.0};
    double sup_du = 0.0;     // raw sup of |Du| over B_rho
    double lhs = 0.0;        // sup_du ^ lhs_exponent
    double rhs_base = 0.0;   // area-normalized integral of 1 + g over B_R
    double rhs = 0.0;        // rhs_base ^ rhs_exponent
    double ratio = 0.0;
    double v_integral = 0.0; // integral of 1 + |Du|^{2 tau} K_M^tau over B_R
    double h_mesh = 0.0;
    double clamp_lower = 0.0;
    double clamp_upper = std::numeric_limits<double>::infinity();
    long iterations = 0;
};

/// Ball-averaged midpoint quadrature: |B_R| times the mean of f over cells
/// whose centers lie in the closed ball. Mesh-exact data then give
/// mesh-independent integrals, and values are bounded below by |B_R| inf f.
template <class F>
double ball_integral(const DiscreteField& u, const Point& center, double R,
                     const F& f) {
    const Grid& g = u.grid;
    double acc = 0.0;
    long count = 0;
    for (int cj = 0; cj < g.ncells; ++cj)
        for (int ci = 0; ci < g.ncells; ++ci) {
            const Point xc = g.cell_center(ci, cj);
            const double dx = xc[0] - center[0];
            const double dy = xc[1] - center[1];
            if (dx * dx + dy * dy > R * R) continue;
            acc += f(ci, cj, xc);
            ++count;
        }
    if (count == 0) throw InputError("no cell centers inside the ball");
    return std::numbers::pi * R * R * acc / static_cast<double>(count);
}

inline BoundSample evaluate_bound(const Solution& sol, const IntegrandSpec& spec,
                                  const HProfile& h, const ExponentSet& exps,
                                  const Point& center, double rho, double R) {
    if (!(rho < R)) throw InputError("need rho < R");
    if (!exps.feasible) throw InputError("infeasible exponents");
    const Grid& g = sol.u.grid;
    const Box box = g.box();
    if (center[0] - R < box.lo[0] - 1e-12 || center[0] + R > box.hi[0] + 1e-12 ||
        center[1] - R < box.lo[1] - 1e-12 || center[1] + R > box.hi[1] + 1e-12)
        throw InputError("ball B_R leaves the solver box");

    BoundSample s;
    s.rho = rho;
    s.R = R;
    s.center = center;
    s.h_mesh = g.h();
    if (spec.clamped()) {
        s.clamp_lower = spec.clamp().lower;
        s.clamp_upper = spec.clamp().upper;
    }
    s.iterations = sol.iterations;
    s.sup_du = sup_norm_on_ball(sol.u, center, rho);
    s.lhs = std::pow(s.sup_du, exps.lhs_exponent);
    s.rhs_base = ball_integral(sol.u, center, R, [&](int ci, int cj, const Point& xc) {
        return 1.0 + spec.eval(xc, cell_gradient(sol.u, ci, cj).magnitude).g;
    });
    s.rhs = std::pow(s.rhs_base, exps.rhs_exponent);
    s.ratio = s.lhs / s.rhs;
    const double tau = exps.tau;
    s.v_integral = ball_integral(sol.u, center, R, [&](int ci, int cj, const Point&) {
        const double t = cell_gradient(sol.u, ci, cj).magnitude;
        if (t < 1e-14) return 1.0;
        return 1.0 + std::pow(t, 2.0 * tau) * std::pow(K_M(h, t), tau);
    });
    return s;
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

/// Everything needed to run one bound experiment end to end.
struct BoundExperiment {
    IntegrandSpec base;                        // family before regularization
    std::optional<RegularizationClamp> clamp;  // applied before each solve
    HProfile h;
    ExponentSet exps;
    double box_x0 = 0.0, box_y0 = 0.0, side = 1.0;
    int m = 1;
    BoundaryDatum datum;
    SolveOptions solve;
    Point center{0.5, 0.5, 0.0};
    double rho = 0.2, R = 0.4;
};

struct SweepResult {
    std::string axis;  // "h", "M" or "N"
    std::vector<double> axis_values;
    std::vector<BoundSample> samples;
    double max_ratio = 0.0;
    double min_ratio = 0.0;
    double ratio_spread = 0.0;
    bool complete = false;
    std::string failure;
};

namespace detail {

inline void finish_sweep(SweepResult& r) {
    if (r.samples.empty()) return;
    r.max_ratio = r.min_ratio = r.samples.front().ratio;
    for (const auto& s : r.samples) {
        r.max_ratio = std::max(r.max_ratio, s.ratio);
        r.min_ratio = std::min(r.min_ratio, s.ratio);
    }
    r.ratio_spread = r.min_ratio > 0.0
                         ? r.max_ratio / r.min_ratio
                         : std::numeric_limits<double>::infinity();
}

inline BoundSample run_point(const BoundExperiment& ex,
                             const RegularizationClamp* clamp, int mesh) {
    const Grid grid(ex.box_x0, ex.box_y0, ex.side, mesh, ex.m);
    IntegrandSpec spec = clamp ? clamp_regularize(ex.base, *clamp) : ex.base;
    const Solution sol = minimize(spec, grid, ex.datum, ex.solve);
    if (!sol.converged)
        throw NumericError("solve failed at mesh " + std::to_string(mesh) + ": " +
                           (sol.diagnosis.empty() ? "not converged" : sol.diagnosis));
    return evaluate_bound(sol, spec, ex.h, ex.exps, ex.center, ex.rho, ex.R);
}

}  // namespace detail

/// Solve at each mesh width and test that the bound's ratio does not degrade
/// as the discrete minimizer approaches the continuum one. A solve failure
/// aborts the sweep; completed samples are retained.
inline SweepResult refinement_sweep(const BoundExperiment& ex,
                                    const std::vector<int>& meshes) {
    if (meshes.size() < 3)
        throw InputError("refinement sweep needs at least 3 mesh widths");
    SweepResult r;
    r.axis = "h";
    const RegularizationClamp* clamp = ex.clamp ? &*ex.clamp : nullptr;
    for (int mesh : meshes) {
        try {
            r.samples.push_back(detail::run_point(ex, clamp, mesh));
            r.axis_values.push_back(ex.side / mesh);
        } catch (const std::exception& e) {
            r.failure = e.what();
            detail::finish_sweep(r);
            return r;
        }
    }
    r.complete = true;
    detail::finish_sweep(r);
    return r;
}

/// Re-regularize with each clamp value at a fixed mesh, re-solve, evaluate.
/// sweep_upper picks whether the values replace M (upper) or N (lower).
inline SweepResult clamp_sweep(const BoundExperiment& ex, bool sweep_upper,
                               const std::vector<double>& values, int mesh) {
    if (values.size() < 3)
        throw InputError("clamp sweep needs at least 3 clamp values");
    if (!ex.clamp) throw InputError("clamp sweep needs a base clamp");
    SweepResult r;
    r.axis = sweep_upper ? "M" : "N";
    for (double v : values) {
        RegularizationClamp c = *ex.clamp;
        (sweep_upper ? c.upper : c.lower) = v;
        try {
            c.validate();
            r.samples.push_back(detail::run_point(ex, &c, mesh));
            r.axis_values.push_back(v);
        } catch (const std::exception& e) {
            r.failure = e.what();
            detail::finish_sweep(r);
            return r;
        }
    }
    r.complete = true;
    detail::finish_sweep(r);
    return r;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

inline const char* sweep_csv_header() {
    return "axis_value,h,N,M,rho,R,lhs,rhs_base,rhs,ratio,v_integral,iterations";
}

inline std::string sweep_csv(const SweepResult& r) {
    std::string out = sweep_csv_header();
    out += "\n";
    for (std::size_t i = 0; i < r.samples.size(); ++i) {
        const BoundSample& s = r.samples[i];
        out += fmt_double(r.axis_values[i]) + "," + fmt_double(s.h_mesh) + "," +
               fmt_double(s.clamp_lower) + "," + fmt_double(s.clamp_upper) + "," +
               fmt_double(s.rho) + "," + fmt_double(s.R) + "," + fmt_double(s.lhs) +
               "," + fmt_double(s.rhs_base) + "," + fmt_double(s.rhs) + "," +
               fmt_double(s.ratio) + "," + fmt_double(s.v_integral) + "," +
               std::to_string(s.iterations) + "\n";
    }
    return out;
}

inline void report_csv(const SweepResult& r, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot open '" + path + "' for writing");
    out << sweep_csv(r);
    if (!out) throw InputError("write failed for '" + path + "'");
}

/// Minimal static line plot of ratio against the sweep axis.
inline void write_svg_plot(const SweepResult& r, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot open '" + path + "' for writing");
    const int W = 480, H = 320, pad = 48;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
        << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
    out << "<rect width=\"" << W << "\" height=\"" << H
        << "\" fill=\"white\"/>\n";
    out << "<line x1=\"" << pad << "\" y1=\"" << H - pad << "\" x2=\"" << W - pad
        << "\" y2=\"" << H - pad << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << pad << "\" y1=\"" << pad << "\" x2=\"" << pad
        << "\" y2=\"" << H - pad << "\" stroke=\"black\"/>\n";
    if (!r.samples.empty()) {
        double lo = r.samples.front().ratio, hi = lo;
        for (const auto& s : r.samples) {
            lo = std::min(lo, s.ratio);
            hi = std::max(hi, s.ratio);
        }
        if (hi <= lo) hi = lo + 1.0;
        std::string pts;
        for (std::size_t i = 0; i < r.samples.size(); ++i) {
            const double fx = r.samples.size() == 1
                                  ? 0.5
                                  : static_cast<double>(i) / (r.samples.size() - 1);
            const double fy = (r.samples[i].ratio - lo) / (hi - lo);
            const double px = pad + fx * (W - 2 * pad);
            const double py = H - pad - fy * (H - 2 * pad);
            pts += fmt_double(px) + "," + fmt_double(py) + " ";
            out << "<circle cx=\"" << fmt_double(px) << "\" cy=\"" << fmt_double(py)
                << "\" r=\"3\" fill=\"steelblue\"/>\n";
        }
        out << "<polyline points=\"" << pts
            << "\" fill=\"none\" stroke=\"steelblue\"/>\n";
        out << "<text x=\"" << pad << "\" y=\"" << pad - 12
            << "\" font-size=\"12\">ratio vs " << r.axis << " (spread "
            << fmt_double(r.ratio_spread) << ")</text>\n";
    }
    out << "</svg>\n";
    if (!out) throw InputError("write failed for '" + path + "'");
}

}  // namespace gradbound
