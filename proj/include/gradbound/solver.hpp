#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "gradbound/common.hpp"
#include "gradbound/integrand.hpp"

namespace gradbound {

// ---------------------------------------------------------------------------
// Grid and fields (n = 2, m components)
// ---------------------------------------------------------------------------

/// Uniform square grid: (N+1)^2 nodes, N^2 cells, bilinear elements with
/// midpoint quadrature, so constant-gradient fields are reproduced exactly.
struct Grid {
    double x0 = 0.0, y0 = 0.0;
    double side = 1.0;
    int ncells = 16;  // N
    int m = 1;        // solution components

    Grid() = default;
    Grid(double x0_, double y0_, double side_, int ncells_, int m_)
        : x0(x0_), y0(y0_), side(side_), ncells(ncells_), m(m_) {
        if (ncells < 4) throw InputError("grid needs at least 4 cells per side");
        if (m < 1) throw InputError("component count must be positive");
        if (side <= 0.0) throw InputError("grid side must be positive");
    }

    double h() const { return side / ncells; }
    int nodes_per_side() const { return ncells + 1; }
    long node_count() const {
        return static_cast<long>(nodes_per_side()) * nodes_per_side();
    }
    long dof_count() const { return node_count() * m; }
    long node_index(int i, int j) const {
        return static_cast<long>(j) * nodes_per_side() + i;
    }
    long dof_index(int i, int j, int comp) const {
        return node_index(i, j) * m + comp;
    }
    Point node_pos(int i, int j) const {
        return make_point(x0 + h() * i, y0 + h() * j);
    }
    Point cell_center(int ci, int cj) const {
        return make_point(x0 + h() * (ci + 0.5), y0 + h() * (cj + 0.5));
    }
    bool boundary_node(int i, int j) const {
        return i == 0 || j == 0 || i == ncells || j == ncells;
    }
    Box box() const {
        Box b;
        b.dim = 2;
        b.lo = make_point(x0, y0);
        b.hi = make_point(x0 + side, y0 + side);
        return b;
    }
};

/// Boundary datum: closed-form map x -> R^m used to pin boundary nodes and
/// to seed the interior.
using BoundaryDatum = std::function<void(const Point&, std::vector<double>&)>;

/// m-component nodal field with a fixed/free mask on the grid.
struct DiscreteField {
    Grid grid;
    std::vector<double> values;      // dof-indexed
    std::vector<std::uint8_t> fixed; // node-indexed
    std::string provenance;

    explicit DiscreteField(const Grid& g)
        : grid(g), values(g.dof_count(), 0.0), fixed(g.node_count(), 0) {}

    double& at(int i, int j, int comp) { return values[grid.dof_index(i, j, comp)]; }
    double at(int i, int j, int comp) const {
        return values[grid.dof_index(i, j, comp)];
    }
};

/// Gradient of the bilinear interpolant at one cell center.
struct CellGradient {
    MatMN du;          // m x 2
    double magnitude;  // |Du|
};

inline CellGradient cell_gradient(const DiscreteField& u, int ci, int cj) {
    const Grid& g = u.grid;
    CellGradient out;
    out.du.m = g.m;
    out.du.n = 2;
    const double inv = 1.0 / (2.0 * g.h());
    double mag2 = 0.0;
    for (int c = 0; c < g.m; ++c) {
        const double u00 = u.at(ci, cj, c);
        const double u10 = u.at(ci + 1, cj, c);
        const double u01 = u.at(ci, cj + 1, c);
        const double u11 = u.at(ci + 1, cj + 1, c);
        const double ux = (u10 + u11 - u00 - u01) * inv;
        const double uy = (u01 + u11 - u00 - u10) * inv;
        out.du(c, 0) = ux;
        out.du(c, 1) = uy;
        mag2 += ux * ux + uy * uy;
    }
    out.magnitude = std::sqrt(mag2);
    return out;
}

/// Apply the datum on boundary nodes and mark them fixed; interior nodes are
/// seeded by transfinite (Coons) interpolation of the boundary values.
inline DiscreteField make_boundary_field(const Grid& g, const BoundaryDatum& datum,
                                         const std::string& provenance = "") {
    DiscreteField u(g);
    u.provenance = provenance;
    const int N = g.ncells;
    std::vector<double> val(g.m);
    auto eval_at = [&](int i, int j, std::vector<double>& out) {
        datum(g.node_pos(i, j), out);
        if (static_cast<int>(out.size()) != g.m)
            throw InputError("boundary datum returned wrong component count");
        for (double v : out)
            if (!std::isfinite(v))
                throw InputError("boundary datum not finite on the boundary");
    };
    for (int j = 0; j <= N; ++j)
        for (int i = 0; i <= N; ++i) {
            if (!g.boundary_node(i, j)) continue;
            eval_at(i, j, val);
            for (int c = 0; c < g.m; ++c) u.at(i, j, c) = val[c];
            u.fixed[g.node_index(i, j)] = 1;
        }
    // Coons patch of the four boundary edges.
    for (int j = 1; j < N; ++j)
        for (int i = 1; i < N; ++i) {
            const double s = static_cast<double>(i) / N;
            const double t = static_cast<double>(j) / N;
            for (int c = 0; c < g.m; ++c) {
                const double left = u.at(0, j, c), right = u.at(N, j, c);
                const double bottom = u.at(i, 0, c), top = u.at(i, N, c);
                const double c00 = u.at(0, 0, c), c10 = u.at(N, 0, c);
                const double c01 = u.at(0, N, c), c11 = u.at(N, N, c);
                u.at(i, j, c) = (1 - s) * left + s * right + (1 - t) * bottom +
                                t * top -
                                ((1 - s) * (1 - t) * c00 + s * (1 - t) * c10 +
                                 (1 - s) * t * c01 + s * t * c11);
            }
        }
    return u;
}

// ---------------------------------------------------------------------------
// Energy, gradient, residual
// ---------------------------------------------------------------------------

namespace detail {

template <class CellFn>
void for_cells_partitioned(int N, int workers, const CellFn& fn) {
    if (workers <= 1) {
        fn(0, 0, N * N);
        return;
    }
    std::vector<std::thread> pool;
    const int total = N * N;
    const int chunk = (total + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const int lo = w * chunk;
        const int hi = std::min(total, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([=, &fn] { fn(w, lo, hi); });
    }
    for (auto& th : pool) th.join();
}

}  // namespace detail

/// F(u) = sum over cells of g(x_c, |Du_c|) h^2.
inline double discrete_energy(const IntegrandSpec& spec, const DiscreteField& u,
                              int workers = 1) {
    const Grid& g = u.grid;
    const int N = g.ncells;
    const double area = g.h() * g.h();
    // Grow the clamp cache serially before any parallel evaluation.
    if (workers > 1) {
        double tmax = 0.0;
        for (int cj = 0; cj < N; ++cj)
            for (int ci = 0; ci < N; ++ci)
                tmax = std::max(tmax, cell_gradient(u, ci, cj).magnitude);
        spec.warm_up(tmax);
    }
    std::vector<double> partial(std::max(1, workers), 0.0);
    std::string error;
    detail::for_cells_partitioned(N, workers, [&](int w, int lo, int hi) {
        double acc = 0.0;
        for (int idx = lo; idx < hi; ++idx) {
            const int ci = idx % N;
            const int cj = idx / N;
            const CellGradient cg = cell_gradient(u, ci, cj);
            try {
                acc += spec.eval_radial(g.cell_center(ci, cj), cg.magnitude).g;
            } catch (const std::exception& e) {
                error = "cell (" + std::to_string(ci) + "," + std::to_string(cj) +
                        "): " + e.what();
                return;
            }
        }
        partial[w] = acc;
    });
    if (!error.empty()) throw NumericError("discrete energy: " + error);
    double total = 0.0;
    for (double p : partial) total += p;  // deterministic worker order
    return total * area;
}

/// Exact gradient of the discrete energy with respect to free node values;
/// entries on fixed nodes are zero. Cells with |Du| below `t_eps` use the
/// smooth-origin flux limit g_tt(x,0) Du.
inline std::vector<double> energy_gradient(const IntegrandSpec& spec,
                                           const DiscreteField& u, int workers = 1,
                                           double t_eps = 1e-12) {
    const Grid& g = u.grid;
    const int N = g.ncells;
    const double area = g.h() * g.h();
    const double inv = 1.0 / (2.0 * g.h());
    const int W = std::max(1, workers);
    if (workers > 1) {
        double tmax = 0.0;
        for (int cj = 0; cj < N; ++cj)
            for (int ci = 0; ci < N; ++ci)
                tmax = std::max(tmax, cell_gradient(u, ci, cj).magnitude);
        spec.warm_up(tmax);
    }
    std::vector<std::vector<double>> buffers(W);
    for (auto& b : buffers) b.assign(u.values.size(), 0.0);
    std::string error;
    detail::for_cells_partitioned(N, workers, [&](int w, int lo, int hi) {
        std::vector<double>& out = buffers[w];
        for (int idx = lo; idx < hi; ++idx) {
            const int ci = idx % N;
            const int cj = idx / N;
            const Point xc = g.cell_center(ci, cj);
            const CellGradient cg = cell_gradient(u, ci, cj);
            double weight;  // g_t(|Du|)/|Du|, with the analytic origin limit
            try {
                if (cg.magnitude < t_eps) {
                    weight = spec.second_derivative_at_zero(xc);
                    if (!std::isfinite(weight))
                        throw NumericError(
                            "flux limit g_tt(x,0) is not finite; solve the "
                            "clamped spec instead");
                } else {
                    weight = spec.eval_radial(xc, cg.magnitude).g_t / cg.magnitude;
                }
            } catch (const std::exception& e) {
                error = "cell (" + std::to_string(ci) + "," + std::to_string(cj) +
                        "): " + e.what();
                return;
            }
            const double f = area * weight * inv;
            for (int c = 0; c < g.m; ++c) {
                const double ux = cg.du(c, 0);
                const double uy = cg.du(c, 1);
                out[g.dof_index(ci, cj, c)] += f * (-ux - uy);
                out[g.dof_index(ci + 1, cj, c)] += f * (ux - uy);
                out[g.dof_index(ci, cj + 1, c)] += f * (-ux + uy);
                out[g.dof_index(ci + 1, cj + 1, c)] += f * (ux + uy);
            }
        }
    });
    if (!error.empty()) throw NumericError("energy gradient: " + error);
    std::vector<double> grad(u.values.size(), 0.0);
    for (const auto& b : buffers)
        for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += b[k];
    const int NP = g.nodes_per_side();
    for (int j = 0; j < NP; ++j)
        for (int i = 0; i < NP; ++i)
            if (u.fixed[g.node_index(i, j)])
                for (int c = 0; c < g.m; ++c) grad[g.dof_index(i, j, c)] = 0.0;
    return grad;
}

/// Discrete strong-form residual: sup of |energy gradient| over free nodes,
/// scaled by h^-2.
inline double euler_residual(const IntegrandSpec& spec, const DiscreteField& u,
                             int workers = 1) {
    const auto grad = energy_gradient(spec, u, workers);
    double sup = 0.0;
    for (double v : grad) sup = std::max(sup, std::fabs(v));
    return sup / (u.grid.h() * u.grid.h());
}

/// Max of |Du| over cells whose centers lie in the closed ball.
inline double sup_norm_on_ball(const DiscreteField& u, const Point& center,
                               double rho) {
    const Grid& g = u.grid;
    if (rho < g.h())
        throw InputError("ball radius below the mesh width: no cell centers");
    double best = -1.0;
    for (int cj = 0; cj < g.ncells; ++cj)
        for (int ci = 0; ci < g.ncells; ++ci) {
            const Point xc = g.cell_center(ci, cj);
            const double dx = xc[0] - center[0];
            const double dy = xc[1] - center[1];
            if (dx * dx + dy * dy <= rho * rho)
                best = std::max(best, cell_gradient(u, ci, cj).magnitude);
        }
    if (best < 0.0) throw InputError("no cell centers inside the ball");
    return best;
}

// ---------------------------------------------------------------------------
// Minimization
// ---------------------------------------------------------------------------

struct SolveOptions {
    double tol = 1e-8;          // sup norm of the projected gradient
    long max_iter = 50000;
    enum class Method { NonlinearCG, GradientDescentArmijo } method =
        Method::NonlinearCG;
    double armijo_c1 = 1e-4;
    std::uint64_t seed = 0;     // recorded with the solution
    int workers = 1;

    void validate() const {
        if (tol <= 0.0) throw InputError("tolerance must be positive");
        if (!(armijo_c1 > 0.0 && armijo_c1 < 0.5))
            throw InputError("armijo constant must lie in (0, 1/2)");
        if (max_iter < 1) throw InputError("max_iter must be positive");
    }
};

struct Solution {
    DiscreteField u;
    long iterations = 0;
    double grad_sup = 0.0;
    bool converged = false;
    std::vector<double> energy_trace;  // energy after each accepted step
    std::string diagnosis;
};

namespace detail {

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double sup_abs(const std::vector<double>& a) {
    double s = 0.0;
    for (double v : a) s = std::max(s, std::fabs(v));
    return s;
}

}  // namespace detail

/// Minimize the discrete energy over free nodes with Dirichlet data:
/// Polak-Ribiere nonlinear CG with Armijo backtracking, plain gradient
/// descent after repeated restarts. The energy trace is nonincreasing
/// across accepted steps.
inline Solution minimize(const IntegrandSpec& spec, const Grid& grid,
                         const BoundaryDatum& datum, const SolveOptions& opts = {},
                         const std::string& provenance = "") {
    opts.validate();
    Solution sol{make_boundary_field(grid, datum, provenance)};
    DiscreteField& u = sol.u;
    const int W = std::max(1, opts.workers);

    double energy = discrete_energy(spec, u, W);
    sol.energy_trace.push_back(energy);
    std::vector<double> grad = energy_gradient(spec, u, W);
    std::vector<double> dir(grad.size());
    for (std::size_t k = 0; k < grad.size(); ++k) dir[k] = -grad[k];
    std::vector<double> trial(grad.size());
    double step = 1.0;
    int restarts_in_row = 0;
    bool forced_descent = opts.method == SolveOptions::Method::GradientDescentArmijo;

    for (sol.iterations = 0; sol.iterations < opts.max_iter; ++sol.iterations) {
        sol.grad_sup = detail::sup_abs(grad);
        if (sol.grad_sup <= opts.tol) {
            sol.converged = true;
            return sol;
        }
        double gd = detail::dot(grad, dir);
        if (gd >= -1e-14 * detail::sup_abs(dir) * sol.grad_sup) {
            for (std::size_t k = 0; k < grad.size(); ++k) dir[k] = -grad[k];
            gd = detail::dot(grad, dir);
            ++restarts_in_row;
            if (restarts_in_row > 3) forced_descent = true;  // restart storm
        } else {
            restarts_in_row = 0;
        }

        // Trial step from a directional-derivative secant (exact on quadratic
        // energies and immune to the vanishing energy differences near the
        // optimum), then Armijo backtracking with machine-noise slack.
        // Trial points may leave the integrand's floating range (exponential
        // growth); such steps read as +inf / NaN and get backtracked.
        auto energy_at = [&](double s) {
            for (std::size_t k = 0; k < trial.size(); ++k)
                trial[k] = u.values[k] + s * dir[k];
            std::swap(u.values, trial);
            double e;
            try {
                e = discrete_energy(spec, u, W);
            } catch (const std::exception&) {
                e = std::numeric_limits<double>::infinity();
            }
            std::swap(u.values, trial);
            return e;
        };
        auto slope_at = [&](double s) {
            for (std::size_t k = 0; k < trial.size(); ++k)
                trial[k] = u.values[k] + s * dir[k];
            std::swap(u.values, trial);
            double gd_s;
            try {
                gd_s = detail::dot(energy_gradient(spec, u, W), dir);
            } catch (const std::exception&) {
                gd_s = std::numeric_limits<double>::quiet_NaN();
            }
            std::swap(u.values, trial);
            return gd_s;
        };
        double s0 = step;
        double s = s0;
        const double gd1 = slope_at(s0);
        const double curv = (gd1 - gd) / s0;
        if (curv < -1e-9 * std::fabs(gd / s0)) {
            // Negative curvature along a descent segment: the energy is not
            // convex here. Report the cell where convexity fails.
            int bad_i = -1, bad_j = -1;
            double worst = 0.0;
            for (int cj = 0; cj < grid.ncells; ++cj)
                for (int ci = 0; ci < grid.ncells; ++ci) {
                    const CellGradient cg = cell_gradient(u, ci, cj);
                    const double gtt =
                        cg.magnitude < 1e-12
                            ? spec.second_derivative_at_zero(grid.cell_center(ci, cj))
                            : spec.eval_radial(grid.cell_center(ci, cj),
                                               cg.magnitude).g_tt;
                    if (gtt < worst) {
                        worst = gtt;
                        bad_i = ci;
                        bad_j = cj;
                    }
                }
            throw NumericError(
                "non-convex energy detected during minimization at cell (" +
                std::to_string(bad_i) + "," + std::to_string(bad_j) +
                "), g_tt = " + fmt_double(worst));
        }
        if (std::isfinite(curv) && curv > 0.0) {
            const double s_star = -gd / curv;
            if (std::isfinite(s_star) && s_star > 0.0) s = s_star;
        } else if (gd1 < 0.0) {
            s = 4.0 * s0;  // still descending at the probe point
        }
        const double slack =
            4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::fabs(energy));
        double e_new = 0.0;
        bool accepted = false;
        for (int back = 0; back < 60; ++back) {
            e_new = energy_at(s);
            if (std::isfinite(e_new) &&
                e_new <= energy + opts.armijo_c1 * s * gd + slack) {
                accepted = true;
                break;
            }
            s *= 0.5;
        }
        if (!accepted) {
            sol.diagnosis = "line search failed at iteration " +
                            std::to_string(sol.iterations) +
                            " (grad sup = " + fmt_double(sol.grad_sup) + ")";
            return sol;
        }
        for (std::size_t k = 0; k < u.values.size(); ++k) u.values[k] += s * dir[k];
        step = std::max(1e-12, s * 2.0);
        energy = e_new;
        sol.energy_trace.push_back(energy);

        std::vector<double> grad_new = energy_gradient(spec, u, W);
        if (forced_descent) {
            for (std::size_t k = 0; k < grad.size(); ++k) dir[k] = -grad_new[k];
        } else {
            double num = 0.0, den = 0.0;
            for (std::size_t k = 0; k < grad.size(); ++k) {
                num += grad_new[k] * (grad_new[k] - grad[k]);
                den += grad[k] * grad[k];
            }
            const double beta_pr = den > 0.0 ? std::max(0.0, num / den) : 0.0;
            for (std::size_t k = 0; k < grad.size(); ++k)
                dir[k] = -grad_new[k] + beta_pr * dir[k];
        }
        grad = std::move(grad_new);
    }
    sol.grad_sup = detail::sup_abs(grad);
    sol.converged = sol.grad_sup <= opts.tol;
    if (!sol.converged) sol.diagnosis = "max_iter reached";
    return sol;
}

// ---------------------------------------------------------------------------
// Boundary datum library
// ---------------------------------------------------------------------------

/// u^c(x) = (A x)_c + b_c with A an m x 2 matrix.
inline BoundaryDatum affine_datum(const MatMN& A, const std::vector<double>& b) {
    return [A, b](const Point& x, std::vector<double>& out) {
        out.assign(A.m, 0.0);
        for (int c = 0; c < A.m; ++c) {
            out[c] = A(c, 0) * x[0] + A(c, 1) * x[1];
            if (c < static_cast<int>(b.size())) out[c] += b[c];
        }
    };
}

/// Scalar harmonic quadratic x1^2 - x2^2.
inline BoundaryDatum harmonic_quadratic_datum() {
    return [](const Point& x, std::vector<double>& out) {
        out.assign(1, x[0] * x[0] - x[1] * x[1]);
    };
}

/// Oscillatory datum: u^c = A sin(k pi (x1 + 2 x2) + c pi/2).
inline BoundaryDatum sine_datum(int m, double k, double amplitude) {
    return [m, k, amplitude](const Point& x, std::vector<double>& out) {
        out.assign(m, 0.0);
        for (int c = 0; c < m; ++c)
            out[c] = amplitude *
                     std::sin(k * M_PI * (x[0] + 2.0 * x[1]) + 0.5 * M_PI * c);
    };
}

/// Radial bump |x - center|^2 scaled, one component.
inline BoundaryDatum radial_datum(const Point& center, double amplitude) {
    return [center, amplitude](const Point& x, std::vector<double>& out) {
        const double dx = x[0] - center[0];
        const double dy = x[1] - center[1];
        out.assign(1, amplitude * (dx * dx + dy * dy));
    };
}

}  // namespace gradbound
