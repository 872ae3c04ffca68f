#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "gradbound/expr.hpp"
#include "gradbound/solver.hpp"

using namespace gradbound;

namespace {

MatMN affine_matrix(int m, std::initializer_list<double> entries) {
    MatMN A;
    A.m = m;
    A.n = 2;
    int idx = 0;
    for (double v : entries) {
        A(idx / 2, idx % 2) = v;
        ++idx;
    }
    return A;
}

DiscreteField random_interior(const Grid& g, const BoundaryDatum& datum,
                              std::uint64_t seed, double amp = 0.5) {
    DiscreteField u = make_boundary_field(g, datum);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> d(-amp, amp);
    for (int j = 1; j < g.ncells; ++j)
        for (int i = 1; i < g.ncells; ++i)
            for (int c = 0; c < g.m; ++c) u.at(i, j, c) += d(rng);
    return u;
}

}  // namespace

TEST_CASE("grid invariants") {
    CHECK_THROWS_AS(Grid(0, 0, 1.0, 3, 1), InputError);
    Grid g(0, 0, 1.0, 8, 2);
    CHECK(g.h() == doctest::Approx(0.125));
    CHECK(g.node_count() == 81);
    CHECK(g.dof_count() == 162);
    // |Du|^2 equals the component sum of squares.
    DiscreteField u(g);
    u.at(1, 1, 0) = 0.7;
    u.at(1, 1, 1) = -0.3;
    const CellGradient cg = cell_gradient(u, 0, 0);
    double acc = 0.0;
    for (int c = 0; c < 2; ++c)
        for (int k = 0; k < 2; ++k) acc += cg.du(c, k) * cg.du(c, k);
    CHECK(cg.magnitude * cg.magnitude == doctest::Approx(acc).epsilon(1e-15));
}

TEST_CASE("discrete energy: constant gradient fields are exact") {
    const Grid g(0, 0, 1.0, 16, 2);
    IntegrandSpec quad = make_quadratic(g.box());
    const MatMN A = affine_matrix(2, {1.0, -0.5, 0.25, 2.0});
    DiscreteField u = make_boundary_field(g, affine_datum(A, {0.3, -0.1}));
    const double a2 = A.dot(A);
    CHECK(discrete_energy(quad, u) == doctest::Approx(0.5 * a2).epsilon(1e-13));

    DiscreteField zero(g);
    CHECK(discrete_energy(quad, zero) == 0.0);
}

TEST_CASE("discrete energy: midpoint-rule convergence on the quadratic") {
    const Grid g(0, 0, 1.0, 64, 1);
    IntegrandSpec quad = make_quadratic(g.box());
    DiscreteField u = make_boundary_field(g, harmonic_quadratic_datum());
    // Interior seeded with the nodal values of the datum itself.
    for (int j = 1; j < g.ncells; ++j)
        for (int i = 1; i < g.ncells; ++i) {
            const Point x = g.node_pos(i, j);
            u.at(i, j, 0) = x[0] * x[0] - x[1] * x[1];
        }
    CHECK(std::fabs(discrete_energy(quad, u) - 4.0 / 3.0) <= 1e-3);
}

TEST_CASE("energy gradient: affine fields are discretely divergence free") {
    const Grid g(0, 0, 1.0, 12, 2);
    IntegrandSpec exp_spec = clamp_regularize(
        make_exponential(CoefficientField::constant(1.0), 1.0, g.box()),
        {1e-3, 1e3});
    const MatMN A = affine_matrix(2, {0.4, 0.1, -0.2, 0.3});
    DiscreteField u = make_boundary_field(g, affine_datum(A, {}));
    const auto grad = energy_gradient(exp_spec, u);
    for (double v : grad) CHECK(std::fabs(v) <= 1e-12);
}

TEST_CASE("energy gradient matches finite differences of the energy") {
    const Grid g(0, 0, 1.0, 4, 2);  // 5x5 nodes
    const Box box = g.box();
    std::vector<IntegrandSpec> specs = {
        make_quadratic(box),
        clamp_regularize(make_exponential(CoefficientField::constant(1.0), 1.0, box),
                         {1e-3, 1e3}),
        clamp_regularize(
            make_linear_minus_sqrt(CoefficientField::constant(1.0), 1.0, box),
            {1e-3, 1e3}),
    };
    const double step = 1e-6;
    for (const auto& spec : specs) {
        DiscreteField u = random_interior(g, sine_datum(2, 1.0, 0.8), 99);
        const auto grad = energy_gradient(spec, u);
        for (int j = 1; j < g.ncells; ++j)
            for (int i = 1; i < g.ncells; ++i)
                for (int c = 0; c < g.m; ++c) {
                    const long k = g.dof_index(i, j, c);
                    const double keep = u.values[k];
                    u.values[k] = keep + step;
                    const double ep = discrete_energy(spec, u);
                    u.values[k] = keep - step;
                    const double em = discrete_energy(spec, u);
                    u.values[k] = keep;
                    const double fd = (ep - em) / (2.0 * step);
                    CHECK(std::fabs(grad[k] - fd) <=
                          1e-6 * std::max(1.0, std::fabs(grad[k])) + 1e-9);
                }
    }
}

TEST_CASE("energy gradient equals the assembled stiffness action (quadratic)") {
    const Grid g(0, 0, 1.0, 4, 1);
    IntegrandSpec quad = make_quadratic(g.box());
    DiscreteField u = random_interior(g, harmonic_quadratic_datum(), 7);

    // Independent route: assemble the midpoint bilinear stiffness matrix.
    const long nn = g.node_count();
    std::vector<double> K(nn * nn, 0.0);
    const double sx[4] = {-1.0, 1.0, -1.0, 1.0};
    const double sy[4] = {-1.0, -1.0, 1.0, 1.0};
    for (int cj = 0; cj < g.ncells; ++cj)
        for (int ci = 0; ci < g.ncells; ++ci) {
            const long nodes[4] = {g.node_index(ci, cj), g.node_index(ci + 1, cj),
                                   g.node_index(ci, cj + 1),
                                   g.node_index(ci + 1, cj + 1)};
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b)
                    K[nodes[a] * nn + nodes[b]] +=
                        (sx[a] * sx[b] + sy[a] * sy[b]) / 4.0;
        }
    std::vector<double> Ku(nn, 0.0);
    for (long r = 0; r < nn; ++r)
        for (long c = 0; c < nn; ++c) Ku[r] += K[r * nn + c] * u.values[c];

    const auto grad = energy_gradient(quad, u);
    for (int j = 0; j <= g.ncells; ++j)
        for (int i = 0; i <= g.ncells; ++i) {
            const long k = g.node_index(i, j);
            if (u.fixed[k]) continue;
            CHECK(std::fabs(grad[k] - Ku[k]) <= 1e-12);
        }
}

TEST_CASE("minimize: affine boundary data returns the affine extension") {
    const Grid g(0, 0, 1.0, 16, 2);
    const Box box = g.box();
    const MatMN A = affine_matrix(2, {0.5, 0.0, 0.0, 0.5});
    std::vector<IntegrandSpec> specs = {
        make_quadratic(box),
        clamp_regularize(make_exponential(CoefficientField::constant(1.0), 1.0, box),
                         {1e-3, 1e3}),
        clamp_regularize(
            make_linear_minus_sqrt(CoefficientField::constant(1.0), 1.0, box),
            {1e-3, 1e3}),
    };
    for (const auto& spec : specs) {
        SolveOptions opts;
        opts.tol = 1e-10;
        const Solution sol = minimize(spec, g, affine_datum(A, {0.1, -0.2}), opts);
        CHECK(sol.converged);
        double err = 0.0;
        for (int j = 0; j <= g.ncells; ++j)
            for (int i = 0; i <= g.ncells; ++i) {
                const Point x = g.node_pos(i, j);
                err = std::max(err, std::fabs(sol.u.at(i, j, 0) -
                                              (0.5 * x[0] + 0.1)));
                err = std::max(err, std::fabs(sol.u.at(i, j, 1) -
                                              (0.5 * x[1] - 0.2)));
            }
        CHECK(err <= 1e-8);
    }
}

TEST_CASE("minimize: harmonic quadratic datum reproduces its interpolant") {
    const Grid g(0, 0, 1.0, 32, 1);
    IntegrandSpec quad = make_quadratic(g.box());
    SolveOptions opts;
    opts.tol = 1e-11;
    const Solution sol = minimize(quad, g, harmonic_quadratic_datum(), opts);
    CHECK(sol.converged);
    double err = 0.0;
    for (int j = 0; j <= g.ncells; ++j)
        for (int i = 0; i <= g.ncells; ++i) {
            const Point x = g.node_pos(i, j);
            err = std::max(err,
                           std::fabs(sol.u.at(i, j, 0) - (x[0] * x[0] - x[1] * x[1])));
        }
    CHECK(err <= 1e-7);
    CHECK(euler_residual(quad, sol.u) <= opts.tol / (g.h() * g.h()) + 1e-12);
    // Energy trace is nonincreasing across accepted steps.
    for (std::size_t i = 1; i < sol.energy_trace.size(); ++i)
        CHECK(sol.energy_trace[i] <=
              sol.energy_trace[i - 1] +
                  1e-14 * std::max(1.0, sol.energy_trace[i - 1]));
}

TEST_CASE("minimize: clamped exponential with oscillatory data") {
    const Grid g(0, 0, 1.0, 16, 2);
    IntegrandSpec spec = clamp_regularize(
        make_exponential(CoefficientField::constant(1.0), 1.0, g.box()),
        {1e-3, 1e3});
    SolveOptions opts;
    opts.tol = 1e-7;  // the clamp quadrature sets the resolvable floor
    opts.max_iter = 8000;
    const Solution a = minimize(spec, g, sine_datum(2, 1.0, 0.4), opts);
    CHECK(a.converged);
    for (std::size_t i = 1; i < a.energy_trace.size(); ++i)
        CHECK(a.energy_trace[i] <=
              a.energy_trace[i - 1] + 1e-14 * std::max(1.0, a.energy_trace[i - 1]));
    // Run-to-run determinism.
    const Solution b = minimize(spec, g, sine_datum(2, 1.0, 0.4), opts);
    REQUIRE(a.u.values.size() == b.u.values.size());
    for (std::size_t k = 0; k < a.u.values.size(); ++k)
        CHECK(a.u.values[k] == b.u.values[k]);
}

TEST_CASE("mesh symmetry: reflected datum gives the reflected solution") {
    const Grid g(0, 0, 1.0, 16, 1);
    IntegrandSpec spec = make_quadratic(g.box());
    SolveOptions opts;
    opts.tol = 1e-11;
    auto base = [](const Point& x, std::vector<double>& out) {
        out.assign(1, 0.3 * std::sin(2.0 * x[0] + x[1]) + 0.2 * x[0]);
    };
    auto reflected = [&](const Point& x, std::vector<double>& out) {
        base(make_point(1.0 - x[0], x[1]), out);
    };
    const Solution s1 = minimize(spec, g, base, opts);
    const Solution s2 = minimize(spec, g, reflected, opts);
    REQUIRE(s1.converged);
    REQUIRE(s2.converged);
    double err = 0.0;
    for (int j = 0; j <= g.ncells; ++j)
        for (int i = 0; i <= g.ncells; ++i)
            err = std::max(err, std::fabs(s1.u.at(i, j, 0) -
                                          s2.u.at(g.ncells - i, j, 0)));
    CHECK(err <= 1e-10);
}

TEST_CASE("euler residual: exact, converged, and random fields") {
    const Grid g(0, 0, 1.0, 8, 1);
    IntegrandSpec quad = make_quadratic(g.box());
    const MatMN A = affine_matrix(1, {0.7, -0.4});
    DiscreteField aff = make_boundary_field(g, affine_datum(A, {}));
    CHECK(euler_residual(quad, aff) <= 1e-10);

    DiscreteField noisy = random_interior(g, affine_datum(A, {}), 12345, 2.0);
    CHECK(euler_residual(quad, noisy) > 1.0);
}

TEST_CASE("discrete energy is convex along random segments") {
    const Grid g(0, 0, 1.0, 8, 2);
    const Box box = g.box();
    std::vector<IntegrandSpec> specs = {
        make_quadratic(box),
        clamp_regularize(make_exponential(CoefficientField::constant(1.0), 1.0, box),
                         {1e-3, 1e3}),
    };
    for (const auto& spec : specs) {
        for (int rep = 0; rep < 20; ++rep) {
            DiscreteField u = random_interior(g, sine_datum(2, 1.0, 0.5), 100 + rep);
            DiscreteField v = random_interior(g, sine_datum(2, 1.0, 0.5), 200 + rep);
            DiscreteField mid = u;
            for (std::size_t k = 0; k < mid.values.size(); ++k)
                mid.values[k] = 0.5 * (u.values[k] + v.values[k]);
            const double fu = discrete_energy(spec, u);
            const double fv = discrete_energy(spec, v);
            const double fm = discrete_energy(spec, mid);
            CHECK(fm <= 0.5 * fu + 0.5 * fv + 1e-12);
        }
    }
}

TEST_CASE("sup norm on balls") {
    const Grid g(0, 0, 1.0, 32, 1);
    const MatMN A = affine_matrix(1, {0.6, -0.8});
    DiscreteField aff = make_boundary_field(g, affine_datum(A, {}));
    CHECK(sup_norm_on_ball(aff, make_point(0.5, 0.5), 0.2) ==
          doctest::Approx(1.0).epsilon(1e-12));
    // Radius = half-width recovers the global max for the affine field.
    CHECK(sup_norm_on_ball(aff, make_point(0.5, 0.5), 0.5) ==
          doctest::Approx(1.0).epsilon(1e-12));

    // Analytic maximization oracle for u = x1^2 - x2^2: |Du| = 2 |x|, whose
    // max over the disc is 2 (|center| + rho).
    DiscreteField u = make_boundary_field(g, harmonic_quadratic_datum());
    for (int j = 1; j < g.ncells; ++j)
        for (int i = 1; i < g.ncells; ++i) {
            const Point x = g.node_pos(i, j);
            u.at(i, j, 0) = x[0] * x[0] - x[1] * x[1];
        }
    const double grid_max = sup_norm_on_ball(u, make_point(0.5, 0.5), 0.25);
    const double analytic = 2.0 * (std::sqrt(0.5) + 0.25);
    CHECK(std::fabs(grid_max - analytic) <= 4.0 * g.h());

    CHECK_THROWS_AS(sup_norm_on_ball(aff, make_point(0.5, 0.5), 0.01), InputError);
}

TEST_CASE("threaded assembly matches serial bitwise for fixed worker count") {
    const Grid g(0, 0, 1.0, 16, 2);
    IntegrandSpec spec = clamp_regularize(
        make_exponential(CoefficientField::constant(1.0), 1.0, g.box()),
        {1e-3, 1e3});
    DiscreteField u = random_interior(g, sine_datum(2, 1.0, 0.7), 5);
    const auto g1 = energy_gradient(spec, u, 1);
    const auto g2a = energy_gradient(spec, u, 2);
    const auto g2b = energy_gradient(spec, u, 2);
    for (std::size_t k = 0; k < g1.size(); ++k) {
        CHECK(g2a[k] == g2b[k]);  // bitwise reproducible at fixed W
        CHECK(std::fabs(g1[k] - g2a[k]) <= 1e-13 * std::max(1.0, std::fabs(g1[k])));
    }
    const double e1 = discrete_energy(spec, u, 1);
    const double e2 = discrete_energy(spec, u, 2);
    CHECK(std::fabs(e1 - e2) <= 1e-13 * std::max(1.0, std::fabs(e1)));
}

TEST_CASE("minimize aborts on mid-run non-convexity with the offending cell") {
    const Grid g(0, 0, 1.0, 8, 1);
    // Convex near the origin, concave for t > ~16.7; steep data reach it.
    IntegrandSpec spec = to_integrand("t^2/2 - 0.01*t^3", {}, 1.0, g.box());
    REQUIRE(!spec.warnings().empty());
    SolveOptions opts;
    opts.tol = 1e-8;
    opts.max_iter = 2000;
    try {
        const Solution sol = minimize(spec, g, sine_datum(1, 2.0, 3.0), opts);
        // A run that never met negative curvature must at least fail to
        // converge toward a minimizer of a concave direction.
        CHECK(!sol.converged);
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("cell (") != std::string::npos);
    }
}

TEST_CASE("solver robustness: gd method, x-dependence, p-laplacian") {
    // Plain gradient descent with Armijo.
    {
        const Grid g(0, 0, 1.0, 12, 1);
        IntegrandSpec quad = make_quadratic(g.box());
        SolveOptions opts;
        opts.tol = 1e-8;
        opts.method = SolveOptions::Method::GradientDescentArmijo;
        opts.max_iter = 20000;
        const Solution sol = minimize(quad, g, harmonic_quadratic_datum(), opts);
        CHECK(sol.converged);
    }
    // x-dependent exponential coefficient, moderate data, unclamped.
    {
        const Grid g(0, 0, 1.0, 10, 1);
        IntegrandSpec spec = make_exponential(
            CoefficientField::affine(0.8, make_point(0.3, 0.1)), 1.0, g.box());
        SolveOptions opts;
        opts.tol = 1e-7;
        const Solution sol = minimize(spec, g, sine_datum(1, 1.0, 0.3), opts);
        CHECK(sol.converged);
        CHECK(euler_residual(spec, sol.u) <= opts.tol / (g.h() * g.h()) + 1e-12);
    }
    // Cubic-growth exponent (the p-Laplacian instance at p = 3).
    {
        const Grid g(0, 0, 1.0, 8, 1);
        IntegrandSpec spec = make_variable_exponent(
            CoefficientField::constant(1.0), CoefficientField::constant(3.0), 1.0,
            g.box());
        SolveOptions opts;
        opts.tol = 1e-7;
        opts.max_iter = 30000;
        const Solution sol = minimize(spec, g, sine_datum(1, 1.0, 0.5), opts);
        CHECK(sol.converged);
        for (std::size_t i = 1; i < sol.energy_trace.size(); ++i)
            CHECK(sol.energy_trace[i] <=
                  sol.energy_trace[i - 1] +
                      1e-14 * std::max(1.0, sol.energy_trace[i - 1]));
    }
}

TEST_CASE("radial datum solves to a converged state") {
    const Grid g(0, 0, 1.0, 12, 1);
    IntegrandSpec quad = make_quadratic(g.box());
    SolveOptions opts;
    opts.tol = 1e-9;
    const Solution sol =
        minimize(quad, g, radial_datum(make_point(0.5, 0.5), 1.0), opts, "radial");
    CHECK(sol.converged);
    CHECK(sol.u.provenance == "radial");
    // The datum is symmetric under the four dihedral reflections; so is the
    // solution.
    for (int j = 0; j <= g.ncells; ++j)
        for (int i = 0; i <= g.ncells; ++i) {
            CHECK(std::fabs(sol.u.at(i, j, 0) - sol.u.at(g.ncells - i, j, 0)) <=
                  1e-10);
            CHECK(std::fabs(sol.u.at(i, j, 0) - sol.u.at(j, i, 0)) <= 1e-10);
        }
}

TEST_CASE("minimize agrees with a direct linear solve of the quadratic system") {
    // Independent route: assemble the midpoint bilinear stiffness matrix and
    // solve the constrained linear system by conjugate gradients on the free
    // nodes; the energy minimizer must match.
    const Grid g(0, 0, 1.0, 16, 1);
    IntegrandSpec quad = make_quadratic(g.box());
    const auto datum = sine_datum(1, 1.0, 0.7);

    const long nn = g.node_count();
    std::vector<double> K(nn * nn, 0.0);
    const double sx[4] = {-1.0, 1.0, -1.0, 1.0};
    const double sy[4] = {-1.0, -1.0, 1.0, 1.0};
    for (int cj = 0; cj < g.ncells; ++cj)
        for (int ci = 0; ci < g.ncells; ++ci) {
            const long nodes[4] = {g.node_index(ci, cj), g.node_index(ci + 1, cj),
                                   g.node_index(ci, cj + 1),
                                   g.node_index(ci + 1, cj + 1)};
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b)
                    K[nodes[a] * nn + nodes[b]] +=
                        (sx[a] * sx[b] + sy[a] * sy[b]) / 4.0;
        }
    DiscreteField ub = make_boundary_field(g, datum);
    // rhs = -K u_boundary restricted to free nodes.
    std::vector<double> rhs(nn, 0.0), x(nn, 0.0);
    std::vector<std::uint8_t> free_node(nn, 0);
    for (long r = 0; r < nn; ++r) free_node[r] = ub.fixed[r] ? 0 : 1;
    std::vector<double> ubv(nn, 0.0);
    for (long r = 0; r < nn; ++r) ubv[r] = ub.fixed[r] ? ub.values[r] : 0.0;
    for (long r = 0; r < nn; ++r) {
        if (!free_node[r]) continue;
        double acc = 0.0;
        for (long c = 0; c < nn; ++c) acc += K[r * nn + c] * ubv[c];
        rhs[r] = -acc;
    }
    auto apply_K_free = [&](const std::vector<double>& v, std::vector<double>& out) {
        for (long r = 0; r < nn; ++r) {
            out[r] = 0.0;
            if (!free_node[r]) continue;
            double acc = 0.0;
            for (long c = 0; c < nn; ++c)
                if (free_node[c]) acc += K[r * nn + c] * v[c];
            out[r] = acc;
        }
    };
    // Plain conjugate gradients.
    std::vector<double> res = rhs, p = rhs, Ap(nn, 0.0);
    double rr = 0.0;
    for (long r = 0; r < nn; ++r) rr += res[r] * res[r];
    for (int it = 0; it < 4000 && rr > 1e-24; ++it) {
        apply_K_free(p, Ap);
        double pAp = 0.0;
        for (long r = 0; r < nn; ++r) pAp += p[r] * Ap[r];
        const double alpha = rr / pAp;
        double rr_new = 0.0;
        for (long r = 0; r < nn; ++r) {
            x[r] += alpha * p[r];
            res[r] -= alpha * Ap[r];
            rr_new += res[r] * res[r];
        }
        const double beta = rr_new / rr;
        rr = rr_new;
        for (long r = 0; r < nn; ++r) p[r] = res[r] + beta * p[r];
    }

    SolveOptions opts;
    opts.tol = 1e-11;
    const Solution sol = minimize(quad, g, datum, opts);
    REQUIRE(sol.converged);
    double err = 0.0;
    for (long r = 0; r < nn; ++r) {
        const double want = free_node[r] ? x[r] + ubv[r] : ubv[r];
        err = std::max(err, std::fabs(sol.u.values[r] - want));
    }
    CHECK(err <= 1e-9);
}

TEST_CASE("solver scales to a 129x129 grid") {
    const Grid g(0, 0, 1.0, 128, 1);
    IntegrandSpec quad = make_quadratic(g.box());
    SolveOptions opts;
    opts.tol = 1e-8;
    const Solution sol = minimize(quad, g, sine_datum(1, 1.0, 0.5), opts);
    CHECK(sol.converged);
    CHECK(sol.iterations < 5000);
}

TEST_CASE("three-component fields solve and reproduce affine data") {
    const Grid g(0, 0, 1.0, 12, 3);
    IntegrandSpec spec = clamp_regularize(
        make_exponential(CoefficientField::constant(1.0), 1.0, g.box()),
        {1e-3, 1e3});
    MatMN A;
    A.m = 3;
    A.n = 2;
    A(0, 0) = 0.3;
    A(1, 1) = -0.2;
    A(2, 0) = 0.1;
    A(2, 1) = 0.25;
    SolveOptions opts;
    opts.tol = 1e-9;
    const Solution sol = minimize(spec, g, affine_datum(A, {0.0, 0.1, -0.1}), opts);
    REQUIRE(sol.converged);
    double err = 0.0;
    const std::vector<double> b = {0.0, 0.1, -0.1};
    for (int j = 0; j <= g.ncells; ++j)
        for (int i = 0; i <= g.ncells; ++i) {
            const Point x = g.node_pos(i, j);
            for (int c = 0; c < 3; ++c) {
                const double want = A(c, 0) * x[0] + A(c, 1) * x[1] + b[c];
                err = std::max(err, std::fabs(sol.u.at(i, j, c) - want));
            }
        }
    CHECK(err <= 1e-8);
}
