#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "gradbound/expr.hpp"

using namespace gradbound;

namespace {

Point pt(double x, double y) { return make_point(x, y); }

double rel_err(double got, double want) {
    return std::fabs(got - want) / std::max({1.0, std::fabs(got), std::fabs(want)});
}

}  // namespace

TEST_CASE("grammar smoke tests") {
    CHECK(parse("t^2 / 2") != nullptr);
    CoeffBindings binds{{"a", CoefficientField::constant(1.0)}};
    ExprPtr e = parse("exp(a(x) * t^2) - 1");
    CHECK(e->kind == ExprKind::Sub);
    CHECK(eval_dual2(e, pt(0.3, 0.7), 1.0, binds).v ==
          doctest::Approx(std::exp(1.0) - 1.0));
}

TEST_CASE("forced parse failures carry byte offsets") {
    try {
        parse("t +");
        FAIL("expected a parse error");
    } catch (const ParseError& err) {
        CHECK(err.offset == 3);
    }
    CHECK_THROWS_AS(parse("exp(t, 1)"), ParseError);   // arity mismatch
    CHECK_THROWS_AS(parse("foo(t+1)"), ParseError);    // unknown function
    CHECK_THROWS_AS(parse("x * t"), ParseError);       // bare x reserved
    CHECK_THROWS_AS(parse(""), ParseError);
    CHECK_THROWS_AS(parse("(t"), ParseError);
}

TEST_CASE("dual evaluation: polynomial") {
    ExprPtr e = parse("t^2/2");
    const Dual2 d = eval_dual2(e, pt(0.1, 0.9), 3.0, {});
    CHECK(d.v == doctest::Approx(4.5));
    CHECK(d.dt == doctest::Approx(3.0));
    CHECK(d.dtt == doctest::Approx(1.0));
    for (int k = 0; k < kMaxDim; ++k) CHECK(d.dtx[k] == 0.0);
}

TEST_CASE("dual evaluation: exponential closed form") {
    ExprPtr e = parse("exp(t^2)-1");
    const Dual2 d = eval_dual2(e, pt(0.5, 0.5), 1.0, {});
    CHECK(d.dt == doctest::Approx(2.0 * std::exp(1.0)).epsilon(1e-14));
    CHECK(d.dtt == doctest::Approx(6.0 * std::exp(1.0)).epsilon(1e-14));
}

TEST_CASE("dual evaluation: mixed derivative via product rule") {
    CoeffBindings binds{
        {"a", CoefficientField::affine(1.0, make_point(1.0, 0.0))}};
    ExprPtr e = parse("a(x)*t");
    const Dual2 d = eval_dual2(e, pt(0.25, 0.5), 2.0, binds);
    CHECK(d.dtx[0] == doctest::Approx(1.0));
    CHECK(d.dtx[1] == doctest::Approx(0.0));
    CHECK(d.dx[0] == doctest::Approx(2.0));
}

TEST_CASE("dual derivatives match central finite differences") {
    CoeffBindings binds{
        {"a", CoefficientField::affine(1.5, make_point(0.3, -0.2))},
        {"p", CoefficientField::affine(2.5, make_point(0.1, 0.2))}};
    const char* exprs[] = {
        "a(x) * t^2 + sin(t) * cos(x1)",
        "t^p(x)",
        "t * log(1 + t) + a(x) * sqrt(1 + t^2)",
        "abs_smooth(t - 1, 0.3) + exp(0.1 * a(x) * t)",
    };
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ux(0.05, 0.95), ut(0.5, 4.0);
    const double step = 1e-4;
    const double eps = std::numeric_limits<double>::epsilon();
    for (const char* s : exprs) {
        ExprPtr e = parse(s);
        for (int rep = 0; rep < 200; ++rep) {
            const Point x = pt(ux(rng), ux(rng));
            const double t = ut(rng);
            const Dual2 d = eval_dual2(e, x, t, binds);
            auto val = [&](const Point& q, double tt) {
                return eval_dual2(e, q, tt, binds).v;
            };
            const double fd_t =
                (val(x, t + step) - val(x, t - step)) / (2.0 * step);
            const double fd_tt =
                (val(x, t + step) - 2.0 * val(x, t) + val(x, t - step)) /
                (step * step);
            // The oracle's own cancellation noise is part of the tolerance.
            const double noise1 = 8.0 * eps * std::fabs(d.v) / step;
            const double noise2 = 32.0 * eps * std::fabs(d.v) / (step * step);
            CHECK(std::fabs(d.dt - fd_t) <
                  1e-6 * std::max({1.0, std::fabs(d.dt), std::fabs(fd_t)}) + noise1);
            CHECK(std::fabs(d.dtt - fd_tt) <
                  1e-6 * std::max({1.0, std::fabs(d.dtt), std::fabs(fd_tt)}) + noise2);
            for (int k = 0; k < 2; ++k) {
                Point xp = x, xm = x;
                xp[k] += step;
                xm[k] -= step;
                const double fd_tx =
                    (eval_dual2(e, xp, t, binds).dt - eval_dual2(e, xm, t, binds).dt) /
                    (2.0 * step);
                const double noise_tx = 8.0 * eps * std::fabs(d.dt) / step;
                CHECK(std::fabs(d.dtx[k] - fd_tx) <
                      1e-6 * std::max(1.0, std::fabs(d.dtx[k])) + noise_tx);
            }
        }
    }
}

TEST_CASE("eval errors carry the subexpression location") {
    try {
        eval_dual2(parse("t + log(t - 5)"), pt(0.5, 0.5), 1.0, {});
        FAIL("expected an eval error");
    } catch (const EvalError& err) {
        CHECK(err.offset == 4);
    }
    CHECK_THROWS_AS(eval_dual2(parse("q * t"), pt(0.5, 0.5), 1.0, {}), EvalError);
}

TEST_CASE("print/parse round trip on generated trees") {
    std::mt19937_64 rng(11);
    // Literals are canonically nonnegative; negation is its own node.
    std::uniform_real_distribution<double> uval(0.0, 3.0);
    std::uniform_int_distribution<int> pick(0, 9);

    std::function<ExprPtr(int)> gen = [&](int depth) -> ExprPtr {
        auto node = std::make_shared<Expr>();
        const int choice = depth <= 0 ? pick(rng) % 4 : pick(rng);
        switch (choice) {
            case 0: node->kind = ExprKind::Number; node->number = uval(rng); break;
            case 1: node->kind = ExprKind::VarT; break;
            case 2: node->kind = ExprKind::VarX; node->axis = pick(rng) % 2; break;
            case 3: node->kind = ExprKind::Coeff; node->name = pick(rng) % 2 ? "a" : "b"; break;
            case 4:
                node->kind = ExprKind::Neg;
                node->lhs = gen(depth - 1);
                break;
            case 5: case 6: case 7: {
                const ExprKind ops[] = {ExprKind::Add, ExprKind::Sub, ExprKind::Mul,
                                        ExprKind::Div, ExprKind::Pow};
                node->kind = ops[pick(rng) % 5];
                node->lhs = gen(depth - 1);
                node->rhs = gen(depth - 1);
                break;
            }
            default: {
                node->kind = ExprKind::Call;
                const FuncId fs[] = {FuncId::Exp, FuncId::Log, FuncId::Sqrt,
                                     FuncId::Sin, FuncId::Cos, FuncId::AbsSmooth};
                node->func = fs[pick(rng) % 6];
                node->args.push_back(gen(depth - 1));
                break;
            }
        }
        return node;
    };

    for (int rep = 0; rep < 500; ++rep) {
        ExprPtr tree = gen(4);
        const std::string text = print_expr(tree);
        ExprPtr back = parse(text);
        CHECK(tree_equal(tree, back));
    }
}

TEST_CASE("to_integrand: quadratic oracle identity") {
    const Box box = unit_box(2);
    IntegrandSpec dsl = to_integrand("t^2/2", {}, 1.0, box);
    IntegrandSpec builtin = make_quadratic(box);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> ux(0.0, 1.0), ut(0.0, 50.0);
    for (int i = 0; i < 1000; ++i) {
        const Point x = pt(ux(rng), ux(rng));
        const double t = ut(rng);
        const IntegrandValues a = dsl.eval(x, t);
        const IntegrandValues b = builtin.eval(x, t);
        CHECK(std::fabs(a.g - b.g) <= 1e-12 * std::max(1.0, std::fabs(b.g)));
        CHECK(std::fabs(a.g_t - b.g_t) <= 1e-12 * std::max(1.0, std::fabs(b.g_t)));
        CHECK(std::fabs(a.g_tt - b.g_tt) <= 1e-12);
    }
}

TEST_CASE("to_integrand: orlicz profile second derivative") {
    IntegrandSpec spec = to_integrand("t*log(1+t)", {}, 1.0, unit_box(2));
    const IntegrandValues v = spec.eval(pt(0.5, 0.5), 2.0);
    CHECK(v.g_tt == doctest::Approx(4.0 / 9.0).epsilon(1e-12));
}

TEST_CASE("to_integrand: sqrt profile gets the knot smoothing") {
    CoeffBindings binds{{"a", CoefficientField::constant(1.0)}};
    IntegrandSpec spec = to_integrand("t - a(x)*sqrt(t)", binds, 1.0, unit_box(2));
    const Point x = pt(0.5, 0.5);
    const double below = spec.eval(x, 1.0 - 1e-9).g_t;
    const double above = spec.eval(x, 1.0 + 1e-9).g_t;
    CHECK(std::fabs(above - below) < 1e-7);
    CHECK(spec.eval(x, 0.0).g_t == 0.0);
    for (int i = 0; i <= 32; ++i)
        CHECK(spec.eval(x, i / 32.0).g_tt >= 0.0);
}

TEST_CASE("to_integrand agrees with every builtin family") {
    const Box box = unit_box(2);
    CoeffBindings binds{
        {"a", CoefficientField::affine(1.2, make_point(0.2, -0.1))},
        {"b", CoefficientField::affine(0.8, make_point(0.05, 0.1))},
        {"p", CoefficientField::affine(2.3, make_point(0.2, 0.1))}};
    BuiltinParams bp;
    bp.a = binds.at("a");
    bp.b = binds.at("b");
    bp.p = binds.at("p");

    struct Row {
        const char* text;
        IntegrandSpec builtin;
        double t_hi;
    };
    BuiltinParams lms;
    lms.a = CoefficientField::affine(0.6, make_point(0.1, 0.05));
    CoeffBindings lms_binds{{"a", lms.a}};

    const Row rows[] = {
        {"exp(a(x)*t^2) - 1", make_builtin(Family::Exponential, bp, 1.0, box), 3.0},
        {"a(x) * t^p(x)", make_builtin(Family::VariableExponent, bp, 1.0, box), 30.0},
        {"a(x) * t^p(x) * log(1+t)", make_builtin(Family::OrliczLog, bp, 1.0, box), 30.0},
        {"b(x) * (exp((a(x)*t)^2) - 1)", make_builtin(Family::ComposedH, bp, 1.0, box), 2.5},
    };
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> ux(0.0, 1.0), uu(0.0, 1.0);
    for (const Row& r : rows) {
        IntegrandSpec dsl = to_integrand(r.text, binds, 1.0, box);
        for (int i = 0; i < 1000; ++i) {
            const Point x = pt(ux(rng), ux(rng));
            const double t = r.t_hi * uu(rng);
            const IntegrandValues a = dsl.eval(x, t);
            const IntegrandValues b = r.builtin.eval(x, t);
            CHECK(rel_err(a.g, b.g) < 1e-10);
            CHECK(rel_err(a.g_t, b.g_t) < 1e-10);
            CHECK(rel_err(a.g_tt, b.g_tt) < 1e-10);
            for (int k = 0; k < 2; ++k) CHECK(rel_err(a.g_tx[k], b.g_tx[k]) < 1e-9);
        }
    }
    // Slow-growth family: same spline branch as the builtin.
    IntegrandSpec dsl = to_integrand("t - a(x)*sqrt(t)", lms_binds, 1.0, box);
    IntegrandSpec builtin = make_builtin(Family::LinearMinusSqrt, lms, 1.0, box);
    for (int i = 0; i < 1000; ++i) {
        const Point x = pt(ux(rng), ux(rng));
        const double t = 20.0 * uu(rng);
        const IntegrandValues a = dsl.eval(x, t);
        const IntegrandValues b = builtin.eval(x, t);
        CHECK(rel_err(a.g, b.g) < 1e-10);
        CHECK(rel_err(a.g_t, b.g_t) < 1e-10);
        CHECK(rel_err(a.g_tt, b.g_tt) < 1e-10);
    }
}

TEST_CASE("to_integrand flags sampled non-convexity") {
    // Convex near the origin, loses convexity around t = 17.
    IntegrandSpec spec = to_integrand("t^2/2 - 0.01*t^3", {}, 1.0, unit_box(2));
    CHECK(!spec.warnings().empty());
}
