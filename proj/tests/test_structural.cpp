#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "gradbound/structural.hpp"

using namespace gradbound;

namespace {

StructuralParams params_for(int n, double theta, double beta, double alpha,
                            double t_max, const Box& sub) {
    StructuralParams p;
    p.n = n;
    p.theta = theta;
    p.beta = beta;
    p.alpha = alpha;
    p.T_max = t_max;
    p.subdomain = sub;
    return p;
}

}  // namespace

TEST_CASE("exponent arithmetic and the feasibility gate") {
    CHECK(exponents(3, 1.0, 0.5, 0.1).tau == 1.0);  // theta = 1 -> tau = 1

    const ExponentSet a = exponents(3, 1.2, 0.4, 0.1);
    CHECK(a.tau == doctest::Approx(1.68).epsilon(1e-15));
    CHECK(a.two_star == 6.0);
    CHECK(a.feasible);  // 1.68 < 1.8
    CHECK(a.lhs_exponent == doctest::Approx(0.12).epsilon(1e-12));

    const ExponentSet b = exponents(3, 1.3, 0.4, 0.1);
    CHECK(b.tau == doctest::Approx(2.08).epsilon(1e-15));
    CHECK(!b.feasible);  // 2.08 >= 1.8

    // feasible => lhs exponent in (0,1), rhs exponent > 1
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 2000; ++i) {
        const int n = 2 + static_cast<int>(u(rng) * 5);
        const double beta = 1.0 / n + (1.0 / n) * u(rng);
        const double theta = 1.0 + u(rng);
        const ExponentSet e = exponents(n, theta, beta, 0.05 + u(rng));
        if (e.feasible) {
            CHECK(e.lhs_exponent > 0.0);
            CHECK(e.lhs_exponent < 1.0);
            CHECK(e.rhs_exponent > 1.0);
        }
    }
}

TEST_CASE("phi family evaluation") {
    const PhiFamily p2 = make_phi(2.0);
    CHECK(p2.branch == PhiFamily::Branch::Power);
    auto [phi, dphi] = phi_eval(p2, 3.0);
    CHECK(phi == 4.0);
    CHECK(dphi == 4.0);
    CHECK(dphi * 3.0 <= p2.gamma * (1.0 + 2.0 * phi));  // 12 <= 18

    const PhiFamily ph = make_phi(0.5);
    CHECK(ph.branch == PhiFamily::Branch::Quadratic);
    CHECK(phi_eval(ph, 2.0).first == doctest::Approx(std::pow(2.0, -1.5)));

    CHECK(phi_eval(make_phi(7.0), 0.5).first == 0.0);
    CHECK(phi_eval(make_phi(0.0), 1.0).second == 0.0);  // boundary of the quad branch
}

TEST_CASE("phi invariant holds at scale") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> ug(0.0, 10.0), ut(0.0, 1.0);
    for (int i = 0; i < 100000; ++i) {
        const double g = ug(rng);
        const double t = std::pow(1e3, ut(rng)) * (ut(rng) < 0.3 ? 1e-2 : 1.0);
        const PhiFamily f = make_phi(g);
        auto [phi, dphi] = phi_eval(f, t);
        CHECK(dphi * t >= -1e-12);
        CHECK(dphi * t <= (2.0 * g + 2.0) * (1.0 + phi) + 1e-12);
    }
}

TEST_CASE("G function closed form for the quadratic profile") {
    const HProfile h = h_quadratic();
    const PhiFamily f = make_phi(2.0);
    // K_m = 1, sqrt(Phi) = s - 1: G(t) = 1 + (t-1)^2/2
    CHECK(g_function(h, f, 3.0) == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(g_function(h, f, 1.0) == 1.0);
    CHECK(g_function(h, f, 0.2) == 1.0);

    // Monotone, >= 1, and stable under quadrature refinement.
    const HProfile hs = h_linear_minus_sqrt(1.0);
    const PhiFamily f0 = make_phi(0.0);
    double prev = 1.0;
    for (double t = 1.0; t <= 40.0; t += 1.3) {
        const double g = g_function(hs, f0, t);
        CHECK(g >= prev - 1e-12);
        CHECK(g >= 1.0);
        const double g_fine = g_function(hs, f0, t, 1e-12);
        CHECK(std::fabs(g - g_fine) <= 1e-8 * std::max(1.0, g));
        prev = g;
    }
}

TEST_CASE("main assumptions: slow growth family at unit coefficient") {
    const Box box = unit_box(2);
    IntegrandSpec spec =
        make_linear_minus_sqrt(CoefficientField::constant(1.0), 1.0, box);
    const HProfile h = pair_profile(spec, box);
    const auto rep = check_main_assumptions(
        spec, h, params_for(3, 1.0, 7.0 / 12.0, 1.4, 1e3, box));
    CHECK(rep.certified());
    CHECK(rep.rows[4].constant == 0.0);  // constant coefficient: L = 0
    CHECK(rep.m == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(rep.M_theta == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("main assumptions: exponential with theta = 1.5") {
    const Box box = unit_box(2);
    IntegrandSpec spec = make_exponential(CoefficientField::constant(1.0), 1.0, box);
    const HProfile h = pair_profile(spec, box);
    const auto rep =
        check_main_assumptions(spec, h, params_for(3, 1.5, 0.5, 1.25, 30.0, box));
    CHECK(rep.certified());
    // Closed-form bound max{theta, theta^2} (2 a_m)^{1-theta} dominates the
    // measured constant.
    const double a_m = 1.0;
    const double analytic_M =
        std::max(1.5 * std::pow(2.0 * a_m, -0.5), 2.25 * std::pow(2.0 * a_m, -0.5));
    CHECK(rep.M_theta <= analytic_M + 1e-12);
    CHECK(rep.M_theta > 0.0);
    CHECK(!rep.range_note.empty());  // capped below T_max = 30 by exp range
}

TEST_CASE("main assumptions: constant variable exponent certifies trivially") {
    const Box box = unit_box(2);
    IntegrandSpec spec = make_variable_exponent(CoefficientField::constant(1.0),
                                                CoefficientField::constant(1.5),
                                                1.0, box);
    const HProfile h = pair_profile(spec, box);
    const auto rep =
        check_main_assumptions(spec, h, params_for(3, 1.0, 0.5, 1.4, 1e3, box));
    CHECK(rep.certified());
    CHECK(rep.rows[4].certified);
    CHECK(rep.rows[4].constant == 0.0);
}

TEST_CASE("h growth: known admissible windows") {
    // t - sqrt(t), n = 3, beta = 7/12: the decay rates match exactly.
    const auto r1 = check_h_growth(h_linear_minus_sqrt(1.0), 3, 7.0 / 12.0, 1.4,
                                   1.0, 1e3);
    CHECK(r1.certified());
    CHECK(r1.m_beta > 0.0);

    // t log(1+t), n = 2, beta = 0.6: 2 beta > 1.
    const auto r2 = check_h_growth(h_orlicz_log(1.0), 2, 0.6, 1.5, 1.0, 1e3);
    CHECK(r2.certified());

    // Quadratic: every quotient is constant; M_alpha = 1/2.
    const auto r3 = check_h_growth(h_quadratic(), 3, 0.5, 1.4, 1.0, 1e3);
    CHECK(r3.certified());
    CHECK(r3.M_alpha == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("window search: slow growth beta window arithmetic") {
    const Box box = unit_box(2);
    IntegrandSpec spec =
        make_linear_minus_sqrt(CoefficientField::constant(1.0), 1.0, box);
    const HProfile h = pair_profile(spec, box);

    const ParameterWindow w3 = admissible_window_search(spec, h, 3);
    CHECK(w3.feasible);
    CHECK(w3.beta_lo == doctest::Approx(0.25 + 1.0 / 3.0).epsilon(1e-15));
    CHECK(w3.beta_hi == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(w3.beta_lo_closed);
    CHECK(w3.theta_pinned);
    CHECK(w3.default_theta == 1.0);
    CHECK(w3.default_beta == doctest::Approx(7.0 / 12.0).epsilon(1e-15));

    const ParameterWindow w4 =
        admissible_window_search(spec, h, 4, 0.0, 0.0, /*corroborate=*/false);
    CHECK(!w4.feasible);
    CHECK(w4.first_failing == "beta window empty");

    const ParameterWindow w2 = admissible_window_search(spec, h, 2);
    CHECK(w2.feasible);
    CHECK(w2.beta_lo == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("window search: fast growth defaults") {
    const Box box = unit_box(2);
    IntegrandSpec spec = make_exponential(CoefficientField::constant(1.0), 1.0, box);
    const HProfile h = pair_profile(spec, box);
    const ParameterWindow w = admissible_window_search(spec, h, 3);
    CHECK(w.feasible);
    CHECK(w.default_beta == doctest::Approx(0.5).epsilon(1e-15));  // 3/(2n)
    // Upper theta endpoint solves (2 theta - 1) theta = (n - 3/2)/(n - 2) = 1.5.
    CHECK((2.0 * w.theta_hi - 1.0) * w.theta_hi == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(!w.theta_pinned);
    CHECK(w.theta_lo == 1.0);
}

TEST_CASE("window search: oscillating coefficient tightens theta") {
    const Box box = unit_box(2);
    IntegrandSpec spec = make_exponential(
        CoefficientField::affine(1.0, make_point(0.1, 0.0)), 1.0, box);
    const HProfile h = pair_profile(spec, box);
    const ParameterWindow w = admissible_window_search(spec, h, 3);
    CHECK(w.theta_lo == doctest::Approx(1.1 / 1.0).epsilon(1e-12));
    CHECK(w.theta_strict_above_one);
}

TEST_CASE("moser schedule: recurrence, radii, limit") {
    const MoserSchedule s = moser_schedule(3, 0.5, 1.0, 0.2, 0.4, 40);
    CHECK(s.gamma_seq[0] == 0.0);
    CHECK(s.gamma_seq[1] == doctest::Approx(1.0));  // 3*2 - (2+3)
    CHECK(s.limit_exponent == doctest::Approx(0.5));
    CHECK(s.radii[0] == doctest::Approx(0.4));
    for (std::size_t i = 1; i < s.radii.size(); ++i)
        CHECK(s.radii[i] < s.radii[i - 1]);
    CHECK(s.k_seq.back() ==
          doctest::Approx(s.limit_exponent).epsilon(1e-6));

    std::mt19937_64 rng(71);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 100; ++rep) {
        const int n = 2 + static_cast<int>(u(rng) * 4);
        const double two_star = default_two_star(n);
        const double beta = 1.0 / n + (1.0 / n) * (0.1 + 0.8 * u(rng));
        const double tau_max = (1.0 - beta) * two_star / 2.0;
        const double tau = 1.0 + (tau_max - 1.0) * 0.9 * u(rng);
        if (tau >= tau_max) continue;
        const MoserSchedule m = moser_schedule(n, beta, tau, 0.1, 0.3, 40, two_star);
        for (int i = 0; i <= 40; ++i) {
            const double closed = moser_gamma_closed_form(n, beta, tau, i, two_star);
            CHECK(std::fabs(m.gamma_seq[i] - closed) <=
                  1e-9 * std::max(1.0, std::fabs(closed)));
        }
    }
    CHECK_THROWS_AS(moser_schedule(3, 0.5, 2.0, 0.2, 0.4, 10), InputError);
    CHECK_THROWS_AS(moser_schedule(3, 0.5, 1.0, 0.4, 0.2, 10), InputError);
}

TEST_CASE("lemma suite: quadratic profile") {
    const Box box = unit_box(2);
    IntegrandSpec spec = make_quadratic(box);
    HProfile h = h_quadratic();
    StructuralParams p = params_for(3, 1.0, 0.5, 1.5, 1e3, box);
    const LemmaReport rep = lemma_suite(spec, h, p, 42, 20000);
    for (const auto& r : rep.rows) {
        INFO(r.name, " drift=", r.drift, " note=", r.note);
        CHECK(r.pass);
    }

    // Lemma on h' t: sup of t^2/(1+t^2/2)^2 at alpha = 3/2, attained near
    // sqrt(2); oracle by dense grid maximization.
    double oracle = 0.0;
    for (int i = 0; i <= 200000; ++i) {
        const double t = 1.0 + i * (1e3 - 1.0) / 200000.0;
        oracle = std::max(oracle, t * t / std::pow(1.0 + 0.5 * t * t, 2.0));
    }
    CHECK(oracle == doctest::Approx(0.5).epsilon(1e-4));
    for (const auto& r : rep.rows) {
        if (r.name == "hprime_lemma") {
            CHECK(r.sup_constant <= oracle * 1.0001);
            CHECK(r.sup_constant >= oracle * 0.98);
            CHECK(std::fabs(r.worst_t - std::sqrt(2.0)) < 0.2);
        }
    }
}

TEST_CASE("lemma suite: slow growth and exponential families stabilize") {
    const Box box = unit_box(2);
    {
        IntegrandSpec spec =
            make_linear_minus_sqrt(CoefficientField::constant(1.0), 1.0, box);
        HProfile h = pair_profile(spec, box);
        StructuralParams p = params_for(3, 1.0, 7.0 / 12.0, 1.4, 1e3, box);
        const LemmaReport rep = lemma_suite(spec, h, p, 7, 20000);
        for (const auto& r : rep.rows) {
            INFO(r.name, " drift=", r.drift, " note=", r.note);
            CHECK(r.pass);
        }
    }
    {
        IntegrandSpec spec =
            make_exponential(CoefficientField::constant(1.0), 1.0, box);
        HProfile h = pair_profile(spec, box);
        StructuralParams p = params_for(3, 1.1, 0.5, 1.25, 30.0, box);
        const LemmaReport rep = lemma_suite(spec, h, p, 7, 20000);
        for (const auto& r : rep.rows) {
            INFO(r.name, " drift=", r.drift, " note=", r.note);
            CHECK(r.pass);
        }
        CHECK(rep.t_hi < 30.0);  // capped by the floating range
    }
}

TEST_CASE("structural params validation") {
    StructuralParams p;
    p.n = 3;
    p.beta = 0.9;  // outside (1/3, 2/3)
    CHECK_THROWS_AS(p.validate(), InputError);
    p.beta = 0.5;
    p.alpha = 1.8;  // above n/(n-1) = 1.5
    CHECK_THROWS_AS(p.validate(), InputError);
    p.alpha = 1.4;
    p.theta = 0.9;
    CHECK_THROWS_AS(p.validate(), InputError);
}

TEST_CASE("report serialization") {
    const auto rep = check_h_growth(h_quadratic(), 3, 0.5, 1.4, 1.0, 100.0);
    const std::string csv = structural_report_csv(rep);
    CHECK(csv.find("name,certified,constant,worst_x,worst_t,quotient") == 0);
    CHECK(csv.find("h_lower_m_beta") != std::string::npos);
    CHECK(csv.find("h_upper_M_alpha") != std::string::npos);
}

TEST_CASE("divergence heuristic refutes an interior ellipticity degeneracy") {
    // h'' = 1 + cos(t) vanishes at t = pi: the upper g_tt quotient for the
    // quadratic integrand blows up there, and denser sampling must catch it.
    const Box box = unit_box(2);
    IntegrandSpec quad = make_quadratic(box);
    HProfile h;
    h.name = "t^2/2 - cos(t) + 1";
    h.t0 = 1.0;
    h.h = [](double t) { return 0.5 * t * t - std::cos(t) + 1.0; };
    h.hp = [](double t) { return t + std::sin(t); };
    h.hpp = [](double t) { return 1.0 + std::cos(t); };
    const auto rep = check_main_assumptions(
        quad, h, params_for(3, 1.0, 0.5, 1.4, 1e3, box));
    CHECK(!rep.rows[3].certified);  // g_tt upper line
    CHECK(!rep.certified());
    bool noted = false;
    for (const auto& row : rep.rows)
        if (row.note.find("not certifiable on sampled range") != std::string::npos)
            noted = true;
    CHECK(noted);
}

TEST_CASE("G squared is controlled by Phi K_M t^2") {
    // G(t)^2 <= 2 (1 + Phi(t) K_M(t) t^2) for increasing Phi and h'(0) = 0.
    const HProfile profiles[] = {h_quadratic(), h_linear_minus_sqrt(1.0),
                                 h_orlicz_log(1.0)};
    for (const auto& h : profiles) {
        for (double gamma : {0.0, 0.5, 2.0, 5.0}) {
            const PhiFamily f = make_phi(gamma);
            for (double t : {1.2, 2.0, 5.0, 17.0, 60.0}) {
                const double G = g_function(h, f, t);
                const double phi = phi_eval(f, t).first;
                CHECK(G * G <=
                      2.0 * (1.0 + phi * K_M(h, t) * t * t) * (1.0 + 1e-9));
            }
        }
    }
}

TEST_CASE("exponential chain: oscillating coefficient bounded by the theta power") {
    // For a_M <= theta a_m the quotient chain gives
    //   g_t(x,t) <= theta (2 a_m)^{1-theta} [h'(t)]^theta t^{1-theta}
    // with h = exp(a_m t^2) - 1, for every t > 0.
    const Box box = unit_box(2);
    CoefficientField a = CoefficientField::affine(0.95, make_point(0.1, 0.0));
    IntegrandSpec spec = make_exponential(a, 1.0, box);
    const double a_m = a.min_on(box);
    const double a_M = a.max_on(box);
    const double theta = 1.2;
    REQUIRE(a_M <= theta * a_m);
    const HProfile h = pair_profile(spec, box);
    const double log_c = std::log(theta) + (1.0 - theta) * std::log(2.0 * a_m);
    for (double t : {0.1, 0.5, 1.0, 2.0, 5.0, 12.0, 20.0}) {
        for (double x1 : {0.0, 0.3, 0.7, 1.0}) {
            const LogDerivs d = spec.log_derivs(make_point(x1, 0.5), t);
            const double log_rhs =
                log_c + theta * h.log_hp_at(t) + (1.0 - theta) * std::log(t);
            CHECK(d.log_g_t <= log_rhs + 1e-12);
        }
    }
}
