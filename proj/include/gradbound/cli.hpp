#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "gradbound/config.hpp"

namespace gradbound::cli {

inline const char* usage_text() {
    return
        "usage: gradbound <subcommand> --config FILE [--out DIR] [--quiet]\n"
        "                 [--workers W] [--seed S] [--samples K]\n"
        "\n"
        "subcommands:\n"
        "  check         certify the structural conditions and report the\n"
        "                admissible parameter windows\n"
        "  solve         minimize the discrete energy and dump the solution\n"
        "  verify-bound  solve, then evaluate the a-priori inequality\n"
        "  sweep-mesh    bound stability across mesh refinement\n"
        "  sweep-clamp   bound stability across clamp constants\n"
        "  lemmas        run the lemma verification suite (--seed, --samples)\n"
        "\n"
        "exit codes: 0 success, 1 certification/solve failure, 2 usage or\n"
        "config error. Diagnostics go to standard error.\n";
}

namespace detail {

struct CliArgs {
    std::string subcommand;
    std::string config_path;
    std::string out_dir;  // overrides the config when nonempty
    bool quiet = false;
    int workers = 0;           // 0 = from config
    std::uint64_t seed = 0;
    bool seed_given = false;
    long samples = 0;          // 0 = from config
};

inline int parse_args(const std::vector<std::string>& argv, CliArgs& out,
                      std::ostream& err) {
    if (argv.empty()) {
        err << usage_text();
        return 2;
    }
    out.subcommand = argv[0];
    const std::set<std::string> subs = {"check",      "solve",      "verify-bound",
                                        "sweep-mesh", "sweep-clamp", "lemmas"};
    if (!subs.count(out.subcommand)) {
        err << "unknown subcommand '" << out.subcommand << "'\n" << usage_text();
        return 2;
    }
    for (std::size_t i = 1; i < argv.size(); ++i) {
        const std::string& a = argv[i];
        auto need_value = [&](const char* flag) -> const std::string* {
            if (i + 1 >= argv.size()) {
                err << flag << " needs a value\n";
                return nullptr;
            }
            return &argv[++i];
        };
        if (a == "--config") {
            const std::string* v = need_value("--config");
            if (!v) return 2;
            out.config_path = *v;
        } else if (a == "--out") {
            const std::string* v = need_value("--out");
            if (!v) return 2;
            out.out_dir = *v;
        } else if (a == "--quiet") {
            out.quiet = true;
        } else if (a == "--workers") {
            const std::string* v = need_value("--workers");
            if (!v) return 2;
            out.workers = std::atoi(v->c_str());
            if (out.workers < 1) {
                err << "--workers needs a positive integer\n";
                return 2;
            }
        } else if (a == "--seed") {
            const std::string* v = need_value("--seed");
            if (!v) return 2;
            out.seed = std::strtoull(v->c_str(), nullptr, 10);
            out.seed_given = true;
        } else if (a == "--samples") {
            const std::string* v = need_value("--samples");
            if (!v) return 2;
            out.samples = std::atol(v->c_str());
            if (out.samples < 100) {
                err << "--samples needs at least 100\n";
                return 2;
            }
        } else {
            err << "unknown flag '" << a << "'\n" << usage_text();
            return 2;
        }
    }
    if (out.config_path.empty()) {
        err << "--config FILE is required\n";
        return 2;
    }
    return 0;
}

inline void write_file(const std::filesystem::path& path, const std::string& body) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot open '" + path.string() + "' for writing");
    f << body;
    if (!f) throw InputError("write failed for '" + path.string() + "'");
}

struct Resolved {
    IntegrandSpec spec;
    HProfile h;
    ParameterWindow window;
    StructuralParams params;
};

inline Resolved resolve(const ExperimentConfig& cfg) {
    Resolved r;
    r.spec = build_spec(cfg);
    r.h = build_h(cfg, r.spec);
    const double t_max = default_t_max(cfg, r.spec);
    r.window = admissible_window_search(r.spec, r.h, cfg.n, cfg.two_star, t_max,
                                        true, &cfg.subdomain);
    r.params.n = cfg.n;
    r.params.theta = cfg.theta > 0.0 ? cfg.theta : r.window.default_theta;
    r.params.beta = cfg.beta > 0.0 ? cfg.beta : r.window.default_beta;
    r.params.alpha = cfg.alpha > 0.0 ? cfg.alpha : r.window.default_alpha;
    r.params.epsilon = cfg.epsilon;
    r.params.t0 = cfg.t0;
    r.params.T_max = t_max;
    r.params.two_star = cfg.two_star;
    r.params.subdomain = cfg.subdomain;
    return r;
}

inline std::string window_summary(const ParameterWindow& w) {
    std::ostringstream os;
    os << "beta window: [" << fmt_double(w.beta_lo) << ", " << fmt_double(w.beta_hi)
       << ")" << (w.beta_lo_closed ? " (closed left)" : " (open left)") << "\n";
    if (w.theta_pinned)
        os << "theta window: [1, 1] (pinned by the family)\n";
    else
        os << "theta window: [" << fmt_double(w.theta_lo) << ", "
           << fmt_double(w.theta_hi) << ")"
           << (w.theta_strict_above_one ? " (theta > 1 strictly)" : "") << "\n";
    os << "defaults: beta = " << fmt_double(w.default_beta)
       << "  theta = " << fmt_double(w.default_theta)
       << "  alpha = " << fmt_double(w.default_alpha) << "\n";
    os << "feasible: " << (w.feasible ? "yes" : "no") << "\n";
    if (w.corroboration >= 0.0)
        os << "numeric corroboration: " << fmt_double(w.corroboration)
           << (w.note.empty() ? "" : " (" + w.note + ")") << "\n";
    return os.str();
}

inline SolveOptions solve_options(const ExperimentConfig& cfg, int workers) {
    SolveOptions o;
    o.tol = cfg.tol;
    o.max_iter = cfg.max_iter;
    o.method = cfg.method == "gd" ? SolveOptions::Method::GradientDescentArmijo
                                  : SolveOptions::Method::NonlinearCG;
    o.armijo_c1 = cfg.armijo_c1;
    o.seed = cfg.seed;
    o.workers = workers;
    return o;
}

inline BoundExperiment bound_experiment(const ExperimentConfig& cfg,
                                        const Resolved& res, int workers) {
    BoundExperiment ex;
    ex.base = res.spec;
    if (clamp_enabled(cfg, res.spec))
        ex.clamp = RegularizationClamp{cfg.clamp_n, cfg.clamp_m};
    ex.h = res.h;
    ex.exps = exponents(cfg.n, res.params.theta, res.params.beta, cfg.epsilon,
                        res.params.resolved_two_star());
    ex.box_x0 = cfg.box_x0;
    ex.box_y0 = cfg.box_y0;
    ex.side = cfg.side;
    ex.m = cfg.m;
    ex.datum = build_datum(cfg);
    ex.solve = solve_options(cfg, workers);
    ex.center = cfg.center;
    ex.rho = cfg.rho;
    ex.R = cfg.R;
    return ex;
}

inline std::string field_csv(const DiscreteField& u) {
    std::string out = "node_i,node_j,component,value\n";
    const Grid& g = u.grid;
    for (int j = 0; j <= g.ncells; ++j)
        for (int i = 0; i <= g.ncells; ++i)
            for (int c = 0; c < g.m; ++c)
                out += std::to_string(i) + "," + std::to_string(j) + "," +
                       std::to_string(c) + "," + fmt_double(u.at(i, j, c)) + "\n";
    return out;
}

inline std::string gradient_csv(const DiscreteField& u) {
    std::string out = "cell_i,cell_j,|Du|\n";
    const Grid& g = u.grid;
    for (int cj = 0; cj < g.ncells; ++cj)
        for (int ci = 0; ci < g.ncells; ++ci)
            out += std::to_string(ci) + "," + std::to_string(cj) + "," +
                   fmt_double(cell_gradient(u, ci, cj).magnitude) + "\n";
    return out;
}

}  // namespace detail

/// Entry point shared by the binary and the tests. argv excludes the program
/// name. Returns the process exit code.
inline int run(const std::vector<std::string>& argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
    detail::CliArgs args;
    if (const int rc = detail::parse_args(argv, args, err)) return rc;

    std::string text;
    {
        std::ifstream f(args.config_path, std::ios::binary);
        if (!f) {
            err << "cannot read config file '" << args.config_path << "'\n";
            return 2;
        }
        std::ostringstream ss;
        ss << f.rdbuf();
        text = ss.str();
    }

    ExperimentConfig cfg;
    detail::Resolved res;
    try {
        cfg = parse_config(text);
        if (args.seed_given) cfg.seed = args.seed;
        if (args.samples > 0) cfg.samples = args.samples;
        if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
        if (args.workers > 0) cfg.workers = args.workers;
        const Mode mode = [&] {
            if (args.subcommand == "check") return Mode::Check;
            if (args.subcommand == "solve") return Mode::Solve;
            if (args.subcommand == "verify-bound") return Mode::VerifyBound;
            if (args.subcommand == "sweep-mesh") return Mode::SweepMesh;
            if (args.subcommand == "sweep-clamp") return Mode::SweepClamp;
            return Mode::Lemmas;
        }();
        if (cfg.mode_given && cfg.mode != mode)
            throw ConfigError(0, std::string("config mode '") +
                                     mode_name(cfg.mode) +
                                     "' conflicts with subcommand '" +
                                     args.subcommand + "'");
        cfg.mode = mode;
        if ((mode == Mode::VerifyBound || mode == Mode::SweepMesh ||
             mode == Mode::SweepClamp) &&
            cfg.h_expr != "auto")
            throw ConfigError(0,
                              "bound experiments pair h with the integrand "
                              "automatically; a custom h would mismatch the "
                              "K_M^tau diagnostic");
        res = detail::resolve(cfg);
    } catch (const ConfigError& e) {
        err << args.config_path << ":" << e.line << ": " << e.what() << "\n";
        return 2;
    } catch (const ParseError& e) {
        err << args.config_path << ": expression error: "
            << format_diagnostic(cfg.g_expr, e.offset, e.what()) << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << args.config_path << ": " << e.what() << "\n";
        return 2;
    }

    const std::filesystem::path out_dir(cfg.out_dir);
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
        err << "cannot create output directory '" << cfg.out_dir << "'\n";
        return 2;
    }
    const int workers = cfg.workers;

    try {
        switch (cfg.mode) {
            case Mode::Check: {
                if (!args.quiet)
                    out << "check: family = " << family_name(res.spec.family())
                        << ", n = " << cfg.n << ", h = " << res.h.name << "\n"
                        << detail::window_summary(res.window);
                if (!res.window.feasible) {
                    err << "infeasible: " << res.window.first_failing << "\n";
                    return 1;
                }
                const AssumptionReport main_rep =
                    check_main_assumptions(res.spec, res.h, res.params);
                const AssumptionReport h_rep = check_h_growth(
                    res.h, cfg.n, res.params.beta, res.params.alpha,
                    res.params.t0, res.params.T_max);
                AssumptionReport all = main_rep;
                for (const auto& row : h_rep.rows) all.rows.push_back(row);
                all.m_beta = h_rep.m_beta;
                all.M_alpha = h_rep.M_alpha;
                detail::write_file(out_dir / "structural_report.csv",
                                   structural_report_csv(all));
                if (!args.quiet) {
                    out << "params: theta = " << fmt_double(res.params.theta)
                        << "  beta = " << fmt_double(res.params.beta)
                        << "  alpha = " << fmt_double(res.params.alpha)
                        << "  t in [" << fmt_double(main_rep.t_lo) << ", "
                        << fmt_double(main_rep.t_hi) << "]\n";
                    if (!main_rep.range_note.empty())
                        out << "note: " << main_rep.range_note << "\n";
                    for (const auto& row : all.rows)
                        out << "  " << row.name << ": "
                            << (row.certified ? "certified" : "NOT certified")
                            << "  constant = " << fmt_double(row.constant)
                            << (row.note.empty() ? "" : "  (" + row.note + ")")
                            << "\n";
                    out << "measured: m = " << fmt_double(all.m)
                        << "  M_theta = " << fmt_double(all.M_theta)
                        << "  m_beta = " << fmt_double(all.m_beta)
                        << "  M_alpha = " << fmt_double(all.M_alpha) << "\n";
                }
                const bool ok = main_rep.certified() && h_rep.certified();
                if (!ok) err << "certification failed on the sampled range\n";
                if (!args.quiet)
                    out << "certified: " << (ok ? "yes" : "no") << "\n";
                return ok ? 0 : 1;
            }
            case Mode::Solve: {
                IntegrandSpec spec = res.spec;
                if (clamp_enabled(cfg, res.spec))
                    spec = clamp_regularize(res.spec,
                                            {cfg.clamp_n, cfg.clamp_m});
                const Grid grid(cfg.box_x0, cfg.box_y0, cfg.side, cfg.meshes[0],
                                cfg.m);
                const Solution sol = minimize(spec, grid, build_datum(cfg),
                                              detail::solve_options(cfg, workers),
                                              cfg.datum);
                detail::write_file(out_dir / "u_field.csv",
                                   detail::field_csv(sol.u));
                detail::write_file(out_dir / "cell_gradients.csv",
                                   detail::gradient_csv(sol.u));
                if (!args.quiet)
                    out << "solve: mesh = " << cfg.meshes[0]
                        << "  iterations = " << sol.iterations
                        << "  grad_sup = " << fmt_double(sol.grad_sup)
                        << "  energy = " << fmt_double(sol.energy_trace.back())
                        << "\n"
                        << "euler residual bound = "
                        << fmt_double(sol.grad_sup / (grid.h() * grid.h()))
                        << "\n";
                if (!sol.converged) {
                    err << "solve failed: "
                        << (sol.diagnosis.empty() ? "not converged" : sol.diagnosis)
                        << "\n";
                    return 1;
                }
                return 0;
            }
            case Mode::VerifyBound: {
                const BoundExperiment ex =
                    detail::bound_experiment(cfg, res, workers);
                if (!ex.exps.feasible) {
                    err << "infeasible exponents: tau = " << fmt_double(ex.exps.tau)
                        << " >= (1-beta) 2*/2\n";
                    return 1;
                }
                SweepResult r;
                r.axis = "h";
                r.samples.push_back(::gradbound::detail::run_point(
                    ex, ex.clamp ? &*ex.clamp : nullptr, cfg.meshes[0]));
                r.axis_values.push_back(cfg.side / cfg.meshes[0]);
                r.complete = true;
                ::gradbound::detail::finish_sweep(r);
                detail::write_file(out_dir / "bound.csv", sweep_csv(r));
                write_svg_plot(r, (out_dir / "bound.svg").string());
                const BoundSample& s = r.samples.front();
                if (!args.quiet)
                    out << "verify-bound: sup|Du| = " << fmt_double(s.sup_du)
                        << "\n  lhs = " << fmt_double(s.lhs)
                        << "  rhs_base = " << fmt_double(s.rhs_base)
                        << "  rhs = " << fmt_double(s.rhs)
                        << "\n  ratio = " << fmt_double(s.ratio)
                        << "  v_integral = " << fmt_double(s.v_integral) << "\n";
                return 0;
            }
            case Mode::SweepMesh: {
                const BoundExperiment ex =
                    detail::bound_experiment(cfg, res, workers);
                if (!ex.exps.feasible) {
                    err << "infeasible exponents\n";
                    return 1;
                }
                const SweepResult r = refinement_sweep(ex, cfg.meshes);
                detail::write_file(out_dir / "sweep_mesh.csv", sweep_csv(r));
                write_svg_plot(r, (out_dir / "sweep_mesh.svg").string());
                if (!args.quiet)
                    out << "sweep-mesh: " << r.samples.size()
                        << " samples, ratio spread = "
                        << fmt_double(r.ratio_spread) << "\n";
                if (!r.complete) {
                    err << "sweep aborted: " << r.failure << "\n";
                    return 1;
                }
                return 0;
            }
            case Mode::SweepClamp: {
                ExperimentConfig sweep_cfg = cfg;
                sweep_cfg.clamp = "on";
                const BoundExperiment ex =
                    detail::bound_experiment(sweep_cfg, res, workers);
                if (!ex.exps.feasible) {
                    err << "infeasible exponents\n";
                    return 1;
                }
                const bool upper = cfg.clamp_axis == "upper";
                std::vector<double> values;
                for (double f : cfg.clamp_factors)
                    values.push_back((upper ? cfg.clamp_m : cfg.clamp_n) * f);
                const SweepResult r =
                    clamp_sweep(ex, upper, values, cfg.meshes[0]);
                detail::write_file(out_dir / "sweep_clamp.csv", sweep_csv(r));
                write_svg_plot(r, (out_dir / "sweep_clamp.svg").string());
                if (!args.quiet)
                    out << "sweep-clamp (" << r.axis << "): " << r.samples.size()
                        << " samples, ratio spread = "
                        << fmt_double(r.ratio_spread) << "\n";
                if (!r.complete) {
                    err << "sweep aborted: " << r.failure << "\n";
                    return 1;
                }
                return 0;
            }
            case Mode::Lemmas: {
                if (!res.window.feasible) {
                    err << "infeasible: " << res.window.first_failing << "\n";
                    return 1;
                }
                const LemmaReport rep = lemma_suite(res.spec, res.h, res.params,
                                                    cfg.seed, cfg.samples);
                detail::write_file(out_dir / "lemma_report.csv",
                                   lemma_report_csv(rep));
                if (!args.quiet) {
                    out << "lemmas: seed = " << cfg.seed
                        << "  samples = " << cfg.samples << "  t in [1, "
                        << fmt_double(rep.t_hi) << "]\n";
                    for (const auto& row : rep.rows)
                        out << "  " << row.name << ": "
                            << (row.pass ? "pass" : "FAIL")
                            << "  sup = " << fmt_double(row.sup_constant)
                            << "  drift = " << fmt_double(row.drift)
                            << (row.violations ? "  violations = " +
                                                     std::to_string(row.violations)
                                               : "")
                            << (row.note.empty() ? "" : "  (" + row.note + ")")
                            << "\n";
                }
                if (!rep.all_pass()) {
                    err << "lemma suite failed\n";
                    return 1;
                }
                return 0;
            }
        }
    } catch (const ConfigError& e) {
        err << args.config_path << ":" << e.line << ": " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << args.subcommand << ": " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace gradbound::cli
