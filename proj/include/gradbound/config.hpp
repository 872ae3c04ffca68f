#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "gradbound/bound.hpp"
#include "gradbound/expr.hpp"
#include "gradbound/integrand.hpp"
#include "gradbound/solver.hpp"
#include "gradbound/structural.hpp"

namespace gradbound {

enum class Mode { Check, Solve, VerifyBound, SweepMesh, SweepClamp, Lemmas };

inline const char* mode_name(Mode m) {
    switch (m) {
        case Mode::Check: return "check";
        case Mode::Solve: return "solve";
        case Mode::VerifyBound: return "verify-bound";
        case Mode::SweepMesh: return "sweep-mesh";
        case Mode::SweepClamp: return "sweep-clamp";
        case Mode::Lemmas: return "lemmas";
    }
    return "?";
}

/// Fully resolved experiment description. INI-style text with [section]
/// headers, key = value lines and # comments; unknown keys are errors.
struct ExperimentConfig {
    // [integrand]
    Family family = Family::VariableExponent;
    std::string g_expr;
    double t0 = 1.0;
    CoefficientField a = CoefficientField::constant(1.0);
    CoefficientField b = CoefficientField::constant(1.0);
    CoefficientField p = CoefficientField::constant(2.0);
    InnerProfile inner = InnerProfile::Exp;

    // [structural]
    int n = 2;
    double theta = 0.0, beta = 0.0, alpha = 0.0;  // 0 = take the window default
    double epsilon = 0.1;
    double t_max = 0.0;  // 0 = family default (30 exp-type, 1e3 otherwise)
    double two_star = 0.0;
    Box subdomain;
    bool subdomain_given = false;
    std::string h_expr = "auto";

    // [solver]
    double box_x0 = 0.0, box_y0 = 0.0, side = 1.0;
    std::vector<int> meshes = {33};
    int m = 1;
    std::string datum = "harmonic_quadratic";
    std::vector<double> datum_a = {1.0, 0.0};
    std::vector<double> datum_b;
    double datum_k = 1.0;
    double datum_amplitude = 1.0;
    double tol = 1e-8;
    long max_iter = 50000;
    std::string method = "ncg";
    double armijo_c1 = 1e-4;
    std::string clamp = "auto";  // auto | on | off
    double clamp_n = 1e-3;
    double clamp_m = 1e3;
    std::uint64_t seed = 0;
    int workers = 1;

    // [experiment]
    Mode mode = Mode::Check;
    bool mode_given = false;
    double rho = 0.0, R = 0.0;  // 0 = default fraction of the half-width
    Point center{0.0, 0.0, 0.0};
    bool center_given = false;
    std::string out_dir = "out";
    long samples = 100000;
    std::vector<double> clamp_factors = {1.0, 10.0, 100.0};
    std::string clamp_axis = "upper";
};

namespace detail {

struct ConfigEntry {
    std::string value;
    int line = 0;
    bool used = false;
};

struct RawConfig {
    // section -> key -> entry
    std::map<std::string, std::map<std::string, ConfigEntry>> sections;
    std::map<std::string, int> section_lines;
};

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline RawConfig tokenize_config(const std::string& text) {
    RawConfig raw;
    std::string section;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        std::string line = text.substr(
            pos, nl == std::string::npos ? std::string::npos : nl - pos);
        pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        // Strip comments outside quotes.
        bool in_quote = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') in_quote = !in_quote;
            if (line[i] == '#' && !in_quote) {
                line = line.substr(0, i);
                break;
            }
        }
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(line_no, "malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) throw ConfigError(line_no, "empty section name");
            raw.sections[section];  // remember even if empty
            raw.section_lines.emplace(section, line_no);
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(line_no, "expected 'key = value'");
        if (section.empty())
            throw ConfigError(line_no, "key outside any [section]");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(line_no, "empty key");
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
            value = value.substr(1, value.size() - 2);
        auto& sec = raw.sections[section];
        auto it = sec.find(key);
        if (it != sec.end())
            throw ConfigError(line_no, "duplicate key '" + key + "' (lines " +
                                           std::to_string(it->second.line) +
                                           " and " + std::to_string(line_no) + ")");
        sec[key] = ConfigEntry{value, line_no, false};
    }
    return raw;
}

class ConfigReader {
public:
    explicit ConfigReader(RawConfig raw) : raw_(std::move(raw)) {}

    bool has(const std::string& sec, const std::string& key) {
        auto s = raw_.sections.find(sec);
        if (s == raw_.sections.end()) return false;
        return s->second.count(key) > 0;
    }

    ConfigEntry* entry(const std::string& sec, const std::string& key) {
        auto s = raw_.sections.find(sec);
        if (s == raw_.sections.end()) return nullptr;
        auto k = s->second.find(key);
        if (k == s->second.end()) return nullptr;
        k->second.used = true;
        return &k->second;
    }

    std::string get_string(const std::string& sec, const std::string& key,
                           const std::string& def) {
        ConfigEntry* e = entry(sec, key);
        return e ? e->value : def;
    }

    double get_double(const std::string& sec, const std::string& key, double def) {
        ConfigEntry* e = entry(sec, key);
        if (!e) return def;
        char* end = nullptr;
        const double v = std::strtod(e->value.c_str(), &end);
        if (end == e->value.c_str() || *end != '\0')
            throw ConfigError(e->line, "'" + key + "' expects a number, got '" +
                                           e->value + "'");
        return v;
    }

    long get_long(const std::string& sec, const std::string& key, long def) {
        ConfigEntry* e = entry(sec, key);
        if (!e) return def;
        char* end = nullptr;
        const long v = std::strtol(e->value.c_str(), &end, 10);
        if (end == e->value.c_str() || *end != '\0')
            throw ConfigError(e->line, "'" + key + "' expects an integer, got '" +
                                           e->value + "'");
        return v;
    }

    std::vector<double> get_list(const std::string& sec, const std::string& key,
                                 std::vector<double> def) {
        ConfigEntry* e = entry(sec, key);
        if (!e) return def;
        std::vector<double> out;
        std::size_t p = 0;
        const std::string& v = e->value;
        while (p <= v.size()) {
            const std::size_t comma = v.find(',', p);
            const std::string field = trim(
                v.substr(p, comma == std::string::npos ? std::string::npos
                                                       : comma - p));
            if (field.empty())
                throw ConfigError(e->line, "'" + key + "': empty list element");
            char* end = nullptr;
            out.push_back(std::strtod(field.c_str(), &end));
            if (end == field.c_str() || *end != '\0')
                throw ConfigError(e->line, "'" + key + "': '" + field +
                                               "' is not a number");
            if (comma == std::string::npos) break;
            p = comma + 1;
        }
        return out;
    }

    int line_of(const std::string& sec, const std::string& key) {
        auto s = raw_.sections.find(sec);
        if (s == raw_.sections.end()) return 0;
        auto k = s->second.find(key);
        return k == s->second.end() ? 0 : k->second.line;
    }

    /// Every section and key must be recognized and consumed.
    void finish(const std::set<std::string>& known_sections) {
        for (const auto& [sec, keys] : raw_.sections) {
            if (!known_sections.count(sec)) {
                auto it = raw_.section_lines.find(sec);
                const int line = it != raw_.section_lines.end() ? it->second
                                 : keys.empty() ? 0
                                                : keys.begin()->second.line;
                throw ConfigError(line, "unknown section [" + sec + "]");
            }
            for (const auto& [key, e] : keys)
                if (!e.used)
                    throw ConfigError(e.line, "unknown key '" + key +
                                                  "' in section [" + sec + "]");
        }
    }

private:
    RawConfig raw_;
};

inline CoefficientField parse_coefficient(const std::string& text, int line,
                                          const std::string& key) {
    const std::size_t colon = text.find(':');
    const std::string kind = colon == std::string::npos ? text : text.substr(0, colon);
    std::vector<double> nums;
    if (colon != std::string::npos) {
        std::size_t p = colon + 1;
        while (p <= text.size()) {
            const std::size_t comma = text.find(',', p);
            const std::string f = trim(
                text.substr(p, comma == std::string::npos ? std::string::npos
                                                          : comma - p));
            char* end = nullptr;
            nums.push_back(std::strtod(f.c_str(), &end));
            if (f.empty() || end == f.c_str() || *end != '\0')
                throw ConfigError(line, "'" + key + "': bad number '" + f + "'");
            if (comma == std::string::npos) break;
            p = comma + 1;
        }
    }
    if (kind == "constant") {
        if (nums.size() != 1)
            throw ConfigError(line, "'" + key + "': constant:<value>");
        return CoefficientField::constant(nums[0]);
    }
    if (kind == "affine") {
        if (nums.size() < 2 || nums.size() > 4)
            throw ConfigError(line, "'" + key + "': affine:<c0>,<sx>[,<sy>[,<sz>]]");
        Point slope{0.0, 0.0, 0.0};
        for (std::size_t i = 1; i < nums.size(); ++i) slope[i - 1] = nums[i];
        return CoefficientField::affine(nums[0], slope);
    }
    if (kind == "periodic") {
        if (nums.size() < 4 || nums.size() > 6)
            throw ConfigError(
                line, "'" + key + "': periodic:<c0>,<amp>,<kx>,<ky>[,<kz>[,<phase>]]");
        Point wave{nums[2], nums[3], nums.size() >= 5 ? nums[4] : 0.0};
        const double phase = nums.size() >= 6 ? nums[5] : 0.0;
        return CoefficientField::periodic(nums[0], nums[1], wave, phase);
    }
    throw ConfigError(line, "'" + key + "': unknown coefficient kind '" + kind +
                                "' (constant | affine | periodic)");
}

inline Box parse_box(const std::vector<double>& v, int dim, int line,
                     const std::string& key) {
    if (static_cast<int>(v.size()) != 2 * dim)
        throw ConfigError(line, "'" + key + "' expects " + std::to_string(2 * dim) +
                                    " numbers (lo..., hi...)");
    Box b;
    b.dim = dim;
    for (int k = 0; k < dim; ++k) {
        b.lo[k] = v[k];
        b.hi[k] = v[dim + k];
        if (!(b.lo[k] < b.hi[k]))
            throw ConfigError(line, "'" + key + "': lo must be below hi");
    }
    return b;
}

}  // namespace detail

inline ExperimentConfig parse_config(const std::string& text) {
    using detail::ConfigReader;
    ConfigReader r(detail::tokenize_config(text));
    ExperimentConfig c;

    // [integrand]
    const std::string fam = r.get_string("integrand", "family", "variable_exponent");
    const int fam_line = r.line_of("integrand", "family");
    if (fam == "exponential") c.family = Family::Exponential;
    else if (fam == "variable_exponent") c.family = Family::VariableExponent;
    else if (fam == "orlicz_log") c.family = Family::OrliczLog;
    else if (fam == "composed_h") c.family = Family::ComposedH;
    else if (fam == "linear_minus_sqrt") c.family = Family::LinearMinusSqrt;
    else if (fam == "custom") c.family = Family::Custom;
    else
        throw ConfigError(fam_line, "unknown family '" + fam + "'");
    c.g_expr = r.get_string("integrand", "g", "");
    if (c.family == Family::Custom && c.g_expr.empty())
        throw ConfigError(fam_line, "custom family needs g = \"<expression>\"");
    if (c.family != Family::Custom && !c.g_expr.empty())
        throw ConfigError(r.line_of("integrand", "g"),
                          "'g' applies only to the custom family");
    c.t0 = r.get_double("integrand", "t0", 1.0);
    if (c.t0 <= 0.0)
        throw ConfigError(r.line_of("integrand", "t0"), "t0 must be positive");
    if (r.has("integrand", "a"))
        c.a = detail::parse_coefficient(r.get_string("integrand", "a", ""),
                                        r.line_of("integrand", "a"), "a");
    if (r.has("integrand", "b"))
        c.b = detail::parse_coefficient(r.get_string("integrand", "b", ""),
                                        r.line_of("integrand", "b"), "b");
    if (r.has("integrand", "p"))
        c.p = detail::parse_coefficient(r.get_string("integrand", "p", ""),
                                        r.line_of("integrand", "p"), "p");
    const std::string inner = r.get_string("integrand", "inner", "exp");
    if (inner == "exp") c.inner = InnerProfile::Exp;
    else if (inner == "tlog") c.inner = InnerProfile::TLog;
    else
        throw ConfigError(r.line_of("integrand", "inner"),
                          "inner profile must be exp or tlog");

    // [solver] first: the solver box doubles as the default domain.
    {
        const std::vector<double> bx =
            r.get_list("solver", "box", {0.0, 0.0, 1.0});
        if (bx.size() != 3)
            throw ConfigError(r.line_of("solver", "box"),
                              "'box' expects x0,y0,side");
        c.box_x0 = bx[0];
        c.box_y0 = bx[1];
        c.side = bx[2];
        if (c.side <= 0.0)
            throw ConfigError(r.line_of("solver", "box"), "side must be positive");
        const std::vector<double> meshes = r.get_list("solver", "mesh", {33.0});
        c.meshes.clear();
        for (double v : meshes) {
            const int mi = static_cast<int>(v);
            if (mi != v || mi < 4)
                throw ConfigError(r.line_of("solver", "mesh"),
                                  "mesh entries must be integers >= 4");
            c.meshes.push_back(mi);
        }
        c.m = static_cast<int>(r.get_long("solver", "m", 1));
        if (c.m < 1 || c.m > kMaxDim)
            throw ConfigError(r.line_of("solver", "m"),
                              "m must lie in 1.." + std::to_string(kMaxDim));
        c.datum = r.get_string("solver", "datum", "harmonic_quadratic");
        const std::set<std::string> data = {"affine", "harmonic_quadratic", "sine",
                                            "radial"};
        if (!data.count(c.datum))
            throw ConfigError(r.line_of("solver", "datum"),
                              "unknown datum '" + c.datum + "'");
        c.datum_a = r.get_list("solver", "datum_a", c.datum_a);
        c.datum_b = r.get_list("solver", "datum_b", {});
        c.datum_k = r.get_double("solver", "datum_k", 1.0);
        c.datum_amplitude = r.get_double("solver", "datum_amplitude", 1.0);
        if (c.datum != "affine" &&
            (r.has("solver", "datum_a") || r.has("solver", "datum_b")))
            throw ConfigError(r.line_of("solver", "datum_a") +
                                  r.line_of("solver", "datum_b"),
                              "datum_a/datum_b apply only to the affine datum");
        if (c.datum != "sine" && r.has("solver", "datum_k"))
            throw ConfigError(r.line_of("solver", "datum_k"),
                              "datum_k applies only to the sine datum");
        if (c.datum == "affine" &&
            static_cast<int>(c.datum_a.size()) != 2 * c.m)
            throw ConfigError(r.line_of("solver", "datum_a"),
                              "datum_a needs m x 2 entries");
        if ((c.datum == "harmonic_quadratic" || c.datum == "radial") && c.m != 1)
            throw ConfigError(r.line_of("solver", "m"),
                              "datum '" + c.datum + "' is scalar (m = 1)");
        c.tol = r.get_double("solver", "tol", 1e-8);
        if (c.tol <= 0.0)
            throw ConfigError(r.line_of("solver", "tol"), "tol must be positive");
        c.max_iter = r.get_long("solver", "max_iter", 50000);
        if (c.max_iter < 1)
            throw ConfigError(r.line_of("solver", "max_iter"),
                              "max_iter must be positive");
        c.method = r.get_string("solver", "method", "ncg");
        if (c.method != "ncg" && c.method != "gd")
            throw ConfigError(r.line_of("solver", "method"),
                              "method must be ncg or gd");
        c.armijo_c1 = r.get_double("solver", "armijo_c1", 1e-4);
        if (!(c.armijo_c1 > 0.0 && c.armijo_c1 < 0.5))
            throw ConfigError(r.line_of("solver", "armijo_c1"),
                              "armijo_c1 must lie in (0, 1/2)");
        c.clamp = r.get_string("solver", "clamp", "auto");
        if (c.clamp != "auto" && c.clamp != "on" && c.clamp != "off")
            throw ConfigError(r.line_of("solver", "clamp"),
                              "clamp must be auto, on or off");
        c.clamp_n = r.get_double("solver", "clamp_n", 1e-3);
        c.clamp_m = r.get_double("solver", "clamp_m", 1e3);
        if (!(c.clamp_n > 0.0 && c.clamp_m > 0.0 && c.clamp_n <= c.clamp_m))
            throw ConfigError(std::max(r.line_of("solver", "clamp_n"),
                                       r.line_of("solver", "clamp_m")),
                              "clamp needs 0 < N <= M");
        c.seed = static_cast<std::uint64_t>(r.get_long("solver", "seed", 0));
        c.workers = static_cast<int>(r.get_long("solver", "workers", 1));
        if (c.workers < 1)
            throw ConfigError(r.line_of("solver", "workers"),
                              "workers must be at least 1");
    }

    // [structural]
    c.n = static_cast<int>(r.get_long("structural", "n", 2));
    if (c.n < 2)
        throw ConfigError(r.line_of("structural", "n"), "n must be at least 2");
    c.theta = r.get_double("structural", "theta", 0.0);
    if (r.has("structural", "theta") && c.theta < 1.0)
        throw ConfigError(r.line_of("structural", "theta"), "theta must be >= 1");
    c.beta = r.get_double("structural", "beta", 0.0);
    if (r.has("structural", "beta") &&
        !(c.beta > 1.0 / c.n && c.beta < 2.0 / c.n))
        throw ConfigError(r.line_of("structural", "beta"),
                          "beta = " + fmt_double(c.beta) + " violates 1/n < beta < 2/n (n = " +
                              std::to_string(c.n) + ": (" + fmt_double(1.0 / c.n) +
                              ", " + fmt_double(2.0 / c.n) + "))");
    c.alpha = r.get_double("structural", "alpha", 0.0);
    if (r.has("structural", "alpha") &&
        !(c.alpha > 1.0 && c.alpha <= static_cast<double>(c.n) / (c.n - 1)))
        throw ConfigError(r.line_of("structural", "alpha"),
                          "alpha violates 1 < alpha <= n/(n-1)");
    c.epsilon = r.get_double("structural", "epsilon", 0.1);
    if (c.epsilon <= 0.0)
        throw ConfigError(r.line_of("structural", "epsilon"),
                          "epsilon must be positive");
    c.t_max = r.get_double("structural", "t_max", 0.0);
    if (r.has("structural", "t_max") && c.t_max <= c.t0)
        throw ConfigError(r.line_of("structural", "t_max"),
                          "t_max must exceed t0");
    c.two_star = r.get_double("structural", "two_star", 0.0);
    if (r.has("structural", "two_star")) {
        if (c.n != 2)
            throw ConfigError(r.line_of("structural", "two_star"),
                              "two_star is chosen freely only for n = 2");
        if (c.two_star <= 2.0)
            throw ConfigError(r.line_of("structural", "two_star"),
                              "two_star must exceed 2");
    }
    if (r.has("structural", "subdomain")) {
        c.subdomain = detail::parse_box(
            r.get_list("structural", "subdomain", {}), 2,
            r.line_of("structural", "subdomain"), "subdomain");
        c.subdomain_given = true;
    }
    c.h_expr = r.get_string("structural", "h", "auto");

    // [experiment]
    const std::string mode = r.get_string("experiment", "mode", "");
    if (!mode.empty()) {
        c.mode_given = true;
        if (mode == "check") c.mode = Mode::Check;
        else if (mode == "solve") c.mode = Mode::Solve;
        else if (mode == "verify-bound") c.mode = Mode::VerifyBound;
        else if (mode == "sweep-mesh") c.mode = Mode::SweepMesh;
        else if (mode == "sweep-clamp") c.mode = Mode::SweepClamp;
        else if (mode == "lemmas") c.mode = Mode::Lemmas;
        else
            throw ConfigError(r.line_of("experiment", "mode"),
                              "unknown mode '" + mode + "'");
    }
    c.rho = r.get_double("experiment", "rho", 0.0);
    c.R = r.get_double("experiment", "R", 0.0);
    if (r.has("experiment", "rho") != r.has("experiment", "R"))
        throw ConfigError(std::max(r.line_of("experiment", "rho"),
                                   r.line_of("experiment", "R")),
                          "rho and R must be given together");
    if (r.has("experiment", "rho") && !(c.rho > 0.0 && c.rho < c.R))
        throw ConfigError(r.line_of("experiment", "rho"), "need 0 < rho < R");
    if (r.has("experiment", "center")) {
        const auto v = r.get_list("experiment", "center", {});
        if (v.size() != 2)
            throw ConfigError(r.line_of("experiment", "center"),
                              "center expects two coordinates");
        c.center = make_point(v[0], v[1]);
        c.center_given = true;
    }
    c.out_dir = r.get_string("experiment", "out", "out");
    c.samples = r.get_long("experiment", "samples", 100000);
    if (c.samples < 100)
        throw ConfigError(r.line_of("experiment", "samples"),
                          "samples must be at least 100");
    c.clamp_factors =
        r.get_list("experiment", "clamp_factors", {1.0, 10.0, 100.0});
    for (double f : c.clamp_factors)
        if (f <= 0.0)
            throw ConfigError(r.line_of("experiment", "clamp_factors"),
                              "clamp factors must be positive");
    c.clamp_axis = r.get_string("experiment", "clamp_axis", "upper");
    if (c.clamp_axis != "upper" && c.clamp_axis != "lower")
        throw ConfigError(r.line_of("experiment", "clamp_axis"),
                          "clamp_axis must be upper or lower");

    r.finish({"integrand", "structural", "solver", "experiment"});

    // Cross-field defaults.
    if (!c.subdomain_given) {
        c.subdomain.dim = 2;
        c.subdomain.lo = make_point(c.box_x0, c.box_y0);
        c.subdomain.hi = make_point(c.box_x0 + c.side, c.box_y0 + c.side);
    }
    if (!c.center_given)
        c.center = make_point(c.box_x0 + 0.5 * c.side, c.box_y0 + 0.5 * c.side);
    if (c.subdomain_given) {
        const Box domain = Box{2, make_point(c.box_x0, c.box_y0),
                               make_point(c.box_x0 + c.side, c.box_y0 + c.side)};
        if (!domain.contains(c.subdomain.lo) || !domain.contains(c.subdomain.hi))
            throw ConfigError(0, "subdomain must lie inside the solver box");
    }
    if (c.rho == 0.0) {
        c.rho = 0.2 * 0.5 * c.side;
        c.R = 0.4 * 0.5 * c.side;
    }
    return c;
}

// ---------------------------------------------------------------------------
// Builders
// ---------------------------------------------------------------------------

inline Box config_domain(const ExperimentConfig& c) {
    Box b;
    b.dim = 2;
    b.lo = make_point(c.box_x0, c.box_y0);
    b.hi = make_point(c.box_x0 + c.side, c.box_y0 + c.side);
    return b;
}

inline IntegrandSpec build_spec(const ExperimentConfig& c) {
    const Box domain = config_domain(c);
    if (c.family == Family::Custom) {
        CoeffBindings binds{{"a", c.a}, {"b", c.b}, {"p", c.p}};
        return to_integrand(c.g_expr, binds, c.t0, domain);
    }
    BuiltinParams p;
    p.a = c.a;
    p.b = c.b;
    p.p = c.p;
    p.inner = c.inner;
    return make_builtin(c.family, p, c.t0, domain);
}

inline HProfile build_h(const ExperimentConfig& c, const IntegrandSpec& spec) {
    if (c.h_expr == "auto") return pair_profile(spec, c.subdomain);
    HProfile h = h_from_expr(c.h_expr, c.t0);
    h.t0 = c.t0;
    return h;
}

/// Whether the solver regularizes before minimizing: explicit on/off, or an
/// automatic rule. Auto clamps the slow-growth family (lower bound N > 0),
/// any family with exponential-type growth (finite representable range) and
/// any profile whose flux limit g_tt(x,0) is unbounded; polynomial-type
/// convex profiles solve unclamped.
inline bool clamp_enabled(const ExperimentConfig& c, const IntegrandSpec& spec) {
    if (c.clamp == "on") return true;
    if (c.clamp == "off") return false;
    if (spec.family() == Family::LinearMinusSqrt) return true;
    if (std::isfinite(spec.t_representable())) return true;
    const Box& d = spec.domain();
    if (!std::isfinite(spec.second_derivative_at_zero(d.center()))) return true;
    Point corner = d.lo;
    if (!std::isfinite(spec.second_derivative_at_zero(corner))) return true;
    return false;
}

inline BoundaryDatum build_datum(const ExperimentConfig& c) {
    if (c.datum == "affine") {
        MatMN A;
        A.m = c.m;
        A.n = 2;
        for (int comp = 0; comp < c.m; ++comp)
            for (int k = 0; k < 2; ++k) A(comp, k) = c.datum_a[comp * 2 + k];
        return affine_datum(A, c.datum_b);
    }
    if (c.datum == "harmonic_quadratic") return harmonic_quadratic_datum();
    if (c.datum == "sine") return sine_datum(c.m, c.datum_k, c.datum_amplitude);
    return radial_datum(make_point(c.box_x0 + 0.5 * c.side, c.box_y0 + 0.5 * c.side),
                        c.datum_amplitude);
}

inline double default_t_max(const ExperimentConfig& c, const IntegrandSpec& spec) {
    if (c.t_max > 0.0) return c.t_max;
    return std::isfinite(spec.t_representable()) ? 30.0 : 1e3;
}

}  // namespace gradbound
