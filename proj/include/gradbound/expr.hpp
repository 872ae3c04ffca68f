#pragma once

#include <cctype>
#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "gradbound/dual.hpp"
#include "gradbound/integrand.hpp"

namespace gradbound {

/// Expression evaluation failure carrying the offending subexpression offset.
struct EvalError : std::runtime_error {
    std::size_t offset;
    EvalError(std::size_t off, const std::string& what)
        : std::runtime_error(what), offset(off) {}
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

enum class ExprKind { Number, VarT, VarX, Coeff, Neg, Add, Sub, Mul, Div, Pow, Call };
enum class FuncId { Exp, Log, Sqrt, Sin, Cos, AbsSmooth };

struct Expr {
    ExprKind kind;
    std::size_t offset = 0;   // byte offset in the source text
    double number = 0.0;      // Number
    int axis = 0;             // VarX
    std::string name;         // Coeff
    FuncId func = FuncId::Exp;
    ExprPtr lhs, rhs;
    std::vector<ExprPtr> args;
};

// ---------------------------------------------------------------------------
// Parser: standard precedence climbing. ^ is right-associative and binds
// tighter than unary minus, so -t^2 reads -(t^2).
// ---------------------------------------------------------------------------

namespace detail {

struct Token {
    enum class Type { Number, Ident, Op, LParen, RParen, Comma, End };
    Type type = Type::End;
    std::size_t offset = 0;
    double number = 0.0;
    char op = 0;
    std::string text;
};

class Lexer {
public:
    explicit Lexer(const std::string& src) : src_(src) { advance(); }
    const Token& peek() const { return tok_; }
    Token take() {
        Token t = tok_;
        advance();
        return t;
    }

private:
    void advance() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_])))
            ++pos_;
        tok_ = Token{};
        tok_.offset = pos_;
        if (pos_ >= src_.size()) {
            tok_.type = Token::Type::End;
            return;
        }
        const char c = src_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && pos_ + 1 < src_.size() &&
             std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
            std::size_t end = pos_;
            while (end < src_.size() &&
                   std::isdigit(static_cast<unsigned char>(src_[end])))
                ++end;
            if (end < src_.size() && src_[end] == '.') {
                ++end;
                while (end < src_.size() &&
                       std::isdigit(static_cast<unsigned char>(src_[end])))
                    ++end;
            }
            if (end < src_.size() && (src_[end] == 'e' || src_[end] == 'E')) {
                std::size_t e = end + 1;
                if (e < src_.size() && (src_[e] == '+' || src_[e] == '-')) ++e;
                if (e < src_.size() && std::isdigit(static_cast<unsigned char>(src_[e]))) {
                    end = e;
                    while (end < src_.size() &&
                           std::isdigit(static_cast<unsigned char>(src_[end])))
                        ++end;
                }
            }
            tok_.type = Token::Type::Number;
            tok_.text = src_.substr(pos_, end - pos_);
            tok_.number = std::strtod(tok_.text.c_str(), nullptr);
            pos_ = end;
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t end = pos_;
            while (end < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[end])) ||
                    src_[end] == '_'))
                ++end;
            tok_.type = Token::Type::Ident;
            tok_.text = src_.substr(pos_, end - pos_);
            pos_ = end;
            return;
        }
        switch (c) {
            case '+': case '-': case '*': case '/': case '^':
                tok_.type = Token::Type::Op;
                tok_.op = c;
                break;
            case '(': tok_.type = Token::Type::LParen; break;
            case ')': tok_.type = Token::Type::RParen; break;
            case ',': tok_.type = Token::Type::Comma; break;
            default:
                throw ParseError(pos_, "unexpected character '" + std::string(1, c) + "'");
        }
        ++pos_;
    }

    const std::string& src_;
    std::size_t pos_ = 0;
    Token tok_;
};

class Parser {
public:
    explicit Parser(const std::string& src) : lex_(src) {}

    ExprPtr parse() {
        ExprPtr e = expression(0);
        const Token& t = lex_.peek();
        if (t.type != Token::Type::End)
            throw ParseError(t.offset, "expected operator or end of expression");
        return e;
    }

private:
    static constexpr int kUnaryPrec = 25;

    static int binary_prec(char op) {
        switch (op) {
            case '+': case '-': return 10;
            case '*': case '/': return 20;
            case '^': return 30;
        }
        return -1;
    }

    ExprPtr expression(int min_prec) {
        ExprPtr lhs;
        const Token& t = lex_.peek();
        if (t.type == Token::Type::Op && t.op == '-') {
            const std::size_t off = lex_.take().offset;
            auto node = std::make_shared<Expr>();
            node->kind = ExprKind::Neg;
            node->offset = off;
            node->lhs = expression(kUnaryPrec);
            lhs = node;
        } else {
            lhs = primary();
        }
        for (;;) {
            const Token& op = lex_.peek();
            if (op.type != Token::Type::Op) break;
            const int prec = binary_prec(op.op);
            if (prec < min_prec) break;
            const Token taken = lex_.take();
            const int next_min = taken.op == '^' ? prec : prec + 1;
            ExprPtr rhs = expression(next_min);
            auto node = std::make_shared<Expr>();
            switch (taken.op) {
                case '+': node->kind = ExprKind::Add; break;
                case '-': node->kind = ExprKind::Sub; break;
                case '*': node->kind = ExprKind::Mul; break;
                case '/': node->kind = ExprKind::Div; break;
                case '^': node->kind = ExprKind::Pow; break;
            }
            node->offset = taken.offset;
            node->lhs = lhs;
            node->rhs = rhs;
            lhs = node;
        }
        return lhs;
    }

    ExprPtr primary() {
        Token t = lex_.take();
        switch (t.type) {
            case Token::Type::Number: {
                auto node = std::make_shared<Expr>();
                node->kind = ExprKind::Number;
                node->offset = t.offset;
                node->number = t.number;
                return node;
            }
            case Token::Type::LParen: {
                ExprPtr inner = expression(0);
                const Token close = lex_.take();
                if (close.type != Token::Type::RParen)
                    throw ParseError(close.offset, "expected ')'");
                return inner;
            }
            case Token::Type::Ident:
                return identifier(t);
            default:
                throw ParseError(t.offset,
                                 "expected number, identifier, '(' or unary '-'");
        }
    }

    ExprPtr identifier(const Token& t) {
        auto node = std::make_shared<Expr>();
        node->offset = t.offset;
        if (t.text == "t") {
            node->kind = ExprKind::VarT;
            return node;
        }
        if (t.text.size() >= 2 && t.text[0] == 'x' &&
            std::isdigit(static_cast<unsigned char>(t.text[1]))) {
            const int axis = std::stoi(t.text.substr(1));
            if (axis < 1 || axis > kMaxDim || t.text.size() > 2)
                throw ParseError(t.offset, "unknown variable '" + t.text +
                                               "' (use t, x1..x" +
                                               std::to_string(kMaxDim) + ")");
            node->kind = ExprKind::VarX;
            node->axis = axis - 1;
            return node;
        }
        if (t.text == "x")
            throw ParseError(t.offset, "bare 'x' is reserved; use x1..x" +
                                           std::to_string(kMaxDim));
        const FuncId* fid = lookup_func(t.text);
        if (lex_.peek().type == Token::Type::LParen) {
            lex_.take();
            if (fid) {
                node->kind = ExprKind::Call;
                node->func = *fid;
                node->args.push_back(expression(0));
                while (lex_.peek().type == Token::Type::Comma) {
                    lex_.take();
                    node->args.push_back(expression(0));
                }
                const Token close = lex_.take();
                if (close.type != Token::Type::RParen)
                    throw ParseError(close.offset, "expected ')' or ','");
                const std::size_t want_max = t.text == "abs_smooth" ? 2 : 1;
                if (node->args.empty() || node->args.size() > want_max)
                    throw ParseError(t.offset, "arity mismatch for '" + t.text + "'");
                return node;
            }
            // Coefficient sugar: name(x).
            const Token arg = lex_.take();
            if (arg.type != Token::Type::Ident || arg.text != "x")
                throw ParseError(t.offset, "unknown function '" + t.text + "'");
            const Token close = lex_.take();
            if (close.type != Token::Type::RParen)
                throw ParseError(close.offset, "expected ')'");
            node->kind = ExprKind::Coeff;
            node->name = t.text;
            return node;
        }
        if (fid)
            throw ParseError(t.offset, "function '" + t.text + "' needs arguments");
        node->kind = ExprKind::Coeff;
        node->name = t.text;
        return node;
    }

    static const FuncId* lookup_func(const std::string& name) {
        static const std::map<std::string, FuncId> table = {
            {"exp", FuncId::Exp},       {"log", FuncId::Log},
            {"sqrt", FuncId::Sqrt},     {"sin", FuncId::Sin},
            {"cos", FuncId::Cos},       {"abs_smooth", FuncId::AbsSmooth},
        };
        auto it = table.find(name);
        return it == table.end() ? nullptr : &it->second;
    }

    Lexer lex_;
};

}  // namespace detail

inline ExprPtr parse(const std::string& text) {
    if (text.empty()) throw ParseError(0, "empty expression");
    return detail::Parser(text).parse();
}

/// "line:col: message" for a diagnostic inside (possibly multi-line) text.
inline std::string format_diagnostic(const std::string& text, std::size_t offset,
                                     const std::string& message) {
    int line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return std::to_string(line) + ":" + std::to_string(col) + ": " + message;
}

// ---------------------------------------------------------------------------
// Printing (minimal parentheses; reparses to an identical tree)
// ---------------------------------------------------------------------------

namespace detail {

inline int node_prec(const Expr& e) {
    switch (e.kind) {
        case ExprKind::Add: case ExprKind::Sub: return 10;
        case ExprKind::Mul: case ExprKind::Div: return 20;
        case ExprKind::Neg: return 25;
        case ExprKind::Pow: return 30;
        default: return 100;
    }
}

inline void print_node(const Expr& e, int min_prec, std::string& out) {
    const int prec = node_prec(e);
    const bool wrap = prec < min_prec;
    if (wrap) out += '(';
    switch (e.kind) {
        case ExprKind::Number: out += fmt_double(e.number); break;
        case ExprKind::VarT: out += 't'; break;
        case ExprKind::VarX: out += "x" + std::to_string(e.axis + 1); break;
        case ExprKind::Coeff: out += e.name; break;
        case ExprKind::Neg:
            out += '-';
            print_node(*e.lhs, 26, out);
            break;
        case ExprKind::Add:
            print_node(*e.lhs, 10, out);
            out += " + ";
            print_node(*e.rhs, 11, out);
            break;
        case ExprKind::Sub:
            print_node(*e.lhs, 10, out);
            out += " - ";
            print_node(*e.rhs, 11, out);
            break;
        case ExprKind::Mul:
            print_node(*e.lhs, 20, out);
            out += " * ";
            print_node(*e.rhs, 21, out);
            break;
        case ExprKind::Div:
            print_node(*e.lhs, 20, out);
            out += " / ";
            print_node(*e.rhs, 21, out);
            break;
        case ExprKind::Pow:
            print_node(*e.lhs, 31, out);
            out += "^";
            print_node(*e.rhs, 30, out);
            break;
        case ExprKind::Call: {
            switch (e.func) {
                case FuncId::Exp: out += "exp"; break;
                case FuncId::Log: out += "log"; break;
                case FuncId::Sqrt: out += "sqrt"; break;
                case FuncId::Sin: out += "sin"; break;
                case FuncId::Cos: out += "cos"; break;
                case FuncId::AbsSmooth: out += "abs_smooth"; break;
            }
            out += '(';
            for (std::size_t i = 0; i < e.args.size(); ++i) {
                if (i) out += ", ";
                print_node(*e.args[i], 0, out);
            }
            out += ')';
            break;
        }
    }
    if (wrap) out += ')';
}

}  // namespace detail

inline std::string print_expr(const ExprPtr& e) {
    std::string out;
    detail::print_node(*e, 0, out);
    return out;
}

inline bool tree_equal(const ExprPtr& a, const ExprPtr& b) {
    if (a->kind != b->kind) return false;
    switch (a->kind) {
        case ExprKind::Number: return a->number == b->number;
        case ExprKind::VarT: return true;
        case ExprKind::VarX: return a->axis == b->axis;
        case ExprKind::Coeff: return a->name == b->name;
        case ExprKind::Neg: return tree_equal(a->lhs, b->lhs);
        case ExprKind::Call:
            if (a->func != b->func || a->args.size() != b->args.size()) return false;
            for (std::size_t i = 0; i < a->args.size(); ++i)
                if (!tree_equal(a->args[i], b->args[i])) return false;
            return true;
        default:
            return tree_equal(a->lhs, b->lhs) && tree_equal(a->rhs, b->rhs);
    }
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

using CoeffBindings = std::map<std::string, CoefficientField>;

namespace detail {

inline Dual2 eval_node(const Expr& e, const Point& x, double t,
                       const CoeffBindings& coeffs) {
    switch (e.kind) {
        case ExprKind::Number: return Dual2(e.number);
        case ExprKind::VarT: return Dual2::var_t(t);
        case ExprKind::VarX: return Dual2::var_x(x[e.axis], e.axis);
        case ExprKind::Coeff: {
            auto it = coeffs.find(e.name);
            if (it == coeffs.end())
                throw EvalError(e.offset, "unknown identifier '" + e.name + "'");
            return Dual2::coefficient(it->second.value(x), it->second.gradient(x));
        }
        case ExprKind::Neg: return -eval_node(*e.lhs, x, t, coeffs);
        case ExprKind::Add:
            return eval_node(*e.lhs, x, t, coeffs) + eval_node(*e.rhs, x, t, coeffs);
        case ExprKind::Sub:
            return eval_node(*e.lhs, x, t, coeffs) - eval_node(*e.rhs, x, t, coeffs);
        case ExprKind::Mul:
            return eval_node(*e.lhs, x, t, coeffs) * eval_node(*e.rhs, x, t, coeffs);
        case ExprKind::Div: {
            const Dual2 den = eval_node(*e.rhs, x, t, coeffs);
            if (den.v == 0.0) throw EvalError(e.offset, "division by zero");
            return eval_node(*e.lhs, x, t, coeffs) / den;
        }
        case ExprKind::Pow: {
            const Dual2 base = eval_node(*e.lhs, x, t, coeffs);
            if (e.rhs->kind == ExprKind::Number) {
                try {
                    return pow_const(base, e.rhs->number);
                } catch (const RangeError& err) {
                    throw EvalError(e.offset, err.what());
                }
            }
            const Dual2 expo = eval_node(*e.rhs, x, t, coeffs);
            if (base.v == 0.0) {
                if (expo.dt != 0.0)
                    throw EvalError(e.offset, "0^f(t) with t-dependent exponent");
                try {
                    return pow_const(base, expo.v);
                } catch (const RangeError& err) {
                    throw EvalError(e.offset, err.what());
                }
            }
            if (base.v < 0.0)
                throw EvalError(e.offset, "negative base with non-integer exponent");
            return exp(expo * log(base));
        }
        case ExprKind::Call: {
            const Dual2 u = eval_node(*e.args[0], x, t, coeffs);
            switch (e.func) {
                case FuncId::Exp: return exp(u);
                case FuncId::Log:
                    if (u.v <= 0.0)
                        throw EvalError(e.offset, "log of a non-positive value");
                    return log(u);
                case FuncId::Sqrt:
                    if (u.v < 0.0)
                        throw EvalError(e.offset, "sqrt of a negative value");
                    return sqrt(u);
                case FuncId::Sin: return sin(u);
                case FuncId::Cos: return cos(u);
                case FuncId::AbsSmooth: {
                    double delta = 1e-8;
                    if (e.args.size() == 2)
                        delta = eval_node(*e.args[1], x, t, coeffs).v;
                    return abs_smooth(u, delta);
                }
            }
            break;
        }
    }
    throw EvalError(e.offset, "malformed expression node");
}

inline void collect_coeff_names(const Expr& e, std::vector<std::string>& out) {
    switch (e.kind) {
        case ExprKind::Coeff: out.push_back(e.name); break;
        case ExprKind::Neg: collect_coeff_names(*e.lhs, out); break;
        case ExprKind::Add: case ExprKind::Sub: case ExprKind::Mul:
        case ExprKind::Div: case ExprKind::Pow:
            collect_coeff_names(*e.lhs, out);
            collect_coeff_names(*e.rhs, out);
            break;
        case ExprKind::Call:
            for (const auto& a : e.args) collect_coeff_names(*a, out);
            break;
        default: break;
    }
}

inline bool uses_var_x(const Expr& e) {
    switch (e.kind) {
        case ExprKind::VarX: return true;
        case ExprKind::Neg: return uses_var_x(*e.lhs);
        case ExprKind::Add: case ExprKind::Sub: case ExprKind::Mul:
        case ExprKind::Div: case ExprKind::Pow:
            return uses_var_x(*e.lhs) || uses_var_x(*e.rhs);
        case ExprKind::Call:
            for (const auto& a : e.args)
                if (uses_var_x(*a)) return true;
            return false;
        default: return false;
    }
}

}  // namespace detail

inline Dual2 eval_dual2(const ExprPtr& expr, const Point& x, double t,
                        const CoeffBindings& coeffs) {
    return detail::eval_node(*expr, x, t, coeffs);
}

// ---------------------------------------------------------------------------
// DSL-backed integrand
// ---------------------------------------------------------------------------

namespace detail {

class DslImpl final : public IntegrandImpl {
public:
    DslImpl(ExprPtr ast, CoeffBindings coeffs, double t0, bool smooth,
            bool force_quadratic, bool x_dep, double t_repr)
        : ast_(std::move(ast)), coeffs_(std::move(coeffs)), t0_(t0),
          smooth_(smooth), force_quadratic_(force_quadratic), x_dep_(x_dep),
          t_repr_(t_repr) {}

    IntegrandValues eval(const Point& x, double t) const override {
        IntegrandValues v;
        const double z = raw(x, 0.0).v;  // normalization g(x,0) = 0
        if (!smooth_) {
            const Dual2 d = raw(x, t);
            v.g = d.v - z;
            v.g_t = d.dt;
            v.g_tt = d.dtt;
            v.g_tx = d.dtx;
            return v;
        }
        const Dual2 k = raw(x, t0_);
        const double g0 = k.v - z;
        const double g1 = k.dt;
        const KnotSpline s = fit_knot_spline(g0, g1, t0_, force_quadratic_);
        if (t >= t0_) {
            const Dual2 d = raw(x, t);
            v.g = d.v - z + s.offset;
            v.g_t = d.dt;
            v.g_tt = d.dtt;
            v.g_tx = d.dtx;
            return v;
        }
        v.g = (s.A * t + s.B) * t * t;
        v.g_t = (3.0 * s.A * t + 2.0 * s.B) * t;
        v.g_tt = 6.0 * s.A * t + 2.0 * s.B;
        if (x_dep_) {
            const Dual2 z_full = raw(x, 0.0);
            for (int kk = 0; kk < kMaxDim; ++kk) {
                const double g0x = k.dx[kk] - z_full.dx[kk];
                const double g1x = k.dtx[kk];
                double dA = 0.0, dB = 0.0;
                if (s.cubic) {
                    dA = (g1x * t0_ - 2.0 * g0x) / (t0_ * t0_ * t0_);
                    dB = (3.0 * g0x - g1x * t0_) / (t0_ * t0_);
                } else {
                    dB = g1x / (2.0 * t0_);
                }
                v.g_tx[kk] = (3.0 * dA * t + 2.0 * dB) * t;
            }
        }
        return v;
    }

    bool x_dependent() const override { return x_dep_; }

    double gtt_at_zero(const Point& x) const override {
        if (smooth_) {
            const double z = raw(x, 0.0).v;
            const Dual2 k = raw(x, t0_);
            const KnotSpline s =
                fit_knot_spline(k.v - z, k.dt, t0_, force_quadratic_);
            return 2.0 * s.B;
        }
        return raw(x, 0.0).dtt;
    }

    double t_representable() const override { return t_repr_; }

    const ExprPtr& ast() const { return ast_; }

private:
    Dual2 raw(const Point& x, double t) const {
        return eval_node(*ast_, x, t, coeffs_);
    }

    ExprPtr ast_;
    CoeffBindings coeffs_;
    double t0_;
    bool smooth_;
    bool force_quadratic_;
    bool x_dep_;
    double t_repr_;
};

}  // namespace detail

/// Wrap a parsed expression as an integrand. Normalizes g(x,0) = 0, replaces
/// [0, t0] with the convex spline extension when the raw profile misbehaves
/// near the origin, and samples convexity (violations become warnings).
inline IntegrandSpec to_integrand(const ExprPtr& expr, const CoeffBindings& coeffs,
                                  double t0, const Box& domain) {
    if (t0 <= 0.0) throw InputError("t0 must be positive");
    // Every referenced coefficient must resolve.
    std::vector<std::string> names;
    detail::collect_coeff_names(*expr, names);
    for (const auto& n : names)
        if (coeffs.find(n) == coeffs.end())
            throw InputError("unbound coefficient '" + n + "' in expression");

    bool x_dep = detail::uses_var_x(*expr);
    for (const auto& n : names)
        if (!coeffs.at(n).is_constant()) x_dep = true;

    // Probe near the origin: a usable raw profile has finite value at 0,
    // vanishing first derivative there and sampled convexity on (0, t0).
    std::vector<Point> probes = {domain.center()};
    {
        Point c1 = domain.lo, c2 = domain.hi;
        probes.push_back(c1);
        probes.push_back(c2);
    }
    bool smooth = false;
    bool cubic_ok = true;
    for (const Point& px : probes) {
        double z;
        try {
            z = detail::eval_node(*expr, px, 0.0, coeffs).v;
        } catch (const EvalError& e) {
            throw InputError(std::string("g(x,0) not evaluable: ") + e.what());
        }
        if (!std::isfinite(z)) throw InputError("g(x,0) is not finite");
        try {
            const Dual2 near0 = detail::eval_node(*expr, px, 1e-7 * t0, coeffs);
            if (!std::isfinite(near0.dt) || !std::isfinite(near0.dtt) ||
                near0.dt < -1e-9 || near0.dtt < -1e-9)
                smooth = true;
        } catch (const EvalError&) {
            smooth = true;
        }
        for (int i = 1; i <= 16 && !smooth; ++i) {
            const Dual2 d = detail::eval_node(*expr, px, t0 * i / 16.0, coeffs);
            if (!std::isfinite(d.dtt) || d.dtt < -1e-10) smooth = true;
        }
        if (smooth) {
            const Dual2 k = detail::eval_node(*expr, px, t0, coeffs);
            if (!(k.dt > 0.0))
                throw InputError("profile is not increasing at the knot t0");
            if (!knot_cubic_is_convex(k.v - z, k.dt, t0)) cubic_ok = false;
        }
    }

    double t_repr = std::numeric_limits<double>::infinity();
    {
        const Point c = domain.center();
        for (double t = 1.0; t <= 1048576.0; t *= 2.0) {
            double val;
            try {
                val = detail::eval_node(*expr, c, t, coeffs).v;
            } catch (const EvalError&) {
                break;
            }
            if (!std::isfinite(val) || std::fabs(val) > 1e290) break;
            t_repr = t;
        }
        if (t_repr >= 1048576.0) t_repr = std::numeric_limits<double>::infinity();
    }

    auto impl = std::make_shared<detail::DslImpl>(expr, coeffs, t0, smooth,
                                                  !cubic_ok, x_dep, t_repr);
    std::vector<std::string> warnings;
    const double t_hi = std::min(impl->t_representable(), 1e3);
    detail::verify_profile(*impl, domain, t_hi, &warnings,
                           /*throw_on_nonconvex=*/false);
    return IntegrandSpec(Family::Custom, std::move(impl), t0, domain, BuiltinParams{},
                         std::move(warnings));
}

inline IntegrandSpec to_integrand(const std::string& text, const CoeffBindings& coeffs,
                                  double t0, const Box& domain) {
    return to_integrand(parse(text), coeffs, t0, domain);
}

/// Comparison profile from an expression in t alone (no x, no coefficients).
inline HProfile h_from_expr(const std::string& text, double t0 = 1.0) {
    ExprPtr ast = parse(text);
    std::vector<std::string> names;
    detail::collect_coeff_names(*ast, names);
    if (!names.empty() || detail::uses_var_x(*ast))
        throw InputError("h profile expression may reference only t");
    const Point origin{0.0, 0.0, 0.0};
    CoeffBindings none;
    const double z = detail::eval_node(*ast, origin, 0.0, none).v;
    HProfile p;
    p.name = text;
    p.t0 = t0;
    p.h = [ast, origin, z](double t) {
        CoeffBindings none_local;
        return detail::eval_node(*ast, origin, t, none_local).v - z;
    };
    p.hp = [ast, origin](double t) {
        CoeffBindings none_local;
        return detail::eval_node(*ast, origin, t, none_local).dt;
    };
    p.hpp = [ast, origin](double t) {
        CoeffBindings none_local;
        return detail::eval_node(*ast, origin, t, none_local).dtt;
    };
    for (double t = 1.0; t <= 1048576.0; t *= 2.0) {
        double val;
        try {
            val = p.h(t);
        } catch (const EvalError&) {
            p.t_representable = t / 2.0;
            break;
        }
        if (!std::isfinite(val) || std::fabs(val) > 1e290) {
            p.t_representable = t / 2.0;
            break;
        }
    }
    estimate_growth(p);
    return p;
}

}  // namespace gradbound
