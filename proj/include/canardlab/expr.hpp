#ifndef CANARDLAB_EXPR_HPP
#define CANARDLAB_EXPR_HPP

// Arithmetic expression trees over {x, y, eps, parameters} with exact
// symbolic differentiation and constant folding.  These hold the
// user-supplied right-hand sides f and g of the slow-fast system and feed
// every partial derivative the analysis needs.

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <charconv>
#include <memory>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace canardlab {

struct ParseError : std::runtime_error {
    std::size_t offset;
    ParseError(const std::string& msg, std::size_t off)
        : std::runtime_error(msg + " (at byte " + std::to_string(off) + ")"),
          offset(off) {}
};

struct EvalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Variable assignment used by Expr::evaluate.  Small and flat: systems here
// have at most a handful of variables, so linear search wins.
class Bindings {
public:
    void set(const std::string& name, double value) {
        for (auto& kv : kv_)
            if (kv.first == name) { kv.second = value; return; }
        kv_.emplace_back(name, value);
    }
    double get(const std::string& name) const {
        for (const auto& kv : kv_)
            if (kv.first == name) return kv.second;
        throw EvalError("unbound variable '" + name + "'");
    }
    bool has(const std::string& name) const {
        for (const auto& kv : kv_)
            if (kv.first == name) return true;
        return false;
    }
private:
    std::vector<std::pair<std::string, double>> kv_;
};

class Expr {
public:
    enum class Kind { Constant, Variable, Neg, Add, Sub, Mul, Div, Pow, Func };
    enum class Fn { Exp, Ln, Sin, Cos };

    Expr() : node_(constant_node(0.0)) {}

    static Expr constant(double v) { return Expr(constant_node(v)); }
    static Expr variable(const std::string& name) {
        auto n = std::make_shared<Node>();
        n->kind = Kind::Variable;
        n->name = name;
        return Expr(std::move(n));
    }

    // Smart constructors fold constants and strip 0/1 identities so that
    // repeated differentiation keeps trees bounded.
    friend Expr operator+(const Expr& a, const Expr& b) {
        if (a.is_const() && b.is_const()) return constant(a.value() + b.value());
        if (a.is_const(0.0)) return b;
        if (b.is_const(0.0)) return a;
        return Expr::binary(Kind::Add, a, b);
    }
    friend Expr operator-(const Expr& a, const Expr& b) {
        if (a.is_const() && b.is_const()) return constant(a.value() - b.value());
        if (b.is_const(0.0)) return a;
        if (a.is_const(0.0)) return -b;
        return Expr::binary(Kind::Sub, a, b);
    }
    friend Expr operator*(const Expr& a, const Expr& b) {
        if (a.is_const() && b.is_const()) return constant(a.value() * b.value());
        if (a.is_const(0.0) || b.is_const(0.0)) return constant(0.0);
        if (a.is_const(1.0)) return b;
        if (b.is_const(1.0)) return a;
        return Expr::binary(Kind::Mul, a, b);
    }
    friend Expr operator/(const Expr& a, const Expr& b) {
        if (a.is_const() && b.is_const() && b.value() != 0.0)
            return constant(a.value() / b.value());
        if (b.is_const(1.0)) return a;
        if (a.is_const(0.0) && !b.is_const(0.0)) return constant(0.0);
        return Expr::binary(Kind::Div, a, b);
    }
    friend Expr operator-(const Expr& a) {
        if (a.is_const()) return constant(-a.value());
        if (a.node_->kind == Kind::Neg) return Expr(a.node_->a);
        auto n = std::make_shared<Node>();
        n->kind = Kind::Neg;
        n->a = a.node_;
        return Expr(std::move(n));
    }
    Expr pow(std::int64_t e) const {
        if (e == 0) return constant(1.0);
        if (e == 1) return *this;
        if (is_const()) {
            double v = ipow(value(), e);
            if (std::isfinite(v)) return constant(v);
        }
        auto n = std::make_shared<Node>();
        n->kind = Kind::Pow;
        n->exponent = e;
        n->a = node_;
        return Expr(std::move(n));
    }
    static Expr apply(Fn fn, const Expr& a) {
        if (a.is_const()) {
            double v = eval_fn(fn, a.value());
            if (std::isfinite(v)) return constant(v);
        }
        auto n = std::make_shared<Node>();
        n->kind = Kind::Func;
        n->fn = fn;
        n->a = a.node_;
        return Expr(std::move(n));
    }

    Kind kind() const { return node_->kind; }

    double evaluate(const Bindings& b) const { return eval(node_.get(), b); }

    Expr differentiate(const std::string& var) const { return Expr(diff(node_.get(), var)); }

    std::set<std::string> variables() const {
        std::set<std::string> out;
        collect_vars(node_.get(), out);
        return out;
    }

    bool structurally_equal(const Expr& other) const {
        return equal(node_.get(), other.node_.get());
    }

    std::string str() const {
        std::string out;
        print(node_.get(), 0, out);
        return out;
    }

    bool is_const() const { return node_->kind == Kind::Constant; }
    bool is_const(double v) const { return is_const() && node_->value == v; }
    double value() const { return node_->value; }

private:
    struct Node;
    using NodePtr = std::shared_ptr<const Node>;
    struct Node {
        Kind kind = Kind::Constant;
        double value = 0.0;         // Constant
        std::string name;           // Variable
        Fn fn = Fn::Exp;            // Func
        std::int64_t exponent = 0;  // Pow
        NodePtr a, b;
    };

    explicit Expr(NodePtr n) : node_(std::move(n)) {}

    static NodePtr constant_node(double v) {
        auto n = std::make_shared<Node>();
        n->kind = Kind::Constant;
        n->value = v;
        return n;
    }
    static Expr binary(Kind k, const Expr& a, const Expr& b) {
        auto n = std::make_shared<Node>();
        n->kind = k;
        n->a = a.node_;
        n->b = b.node_;
        return Expr(std::move(n));
    }

    static double ipow(double base, std::int64_t e) {
        if (e < 0) {
            double d = ipow(base, -e);
            return 1.0 / d;
        }
        double r = 1.0, b = base;
        for (std::int64_t k = e; k > 0; k >>= 1) {
            if (k & 1) r *= b;
            b *= b;
        }
        return r;
    }
    static double eval_fn(Fn fn, double v) {
        switch (fn) {
            case Fn::Exp: return std::exp(v);
            case Fn::Ln: return std::log(v);
            case Fn::Sin: return std::sin(v);
            case Fn::Cos: return std::cos(v);
        }
        return 0.0;
    }
    static const char* fn_name(Fn fn) {
        switch (fn) {
            case Fn::Exp: return "exp";
            case Fn::Ln: return "ln";
            case Fn::Sin: return "sin";
            case Fn::Cos: return "cos";
        }
        return "?";
    }

    static double eval(const Node* n, const Bindings& b) {
        switch (n->kind) {
            case Kind::Constant: return n->value;
            case Kind::Variable: return b.get(n->name);
            case Kind::Neg: return -eval(n->a.get(), b);
            case Kind::Add: return eval(n->a.get(), b) + eval(n->b.get(), b);
            case Kind::Sub: return eval(n->a.get(), b) - eval(n->b.get(), b);
            case Kind::Mul: return eval(n->a.get(), b) * eval(n->b.get(), b);
            case Kind::Div: {
                double den = eval(n->b.get(), b);
                if (den == 0.0) throw EvalError("division by zero");
                return eval(n->a.get(), b) / den;
            }
            case Kind::Pow: {
                double base = eval(n->a.get(), b);
                if (base == 0.0 && n->exponent < 0)
                    throw EvalError("division by zero (negative power of zero)");
                return ipow(base, n->exponent);
            }
            case Kind::Func: {
                double v = eval(n->a.get(), b);
                if (n->fn == Fn::Ln && v <= 0.0)
                    throw EvalError("ln of non-positive argument");
                return eval_fn(n->fn, v);
            }
        }
        throw EvalError("corrupt expression node");
    }

    static NodePtr diff(const Node* n, const std::string& var) {
        auto E = [](NodePtr p) { return Expr(std::move(p)); };
        switch (n->kind) {
            case Kind::Constant: return constant_node(0.0);
            case Kind::Variable: return constant_node(n->name == var ? 1.0 : 0.0);
            case Kind::Neg: return (-E(diff(n->a.get(), var))).node_;
            case Kind::Add: return (E(diff(n->a.get(), var)) + E(diff(n->b.get(), var))).node_;
            case Kind::Sub: return (E(diff(n->a.get(), var)) - E(diff(n->b.get(), var))).node_;
            case Kind::Mul: {
                Expr a(n->a), b(n->b);
                return (E(diff(n->a.get(), var)) * b + a * E(diff(n->b.get(), var))).node_;
            }
            case Kind::Div: {
                Expr a(n->a), b(n->b);
                Expr da = E(diff(n->a.get(), var)), db = E(diff(n->b.get(), var));
                return ((da * b - a * db) / b.pow(2)).node_;
            }
            case Kind::Pow: {
                Expr a(n->a);
                Expr da = E(diff(n->a.get(), var));
                return (constant(static_cast<double>(n->exponent)) * a.pow(n->exponent - 1) * da).node_;
            }
            case Kind::Func: {
                Expr u(n->a);
                Expr du = E(diff(n->a.get(), var));
                switch (n->fn) {
                    case Fn::Exp: return (apply(Fn::Exp, u) * du).node_;
                    case Fn::Ln: return (du / u).node_;
                    case Fn::Sin: return (apply(Fn::Cos, u) * du).node_;
                    case Fn::Cos: return ((-apply(Fn::Sin, u)) * du).node_;
                }
            }
        }
        throw EvalError("corrupt expression node");
    }

    static void collect_vars(const Node* n, std::set<std::string>& out) {
        if (n->kind == Kind::Variable) out.insert(n->name);
        if (n->a) collect_vars(n->a.get(), out);
        if (n->b) collect_vars(n->b.get(), out);
    }

    static bool equal(const Node* x, const Node* y) {
        if (x == y) return true;
        if (x->kind != y->kind) return false;
        switch (x->kind) {
            case Kind::Constant: return x->value == y->value;
            case Kind::Variable: return x->name == y->name;
            case Kind::Neg: return equal(x->a.get(), y->a.get());
            case Kind::Pow:
                return x->exponent == y->exponent && equal(x->a.get(), y->a.get());
            case Kind::Func:
                return x->fn == y->fn && equal(x->a.get(), y->a.get());
            default:
                return equal(x->a.get(), y->a.get()) && equal(x->b.get(), y->b.get());
        }
    }

    // Precedence tiers for printing: 1 additive, 2 multiplicative,
    // 3 unary minus, 4 power, 5 atom.
    static int prec(const Node* n) {
        switch (n->kind) {
            case Kind::Add:
            case Kind::Sub: return 1;
            case Kind::Mul:
            case Kind::Div: return 2;
            case Kind::Neg: return 3;
            case Kind::Pow: return 4;
            case Kind::Constant:
                return n->value < 0 ? 3 : 5;  // "-5" reads like a unary minus
            default: return 5;
        }
    }
    static void format_double(double v, std::string& out) {
        char buf[40];
        auto r = std::snprintf(buf, sizeof buf, "%.17g", v);
        out.append(buf, buf + r);
    }
    static void print(const Node* n, int parent_prec, std::string& out) {
        int p = prec(n);
        bool parens = p < parent_prec;
        if (parens) out += '(';
        switch (n->kind) {
            case Kind::Constant:
                format_double(n->value, out);
                break;
            case Kind::Variable: out += n->name; break;
            case Kind::Neg:
                out += '-';
                print(n->a.get(), 3, out);
                break;
            case Kind::Add:
                print(n->a.get(), 1, out);
                out += " + ";
                print(n->b.get(), 2, out);
                break;
            case Kind::Sub:
                print(n->a.get(), 1, out);
                out += " - ";
                print(n->b.get(), 2, out);
                break;
            case Kind::Mul:
                print(n->a.get(), 2, out);
                out += "*";
                print(n->b.get(), 3, out);
                break;
            case Kind::Div:
                print(n->a.get(), 2, out);
                out += "/";
                print(n->b.get(), 3, out);
                break;
            case Kind::Pow:
                print(n->a.get(), 5, out);
                out += '^';
                out += std::to_string(n->exponent);
                break;
            case Kind::Func:
                out += fn_name(n->fn);
                out += '(';
                print(n->a.get(), 0, out);
                out += ')';
                break;
        }
        if (parens) out += ')';
    }

    NodePtr node_;
    friend class Parser;
};

// Recursive-descent parser for
//   expr   := term (("+"|"-") term)*
//   term   := unary (("*"|"/") unary)*
//   unary  := "-" unary | factor
//   factor := base ("^" int)?
//   base   := number | ident | func "(" expr ")" | "(" expr ")"
// Precedence: ^ binds above unary minus, which binds above * and /.
class Parser {
public:
    Parser(std::string_view text, const std::vector<std::string>* roster)
        : text_(text), roster_(roster) {}

    Expr run() {
        Expr e = parse_expr();
        skip_ws();
        if (pos_ != text_.size())
            throw ParseError("unexpected trailing input", pos_);
        return e;
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
    const std::vector<std::string>* roster_;

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }
    bool eat(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) { ++pos_; return true; }
        return false;
    }
    char peek() {
        skip_ws();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }

    Expr parse_expr() {
        Expr e = parse_term();
        for (;;) {
            if (eat('+')) e = e + parse_term();
            else if (eat('-')) e = e - parse_term();
            else return e;
        }
    }
    Expr parse_term() {
        Expr e = parse_unary();
        for (;;) {
            if (eat('*')) e = e * parse_unary();
            else if (eat('/')) e = e / parse_unary();
            else return e;
        }
    }
    Expr parse_unary() {
        if (eat('-')) return -parse_unary();
        return parse_factor();
    }
    Expr parse_factor() {
        Expr base = parse_base();
        skip_ws();
        if (eat('^')) return base.pow(parse_int());
        return base;
    }
    std::int64_t parse_int() {
        skip_ws();
        std::size_t start = pos_;
        if (pos_ < text_.size() && (text_[pos_] == '-' || text_[pos_] == '+')) ++pos_;
        std::size_t digits = pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        if (pos_ == digits)
            throw ParseError("expected integer exponent", start);
        if (pos_ < text_.size() && (text_[pos_] == '.' || text_[pos_] == 'e' || text_[pos_] == 'E'))
            throw ParseError("non-integer exponent", start);
        std::int64_t v = 0;
        auto res = std::from_chars(text_.data() + start, text_.data() + pos_, v);
        if (res.ec != std::errc())
            throw ParseError("bad integer exponent", start);
        return v;
    }
    Expr parse_base() {
        skip_ws();
        if (pos_ >= text_.size()) throw ParseError("unexpected end of input", pos_);
        char c = text_[pos_];
        if (c == '(') {
            std::size_t open = pos_;
            ++pos_;
            Expr e = parse_expr();
            if (!eat(')')) throw ParseError("unbalanced parenthesis", open);
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
        throw ParseError(std::string("unexpected character '") + c + "'", pos_);
    }
    Expr parse_number() {
        std::size_t start = pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        if (pos_ < text_.size() && text_[pos_] == '.') {
            ++pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        }
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t mark = pos_++;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
            if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_])))
                pos_ = mark;  // not an exponent, back off
            else
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        }
        double v = 0;
        auto res = std::from_chars(text_.data() + start, text_.data() + pos_, v);
        if (res.ec != std::errc() || res.ptr != text_.data() + pos_)
            throw ParseError("bad number literal", start);
        return Expr::constant(v);
    }
    Expr parse_ident() {
        std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        std::string name(text_.substr(start, pos_ - start));
        skip_ws();
        bool call = pos_ < text_.size() && text_[pos_] == '(';
        if (name == "exp" || name == "ln" || name == "sin" || name == "cos") {
            if (!call) throw ParseError("function name '" + name + "' used as variable", start);
            ++pos_;
            Expr arg = parse_expr();
            if (!eat(')')) throw ParseError("unbalanced parenthesis in call", start);
            Expr::Fn fn = name == "exp" ? Expr::Fn::Exp
                        : name == "ln"  ? Expr::Fn::Ln
                        : name == "sin" ? Expr::Fn::Sin
                                        : Expr::Fn::Cos;
            return Expr::apply(fn, arg);
        }
        if (call) throw ParseError("unknown function '" + name + "'", start);
        if (roster_) {
            bool known = false;
            for (const auto& r : *roster_)
                if (r == name) { known = true; break; }
            if (!known) throw ParseError("unknown identifier '" + name + "'", start);
        }
        return Expr::variable(name);
    }
};

inline Expr parse(std::string_view text) {
    return Parser(text, nullptr).run();
}
inline Expr parse(std::string_view text, const std::vector<std::string>& roster) {
    return Parser(text, &roster).run();
}

// Repeated symbolic differentiation in the listed order, then evaluation.
inline double partial(const Expr& e, const std::vector<std::string>& vars, const Bindings& at) {
    if (vars.empty()) throw EvalError("partial: empty variable list");
    Expr d = e;
    for (const auto& v : vars) d = d.differentiate(v);
    return d.evaluate(at);
}

}  // namespace canardlab

#endif
