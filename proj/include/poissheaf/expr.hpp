#ifndef POISSHEAF_EXPR_HPP
#define POISSHEAF_EXPR_HPP

#include "poissheaf/rational.hpp"

#include <cctype>
#include <cmath>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace poissheaf {

enum class ExprKind {
    Variable,   // x1..xn, 1-based index
    Constant,   // exact rational
    Sum,        // n-ary
    Product,    // n-ary
    Power,      // integer exponent
    Negate,
    Quotient,
    Primitive,  // sin | cos | exp applied to one argument
};

enum class Primitive { Sin, Cos, Exp };

inline const char* primitive_name(Primitive p) {
    switch (p) {
        case Primitive::Sin: return "sin";
        case Primitive::Cos: return "cos";
        case Primitive::Exp: return "exp";
    }
    return "?";
}

class Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct EvalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Immutable symbolic expression tree. Shared freely across threads.
class Expr {
public:
    static ExprPtr variable(int index) {
        if (index < 1) throw std::invalid_argument("variable index must be >= 1");
        Expr e(ExprKind::Variable);
        e.var_index_ = index;
        return wrap(std::move(e));
    }

    static ExprPtr constant(Rational value) {
        Expr e(ExprKind::Constant);
        e.value_ = std::move(value);
        return wrap(std::move(e));
    }

    static ExprPtr zero() { return constant(Rational(0)); }
    static ExprPtr one() { return constant(Rational(1)); }

    static ExprPtr sum(std::vector<ExprPtr> terms) {
        if (terms.empty()) return zero();
        if (terms.size() == 1) return terms.front();
        Expr e(ExprKind::Sum);
        e.children_ = std::move(terms);
        return wrap(std::move(e));
    }

    static ExprPtr product(std::vector<ExprPtr> factors) {
        if (factors.empty()) return one();
        if (factors.size() == 1) return factors.front();
        Expr e(ExprKind::Product);
        e.children_ = std::move(factors);
        return wrap(std::move(e));
    }

    static ExprPtr power(ExprPtr base, int exponent) {
        Expr e(ExprKind::Power);
        e.children_ = {std::move(base)};
        e.exponent_ = exponent;
        return wrap(std::move(e));
    }

    static ExprPtr negate(ExprPtr operand) {
        Expr e(ExprKind::Negate);
        e.children_ = {std::move(operand)};
        return wrap(std::move(e));
    }

    static ExprPtr quotient(ExprPtr num, ExprPtr den) {
        if (den->kind() == ExprKind::Constant && den->value() == 0)
            throw std::invalid_argument("quotient denominator is the literal zero");
        Expr e(ExprKind::Quotient);
        e.children_ = {std::move(num), std::move(den)};
        return wrap(std::move(e));
    }

    static ExprPtr primitive(Primitive prim, ExprPtr arg) {
        Expr e(ExprKind::Primitive);
        e.prim_ = prim;
        e.children_ = {std::move(arg)};
        return wrap(std::move(e));
    }

    ExprKind kind() const { return kind_; }
    int var_index() const { return var_index_; }
    const Rational& value() const { return value_; }
    int exponent() const { return exponent_; }
    Primitive prim() const { return prim_; }
    const std::vector<ExprPtr>& children() const { return children_; }
    const ExprPtr& child(std::size_t i) const { return children_[i]; }

    bool is_constant(const Rational& v) const {
        return kind_ == ExprKind::Constant && value_ == v;
    }

private:
    explicit Expr(ExprKind kind) : kind_(kind) {}
    static ExprPtr wrap(Expr&& e) { return std::make_shared<const Expr>(std::move(e)); }

    ExprKind kind_;
    int var_index_ = 0;
    Rational value_;
    int exponent_ = 0;
    Primitive prim_ = Primitive::Sin;
    std::vector<ExprPtr> children_;

public:
    // std::make_shared needs a public constructor path
    Expr(Expr&&) = default;
};

/// Largest variable index occurring in the tree (0 for closed expressions).
inline int max_var_index(const ExprPtr& e) {
    if (e->kind() == ExprKind::Variable) return e->var_index();
    int m = 0;
    for (const auto& c : e->children()) m = std::max(m, max_var_index(c));
    return m;
}

inline bool contains_primitive(const ExprPtr& e) {
    if (e->kind() == ExprKind::Primitive) return true;
    for (const auto& c : e->children())
        if (contains_primitive(c)) return true;
    return false;
}

// ---------------------------------------------------------------------------
// Printing. Canonical forms printed here are the CLI interchange format and
// must re-parse to the same canonical form.
// ---------------------------------------------------------------------------

namespace detail {

// precedence: 1 sum, 2 product/quotient, 3 unary minus, 4 power, 5 atom
inline void print_rec(const ExprPtr& e, std::string& out, int parent_prec);

inline void print_child(const ExprPtr& e, std::string& out, int prec, int parent_prec) {
    if (prec < parent_prec) {
        out += '(';
        print_rec(e, out, 0);
        out += ')';
    } else {
        print_rec(e, out, parent_prec);
    }
}

inline void print_rec(const ExprPtr& e, std::string& out, int parent_prec) {
    switch (e->kind()) {
        case ExprKind::Variable:
            out += 'x';
            out += std::to_string(e->var_index());
            break;
        case ExprKind::Constant: {
            const Rational& v = e->value();
            bool needs_paren = (v < 0 || !is_integer(v)) && parent_prec >= 2;
            if (needs_paren) out += '(';
            out += to_string(v);
            if (needs_paren) out += ')';
            break;
        }
        case ExprKind::Sum: {
            if (parent_prec > 1) out += '(';
            bool first = true;
            for (const auto& t : e->children()) {
                if (!first && t->kind() == ExprKind::Negate) {
                    out += " - ";
                    print_child(t->child(0), out, 2, 2);
                } else {
                    if (!first) out += " + ";
                    print_child(t, out, first ? 1 : 2, first ? 1 : 2);
                }
                first = false;
            }
            if (parent_prec > 1) out += ')';
            break;
        }
        case ExprKind::Product: {
            bool first = true;
            for (const auto& f : e->children()) {
                if (!first) out += '*';
                print_child(f, out, 2, 2);
                first = false;
            }
            break;
        }
        case ExprKind::Quotient: {
            const ExprPtr& num = e->child(0);
            // hoist the sign of a negated numerator when no enclosing
            // operator binds tighter than addition
            if (parent_prec <= 1 && num->kind() == ExprKind::Negate) {
                out += '-';
                print_child(num->child(0), out, 2, 2);
            } else if (parent_prec <= 1 && num->kind() == ExprKind::Constant &&
                       num->value() < 0) {
                out += '-';
                print_child(Expr::constant(-num->value()), out, 2, 2);
            } else {
                print_child(num, out, 2, 2);
            }
            out += '/';
            print_child(e->child(1), out, 4, 4);
            break;
        }
        case ExprKind::Negate:
            if (parent_prec > 1) out += '(';
            out += '-';
            print_child(e->child(0), out, 2, 2);
            if (parent_prec > 1) out += ')';
            break;
        case ExprKind::Power:
            print_child(e->child(0), out, 5, 5);
            out += '^';
            out += std::to_string(e->exponent());
            break;
        case ExprKind::Primitive:
            out += primitive_name(e->prim());
            out += '(';
            print_rec(e->child(0), out, 0);
            out += ')';
            break;
    }
}

}  // namespace detail

inline std::string print(const ExprPtr& e) {
    std::string out;
    detail::print_rec(e, out, 0);
    return out;
}

// ---------------------------------------------------------------------------
// Parsing. Infix grammar over + - * / ^, parentheses, sin/cos/exp, integer
// literals and variables x1..xn (see docs/grammar.md).
// ---------------------------------------------------------------------------

struct ParseError : std::runtime_error {
    ParseError(const std::string& msg, std::size_t pos)
        : std::runtime_error(msg + " (at position " + std::to_string(pos) + ")"),
          position(pos) {}
    std::size_t position;
};

namespace detail {

class Parser {
public:
    Parser(std::string_view text, int dimension) : text_(text), dim_(dimension) {}

    ExprPtr parse() {
        ExprPtr e = parse_sum();
        skip_ws();
        if (pos_ != text_.size()) throw ParseError("unexpected trailing input", pos_);
        return e;
    }

private:
    ExprPtr parse_sum() {
        ExprPtr lhs = parse_term();
        for (;;) {
            skip_ws();
            if (accept('+')) {
                std::vector<ExprPtr> terms{lhs, parse_term()};
                lhs = Expr::sum(std::move(terms));
            } else if (accept('-')) {
                std::vector<ExprPtr> terms{lhs, Expr::negate(parse_term())};
                lhs = Expr::sum(std::move(terms));
            } else {
                return lhs;
            }
        }
    }

    ExprPtr parse_term() {
        ExprPtr lhs = parse_unary();
        for (;;) {
            skip_ws();
            if (accept('*')) {
                lhs = Expr::product({lhs, parse_unary()});
            } else if (accept('/')) {
                lhs = Expr::quotient(lhs, parse_unary());
            } else {
                return lhs;
            }
        }
    }

    ExprPtr parse_unary() {
        skip_ws();
        if (accept('-')) return Expr::negate(parse_unary());
        return parse_power();
    }

    ExprPtr parse_power() {
        ExprPtr base = parse_atom();
        skip_ws();
        if (accept('^')) {
            skip_ws();
            bool neg = accept('-');
            std::size_t at = pos_;
            if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_])))
                throw ParseError("expected integer exponent after '^'", at);
            long exp = 0;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                exp = exp * 10 + (text_[pos_] - '0');
                if (exp > 1000) throw ParseError("exponent too large", at);
                ++pos_;
            }
            return Expr::power(base, static_cast<int>(neg ? -exp : exp));
        }
        return base;
    }

    ExprPtr parse_atom() {
        skip_ws();
        if (pos_ >= text_.size()) throw ParseError("unexpected end of input", pos_);
        char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            ExprPtr e = parse_sum();
            skip_ws();
            if (!accept(')')) throw ParseError("expected ')'", pos_);
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t start = pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
            if (pos_ < text_.size() && text_[pos_] == '.')
                throw ParseError("floating-point literals are not accepted", pos_);
            return Expr::constant(Rational(std::string(text_.substr(start, pos_ - start))));
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            std::size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])))) ++pos_;
            std::string word(text_.substr(start, pos_ - start));
            if (word.size() >= 2 && word[0] == 'x' &&
                std::isdigit(static_cast<unsigned char>(word[1]))) {
                for (std::size_t i = 1; i < word.size(); ++i)
                    if (!std::isdigit(static_cast<unsigned char>(word[i])))
                        throw ParseError("malformed variable '" + word + "'", start);
                int idx = std::stoi(word.substr(1));
                if (idx < 1 || idx > dim_)
                    throw ParseError("variable '" + word + "' outside dimension " +
                                         std::to_string(dim_), start);
                return Expr::variable(idx);
            }
            Primitive prim;
            if (word == "sin") prim = Primitive::Sin;
            else if (word == "cos") prim = Primitive::Cos;
            else if (word == "exp") prim = Primitive::Exp;
            else throw ParseError("unknown identifier '" + word + "'", start);
            skip_ws();
            if (!accept('(')) throw ParseError("expected '(' after " + word, pos_);
            ExprPtr arg = parse_sum();
            skip_ws();
            if (!accept(')')) throw ParseError("expected ')'", pos_);
            return Expr::primitive(prim, arg);
        }
        throw ParseError(std::string("unexpected character '") + c + "'", pos_);
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }
    bool accept(char c) {
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    std::string_view text_;
    int dim_;
    std::size_t pos_ = 0;
};

}  // namespace detail

inline ExprPtr parse(std::string_view text, int dimension) {
    return detail::Parser(text, dimension).parse();
}

// ---------------------------------------------------------------------------
// Differentiation: standard sum/product/chain/power rules, exact.
// ---------------------------------------------------------------------------

inline ExprPtr differentiate(const ExprPtr& e, int var) {
    switch (e->kind()) {
        case ExprKind::Variable:
            return e->var_index() == var ? Expr::one() : Expr::zero();
        case ExprKind::Constant:
            return Expr::zero();
        case ExprKind::Sum: {
            std::vector<ExprPtr> terms;
            terms.reserve(e->children().size());
            for (const auto& t : e->children()) terms.push_back(differentiate(t, var));
            return Expr::sum(std::move(terms));
        }
        case ExprKind::Product: {
            std::vector<ExprPtr> terms;
            const auto& fs = e->children();
            for (std::size_t i = 0; i < fs.size(); ++i) {
                std::vector<ExprPtr> factors = fs;
                factors[i] = differentiate(fs[i], var);
                terms.push_back(Expr::product(std::move(factors)));
            }
            return Expr::sum(std::move(terms));
        }
        case ExprKind::Power: {
            int n = e->exponent();
            if (n == 0) return Expr::zero();
            return Expr::product({Expr::constant(Rational(n)),
                                  Expr::power(e->child(0), n - 1),
                                  differentiate(e->child(0), var)});
        }
        case ExprKind::Negate:
            return Expr::negate(differentiate(e->child(0), var));
        case ExprKind::Quotient: {
            const auto& u = e->child(0);
            const auto& v = e->child(1);
            ExprPtr num = Expr::sum({Expr::product({differentiate(u, var), v}),
                                     Expr::negate(Expr::product({u, differentiate(v, var)}))});
            return Expr::quotient(num, Expr::power(v, 2));
        }
        case ExprKind::Primitive: {
            const auto& a = e->child(0);
            ExprPtr outer;
            switch (e->prim()) {
                case Primitive::Sin: outer = Expr::primitive(Primitive::Cos, a); break;
                case Primitive::Cos: outer = Expr::negate(Expr::primitive(Primitive::Sin, a)); break;
                case Primitive::Exp: outer = Expr::primitive(Primitive::Exp, a); break;
            }
            return Expr::product({outer, differentiate(a, var)});
        }
    }
    throw std::logic_error("unreachable expr kind");
}

// ---------------------------------------------------------------------------
// Evaluation.
// ---------------------------------------------------------------------------

inline double evaluate(const ExprPtr& e, std::span<const double> p) {
    switch (e->kind()) {
        case ExprKind::Variable: {
            int i = e->var_index();
            if (i > static_cast<int>(p.size()))
                throw EvalError("point dimension " + std::to_string(p.size()) +
                                " too small for variable x" + std::to_string(i));
            return p[static_cast<std::size_t>(i - 1)];
        }
        case ExprKind::Constant:
            return to_double(e->value());
        case ExprKind::Sum: {
            double s = 0;
            for (const auto& t : e->children()) s += evaluate(t, p);
            return s;
        }
        case ExprKind::Product: {
            double s = 1;
            for (const auto& f : e->children()) s *= evaluate(f, p);
            return s;
        }
        case ExprKind::Power: {
            double b = evaluate(e->child(0), p);
            if (e->exponent() < 0 && b == 0.0) throw EvalError("division by zero in negative power");
            return std::pow(b, e->exponent());
        }
        case ExprKind::Negate:
            return -evaluate(e->child(0), p);
        case ExprKind::Quotient: {
            double d = evaluate(e->child(1), p);
            if (d == 0.0) throw EvalError("division by zero");
            return evaluate(e->child(0), p) / d;
        }
        case ExprKind::Primitive: {
            double a = evaluate(e->child(0), p);
            switch (e->prim()) {
                case Primitive::Sin: return std::sin(a);
                case Primitive::Cos: return std::cos(a);
                case Primitive::Exp: return std::exp(a);
            }
        }
    }
    throw std::logic_error("unreachable expr kind");
}

/// Exact evaluation over rational points. Returns nullopt when a primitive
/// with non-zero argument blocks exactness; throws EvalError on poles.
inline std::optional<Rational> evaluate_exact(const ExprPtr& e,
                                              const std::vector<Rational>& p) {
    switch (e->kind()) {
        case ExprKind::Variable: {
            int i = e->var_index();
            if (i > static_cast<int>(p.size())) throw EvalError("dimension mismatch");
            return p[static_cast<std::size_t>(i - 1)];
        }
        case ExprKind::Constant:
            return e->value();
        case ExprKind::Sum: {
            Rational s(0);
            for (const auto& t : e->children()) {
                auto v = evaluate_exact(t, p);
                if (!v) return std::nullopt;
                s += *v;
            }
            return s;
        }
        case ExprKind::Product: {
            Rational s(1);
            for (const auto& f : e->children()) {
                auto v = evaluate_exact(f, p);
                if (!v) return std::nullopt;
                s *= *v;
            }
            return s;
        }
        case ExprKind::Power: {
            auto b = evaluate_exact(e->child(0), p);
            if (!b) return std::nullopt;
            int n = e->exponent();
            if (n < 0 && *b == 0) throw EvalError("division by zero in negative power");
            Rational r(1);
            Rational base = n < 0 ? Rational(1) / *b : *b;
            for (int i = 0; i < std::abs(n); ++i) r *= base;
            return r;
        }
        case ExprKind::Negate: {
            auto v = evaluate_exact(e->child(0), p);
            if (!v) return std::nullopt;
            return -*v;
        }
        case ExprKind::Quotient: {
            auto d = evaluate_exact(e->child(1), p);
            if (!d) return std::nullopt;
            if (*d == 0) throw EvalError("division by zero");
            auto n = evaluate_exact(e->child(0), p);
            if (!n) return std::nullopt;
            return *n / *d;
        }
        case ExprKind::Primitive: {
            auto a = evaluate_exact(e->child(0), p);
            if (!a || *a != 0) return std::nullopt;
            switch (e->prim()) {
                case Primitive::Sin: return Rational(0);
                case Primitive::Cos: return Rational(1);
                case Primitive::Exp: return Rational(1);
            }
        }
    }
    throw std::logic_error("unreachable expr kind");
}

}  // namespace poissheaf

#endif
