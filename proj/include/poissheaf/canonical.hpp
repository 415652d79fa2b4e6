#ifndef POISSHEAF_CANONICAL_HPP
#define POISSHEAF_CANONICAL_HPP

#include "poissheaf/expr.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace poissheaf {

inline constexpr std::uint64_t kDefaultSeed = 0x9e3779b97f4a7c15ULL;
inline constexpr double kDefaultTolerance = 1e-9;
inline constexpr int kSamplePoints = 64;
inline constexpr double kBoundaryMargin = 1e-3;

struct CanonError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Polynomials over atoms. An atom is a variable x_i or a primitive applied to
// a canonicalized argument; canonical forms are quotients of expanded
// polynomials in these atoms with exact rational coefficients.
// ---------------------------------------------------------------------------

struct Atom {
    int var = 0;  // 1-based variable index; 0 means primitive atom
    Primitive prim = Primitive::Sin;
    ExprPtr arg;          // canonical argument, primitive atoms only
    std::string arg_key;  // printed canonical argument, identity + ordering
};

struct AtomLess {
    bool operator()(const Atom& a, const Atom& b) const {
        bool ap = a.var == 0, bp = b.var == 0;
        if (ap != bp) return bp;  // variables order before primitive atoms
        if (!ap) return a.var < b.var;
        if (a.arg_key != b.arg_key) return a.arg_key < b.arg_key;
        return static_cast<int>(a.prim) < static_cast<int>(b.prim);
    }
};

using Monomial = std::map<Atom, int, AtomLess>;  // exponents, all > 0

// Display order: lex-descending over the atom sequence, constant term last.
struct MonomialDisplayLess {
    bool operator()(const Monomial& a, const Monomial& b) const {
        auto ia = a.begin(), ib = b.begin();
        AtomLess less;
        while (ia != a.end() && ib != b.end()) {
            if (less(ia->first, ib->first)) return true;   // a has the earlier atom
            if (less(ib->first, ia->first)) return false;
            if (ia->second != ib->second) return ia->second > ib->second;
            ++ia;
            ++ib;
        }
        return ia != a.end();  // the longer tail displays first
    }
};

class Poly {
public:
    using Terms = std::map<Monomial, Rational, MonomialDisplayLess>;

    Poly() = default;
    explicit Poly(Rational c) {
        if (c != 0) terms_[Monomial{}] = std::move(c);
    }
    static Poly atom(Atom a) {
        Poly p;
        Monomial m;
        m[std::move(a)] = 1;
        p.terms_[std::move(m)] = Rational(1);
        return p;
    }

    const Terms& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }

    bool is_constant() const {
        return terms_.empty() || (terms_.size() == 1 && terms_.begin()->first.empty());
    }
    Rational constant_value() const {
        if (terms_.empty()) return Rational(0);
        return terms_.begin()->second;
    }

    /// Coefficient of the display-leading term (0 for the zero polynomial).
    Rational leading_coefficient() const {
        return terms_.empty() ? Rational(0) : terms_.begin()->second;
    }

    int total_degree() const {
        int d = 0;
        for (const auto& [m, c] : terms_) {
            int t = 0;
            for (const auto& [a, e] : m) t += e;
            d = std::max(d, t);
        }
        return d;
    }

    bool has_primitive_atoms() const {
        for (const auto& [m, c] : terms_)
            for (const auto& [a, e] : m)
                if (a.var == 0) return true;
        return false;
    }

    void add_term(const Monomial& m, const Rational& c) {
        auto it = terms_.find(m);
        if (it == terms_.end()) {
            if (c != 0) terms_.emplace(m, c);
        } else {
            it->second += c;
            if (it->second == 0) terms_.erase(it);
        }
    }

    friend Poly operator+(const Poly& a, const Poly& b) {
        Poly r = a;
        for (const auto& [m, c] : b.terms_) r.add_term(m, c);
        return r;
    }
    friend Poly operator-(const Poly& a, const Poly& b) {
        Poly r = a;
        for (const auto& [m, c] : b.terms_) r.add_term(m, -c);
        return r;
    }
    friend Poly operator*(const Poly& a, const Poly& b) {
        Poly r;
        for (const auto& [ma, ca] : a.terms_) {
            for (const auto& [mb, cb] : b.terms_) {
                Monomial m = ma;
                for (const auto& [atom, e] : mb) {
                    auto it = m.find(atom);
                    if (it == m.end()) m.emplace(atom, e);
                    else it->second += e;
                }
                r.add_term(m, ca * cb);
            }
        }
        return r;
    }
    Poly operator-() const {
        Poly r;
        for (const auto& [m, c] : terms_) r.terms_.emplace(m, -c);
        return r;
    }
    friend Poly operator*(const Rational& s, const Poly& p) {
        Poly r;
        if (s == 0) return r;
        for (const auto& [m, c] : p.terms_) r.terms_.emplace(m, s * c);
        return r;
    }

    Poly pow(int n) const {
        if (n < 0) throw std::invalid_argument("Poly::pow expects n >= 0");
        Poly r{Rational(1)};
        for (int i = 0; i < n; ++i) r = r * *this;
        return r;
    }

private:
    Terms terms_;
};

/// Canonical form of an expression: num/den with den display-monic, den == 1
/// folded away at rebuild time. No gcd reduction is performed; the zero test
/// only needs the numerator.
struct CanonForm {
    Poly num;
    Poly den{Rational(1)};

    bool is_zero() const { return num.is_zero(); }
    bool has_primitive_atoms() const {
        return num.has_primitive_atoms() || den.has_primitive_atoms();
    }

    void normalize() {
        if (den.is_zero()) throw CanonError("denominator canonicalizes to zero");
        if (num.is_zero()) {
            den = Poly{Rational(1)};
            return;
        }
        Rational lead = den.leading_coefficient();
        if (lead != 1) {
            Rational inv = Rational(1) / lead;
            num = inv * num;
            den = inv * den;
        }
        if (den.is_constant()) den = Poly{Rational(1)};
    }

    friend CanonForm operator+(const CanonForm& a, const CanonForm& b) {
        CanonForm r{a.num * b.den + b.num * a.den, a.den * b.den};
        r.normalize();
        return r;
    }
    friend CanonForm operator-(const CanonForm& a, const CanonForm& b) {
        CanonForm r{a.num * b.den - b.num * a.den, a.den * b.den};
        r.normalize();
        return r;
    }
    friend CanonForm operator*(const CanonForm& a, const CanonForm& b) {
        CanonForm r{a.num * b.num, a.den * b.den};
        r.normalize();
        return r;
    }
    friend CanonForm operator/(const CanonForm& a, const CanonForm& b) {
        if (b.num.is_zero()) throw CanonError("division by an expression that is identically zero");
        CanonForm r{a.num * b.den, a.den * b.num};
        r.normalize();
        return r;
    }
    CanonForm operator-() const { return CanonForm{-num, den}; }

    CanonForm pow(int n) const {
        if (n >= 0) {
            CanonForm r{num.pow(n), den.pow(n)};
            r.normalize();
            return r;
        }
        if (num.is_zero()) throw CanonError("negative power of an expression that is identically zero");
        CanonForm r{den.pow(-n), num.pow(-n)};
        r.normalize();
        return r;
    }
};

// ---------------------------------------------------------------------------
// Expr -> CanonForm -> Expr
// ---------------------------------------------------------------------------

inline ExprPtr canonicalize(const ExprPtr& e);

namespace detail {

inline CanonForm to_canon(const ExprPtr& e) {
    switch (e->kind()) {
        case ExprKind::Variable: {
            Atom a;
            a.var = e->var_index();
            return CanonForm{Poly::atom(std::move(a))};
        }
        case ExprKind::Constant:
            return CanonForm{Poly{e->value()}};
        case ExprKind::Sum: {
            CanonForm r{Poly{}};
            for (const auto& t : e->children()) r = r + to_canon(t);
            return r;
        }
        case ExprKind::Product: {
            CanonForm r{Poly{Rational(1)}};
            for (const auto& f : e->children()) r = r * to_canon(f);
            return r;
        }
        case ExprKind::Power:
            return to_canon(e->child(0)).pow(e->exponent());
        case ExprKind::Negate:
            return -to_canon(e->child(0));
        case ExprKind::Quotient:
            return to_canon(e->child(0)) / to_canon(e->child(1));
        case ExprKind::Primitive: {
            ExprPtr arg = canonicalize(e->child(0));
            // exact folds at the only rational point where these are rational
            if (arg->is_constant(Rational(0))) {
                switch (e->prim()) {
                    case Primitive::Sin: return CanonForm{Poly{}};
                    case Primitive::Cos: return CanonForm{Poly{Rational(1)}};
                    case Primitive::Exp: return CanonForm{Poly{Rational(1)}};
                }
            }
            Atom a;
            a.prim = e->prim();
            a.arg = arg;
            a.arg_key = print(arg);
            return CanonForm{Poly::atom(std::move(a))};
        }
    }
    throw std::logic_error("unreachable expr kind");
}

inline ExprPtr atom_to_expr(const Atom& a) {
    if (a.var > 0) return Expr::variable(a.var);
    return Expr::primitive(a.prim, a.arg);
}

inline ExprPtr poly_to_expr(const Poly& p) {
    if (p.is_zero()) return Expr::zero();
    std::vector<ExprPtr> terms;
    for (const auto& [m, c] : p.terms()) {
        std::vector<ExprPtr> factors;
        Rational coeff = c < 0 ? -c : c;
        if (coeff != 1 || m.empty()) factors.push_back(Expr::constant(coeff));
        for (const auto& [atom, e] : m) {
            ExprPtr base = atom_to_expr(atom);
            factors.push_back(e == 1 ? base : Expr::power(base, e));
        }
        ExprPtr term = Expr::product(std::move(factors));
        terms.push_back(c < 0 ? Expr::negate(term) : term);
    }
    return Expr::sum(std::move(terms));
}

inline ExprPtr canon_to_expr(const CanonForm& c) {
    ExprPtr num = poly_to_expr(c.num);
    if (c.den.is_constant()) return num;
    return Expr::quotient(num, poly_to_expr(c.den));
}

}  // namespace detail

/// Canonical form: polynomials expanded with display-ordered monomials and
/// collected rational coefficients; quotients kept as expanded num/den with
/// display-monic denominator. Idempotent.
inline ExprPtr canonicalize(const ExprPtr& e) {
    return detail::canon_to_expr(detail::to_canon(e));
}

inline bool is_canonically_zero(const ExprPtr& e) {
    return detail::to_canon(e).is_zero();
}

// ---------------------------------------------------------------------------
// Deterministic seeded sampling
// ---------------------------------------------------------------------------

/// Closed numeric sampling box, one (lo, hi) per coordinate.
using SampleBox = std::vector<std::pair<double, double>>;

/// Default interior sampling box for dimension n with corner index k: the
/// first k coordinates stay strictly positive.
inline SampleBox default_sample_box(int n, int k) {
    SampleBox box;
    for (int i = 0; i < n; ++i) {
        if (i < k) box.push_back({kBoundaryMargin, 2.0});
        else box.push_back({-1.0, 1.0});
    }
    return box;
}

namespace detail {

inline double next_unit_double(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace detail

/// `count` deterministic points inside the box, each coordinate at least
/// kBoundaryMargin away from the box faces.
inline std::vector<std::vector<double>> sample_points(const SampleBox& box,
                                                      std::uint64_t seed,
                                                      int count = kSamplePoints) {
    std::mt19937_64 rng(seed);
    std::vector<std::vector<double>> pts;
    pts.reserve(static_cast<std::size_t>(count));
    for (int j = 0; j < count; ++j) {
        std::vector<double> p;
        p.reserve(box.size());
        for (const auto& [lo, hi] : box) {
            double a = lo + kBoundaryMargin, b = hi - kBoundaryMargin;
            if (a > b) a = b = 0.5 * (lo + hi);
            p.push_back(a + (b - a) * detail::next_unit_double(rng));
        }
        pts.push_back(std::move(p));
    }
    return pts;
}

// ---------------------------------------------------------------------------
// Equality
// ---------------------------------------------------------------------------

enum class EqVerdict { ProvenEqual, SampledEqual, ProvenUnequal };

inline const char* to_string(EqVerdict v) {
    switch (v) {
        case EqVerdict::ProvenEqual: return "proven-equal";
        case EqVerdict::SampledEqual: return "sampled-equal";
        case EqVerdict::ProvenUnequal: return "proven-unequal";
    }
    return "?";
}

struct EqResult {
    bool equal = false;
    EqVerdict verdict = EqVerdict::ProvenUnequal;
    double worst_difference = 0.0;
};

struct EqualityOptions {
    std::uint64_t seed = kDefaultSeed;
    double tolerance = kDefaultTolerance;
    int points = kSamplePoints;
    std::optional<SampleBox> box;  // defaults to default_sample_box(dim, 0)
};

/// Structural equality of smooth functions: canonical-difference zero test for
/// the polynomial/rational fragment, deterministic interior sampling when
/// primitive atoms block a symbolic decision.
inline EqResult expr_equal(const ExprPtr& a, const ExprPtr& b,
                           const EqualityOptions& opts = {}) {
    CanonForm diff = detail::to_canon(a) - detail::to_canon(b);
    if (diff.is_zero()) return {true, EqVerdict::ProvenEqual, 0.0};
    if (!diff.has_primitive_atoms())
        return {false, EqVerdict::ProvenUnequal, 0.0};

    int dim = std::max(max_var_index(a), max_var_index(b));
    SampleBox box = opts.box ? *opts.box : default_sample_box(dim, 0);
    ExprPtr delta = detail::canon_to_expr(diff);
    double worst = 0.0;
    for (const auto& p : sample_points(box, opts.seed, opts.points)) {
        double d;
        try {
            d = std::abs(evaluate(delta, p));
        } catch (const EvalError&) {
            continue;  // pole of the shared denominator at this sample
        }
        worst = std::max(worst, d);
        if (worst > opts.tolerance)
            return {false, EqVerdict::ProvenUnequal, worst};
    }
    return {true, EqVerdict::SampledEqual, worst};
}

inline bool exprs_equal(const ExprPtr& a, const ExprPtr& b,
                        const EqualityOptions& opts = {}) {
    return expr_equal(a, b, opts).equal;
}

}  // namespace poissheaf

#endif
