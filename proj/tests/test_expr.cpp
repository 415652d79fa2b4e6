#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "poissheaf/canonical.hpp"

#include <map>
#include <random>
#include <vector>

using namespace poissheaf;

namespace {

// Independent expansion oracle: dense coefficient maps over exponent tuples,
// multiplied by brute-force convolution. Stays clear of the Poly machinery.
using OracleMono = std::vector<int>;  // exponent per variable
using OraclePoly = std::map<OracleMono, Rational>;

OraclePoly oracle_add(const OraclePoly& a, const OraclePoly& b) {
    OraclePoly r = a;
    for (const auto& [m, c] : b) {
        r[m] += c;
        if (r[m] == 0) r.erase(m);
    }
    return r;
}

OraclePoly oracle_mul(const OraclePoly& a, const OraclePoly& b) {
    OraclePoly r;
    for (const auto& [ma, ca] : a)
        for (const auto& [mb, cb] : b) {
            OracleMono m(ma.size());
            for (std::size_t i = 0; i < m.size(); ++i) m[i] = ma[i] + mb[i];
            r[m] += ca * cb;
            if (r[m] == 0) r.erase(m);
        }
    return r;
}

Rational oracle_eval(const OraclePoly& p, const std::vector<Rational>& x) {
    Rational s(0);
    for (const auto& [m, c] : p) {
        Rational t = c;
        for (std::size_t i = 0; i < m.size(); ++i)
            for (int e = 0; e < m[i]; ++e) t *= x[i];
        s += t;
    }
    return s;
}

ExprPtr random_poly_expr(std::mt19937_64& rng, int dim, int max_degree) {
    auto randint = [&](int lo, int hi) {
        return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
    };
    int terms = randint(1, 4);
    std::vector<ExprPtr> sum;
    for (int t = 0; t < terms; ++t) {
        std::vector<ExprPtr> factors{Expr::constant(Rational(randint(-5, 5)))};
        int deg = randint(0, max_degree);
        for (int d = 0; d < deg; ++d) factors.push_back(Expr::variable(randint(1, dim)));
        sum.push_back(Expr::product(std::move(factors)));
    }
    return Expr::sum(std::move(sum));
}

}  // namespace

TEST_CASE("parse builds the documented trees") {
    ExprPtr e = parse("x1*x2 + 3", 2);
    REQUIRE(e->kind() == ExprKind::Sum);
    CHECK(e->child(0)->kind() == ExprKind::Product);
    CHECK(e->child(1)->is_constant(Rational(3)));

    ExprPtr p = parse("(x1+x2)^2", 2);
    REQUIRE(p->kind() == ExprKind::Power);
    CHECK(p->exponent() == 2);
    CHECK(p->child(0)->kind() == ExprKind::Sum);
}

TEST_CASE("parse errors carry positions") {
    CHECK_THROWS_AS(parse("x1 +", 1), ParseError);
    CHECK_THROWS_AS(parse("x3", 2), ParseError);       // variable index > dimension
    CHECK_THROWS_AS(parse("y1", 2), ParseError);       // unknown identifier
    CHECK_THROWS_AS(parse("1.5", 1), ParseError);      // no float literals
    CHECK_THROWS_AS(parse("sin x1", 1), ParseError);
    try {
        parse("x1 + ) ", 1);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.position == 5);
    }
}

TEST_CASE("differentiate on the basic rules") {
    CHECK(print(canonicalize(differentiate(parse("x1^2", 1), 1))) == "2*x1");
    CHECK(print(canonicalize(differentiate(parse("x1", 2), 2))) == "0");
    CHECK(print(canonicalize(differentiate(parse("x1*x2", 2), 1))) == "x2");
    CHECK(print(canonicalize(differentiate(parse("1/x1", 1), 1))) == "-1/x1^2");
    CHECK(exprs_equal(differentiate(parse("sin(x1)", 1), 1), parse("cos(x1)", 1)));
}

TEST_CASE("differentiate agrees with central finite differences") {
    std::mt19937_64 rng(11);
    const double h = 1e-5;
    for (int trial = 0; trial < 30; ++trial) {
        ExprPtr e = random_poly_expr(rng, 3, 4);
        for (const auto& p : sample_points(default_sample_box(3, 0), kDefaultSeed + trial, 4)) {
            for (int v = 1; v <= 3; ++v) {
                std::vector<double> hi = p, lo = p;
                hi[static_cast<std::size_t>(v - 1)] += h;
                lo[static_cast<std::size_t>(v - 1)] -= h;
                double fd = (evaluate(e, hi) - evaluate(e, lo)) / (2 * h);
                double sym = evaluate(differentiate(e, v), p);
                double scale = std::max(1.0, std::abs(sym));
                CHECK(std::abs(fd - sym) / scale < 1e-6);
            }
        }
    }
}

TEST_CASE("canonicalize matches the expansion oracle") {
    // (x1+x2)^2 expanded by oracle convolution
    OraclePoly x1{{{1, 0}, Rational(1)}};
    OraclePoly x2{{{0, 1}, Rational(1)}};
    OraclePoly sum = oracle_add(x1, x2);
    OraclePoly square = oracle_mul(sum, sum);
    REQUIRE(square.size() == 3);
    CHECK(square[{2, 0}] == 1);
    CHECK(square[{1, 1}] == 2);
    CHECK(square[{0, 2}] == 1);
    CHECK(print(canonicalize(parse("(x1+x2)^2", 2))) == "x1^2 + 2*x1*x2 + x2^2");

    CHECK(print(canonicalize(parse("x1 - x1", 1))) == "0");
    CHECK(print(canonicalize(parse("2*(x1*3)", 1))) == "6*x1");
}

TEST_CASE("canonicalize agrees with the oracle on random products") {
    std::mt19937_64 rng(23);
    auto randint = [&](int lo, int hi) {
        return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
    };
    for (int trial = 0; trial < 20; ++trial) {
        // random (a+b)*(c+d) with monomial factors, expanded both ways
        OraclePoly oracle{{{0, 0, 0}, Rational(0)}};
        oracle.clear();
        std::vector<ExprPtr> sum_a, sum_b;
        OraclePoly pa, pb;
        for (int part = 0; part < 2; ++part) {
            int coeff = randint(-4, 4);
            if (coeff == 0) coeff = 2;
            OracleMono m{0, 0, 0};
            std::vector<ExprPtr> fac{Expr::constant(Rational(coeff))};
            int deg = randint(0, 3);
            for (int d = 0; d < deg; ++d) {
                int v = randint(1, 3);
                m[static_cast<std::size_t>(v - 1)] += 1;
                fac.push_back(Expr::variable(v));
            }
            (part == 0 ? pa : pb)[m] += Rational(coeff);
            (part == 0 ? sum_a : sum_b).push_back(Expr::product(std::move(fac)));
        }
        OraclePoly qa, qb;
        for (int part = 0; part < 2; ++part) {
            int coeff = randint(-4, 4);
            if (coeff == 0) coeff = 3;
            OracleMono m{0, 0, 0};
            std::vector<ExprPtr> fac{Expr::constant(Rational(coeff))};
            int deg = randint(0, 3);
            for (int d = 0; d < deg; ++d) {
                int v = randint(1, 3);
                m[static_cast<std::size_t>(v - 1)] += 1;
                fac.push_back(Expr::variable(v));
            }
            (part == 0 ? qa : qb)[m] += Rational(coeff);
            (part == 0 ? sum_a : sum_b).push_back(Expr::product(std::move(fac)));
        }
        OraclePoly expect = oracle_mul(oracle_add(pa, qa), oracle_add(pb, qb));
        ExprPtr expr = Expr::product({Expr::sum(sum_a), Expr::sum(sum_b)});
        ExprPtr canon = canonicalize(expr);
        // exact agreement at rational grid points
        for (int gx = -2; gx <= 2; ++gx)
            for (int gy = -2; gy <= 2; ++gy) {
                std::vector<Rational> x{Rational(gx), Rational(gy), Rational(gx + gy)};
                auto got = evaluate_exact(canon, x);
                REQUIRE(got.has_value());
                CHECK(*got == oracle_eval(expect, x));
            }
    }
}

TEST_CASE("canonicalize is idempotent on random polynomials") {
    std::mt19937_64 rng(37);
    for (int trial = 0; trial < 120; ++trial) {
        ExprPtr e = random_poly_expr(rng, 3, 4);
        ExprPtr once = canonicalize(e);
        ExprPtr twice = canonicalize(once);
        CHECK(print(once) == print(twice));
    }
}

TEST_CASE("differentiate commutes with sums") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 100; ++trial) {
        ExprPtr a = random_poly_expr(rng, 3, 4);
        ExprPtr b = random_poly_expr(rng, 3, 4);
        int v = 1 + static_cast<int>(rng() % 3);
        ExprPtr lhs = differentiate(Expr::sum({a, b}), v);
        ExprPtr rhs = Expr::sum({differentiate(a, v), differentiate(b, v)});
        CHECK(print(canonicalize(lhs)) == print(canonicalize(rhs)));
    }
}

TEST_CASE("parse of print is identity on canonical forms") {
    std::mt19937_64 rng(43);
    for (int trial = 0; trial < 100; ++trial) {
        ExprPtr canon = canonicalize(random_poly_expr(rng, 3, 4));
        CHECK(print(canonicalize(parse(print(canon), 3))) == print(canon));
    }
    // quotient canonical forms round-trip too
    ExprPtr q = canonicalize(parse("(x1^2+1)/(2*x1+4)", 1));
    CHECK(print(canonicalize(parse(print(q), 1))) == print(q));
}

TEST_CASE("evaluate") {
    std::vector<double> p23{2, 3};
    CHECK(evaluate(parse("x1*x2", 2), p23) == doctest::Approx(6));
    std::vector<double> origin{0, 0};
    CHECK(evaluate(parse("x1^2+1", 2), origin) == doctest::Approx(1));
    std::vector<double> zero1{0};
    CHECK_THROWS_AS(evaluate(parse("1/x1", 1), zero1), EvalError);

    auto exact = evaluate_exact(parse("x1^2/3", 1), {Rational(1, 2)});
    REQUIRE(exact.has_value());
    CHECK(*exact == Rational(1, 12));
}

TEST_CASE("expr_equal three-valued verdicts") {
    auto r1 = expr_equal(parse("(x1+x2)^2", 2), parse("x1^2+2*x1*x2+x2^2", 2));
    CHECK(r1.equal);
    CHECK(r1.verdict == EqVerdict::ProvenEqual);

    auto r2 = expr_equal(parse("x1", 2), parse("x2", 2));
    CHECK_FALSE(r2.equal);
    CHECK(r2.verdict == EqVerdict::ProvenUnequal);

    auto r3 = expr_equal(parse("sin(x1)^2 + cos(x1)^2", 1), parse("1", 1));
    CHECK(r3.equal);
    CHECK(r3.verdict == EqVerdict::SampledEqual);

    auto r4 = expr_equal(parse("sin(x1)", 1), parse("cos(x1)", 1));
    CHECK_FALSE(r4.equal);
}

TEST_CASE("sample points are deterministic and interior") {
    auto a = sample_points(default_sample_box(2, 1), kDefaultSeed);
    auto b = sample_points(default_sample_box(2, 1), kDefaultSeed);
    CHECK(a == b);
    CHECK(a.size() == kSamplePoints);
    for (const auto& p : a) {
        CHECK(p[0] >= 2 * kBoundaryMargin);  // corner coordinate strictly interior
        CHECK(p[0] <= 2.0);
        CHECK(std::abs(p[1]) <= 1.0);
    }
    auto c = sample_points(default_sample_box(2, 1), kDefaultSeed + 1);
    CHECK(a != c);
}
