#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "poissheaf/sheaf.hpp"

#include <random>

using namespace poissheaf;

namespace {

Box box1(const char* lo, const char* hi) {
    return Box{{parse_rational(lo), parse_rational(hi)}};
}

// nested boxes W < V < U on the half-line model R^1_1
OpenLattice nested_lattice() {
    ModelSpace s(1, 1);
    OpenLattice l(s);
    l.add_open("U", Region{s, {box1("0", "4")}});
    l.add_open("V", Region{s, {box1("0", "3")}});
    l.add_open("W", Region{s, {box1("0", "2")}});
    l.declare_inclusion("V", "U");
    l.declare_inclusion("W", "V");
    return l;
}

// the two-box cover used throughout: U = A u B in R^2_1
OpenLattice twobox_lattice() {
    ModelSpace s(2, 1);
    OpenLattice l(s);
    auto region = [&](const char* lo, const char* hi) {
        return Region{s, {{{parse_rational(lo), parse_rational(hi)},
                           {Rational(-2), Rational(2)}}}};
    };
    l.add_open("U", region("0", "3"));
    l.add_open("A", region("0", "2"));
    l.add_open("B", region("1", "3"));
    l.add_open("AB", region("1", "2"));
    l.declare_inclusion("A", "U");
    l.declare_inclusion("B", "U");
    l.declare_inclusion("AB", "A");
    l.declare_inclusion("AB", "B");
    l.declare_inclusion("AB", "U");
    l.declare_intersection("A", "B", "AB");
    return l;
}

FunctionPresheaf twobox_presheaf() {
    OpenLattice l = twobox_lattice();
    return FunctionPresheaf{l, l.ambient(), {}};
}

}  // namespace

TEST_CASE("restriction basics") {
    OpenLattice l = nested_lattice();
    FunctionPresheaf p{l, l.ambient(), {}};
    Section s{parse("x1^2", 1), "U"};

    Section r = restrict_section(p, s, "V");
    CHECK(r.domain == "V");
    CHECK(print(r.expr) == "x1^2");

    CHECK_THROWS_AS(restrict_section(p, Section{parse("x1^2", 1), "V"}, "U"),
                    InclusionError);

    // transitive closure: W <= U follows from W <= V <= U
    Section via = restrict_section(p, restrict_section(p, s, "V"), "W");
    Section direct = restrict_section(p, s, "W");
    CHECK(exprs_equal(via.expr, direct.expr));
}

TEST_CASE("presheaf composition holds on honest lattices") {
    OpenLattice l = nested_lattice();
    FunctionPresheaf p{l, l.ambient(), {}};
    std::vector<Section> sections{{parse("x1 + 1", 1), "U"}, {parse("x1^3", 1), "U"}};
    Report r = check_presheaf_composition(p, sections);
    CHECK(r.all_pass());
    CHECK(r.pass_count() > 0);
}

TEST_CASE("single-open lattice passes vacuously") {
    ModelSpace s(1, 0);
    OpenLattice l(s);
    l.add_open("U", full_region(s));
    FunctionPresheaf p{l, l.ambient(), {}};
    Report r = check_presheaf_composition(p, {{parse("x1", 1), "U"}});
    CHECK(r.all_pass());
}

TEST_CASE("corrupted restriction table is reported with the chain") {
    OpenLattice l = nested_lattice();
    FunctionPresheaf p{l, l.ambient(), {}};
    p.restriction_twists[{"U", "V"}] = Substitution{{1, parse("x1 + 1", 1)}};
    Report r = check_presheaf_composition(p, {{parse("x1", 1), "U"}});
    CHECK_FALSE(r.all_pass());
    bool names_chain = false;
    for (const auto& f : r.findings)
        if (f.verdict == "FAIL" && f.subject.find("U>=V>=W") != std::string::npos)
            names_chain = true;
    CHECK(names_chain);
}

TEST_CASE("locality") {
    FunctionPresheaf p = twobox_presheaf();
    std::vector<std::string> cover{"A", "B"};

    CHECK(check_locality(p, cover, "U", Section{Expr::zero(), "U"}));
    // nonzero restrictions: hypothesis fails, vacuously true
    CHECK(check_locality(p, cover, "U", Section{parse("x1", 2), "U"}));
    // unsimplified zero canonicalizes to zero
    CHECK(check_locality(p, cover, "U", Section{parse("x1*0", 2), "U"}));

    // a non-cover is detected
    CHECK_THROWS_AS(check_locality(p, {"A"}, "U", Section{Expr::zero(), "U"}),
                    SheafError);
}

TEST_CASE("gluing") {
    FunctionPresheaf p = twobox_presheaf();
    std::vector<std::string> cover{"A", "B"};

    SUBCASE("identical parts glue") {
        std::vector<Section> parts{{parse("x1", 2), "A"}, {parse("x1", 2), "B"}};
        Section glued = glue(p, cover, "U", parts);
        CHECK(glued.domain == "U");
        CHECK(exprs_equal(glued.expr, parse("x1", 2)));
    }

    SUBCASE("constant offset is rejected naming the pair") {
        std::vector<Section> parts{{parse("x1", 2), "A"}, {parse("x1 + 1", 2), "B"}};
        try {
            glue(p, cover, "U", parts);
            FAIL("expected GlueError");
        } catch (const GlueError& e) {
            CHECK(e.member_a == "A");
            CHECK(e.member_b == "B");
        }
    }

    SUBCASE("factored and expanded forms glue") {
        std::vector<Section> parts{{parse("(x1+x2)^2", 2), "A"},
                                   {parse("x1^2+2*x1*x2+x2^2", 2), "B"}};
        Section glued = glue(p, cover, "U", parts);
        CHECK(exprs_equal(glued.expr, parse("(x1+x2)^2", 2)));
    }

    SUBCASE("gluing is unique") {
        std::vector<Section> parts{{parse("(x1+x2)^2", 2), "A"},
                                   {parse("x1^2+2*x1*x2+x2^2", 2), "B"}};
        std::vector<Section> swapped{{parse("x1^2+2*x1*x2+x2^2", 2), "A"},
                                     {parse("(x1+x2)^2", 2), "B"}};
        Section a = glue(p, cover, "U", parts);
        Section b = glue(p, cover, "U", swapped);
        CHECK(exprs_equal(a.expr, b.expr));
    }
}

TEST_CASE("equalizer exactness on probes") {
    FunctionPresheaf p = twobox_presheaf();
    std::vector<std::string> cover{"A", "B"};
    std::vector<Section> probes{{parse("0", 2), "U"},
                                {parse("x1", 2), "U"},
                                {parse("x1^2", 2), "U"}};
    Report r = check_equalizer(p, "U", cover, probes);
    CHECK(r.all_pass());

    // single-member cover: trivially exact
    Report r1 = check_equalizer(p, "U", {"U"}, probes);
    CHECK(r1.all_pass());
}

TEST_CASE("germs, residues and the maximal ideal") {
    FunctionPresheaf p = twobox_presheaf();
    PointQ origin{Rational(0), Rational(0)};

    Germ g1 = germ_at(p, Section{parse("x1^2+1", 2), "U"}, origin);
    CHECK(residue_exact(g1) == 1);
    CHECK_FALSE(in_maximal_ideal(g1));

    Germ g2 = germ_at(p, Section{parse("x1", 2), "U"}, origin);
    CHECK(residue_exact(g2) == 0);
    CHECK(in_maximal_ideal(g2));

    PointQ outside{Rational(10), Rational(0)};
    CHECK_THROWS_AS(germ_at(p, Section{parse("x1", 2), "U"}, outside), SheafError);
}

TEST_CASE("germ equality") {
    FunctionPresheaf p = twobox_presheaf();
    PointQ x{Rational(3, 2), Rational(0)};

    Germ a = germ_at(p, Section{parse("x1", 2), "U"}, x);
    Germ b = germ_at(p, Section{parse("x1", 2), "AB"}, x);
    CHECK(germ_equal(a, b));  // same expr, shrunken domain

    Germ c = germ_at(p, Section{parse("x2", 2), "U"}, x);
    CHECK_FALSE(germ_equal(a, c));

    Germ d = germ_at(p, Section{parse("(x1+1)^2-1", 2), "U"}, x);
    Germ e = germ_at(p, Section{parse("x1^2+2*x1", 2), "U"}, x);
    CHECK(germ_equal(d, e));

    PointQ other{Rational(1), Rational(0)};
    Germ f = germ_at(p, Section{parse("x1", 2), "U"}, other);
    CHECK_THROWS_AS(germ_equal(a, f), SheafError);
}

TEST_CASE("germ equality is an equivalence relation on a probe corpus") {
    FunctionPresheaf p = twobox_presheaf();
    PointQ x{Rational(1, 2), Rational(1, 3)};
    std::vector<Germ> corpus;
    for (const char* text : {"x1", "x1 + 0", "x2", "(x1+x2)^2", "x1^2+2*x1*x2+x2^2", "1"})
        corpus.push_back(germ_at(p, Section{parse(text, 2), "U"}, x));
    for (const auto& a : corpus) CHECK(germ_equal(a, a));
    for (const auto& a : corpus)
        for (const auto& b : corpus) CHECK(germ_equal(a, b) == germ_equal(b, a));
    for (const auto& a : corpus)
        for (const auto& b : corpus)
            for (const auto& c : corpus)
                if (germ_equal(a, b) && germ_equal(b, c)) CHECK(germ_equal(a, c));
}

TEST_CASE("residue is a ring homomorphism; the ideal absorbs products") {
    FunctionPresheaf p = twobox_presheaf();
    PointQ origin{Rational(0), Rational(0)};
    std::mt19937_64 rng(7);
    auto randpoly = [&]() {
        auto randint = [&](int lo, int hi) {
            return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
        };
        std::vector<ExprPtr> terms;
        for (int t = 0, n = randint(1, 3); t < n; ++t) {
            std::vector<ExprPtr> fac{Expr::constant(Rational(randint(-3, 3)))};
            for (int d = 0, deg = randint(0, 2); d < deg; ++d)
                fac.push_back(Expr::variable(randint(1, 2)));
            terms.push_back(Expr::product(std::move(fac)));
        }
        return Expr::sum(std::move(terms));
    };
    for (int trial = 0; trial < 40; ++trial) {
        ExprPtr a = randpoly(), b = randpoly();
        Germ ga = germ_at(p, Section{a, "U"}, origin);
        Germ gb = germ_at(p, Section{b, "U"}, origin);
        Germ gsum = germ_at(p, Section{Expr::sum({a, b}), "U"}, origin);
        Germ gprod = germ_at(p, Section{Expr::product({a, b}), "U"}, origin);
        CHECK(residue_exact(gsum) == residue_exact(ga) + residue_exact(gb));
        CHECK(residue_exact(gprod) == residue_exact(ga) * residue_exact(gb));
        // absorption: x1 * anything is in m at x1 = 0
        Germ absorbed =
            germ_at(p, Section{Expr::product({Expr::variable(1), a}), "U"}, origin);
        CHECK(in_maximal_ideal(absorbed));
    }
}

TEST_CASE("pullback morphism substitutes map components") {
    ModelSpace line(1, 0);
    OpenLattice target(line);
    target.add_open("U", full_region(line));
    OpenLattice source(line);
    source.add_open("P", full_region(line));

    SmoothMapDesc F{line, line, {parse("x1^2", 1)}};
    auto m = pullback_morphism(F, target, {{"U", "P"}});

    Section c{parse("x1 + 1", 1), "U"};
    Section image = m.apply("U", c);
    CHECK(image.domain == "P");
    CHECK(exprs_equal(image.expr, parse("x1^2 + 1", 1)));

    auto id = pullback_morphism(identity_map(line), target, {{"U", "U"}});
    Section same = id.apply("U", c);
    CHECK(exprs_equal(same.expr, c.expr));

    CHECK_THROWS_AS(pullback_morphism(F, target, {}), SheafError);
}

TEST_CASE("pullbacks are functorial: (G o F)_# = F_# o G_#") {
    ModelSpace line(1, 0);
    OpenLattice lat(line);
    lat.add_open("U", full_region(line));
    std::map<std::string, std::string> self{{"U", "U"}};

    SmoothMapDesc F{line, line, {parse("x1 + 1", 1)}};
    SmoothMapDesc G{line, line, {parse("2*x1", 1)}};
    SmoothMapDesc GF{line, line, {parse("2*(x1 + 1)", 1)}};  // G after F

    auto mF = pullback_morphism(F, lat, self);
    auto mG = pullback_morphism(G, lat, self);
    auto mGF = pullback_morphism(GF, lat, self);

    for (const char* text : {"x1", "x1^2", "x1^3 - 2*x1 + 5"}) {
        Section c{parse(text, 1), "U"};
        ExprPtr once = mGF.apply("U", c).expr;
        ExprPtr twice = mF.apply("U", mG.apply("U", c)).expr;
        CHECK(print(canonicalize(once)) == print(canonicalize(twice)));
    }
}

TEST_CASE("morphism square") {
    OpenLattice l = twobox_lattice();
    auto id = identity_morphism(l);
    std::vector<Section> probes{{parse("x1*x2", 2), "U"}, {parse("x1^2", 2), "U"}};
    CHECK(check_morphism_square(id, probes).all_pass());

    // corrupted V-component
    SheafMorphismDesc bad = id;
    bad.components["A"] = Substitution{{1, parse("x1 + 1", 2)}};
    Report r = check_morphism_square(bad, probes);
    CHECK_FALSE(r.all_pass());
}

TEST_CASE("stalkwise isomorphism checks are probe-relative") {
    ModelSpace line(1, 0);
    OpenLattice lat(line);
    lat.add_open("U", full_region(line));
    FunctionPresheaf p{lat, line, {}};
    PointQ zero{Rational(0)};
    std::map<std::string, std::string> self{{"U", "U"}};

    std::vector<Germ> probes;
    for (const char* text : {"1", "x1", "x1^2", "x1^3"})
        probes.push_back(germ_at(p, Section{parse(text, 1), "U"}, zero));

    SUBCASE("identity is an isomorphism on probes") {
        auto v = stalkwise_iso_check(identity_morphism(lat), zero, probes, probes);
        CHECK(v.isomorphism_on_probes());
    }

    SUBCASE("affine pullback is an isomorphism on matched probes") {
        SmoothMapDesc F{line, line, {parse("x1 + 1", 1)}};
        auto m = pullback_morphism(F, lat, self);
        std::vector<Germ> images;
        for (const auto& g : probes)
            images.push_back(Germ{m.apply("U", g.representative), zero});
        auto v = stalkwise_iso_check(m, zero, probes, images);
        CHECK(v.isomorphism_on_probes());
    }

    SUBCASE("squaring map misses odd germs") {
        SmoothMapDesc F{line, line, {parse("x1^2", 1)}};
        auto m = pullback_morphism(F, lat, self);
        std::vector<Germ> want{germ_at(p, Section{parse("x1", 1), "U"}, zero)};
        auto v = stalkwise_iso_check(m, zero, probes, want);
        CHECK_FALSE(v.surjective_on_probes);
        CHECK_FALSE(v.failures.empty());
    }
}

TEST_CASE("lattice validation catches bad geometry") {
    ModelSpace s(1, 0);
    OpenLattice l(s);
    l.add_open("U", Region{s, {box1("0", "1")}});
    l.add_open("V", Region{s, {box1("5", "6")}});
    l.declare_inclusion("V", "U");  // false as point sets
    CHECK_THROWS_AS(l.validate_geometry(), SheafError);
}

TEST_CASE("missing intersection open is reported") {
    ModelSpace s(1, 0);
    OpenLattice l(s);
    l.add_open("A", Region{s, {box1("0", "2")}});
    l.add_open("B", Region{s, {box1("1", "3")}});
    CHECK_THROWS_AS(l.meet("A", "B"), SheafError);

    // disjoint opens meet in the empty open
    OpenLattice l2(s);
    l2.add_open("A", Region{s, {box1("0", "1")}});
    l2.add_open("B", Region{s, {box1("2", "3")}});
    CHECK(l2.meet("A", "B") == kEmptyOpen);
}
