#ifndef POISSHEAF_COMMANDS_HPP
#define POISSHEAF_COMMANDS_HPP

#include "poissheaf/manifest.hpp"

#include <json.hpp>

#include <sstream>
#include <string>

namespace poissheaf {

struct RunOptions {
    std::uint64_t seed = kDefaultSeed;
    double tolerance = kDefaultTolerance;
};

inline std::string render_json(const Report& r) {
    nlohmann::json j;
    j["findings"] = nlohmann::json::array();
    for (const auto& f : r.findings)
        j["findings"].push_back({{"check", f.check},
                                 {"subject", f.subject},
                                 {"verdict", f.verdict},
                                 {"detail", f.detail}});
    j["summary"] = {{"pass", r.pass_count()},
                    {"fail", r.fail_count()},
                    {"status", r.all_pass() ? "PASS" : "FAIL"}};
    return j.dump(2) + "\n";
}

/// Composition, locality, gluing and equalizer batteries over the manifest's
/// lattice, covers and glue cases.
inline Report cmd_check_sheaf(const Manifest& m, const RunOptions& opts = {}) {
    Report report;
    FunctionPresheaf p = presheaf_of(m);
    if (m.lattice.open_names().size() <= 1) {
        report.warn("sheaf", "(empty lattice)", "no opens declared; checks are vacuous");
        return report;
    }

    std::vector<Section> sections;
    for (const auto& [name, s] : m.sections) sections.push_back(s);

    report.merge(check_presheaf_composition(p, sections, opts.seed, opts.tolerance));

    for (const auto& [cover_name, cover] : m.covers) {
        for (const auto& [sec_name, s] : m.sections) {
            if (s.domain != cover.of) continue;
            try {
                bool ok = check_locality(p, cover.members, cover.of, s, opts.seed,
                                         opts.tolerance);
                if (ok)
                    report.pass("locality", cover_name + " section " + sec_name, "holds");
                else
                    report.fail("locality", cover_name + " section " + sec_name,
                                "restrictions vanish but the section does not");
            } catch (const SheafError& e) {
                report.fail("locality", cover_name + " section " + sec_name, e.what());
            }
        }
    }

    for (const auto& g : m.glue_cases) {
        const Cover& cover = m.covers.at(g.cover);
        std::vector<Section> parts;
        for (std::size_t i = 0; i < g.parts.size(); ++i)
            parts.push_back(Section{m.sections.at(g.parts[i]).expr, cover.members[i]});
        try {
            Section glued = glue(p, cover.members, cover.of, parts, opts.seed, opts.tolerance);
            if (g.expect_pass)
                report.pass("gluing", g.name, "glued to " + print(glued.expr));
            else
                report.fail("gluing", g.name, "expected rejection but the parts glued");
        } catch (const GlueError& e) {
            if (g.expect_pass)
                report.fail("gluing", g.name, e.what());
            else
                report.pass("gluing", g.name, std::string("rejected: ") + e.what());
        }
    }

    for (const auto& [cover_name, cover] : m.covers) {
        std::vector<Section> probes;
        for (const auto& [name, s] : m.sections)
            if (s.domain == cover.of) probes.push_back(s);
        if (probes.empty()) continue;
        report.merge(check_equalizer(p, cover.of, cover.members, probes, opts.seed,
                                     opts.tolerance));
    }
    return report;
}

/// Antisymmetry, Leibniz, Jacobi/Schouten and restriction-compatibility
/// batteries for the manifest's bivector.
inline Report cmd_check_poisson(const Manifest& m, const RunOptions& opts = {}) {
    Report report;
    if (!m.pi) {
        report.fail("poisson", "(no bivector)", "manifest declares no bivector");
        return report;
    }
    const BivectorField& pi = *m.pi;
    int n = pi.ambient().n;
    EqualityOptions eq;
    eq.seed = opts.seed;
    eq.tolerance = opts.tolerance;

    // antisymmetry of the induced bracket on coordinates
    for (int i = 1; i <= n; ++i)
        for (int j = i; j <= n; ++j) {
            ExprPtr fwd = bracket(Expr::variable(i), Expr::variable(j), pi);
            ExprPtr bwd = bracket(Expr::variable(j), Expr::variable(i), pi);
            std::string subject = "{x" + std::to_string(i) + ",x" + std::to_string(j) + "}";
            if (is_canonically_zero(Expr::sum({fwd, bwd})))
                report.pass("bracket-antisymmetry", subject, "cancels canonically");
            else
                report.fail("bracket-antisymmetry", subject, "does not cancel");
        }

    // Leibniz on deterministic random triples
    std::mt19937_64 rng(opts.seed);
    int leibniz_failures = 0;
    const int kTriples = 25;
    for (int t = 0; t < kTriples; ++t) {
        ExprPtr f = random_polynomial(rng, n, 3);
        ExprPtr g = random_polynomial(rng, n, 3);
        ExprPtr s = random_polynomial(rng, n, 3);
        if (!check_leibniz(pi, f, g, s, eq)) ++leibniz_failures;
    }
    if (leibniz_failures == 0)
        report.pass("leibniz", std::to_string(kTriples) + " random triples",
                    "canonical equality");
    else
        report.fail("leibniz", std::to_string(kTriples) + " random triples",
                    std::to_string(leibniz_failures) + " failures");

    JacobiReport jr = check_poisson(pi, opts.seed, opts.tolerance);
    std::ostringstream detail;
    detail << to_string(jr.verdict);
    if (jr.verdict != JacobiVerdict::ProvenZero)
        detail << " worst-defect=" << jr.worst_defect;
    if (jr.verdict == JacobiVerdict::Failed)
        report.fail("jacobi", "coordinate triples", detail.str());
    else
        report.pass("jacobi", "coordinate triples", detail.str());

    SchoutenTensor st = schouten_self(pi);
    if (st.is_zero())
        report.pass("schouten", "[pi,pi]_s", "all components canonically zero");
    else if (jr.verdict == JacobiVerdict::Failed)
        report.fail("schouten", "[pi,pi]_s", "nonzero components");
    else
        report.pass("schouten", "[pi,pi]_s", "nonzero components but sampled-zero defects");

    if (m.has_lattice && !m.sections.empty()) {
        std::vector<Section> probes;
        for (const auto& [name, s] : m.sections) probes.push_back(s);
        report.merge(bracket_sheaf_morphism_check(pi, presheaf_of(m), probes, opts.seed,
                                                  opts.tolerance));
    }
    return report;
}

/// Printed canonical bracket of two named sections.
inline std::string cmd_bracket(const Manifest& m, const std::string& f_name,
                               const std::string& g_name) {
    if (!m.pi) throw ManifestError("manifest declares no bivector");
    auto fi = m.sections.find(f_name);
    auto gi = m.sections.find(g_name);
    if (fi == m.sections.end()) throw ManifestError("unknown section '" + f_name + "'");
    if (gi == m.sections.end()) throw ManifestError("unknown section '" + g_name + "'");
    return print(bracket(fi->second.expr, gi->second.expr, *m.pi));
}

/// Dimension, transversality and boundary decomposition for one descriptor.
inline Report cmd_fibre(const Manifest& m, const std::string& name) {
    Report report;
    auto it = m.fibre_products.find(name);
    if (it == m.fibre_products.end())
        throw ManifestError("unknown fibre product '" + name + "'");
    const FibreProductDesc& d = it->second;
    try {
        int dim = fibre_product_dim(d);
        report.pass("fibre-dimension", name, "dim W = " + std::to_string(dim));
    } catch (const FibreProductError& e) {
        report.fail("fibre-dimension", name, e.what());
        return report;
    }
    try {
        BoundaryDecomposition bd = boundary_decomposition_count(d);
        std::ostringstream os;
        os << "lhs=" << bd.lhs << " rhs=" << bd.rhs_from_x << "+" << bd.rhs_from_y;
        if (bd.matches())
            report.pass("fibre-boundary", name, os.str());
        else
            report.fail("fibre-boundary", name, os.str() + " (counts differ)");
    } catch (const CornerConfigurationError& e) {
        report.fail("fibre-boundary", name, e.what());
    } catch (const TransversalityError& e) {
        report.fail("fibre-transversality", name, e.what());
    } catch (const FibreProductError& e) {
        report.fail("fibre-boundary", name, e.what());
    }
    return report;
}

/// Residue and maximal-ideal membership of a named section's germ at a point.
inline std::string cmd_stalk(const Manifest& m, const std::string& section_name,
                             const PointQ& point) {
    auto it = m.sections.find(section_name);
    if (it == m.sections.end())
        throw ManifestError("unknown section '" + section_name + "'");
    FunctionPresheaf p = presheaf_of(m);
    Germ g = germ_at(p, it->second, point);
    std::ostringstream os;
    auto exact = evaluate_exact(g.representative.expr, g.base);
    if (exact)
        os << "residue " << to_string(*exact);
    else
        os << "residue " << residue(g);
    os << "\n" << (in_maximal_ideal(g) ? "in maximal ideal" : "not in maximal ideal") << "\n";
    return os.str();
}

}  // namespace poissheaf

#endif
