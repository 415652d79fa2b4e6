#ifndef POISSHEAF_SHEAF_HPP
#define POISSHEAF_SHEAF_HPP

#include "poissheaf/canonical.hpp"
#include "poissheaf/corners.hpp"
#include "poissheaf/report.hpp"

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace poissheaf {

struct SheafError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InclusionError : SheafError {
    using SheafError::SheafError;
};
struct GlueError : SheafError {
    GlueError(const std::string& msg, std::string first, std::string second)
        : SheafError(msg), member_a(std::move(first)), member_b(std::move(second)) {}
    std::string member_a, member_b;
};

inline const std::string kEmptyOpen = "(empty)";

/// Finite intersection-closed poset of named opens. The empty open is always
/// present and carries the zero ring.
class OpenLattice {
public:
    OpenLattice() = default;
    explicit OpenLattice(ModelSpace ambient) : ambient_(ambient) {
        opens_[kEmptyOpen] = Region{ambient, {}};
    }

    const ModelSpace& ambient() const { return ambient_; }

    void add_open(const std::string& name, Region region) {
        if (name == kEmptyOpen && !region.empty())
            throw SheafError("the empty open must have an empty region");
        if (!(region.ambient == ambient_) && !region.empty())
            throw SheafError("open '" + name + "' lives in a different model space");
        opens_[name] = std::move(region);
    }

    void declare_inclusion(const std::string& sub, const std::string& super) {
        require_open(sub);
        require_open(super);
        declared_.insert({sub, super});
        closure_dirty_ = true;
    }

    void declare_intersection(const std::string& a, const std::string& b,
                              const std::string& result) {
        require_open(a);
        require_open(b);
        require_open(result);
        meet_[ordered(a, b)] = result;
    }

    bool has_open(const std::string& name) const { return opens_.count(name) > 0; }
    const Region& region(const std::string& name) const {
        auto it = opens_.find(name);
        if (it == opens_.end()) throw SheafError("unknown open '" + name + "'");
        return it->second;
    }

    std::vector<std::string> open_names() const {
        std::vector<std::string> names;
        for (const auto& [n, r] : opens_) names.push_back(n);
        return names;
    }

    bool leq(const std::string& sub, const std::string& super) const {
        ensure_closure();
        if (sub == super) return true;
        if (sub == kEmptyOpen) return true;
        return closure_.count({sub, super}) > 0;
    }

    /// Name of the declared intersection; falls back to the empty open when
    /// the computed intersection is empty, else reports a closure violation.
    std::string meet(const std::string& a, const std::string& b) const {
        if (leq(a, b)) return a;
        if (leq(b, a)) return b;
        auto it = meet_.find(ordered(a, b));
        if (it != meet_.end()) return it->second;
        Region r = intersect(region(a), region(b));
        if (r.empty()) return kEmptyOpen;
        throw SheafError("lattice is not intersection-closed: '" + a + "' and '" + b +
                         "' overlap but no intersection open is declared");
    }

    /// All strict chains W < V < U.
    std::vector<std::tuple<std::string, std::string, std::string>> chains() const {
        ensure_closure();
        std::vector<std::tuple<std::string, std::string, std::string>> out;
        auto names = open_names();
        for (const auto& w : names)
            for (const auto& v : names)
                for (const auto& u : names) {
                    if (w == v || v == u || w == u) continue;
                    if (leq(w, v) && leq(v, u)) out.push_back({w, v, u});
                }
        return out;
    }

    /// Sampled geometric consistency: declared inclusions hold pointwise,
    /// declared intersections match the computed box intersection pointwise.
    void validate_geometry(std::uint64_t seed = kDefaultSeed,
                           int points = kSamplePoints) const {
        for (const auto& [sub, super] : declared_) {
            const Region& rs = region(sub);
            const Region& ru = region(super);
            for (const auto& p : region_samples(rs, seed, points)) {
                PointQ q(p.begin(), p.end());
                if (!ru.contains(q))
                    throw SheafError("declared inclusion '" + sub + "' <= '" + super +
                                     "' contradicted by a sampled point");
            }
        }
        for (const auto& [key, result] : meet_) {
            Region computed = intersect(region(key.first), region(key.second));
            const Region& declared = region(result);
            for (const auto& p : region_samples(computed, seed, points)) {
                PointQ q(p.begin(), p.end());
                if (!declared.contains(q))
                    throw SheafError("declared intersection '" + result +
                                     "' misses a point of '" + key.first + "' ∩ '" +
                                     key.second + "'");
            }
            for (const auto& p : region_samples(declared, seed, points)) {
                PointQ q(p.begin(), p.end());
                if (!computed.contains(q))
                    throw SheafError("declared intersection '" + result +
                                     "' exceeds '" + key.first + "' ∩ '" + key.second + "'");
            }
        }
    }

private:
    void require_open(const std::string& name) const {
        if (!opens_.count(name)) throw SheafError("unknown open '" + name + "'");
    }
    static std::pair<std::string, std::string> ordered(const std::string& a,
                                                       const std::string& b) {
        return a <= b ? std::make_pair(a, b) : std::make_pair(b, a);
    }
    void ensure_closure() const {
        if (!closure_dirty_) return;
        closure_ = declared_;
        bool changed = true;
        while (changed) {
            changed = false;
            for (const auto& [a, b] : closure_)
                for (const auto& [c, d] : closure_)
                    if (b == c && a != d && !closure_.count({a, d})) {
                        closure_.insert({a, d});
                        changed = true;
                        break;
                    }
        }
        closure_dirty_ = false;
    }

    ModelSpace ambient_;
    std::map<std::string, Region> opens_;
    std::set<std::pair<std::string, std::string>> declared_;
    std::map<std::pair<std::string, std::string>, std::string> meet_;
    mutable std::set<std::pair<std::string, std::string>> closure_;
    mutable bool closure_dirty_ = true;
};

/// A section is an expression carried on a named open.
struct Section {
    ExprPtr expr;
    std::string domain;
};

/// Variable-index -> replacement expression; identity where unmapped.
using Substitution = std::map<int, ExprPtr>;

inline ExprPtr substitute(const ExprPtr& e, const Substitution& sub) {
    switch (e->kind()) {
        case ExprKind::Variable: {
            auto it = sub.find(e->var_index());
            return it == sub.end() ? e : it->second;
        }
        case ExprKind::Constant:
            return e;
        default: {
            std::vector<ExprPtr> children;
            children.reserve(e->children().size());
            for (const auto& c : e->children()) children.push_back(substitute(c, sub));
            switch (e->kind()) {
                case ExprKind::Sum: return Expr::sum(std::move(children));
                case ExprKind::Product: return Expr::product(std::move(children));
                case ExprKind::Power: return Expr::power(children[0], e->exponent());
                case ExprKind::Negate: return Expr::negate(children[0]);
                case ExprKind::Quotient: return Expr::quotient(children[0], children[1]);
                case ExprKind::Primitive: return Expr::primitive(e->prim(), children[0]);
                default: throw std::logic_error("unreachable");
            }
        }
    }
}

/// Structure presheaf of smooth-function rings over a finite lattice.
/// restriction_twists is empty for the honest presheaf; negative fixtures
/// install a non-identity substitution on one restriction edge.
struct FunctionPresheaf {
    OpenLattice lattice;
    ModelSpace ambient;
    std::map<std::pair<std::string, std::string>, Substitution> restriction_twists;
};

inline Section restrict_section(const FunctionPresheaf& p, const Section& s,
                                const std::string& target) {
    if (!p.lattice.leq(target, s.domain))
        throw InclusionError("'" + target + "' is not included in '" + s.domain + "'");
    ExprPtr expr = s.expr;
    auto it = p.restriction_twists.find({s.domain, target});
    if (it != p.restriction_twists.end()) expr = substitute(expr, it->second);
    return Section{expr, target};
}

inline Section restrict_section(const OpenLattice& lattice, const Section& s,
                                const std::string& target) {
    FunctionPresheaf p{lattice, lattice.ambient(), {}};
    return restrict_section(p, s, target);
}

inline EqualityOptions section_equality_options(const FunctionPresheaf& p,
                                                const std::string& open,
                                                std::uint64_t seed = kDefaultSeed,
                                                double tol = kDefaultTolerance) {
    EqualityOptions opts;
    opts.seed = seed;
    opts.tolerance = tol;
    const Region& r = p.lattice.region(open);
    auto boxes = r.sample_boxes();
    if (!boxes.empty()) opts.box = boxes.front();
    return opts;
}

// ---------------------------------------------------------------------------
// Presheaf / sheaf batteries
// ---------------------------------------------------------------------------

/// Both restriction paths along every chain W <= V <= U agree for every
/// supplied section over U.
inline Report check_presheaf_composition(const FunctionPresheaf& p,
                                         const std::vector<Section>& sections,
                                         std::uint64_t seed = kDefaultSeed,
                                         double tol = kDefaultTolerance) {
    Report report;
    for (const auto& [w, v, u] : p.lattice.chains()) {
        for (const Section& s : sections) {
            if (s.domain != u) continue;
            Section via_v = restrict_section(p, restrict_section(p, s, v), w);
            Section direct = restrict_section(p, s, w);
            auto eq = expr_equal(via_v.expr, direct.expr,
                                 section_equality_options(p, w, seed, tol));
            std::string subject = u + ">=" + v + ">=" + w + " section " + print(s.expr);
            if (eq.equal)
                report.pass("presheaf-composition", subject, to_string(eq.verdict));
            else
                report.fail("presheaf-composition", subject,
                            "restriction paths disagree along the chain");
        }
    }
    if (report.findings.empty())
        report.pass("presheaf-composition", "(no chains)", "vacuously holds");
    return report;
}

inline void require_cover(const FunctionPresheaf& p,
                          const std::vector<std::string>& cover, const std::string& U,
                          std::uint64_t seed = kDefaultSeed) {
    const Region& ru = p.lattice.region(U);
    for (const auto& pt : region_samples(ru, seed)) {
        PointQ q(pt.begin(), pt.end());
        bool covered = false;
        for (const auto& name : cover)
            if (p.lattice.region(name).contains(q)) {
                covered = true;
                break;
            }
        if (!covered)
            throw SheafError("cover of '" + U + "' misses a sampled point of the region");
    }
}

/// Locality axiom on one section: vanishing on every cover member forces the
/// section itself to vanish.
inline bool check_locality(const FunctionPresheaf& p,
                           const std::vector<std::string>& cover, const std::string& U,
                           const Section& s, std::uint64_t seed = kDefaultSeed,
                           double tol = kDefaultTolerance) {
    require_cover(p, cover, U, seed);
    ExprPtr zero = Expr::zero();
    for (const auto& name : cover) {
        Section r = restrict_section(p, s, name);
        if (!exprs_equal(r.expr, zero, section_equality_options(p, name, seed, tol)))
            return true;  // hypothesis fails, axiom vacuously true
    }
    return exprs_equal(s.expr, zero, section_equality_options(p, U, seed, tol));
}

/// Gluing axiom: compatible parts over a cover assemble into a section over U
/// restricting to every part. Throws GlueError naming the offending pair.
inline Section glue(const FunctionPresheaf& p, const std::vector<std::string>& cover,
                    const std::string& U, const std::vector<Section>& parts,
                    std::uint64_t seed = kDefaultSeed, double tol = kDefaultTolerance) {
    if (cover.size() != parts.size())
        throw SheafError("cover and parts must have matching lengths");
    for (std::size_t i = 0; i < parts.size(); ++i)
        if (parts[i].domain != cover[i])
            throw SheafError("part " + std::to_string(i) + " is not a section over '" +
                             cover[i] + "'");
    require_cover(p, cover, U, seed);

    for (std::size_t i = 0; i < parts.size(); ++i) {
        for (std::size_t j = i + 1; j < parts.size(); ++j) {
            std::string overlap = p.lattice.meet(cover[i], cover[j]);
            if (overlap == kEmptyOpen) continue;
            Section ri = restrict_section(p, parts[i], overlap);
            Section rj = restrict_section(p, parts[j], overlap);
            if (!exprs_equal(ri.expr, rj.expr,
                             section_equality_options(p, overlap, seed, tol)))
                throw GlueError("overlap mismatch between '" + cover[i] + "' and '" +
                                    cover[j] + "' on '" + overlap + "'",
                                cover[i], cover[j]);
        }
    }

    Section glued{canonicalize(parts.front().expr), U};
    for (std::size_t i = 0; i < parts.size(); ++i) {
        Section r = restrict_section(p, glued, cover[i]);
        if (!exprs_equal(r.expr, parts[i].expr,
                         section_equality_options(p, cover[i], seed, tol)))
            throw GlueError("glued section fails to restrict to part over '" + cover[i] + "'",
                            U, cover[i]);
    }
    return glued;
}

/// Exactness of 0 -> F(U) -> prod_i F(U_i) => prod_ij F(U_i n U_j) over the
/// probe set: injectivity of the restriction tuple map plus gluing of every
/// compatible probe tuple.
inline Report check_equalizer(const FunctionPresheaf& p, const std::string& U,
                              const std::vector<std::string>& cover,
                              const std::vector<Section>& probes,
                              std::uint64_t seed = kDefaultSeed,
                              double tol = kDefaultTolerance) {
    Report report;
    require_cover(p, cover, U, seed);
    auto opts_u = section_equality_options(p, U, seed, tol);

    // injectivity of alpha
    for (std::size_t a = 0; a < probes.size(); ++a) {
        for (std::size_t b = a + 1; b < probes.size(); ++b) {
            if (exprs_equal(probes[a].expr, probes[b].expr, opts_u)) continue;
            bool distinct_somewhere = false;
            for (const auto& name : cover) {
                if (p.lattice.region(name).empty()) continue;
                Section ra = restrict_section(p, probes[a], name);
                Section rb = restrict_section(p, probes[b], name);
                if (!exprs_equal(ra.expr, rb.expr,
                                 section_equality_options(p, name, seed, tol))) {
                    distinct_somewhere = true;
                    break;
                }
            }
            std::string subject =
                "alpha(" + print(probes[a].expr) + ") vs alpha(" + print(probes[b].expr) + ")";
            if (distinct_somewhere)
                report.pass("equalizer-injectivity", subject, "tuples differ");
            else
                report.fail("equalizer-injectivity", subject,
                            "distinct sections restrict to identical tuples");
        }
    }

    // every compatible tuple assembled from probes glues
    std::vector<std::size_t> choice(cover.size(), 0);
    bool done = probes.empty() || cover.empty();
    while (!done) {
        std::vector<Section> parts;
        for (std::size_t i = 0; i < cover.size(); ++i)
            parts.push_back(Section{probes[choice[i]].expr, cover[i]});
        bool compatible = true;
        for (std::size_t i = 0; i < parts.size() && compatible; ++i)
            for (std::size_t j = i + 1; j < parts.size() && compatible; ++j) {
                std::string overlap = p.lattice.meet(cover[i], cover[j]);
                if (overlap == kEmptyOpen) continue;
                if (!exprs_equal(parts[i].expr, parts[j].expr,
                                 section_equality_options(p, overlap, seed, tol)))
                    compatible = false;
            }
        if (compatible) {
            std::string subject = "tuple(";
            for (std::size_t i = 0; i < parts.size(); ++i)
                subject += (i ? "," : "") + print(parts[i].expr);
            subject += ")";
            try {
                glue(p, cover, U, parts, seed, tol);
                report.pass("equalizer-gluing", subject, "compatible tuple glues");
            } catch (const GlueError& e) {
                report.fail("equalizer-gluing", subject, e.what());
            }
        }
        std::size_t i = 0;
        for (; i < choice.size(); ++i) {
            if (++choice[i] < probes.size()) break;
            choice[i] = 0;
        }
        if (i == choice.size()) done = true;
    }
    if (report.findings.empty())
        report.pass("equalizer", "(no probes)", "vacuously holds");
    return report;
}

// ---------------------------------------------------------------------------
// Germs and stalks
// ---------------------------------------------------------------------------

/// Equivalence class [(f, U)] at a base point, represented by one section.
struct Germ {
    Section representative;
    PointQ base;
};

inline Germ germ_at(const FunctionPresheaf& p, const Section& s, const PointQ& x) {
    if (!p.lattice.region(s.domain).contains(x))
        throw SheafError("base point lies outside the section's domain '" + s.domain + "'");
    return Germ{s, x};
}

inline bool germ_equal(const Germ& a, const Germ& b,
                       const EqualityOptions& opts = {}) {
    if (a.base != b.base) throw SheafError("germs based at different points");
    return exprs_equal(a.representative.expr, b.representative.expr, opts);
}

/// Image in the residue field: exact rational when the representative allows,
/// double-precision otherwise.
inline Rational residue_exact(const Germ& g) {
    auto v = evaluate_exact(g.representative.expr, g.base);
    if (!v) throw SheafError("representative is not exactly evaluable at the base point");
    return *v;
}

inline double residue(const Germ& g) {
    auto v = evaluate_exact(g.representative.expr, g.base);
    if (v) return to_double(*v);
    return evaluate(g.representative.expr, to_doubles(g.base));
}

inline bool in_maximal_ideal(const Germ& g, double tol = kDefaultTolerance) {
    auto v = evaluate_exact(g.representative.expr, g.base);
    if (v) return *v == 0;
    return std::abs(evaluate(g.representative.expr, to_doubles(g.base))) <= tol;
}

// ---------------------------------------------------------------------------
// Sheaf morphisms
// ---------------------------------------------------------------------------

/// Per-open component maps, each a substitution rule on section expressions.
/// `domain_image` maps an indexing open U to the open carrying the image
/// section (f^{-1}(U) for pullbacks, U itself for endomorphisms).
struct SheafMorphismDesc {
    OpenLattice index_lattice;
    std::map<std::string, Substitution> components;
    std::map<std::string, std::string> domain_image;

    Section apply(const std::string& open, const Section& s) const {
        auto it = components.find(open);
        if (it == components.end())
            throw SheafError("morphism has no component for open '" + open + "'");
        auto dom = domain_image.find(open);
        std::string image_domain = dom == domain_image.end() ? open : dom->second;
        return Section{substitute(s.expr, it->second), image_domain};
    }
};

inline SheafMorphismDesc identity_morphism(const OpenLattice& lattice) {
    SheafMorphismDesc m;
    m.index_lattice = lattice;
    for (const auto& name : lattice.open_names()) m.components[name] = {};
    return m;
}

/// f_# : c -> c o F. Target opens index the morphism; `preimages` names the
/// source open representing F^{-1}(U) for each target open U.
inline SheafMorphismDesc pullback_morphism(const SmoothMapDesc& F,
                                           const OpenLattice& target_lattice,
                                           const std::map<std::string, std::string>& preimages) {
    F.validate();
    Substitution sub;
    for (int i = 0; i < F.target.n; ++i)
        sub[i + 1] = F.components[static_cast<std::size_t>(i)];
    SheafMorphismDesc m;
    m.index_lattice = target_lattice;
    for (const auto& name : target_lattice.open_names()) {
        if (name == kEmptyOpen) {
            m.components[name] = sub;
            m.domain_image[name] = kEmptyOpen;
            continue;
        }
        auto it = preimages.find(name);
        if (it == preimages.end())
            throw SheafError("missing preimage declaration for open '" + name + "'");
        m.components[name] = sub;
        m.domain_image[name] = it->second;
    }
    return m;
}

/// Commuting morphism square for every inclusion V <= U of the indexing
/// lattice: m(U)(s)|_V equals m(V)(s|_V).
inline Report check_morphism_square(const SheafMorphismDesc& m,
                                    const std::vector<Section>& probes,
                                    std::uint64_t seed = kDefaultSeed,
                                    double tol = kDefaultTolerance) {
    Report report;
    auto names = m.index_lattice.open_names();
    EqualityOptions opts;
    opts.seed = seed;
    opts.tolerance = tol;
    for (const auto& u : names) {
        for (const auto& v : names) {
            if (u == v || !m.index_lattice.leq(v, u)) continue;
            if (v == kEmptyOpen) continue;
            for (const Section& s : probes) {
                if (s.domain != u) continue;
                ExprPtr down_then_map = m.apply(v, Section{s.expr, v}).expr;
                ExprPtr map_then_down = m.apply(u, s).expr;
                std::string subject = u + ">=" + v + " probe " + print(s.expr);
                if (exprs_equal(map_then_down, down_then_map, opts))
                    report.pass("morphism-square", subject, "commutes");
                else
                    report.fail("morphism-square", subject, "square does not commute");
            }
        }
    }
    if (report.findings.empty())
        report.pass("morphism-square", "(no inclusions)", "vacuously holds");
    return report;
}

/// Probe-relative stalk isomorphism check: the verdict quantifies over the
/// given germs only.
struct StalkIsoVerdict {
    bool injective_on_probes = true;
    bool surjective_on_probes = true;
    std::vector<std::string> failures;
    bool isomorphism_on_probes() const {
        return injective_on_probes && surjective_on_probes;
    }
};

inline StalkIsoVerdict stalkwise_iso_check(const SheafMorphismDesc& m,
                                           const PointQ& source_point,
                                           const std::vector<Germ>& source_probes,
                                           const std::vector<Germ>& target_probes,
                                           const EqualityOptions& opts = {}) {
    StalkIsoVerdict v;
    std::vector<Germ> images;
    for (const Germ& g : source_probes) {
        Section img = m.apply(g.representative.domain, g.representative);
        images.push_back(Germ{img, source_point});
    }
    for (std::size_t a = 0; a < source_probes.size(); ++a) {
        for (std::size_t b = a + 1; b < source_probes.size(); ++b) {
            bool same_src = exprs_equal(source_probes[a].representative.expr,
                                        source_probes[b].representative.expr, opts);
            bool same_img = exprs_equal(images[a].representative.expr,
                                        images[b].representative.expr, opts);
            if (!same_src && same_img) {
                v.injective_on_probes = false;
                v.failures.push_back("distinct germs " + print(source_probes[a].representative.expr) +
                                     ", " + print(source_probes[b].representative.expr) +
                                     " collapse to one image");
            }
        }
    }
    for (const Germ& t : target_probes) {
        bool hit = false;
        for (const Germ& img : images)
            if (exprs_equal(img.representative.expr, t.representative.expr, opts)) {
                hit = true;
                break;
            }
        if (!hit) {
            v.surjective_on_probes = false;
            v.failures.push_back("target germ " + print(t.representative.expr) +
                                 " has no preimage among the probes");
        }
    }
    return v;
}

}  // namespace poissheaf

#endif
