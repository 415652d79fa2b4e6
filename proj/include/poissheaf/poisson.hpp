#ifndef POISSHEAF_POISSON_HPP
#define POISSHEAF_POISSON_HPP

#include "poissheaf/canonical.hpp"
#include "poissheaf/corners.hpp"
#include "poissheaf/sheaf.hpp"

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace poissheaf {

struct PoissonError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Antisymmetric n x n matrix of component expressions pi^{ij}. Built from
/// the upper triangle; the lower triangle is derived, and redundant declared
/// entries must cancel canonically.
class BivectorField {
public:
    BivectorField(ModelSpace ambient,
                  const std::map<std::pair<int, int>, ExprPtr>& entries)
        : ambient_(ambient),
          components_(static_cast<std::size_t>(ambient.n),
                      std::vector<ExprPtr>(static_cast<std::size_t>(ambient.n), Expr::zero())) {
        for (const auto& [ij, expr] : entries) {
            auto [i, j] = ij;
            if (i < 1 || j < 1 || i > ambient_.n || j > ambient_.n)
                throw PoissonError("bivector index (" + std::to_string(i) + "," +
                                   std::to_string(j) + ") outside dimension " +
                                   std::to_string(ambient_.n));
            if (i == j && !is_canonically_zero(expr))
                throw PoissonError("diagonal bivector component must vanish");
            if (max_var_index(expr) > ambient_.n)
                throw PoissonError("bivector component uses a variable outside the ambient dimension");
            set(i, j, expr);
        }
        // antisymmetry across redundant declarations
        for (int i = 1; i <= ambient_.n; ++i)
            for (int j = 1; j <= ambient_.n; ++j) {
                ExprPtr s = Expr::sum({at(i, j), at(j, i)});
                if (!is_canonically_zero(s))
                    throw PoissonError("declared components pi^{" + std::to_string(i) + "," +
                                       std::to_string(j) + "} and its transpose are not antisymmetric");
            }
    }

    const ModelSpace& ambient() const { return ambient_; }

    const ExprPtr& at(int i, int j) const {
        return components_[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j - 1)];
    }

private:
    void set(int i, int j, const ExprPtr& e) {
        auto& slot = components_[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j - 1)];
        auto& mirror = components_[static_cast<std::size_t>(j - 1)][static_cast<std::size_t>(i - 1)];
        if (!is_canonically_zero(slot)) {
            // duplicate declaration: keep both, the antisymmetry sweep decides
            ExprPtr diff = Expr::sum({slot, Expr::negate(e)});
            if (!is_canonically_zero(diff))
                throw PoissonError("conflicting declarations for pi^{" + std::to_string(i) +
                                   "," + std::to_string(j) + "}");
            return;
        }
        slot = e;
        if (i != j && is_canonically_zero(mirror)) mirror = Expr::negate(e);
    }

    ModelSpace ambient_;
    std::vector<std::vector<ExprPtr>> components_;
};

/// {F, G} = sum_{i,j} pi^{ij} dF/dx_i dG/dx_j, canonicalized.
inline ExprPtr bracket(const ExprPtr& F, const ExprPtr& G, const BivectorField& pi) {
    int n = pi.ambient().n;
    if (max_var_index(F) > n || max_var_index(G) > n)
        throw PoissonError("bracket arguments exceed the ambient dimension");
    std::vector<ExprPtr> terms;
    for (int i = 1; i <= n; ++i) {
        ExprPtr dFi = differentiate(F, i);
        for (int j = 1; j <= n; ++j) {
            const ExprPtr& pij = pi.at(i, j);
            if (pij->is_constant(Rational(0))) continue;
            terms.push_back(Expr::product({pij, dFi, differentiate(G, j)}));
        }
    }
    return canonicalize(Expr::sum(std::move(terms)));
}

/// {F,{G,H}} + {G,{H,F}} + {H,{F,G}}, canonicalized.
inline ExprPtr jacobi_defect(const ExprPtr& F, const ExprPtr& G, const ExprPtr& H,
                             const BivectorField& pi) {
    ExprPtr a = bracket(F, bracket(G, H, pi), pi);
    ExprPtr b = bracket(G, bracket(H, F, pi), pi);
    ExprPtr c = bracket(H, bracket(F, G, pi), pi);
    return canonicalize(Expr::sum({a, b, c}));
}

/// Trivector [pi, pi]_s stored on i<j<k. With the convention used here,
/// T^{ijk} = sum_l (pi^{li} d_l pi^{jk} + pi^{lj} d_l pi^{ki} + pi^{lk} d_l pi^{ij}),
/// which equals minus the coordinate-triple Jacobi defect.
struct SchoutenTensor {
    int dimension = 0;
    std::map<std::tuple<int, int, int>, ExprPtr> components;

    bool is_zero() const {
        for (const auto& [idx, e] : components)
            if (!e->is_constant(Rational(0)) && !is_canonically_zero(e)) return false;
        return true;
    }
};

inline SchoutenTensor schouten_self(const BivectorField& pi) {
    int n = pi.ambient().n;
    SchoutenTensor t;
    t.dimension = n;
    for (int i = 1; i <= n; ++i)
        for (int j = i + 1; j <= n; ++j)
            for (int k = j + 1; k <= n; ++k) {
                std::vector<ExprPtr> terms;
                for (int l = 1; l <= n; ++l) {
                    terms.push_back(Expr::product({pi.at(l, i), differentiate(pi.at(j, k), l)}));
                    terms.push_back(Expr::product({pi.at(l, j), differentiate(pi.at(k, i), l)}));
                    terms.push_back(Expr::product({pi.at(l, k), differentiate(pi.at(i, j), l)}));
                }
                t.components[{i, j, k}] = canonicalize(Expr::sum(std::move(terms)));
            }
    return t;
}

enum class JacobiVerdict { ProvenZero, SampledZero, Failed };

inline const char* to_string(JacobiVerdict v) {
    switch (v) {
        case JacobiVerdict::ProvenZero: return "proven-zero";
        case JacobiVerdict::SampledZero: return "sampled-zero";
        case JacobiVerdict::Failed: return "failed";
    }
    return "?";
}

struct JacobiReport {
    JacobiVerdict verdict = JacobiVerdict::ProvenZero;
    double worst_defect = 0.0;
    // canonical coordinate-triple defects that did not vanish symbolically
    std::map<std::tuple<int, int, int>, ExprPtr> nonzero_defects;
};

/// Verdict proven-zero when every Schouten component canonicalizes to zero,
/// otherwise the coordinate-triple defects are sampled at the seeded points.
inline JacobiReport check_poisson(const BivectorField& pi,
                                  std::uint64_t seed = kDefaultSeed,
                                  double tol = kDefaultTolerance) {
    JacobiReport report;
    SchoutenTensor t = schouten_self(pi);
    if (t.is_zero()) {
        report.verdict = JacobiVerdict::ProvenZero;
        return report;
    }
    int n = pi.ambient().n;
    SampleBox box = default_sample_box(n, pi.ambient().k);
    auto pts = sample_points(box, seed);
    for (int i = 1; i <= n; ++i)
        for (int j = i + 1; j <= n; ++j)
            for (int k = j + 1; k <= n; ++k) {
                ExprPtr defect = jacobi_defect(Expr::variable(i), Expr::variable(j),
                                               Expr::variable(k), pi);
                if (is_canonically_zero(defect)) continue;
                report.nonzero_defects[{i, j, k}] = defect;
                for (const auto& p : pts)
                    report.worst_defect =
                        std::max(report.worst_defect, std::abs(evaluate(defect, p)));
            }
    report.verdict = report.worst_defect <= tol ? JacobiVerdict::SampledZero
                                                : JacobiVerdict::Failed;
    return report;
}

/// Leibniz in the second argument: {f, g s} = {f, g} s + g {f, s}.
inline bool check_leibniz(const BivectorField& pi, const ExprPtr& f, const ExprPtr& g,
                          const ExprPtr& s, const EqualityOptions& opts = {}) {
    ExprPtr lhs = bracket(f, Expr::product({g, s}), pi);
    ExprPtr rhs = Expr::sum({Expr::product({bracket(f, g, pi), s}),
                             Expr::product({g, bracket(f, s, pi)})});
    return exprs_equal(lhs, rhs, opts);
}

/// The bracket as a sheaf morphism: compatibility with every restriction in
/// the lattice, plus bilinearity spot checks over each open.
inline Report bracket_sheaf_morphism_check(const BivectorField& pi,
                                           const FunctionPresheaf& p,
                                           const std::vector<Section>& probes,
                                           std::uint64_t seed = kDefaultSeed,
                                           double tol = kDefaultTolerance) {
    if (!(pi.ambient() == p.ambient))
        throw PoissonError("bivector and presheaf ambient spaces differ");
    Report report;
    auto names = p.lattice.open_names();
    for (const auto& u : names) {
        for (const auto& v : names) {
            if (u == v || v == kEmptyOpen || !p.lattice.leq(v, u)) continue;
            for (std::size_t a = 0; a < probes.size(); ++a) {
                for (std::size_t b = a; b < probes.size(); ++b) {
                    if (probes[a].domain != u || probes[b].domain != u) continue;
                    const ExprPtr& f = probes[a].expr;
                    const ExprPtr& g = probes[b].expr;
                    ExprPtr restricted_bracket =
                        restrict_section(p, Section{bracket(f, g, pi), u}, v).expr;
                    ExprPtr bracket_of_restricted =
                        bracket(restrict_section(p, probes[a], v).expr,
                                restrict_section(p, probes[b], v).expr, pi);
                    std::string subject = u + ">=" + v + " {" + print(f) + "," + print(g) + "}";
                    if (exprs_equal(restricted_bracket, bracket_of_restricted,
                                    section_equality_options(p, v, seed, tol)))
                        report.pass("bracket-restriction", subject, "commutes");
                    else
                        report.fail("bracket-restriction", subject,
                                    "bracket does not commute with restriction");
                }
            }
        }
    }
    // bilinearity spot checks
    EqualityOptions opts;
    opts.seed = seed;
    opts.tolerance = tol;
    for (std::size_t a = 0; a + 1 < probes.size(); ++a) {
        const ExprPtr& f = probes[a].expr;
        const ExprPtr& h = probes[a + 1].expr;
        const ExprPtr& g = probes.front().expr;
        ExprPtr lhs = bracket(Expr::sum({f, h}), g, pi);
        ExprPtr rhs = Expr::sum({bracket(f, g, pi), bracket(h, g, pi)});
        std::string subject = "{" + print(f) + "+" + print(h) + "," + print(g) + "}";
        if (exprs_equal(lhs, rhs, opts))
            report.pass("bracket-bilinearity", subject, "additive in the first slot");
        else
            report.fail("bracket-bilinearity", subject, "additivity fails");
    }
    if (report.findings.empty())
        report.pass("bracket-morphism", "(no probes)", "vacuously holds");
    return report;
}

// ---------------------------------------------------------------------------
// Deterministic random polynomial generation for the verification batteries.
// ---------------------------------------------------------------------------

inline ExprPtr random_polynomial(std::mt19937_64& rng, int dim, int max_degree,
                                 int max_terms = 4, int coeff_range = 5) {
    auto randint = [&](int lo, int hi) {
        return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
    };
    int terms = randint(1, max_terms);
    std::vector<ExprPtr> sum;
    for (int t = 0; t < terms; ++t) {
        int c = randint(-coeff_range, coeff_range);
        if (c == 0) c = 1;
        std::vector<ExprPtr> factors{Expr::constant(Rational(c))};
        int degree = randint(0, max_degree);
        for (int d = 0; d < degree; ++d)
            factors.push_back(Expr::variable(randint(1, dim)));
        sum.push_back(Expr::product(std::move(factors)));
    }
    return Expr::sum(std::move(sum));
}

/// Random antisymmetric polynomial bivector on R^n.
inline BivectorField random_bivector(std::mt19937_64& rng, const ModelSpace& space,
                                     int max_degree = 2) {
    std::map<std::pair<int, int>, ExprPtr> entries;
    for (int i = 1; i <= space.n; ++i)
        for (int j = i + 1; j <= space.n; ++j)
            entries[{i, j}] = random_polynomial(rng, space.n, max_degree, 3, 3);
    return BivectorField(space, entries);
}

}  // namespace poissheaf

#endif
