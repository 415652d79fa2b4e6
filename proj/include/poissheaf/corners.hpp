#ifndef POISSHEAF_CORNERS_HPP
#define POISSHEAF_CORNERS_HPP

#include "poissheaf/canonical.hpp"
#include "poissheaf/expr.hpp"

#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace poissheaf {

struct GeometryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// The local model [0, inf)^k x R^(n-k).
struct ModelSpace {
    int n = 0;
    int k = 0;

    ModelSpace() = default;
    ModelSpace(int n_, int k_) : n(n_), k(k_) {
        if (n < 0 || k < 0 || k > n)
            throw GeometryError("model space requires 0 <= k <= n, got n=" +
                                std::to_string(n) + " k=" + std::to_string(k));
    }
    bool operator==(const ModelSpace&) const = default;
};

using PointQ = std::vector<Rational>;

inline std::vector<double> to_doubles(const PointQ& p) {
    std::vector<double> d;
    d.reserve(p.size());
    for (const auto& c : p) d.push_back(to_double(c));
    return d;
}

inline bool point_in_space(const ModelSpace& s, const PointQ& p) {
    if (static_cast<int>(p.size()) != s.n) return false;
    for (int i = 0; i < s.k; ++i)
        if (p[static_cast<std::size_t>(i)] < 0) return false;
    return true;
}

/// Number of the first k coordinates equal to 0.
inline int corner_depth(const ModelSpace& s, const PointQ& p) {
    if (!point_in_space(s, p))
        throw GeometryError("point outside model space");
    int depth = 0;
    for (int i = 0; i < s.k; ++i)
        if (p[static_cast<std::size_t>(i)] == 0) ++depth;
    return depth;
}

/// The k boundary faces {x_i = 0}; each carries the model R^(n-1)_(k-1).
inline std::vector<std::pair<int, ModelSpace>> boundary_faces(const ModelSpace& s) {
    std::vector<std::pair<int, ModelSpace>> faces;
    for (int i = 1; i <= s.k; ++i)
        faces.push_back({i, ModelSpace(s.n - 1, s.k - 1)});
    return faces;
}

// ---------------------------------------------------------------------------
// Regions: finite unions of boxes inside a model space
// ---------------------------------------------------------------------------

struct Interval {
    Rational lo;
    Rational hi;
    bool empty() const { return lo >= hi && !(lo == 0 && hi == 0); }
};

using Box = std::vector<Interval>;

struct Region {
    ModelSpace ambient;
    std::vector<Box> boxes;

    bool empty() const { return boxes.empty(); }

    /// Membership. Box intervals are open except at 0 for the first k
    /// coordinates, where the face belongs to the region.
    bool contains(const PointQ& p) const {
        if (static_cast<int>(p.size()) != ambient.n) return false;
        for (const Box& b : boxes) {
            bool inside = true;
            for (int i = 0; i < ambient.n && inside; ++i) {
                const auto& iv = b[static_cast<std::size_t>(i)];
                const auto& c = p[static_cast<std::size_t>(i)];
                bool at_closed_zero = i < ambient.k && c == 0 && iv.lo == 0;
                if (!at_closed_zero && !(iv.lo < c && c < iv.hi)) inside = false;
            }
            if (inside) return true;
        }
        return false;
    }

    /// Interior sampling boxes for the deterministic sampler.
    std::vector<SampleBox> sample_boxes() const {
        std::vector<SampleBox> out;
        for (const Box& b : boxes) {
            SampleBox sb;
            for (const Interval& iv : b)
                sb.push_back({to_double(iv.lo), to_double(iv.hi)});
            out.push_back(std::move(sb));
        }
        return out;
    }
};

/// Whole-space region: one box covering the default sampling range.
inline Region full_region(const ModelSpace& s, const Rational& radius = Rational(2)) {
    Box b;
    for (int i = 0; i < s.n; ++i) {
        if (i < s.k) b.push_back({Rational(0), radius});
        else b.push_back({-radius, radius});
    }
    return Region{s, {std::move(b)}};
}

inline Region intersect(const Region& a, const Region& b) {
    if (!(a.ambient == b.ambient))
        throw GeometryError("region intersection across different model spaces");
    Region r{a.ambient, {}};
    for (const Box& ba : a.boxes) {
        for (const Box& bb : b.boxes) {
            Box out;
            bool ok = true;
            for (std::size_t i = 0; i < ba.size() && ok; ++i) {
                Interval iv{std::max(ba[i].lo, bb[i].lo), std::min(ba[i].hi, bb[i].hi)};
                if (iv.empty()) ok = false;
                else out.push_back(iv);
            }
            if (ok) r.boxes.push_back(std::move(out));
        }
    }
    return r;
}

/// Deterministic interior sample points of a region (round-robin over boxes).
inline std::vector<std::vector<double>> region_samples(const Region& r,
                                                       std::uint64_t seed,
                                                       int count = kSamplePoints) {
    std::vector<std::vector<double>> pts;
    auto boxes = r.sample_boxes();
    if (boxes.empty()) return pts;
    int per_box = (count + static_cast<int>(boxes.size()) - 1) / static_cast<int>(boxes.size());
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        auto sub = sample_points(boxes[i], seed + i, per_box);
        for (auto& p : sub) {
            if (static_cast<int>(pts.size()) == count) break;
            pts.push_back(std::move(p));
        }
    }
    return pts;
}

// ---------------------------------------------------------------------------
// Smooth maps
// ---------------------------------------------------------------------------

struct SmoothMapDesc {
    ModelSpace source;
    ModelSpace target;
    std::vector<ExprPtr> components;

    void validate() const {
        if (static_cast<int>(components.size()) != target.n)
            throw GeometryError("map component count " + std::to_string(components.size()) +
                                " does not match target dimension " + std::to_string(target.n));
        for (const auto& c : components)
            if (max_var_index(c) > source.n)
                throw GeometryError("map component uses a variable outside the source dimension");
    }
};

inline SmoothMapDesc identity_map(const ModelSpace& s) {
    SmoothMapDesc m{s, s, {}};
    for (int i = 1; i <= s.n; ++i) m.components.push_back(Expr::variable(i));
    return m;
}

/// Jacobian at u: entry (i, j) = d component_i / d x_j evaluated at u.
inline std::vector<std::vector<double>> tangent_map(const SmoothMapDesc& m,
                                                    std::span<const double> u) {
    m.validate();
    std::vector<std::vector<double>> jac;
    for (const auto& comp : m.components) {
        std::vector<double> row;
        for (int j = 1; j <= m.source.n; ++j)
            row.push_back(evaluate(differentiate(comp, j), u));
        jac.push_back(std::move(row));
    }
    return jac;
}

/// Affine means: canonical form is a polynomial of total degree <= 1 with no
/// primitive atoms and constant denominator.
inline bool is_affine(const ExprPtr& e) {
    CanonForm c = detail::to_canon(e);
    return c.den.is_constant() && !c.num.has_primitive_atoms() && c.num.total_degree() <= 1;
}

inline bool is_affine(const SmoothMapDesc& m) {
    for (const auto& c : m.components)
        if (!is_affine(c)) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Fibre products
// ---------------------------------------------------------------------------

struct FibreProductError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct TransversalityError : FibreProductError {
    using FibreProductError::FibreProductError;
};
struct CornerConfigurationError : FibreProductError {
    using FibreProductError::FibreProductError;
};

/// W = X x_{f,Z,g} Y with bounded search regions and a rational grid step.
struct FibreProductDesc {
    ModelSpace X, Y, Z;
    SmoothMapDesc f;  // X -> Z
    SmoothMapDesc g;  // Y -> Z
    Region region_x;
    Region region_y;
    Rational step{1, 2};

    void validate() const {
        f.validate();
        g.validate();
        if (!(f.source == X) || !(g.source == Y))
            throw FibreProductError("map sources do not match X, Y");
        if (!(f.target == Z) || !(g.target == Z))
            throw FibreProductError("maps must share the target Z");
    }
};

inline FibreProductDesc make_fibre_product(ModelSpace X, ModelSpace Y, ModelSpace Z,
                                           SmoothMapDesc f, SmoothMapDesc g,
                                           Rational step = Rational(1, 2)) {
    FibreProductDesc d{X, Y, Z, std::move(f), std::move(g),
                       full_region(X), full_region(Y), std::move(step)};
    d.validate();
    return d;
}

/// dim W = dim X + dim Y - dim Z.
inline int fibre_product_dim(const FibreProductDesc& d) {
    int n = d.X.n + d.Y.n - d.Z.n;
    if (n < 0)
        throw FibreProductError("empty/ill-posed fibre product: dimension " + std::to_string(n));
    return n;
}

namespace detail {

inline std::vector<PointQ> grid_points(const Region& r, const Rational& step) {
    std::vector<PointQ> pts;
    for (const Box& b : r.boxes) {
        std::vector<std::vector<Rational>> axes;
        for (const Interval& iv : b) {
            std::vector<Rational> vals;
            // snap to multiples of step so neighbouring boxes share grid lines
            Rational ratio = iv.lo / step;
            BigInt num = boost::multiprecision::numerator(ratio);
            BigInt den = boost::multiprecision::denominator(ratio);
            BigInt q = num / den;
            if (q * den > num) --q;  // floor for negative ratios
            Rational t = Rational(q) * step;
            while (t < iv.lo) t += step;
            for (; t <= iv.hi; t += step) vals.push_back(t);
            axes.push_back(std::move(vals));
        }
        std::vector<std::size_t> idx(axes.size(), 0);
        bool done = false;
        for (const auto& ax : axes)
            if (ax.empty()) done = true;
        while (!done) {
            PointQ p;
            for (std::size_t i = 0; i < axes.size(); ++i) p.push_back(axes[i][idx[i]]);
            bool dup = false;
            for (const auto& q2 : pts)
                if (q2 == p) { dup = true; break; }
            if (!dup) pts.push_back(std::move(p));
            std::size_t i = 0;
            for (; i < axes.size(); ++i) {
                if (++idx[i] < axes[i].size()) break;
                idx[i] = 0;
            }
            if (i == axes.size()) done = true;
        }
    }
    return pts;
}

inline PointQ eval_map_exact(const SmoothMapDesc& m, const PointQ& p) {
    PointQ out;
    for (const auto& c : m.components) {
        auto v = evaluate_exact(c, p);
        if (!v) throw FibreProductError("unsupported map class: non-exact component");
        out.push_back(*v);
    }
    return out;
}

/// Numeric row-reduction rank with tolerance.
inline int matrix_rank(std::vector<std::vector<double>> m, double tol = 1e-9) {
    int rows = static_cast<int>(m.size());
    int cols = rows ? static_cast<int>(m[0].size()) : 0;
    int rank = 0;
    for (int c = 0; c < cols && rank < rows; ++c) {
        int pivot = -1;
        double best = tol;
        for (int r = rank; r < rows; ++r)
            if (std::abs(m[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]) > best) {
                best = std::abs(m[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]);
                pivot = r;
            }
        if (pivot < 0) continue;
        std::swap(m[static_cast<std::size_t>(rank)], m[static_cast<std::size_t>(pivot)]);
        for (int r = 0; r < rows; ++r) {
            if (r == rank) continue;
            double factor = m[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] /
                            m[static_cast<std::size_t>(rank)][static_cast<std::size_t>(c)];
            for (int cc = c; cc < cols; ++cc)
                m[static_cast<std::size_t>(r)][static_cast<std::size_t>(cc)] -=
                    factor * m[static_cast<std::size_t>(rank)][static_cast<std::size_t>(cc)];
        }
        ++rank;
    }
    return rank;
}

struct UnionFind {
    std::vector<std::size_t> parent;
    explicit UnionFind(std::size_t n) : parent(n) {
        std::iota(parent.begin(), parent.end(), std::size_t{0});
    }
    std::size_t find(std::size_t a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    }
    void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
    int components(const std::vector<std::size_t>& members) {
        std::vector<std::size_t> roots;
        for (auto m : members) {
            std::size_t r = find(m);
            if (std::find(roots.begin(), roots.end(), r) == roots.end()) roots.push_back(r);
        }
        return static_cast<int>(roots.size());
    }
};

}  // namespace detail

/// All grid pairs (x, y) with f(x) = g(y) inside the declared regions,
/// solved exactly. Affine maps only.
inline std::vector<std::pair<PointQ, PointQ>> fibre_product_carrier_samples(
    const FibreProductDesc& d) {
    d.validate();
    if (!is_affine(d.f) || !is_affine(d.g))
        throw FibreProductError("unsupported map class: components must be affine");
    auto xs = detail::grid_points(d.region_x, d.step);
    auto ys = detail::grid_points(d.region_y, d.step);
    std::vector<std::pair<PointQ, PointQ>> out;
    for (const auto& x : xs) {
        PointQ fx = detail::eval_map_exact(d.f, x);
        for (const auto& y : ys) {
            if (fx == detail::eval_map_exact(d.g, y)) out.push_back({x, y});
        }
    }
    return out;
}

struct BoundaryDecomposition {
    int lhs = 0;       // components of boundary(W)
    int rhs_from_x = 0;  // components of boundaryX x_Z Y
    int rhs_from_y = 0;  // components of X x_Z boundaryY
    bool matches() const { return lhs == rhs_from_x + rhs_from_y; }
};

/// Connected-component counts on both sides of the boundary decomposition of
/// the fibre product. Requires a boundaryless Z, affine maps, transversality
/// (full-rank stacked Jacobian at every solution point, interior and
/// single-boundary strata); configurations where faces of X meet faces of Y
/// over the same fibre point are rejected.
inline BoundaryDecomposition boundary_decomposition_count(const FibreProductDesc& d) {
    d.validate();
    if (d.Z.k != 0)
        throw FibreProductError("Z must be a manifold without boundary (k = 0)");
    auto solutions = fibre_product_carrier_samples(d);

    struct Tagged {
        PointQ x, y;
        int dx, dy;
    };
    std::vector<Tagged> pts;
    for (const auto& [x, y] : solutions) {
        int dx = corner_depth(d.X, x);
        int dy = corner_depth(d.Y, y);
        if (dx >= 1 && dy >= 1)
            throw CornerConfigurationError(
                "rejected: a boundary face of X meets a boundary face of Y over one fibre point");
        pts.push_back({x, y, dx, dy});
    }

    // transversality: [df | -dg] has rank dim Z at each solution, and the same
    // with the zeroed face coordinate dropped on single-boundary strata
    for (const auto& t : pts) {
        auto jf = tangent_map(d.f, to_doubles(t.x));
        auto jg = tangent_map(d.g, to_doubles(t.y));
        auto stacked = [&](int drop_x, int drop_y) {
            std::vector<std::vector<double>> m;
            for (int r = 0; r < d.Z.n; ++r) {
                std::vector<double> row;
                for (int c = 0; c < d.X.n; ++c)
                    if (c != drop_x)
                        row.push_back(jf[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]);
                for (int c = 0; c < d.Y.n; ++c)
                    if (c != drop_y)
                        row.push_back(-jg[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]);
                m.push_back(std::move(row));
            }
            return m;
        };
        if (detail::matrix_rank(stacked(-1, -1)) < d.Z.n)
            throw TransversalityError("transversality failure at an interior solution point");
        if (t.dx >= 1) {
            for (int i = 0; i < d.X.k; ++i)
                if (t.x[static_cast<std::size_t>(i)] == 0 &&
                    detail::matrix_rank(stacked(i, -1)) < d.Z.n)
                    throw TransversalityError("transversality failure on a boundary face of X");
        }
        if (t.dy >= 1) {
            for (int i = 0; i < d.Y.k; ++i)
                if (t.y[static_cast<std::size_t>(i)] == 0 &&
                    detail::matrix_rank(stacked(-1, i)) < d.Z.n)
                    throw TransversalityError("transversality failure on a boundary face of Y");
        }
    }

    // grid connectivity: Chebyshev distance <= step over the joined (x, y)
    auto adjacent = [&](const Tagged& a, const Tagged& b) {
        auto within = [&](const PointQ& p, const PointQ& q) {
            for (std::size_t i = 0; i < p.size(); ++i) {
                Rational diff = p[i] - q[i];
                if (diff < 0) diff = -diff;
                if (diff > d.step) return false;
            }
            return true;
        };
        return within(a.x, b.x) && within(a.y, b.y);
    };

    auto count_components = [&](auto keep) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < pts.size(); ++i)
            if (keep(pts[i])) members.push_back(i);
        detail::UnionFind uf(pts.size());
        for (std::size_t a = 0; a < members.size(); ++a)
            for (std::size_t b = a + 1; b < members.size(); ++b)
                if (adjacent(pts[members[a]], pts[members[b]]))
                    uf.unite(members[a], members[b]);
        return uf.components(members);
    };

    BoundaryDecomposition r;
    r.lhs = count_components([](const Tagged& t) { return t.dx + t.dy >= 1; });
    r.rhs_from_x = count_components([](const Tagged& t) { return t.dx >= 1; });
    r.rhs_from_y = count_components([](const Tagged& t) { return t.dy >= 1; });
    return r;
}

}  // namespace poissheaf

#endif
