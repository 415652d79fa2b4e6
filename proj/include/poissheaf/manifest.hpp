#ifndef POISSHEAF_MANIFEST_HPP
#define POISSHEAF_MANIFEST_HPP

#include "poissheaf/poisson.hpp"
#include "poissheaf/sheaf.hpp"

#include <json.hpp>

#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace poissheaf {

struct ManifestError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Cover {
    std::string of;
    std::vector<std::string> members;
};

struct GlueCase {
    std::string name;
    std::string cover;
    std::vector<std::string> parts;  // section names aligned with cover members
    bool expect_pass = true;
};

struct MapDecl {
    SmoothMapDesc map;
    std::map<std::string, std::string> preimages;
};

/// Fully validated in-memory form of a manifest file (see docs/manifest.md).
struct Manifest {
    ModelSpace space;
    OpenLattice lattice;
    std::map<std::string, Section> sections;
    std::map<std::string, Cover> covers;
    std::vector<GlueCase> glue_cases;
    std::map<std::string, MapDecl> maps;
    std::optional<BivectorField> pi;
    std::map<std::string, FibreProductDesc> fibre_products;
    std::map<std::pair<std::string, std::string>, Substitution> twists_;
    bool has_lattice = false;
};

namespace detail {

inline Rational json_rational(const nlohmann::json& j) {
    if (j.is_number_integer()) return Rational(j.get<long long>());
    if (j.is_string()) return parse_rational(j.get<std::string>());
    throw ManifestError("expected an integer or a rational string, got " + j.dump());
}

inline Box json_box(const nlohmann::json& j, int dim) {
    if (!j.is_array() || static_cast<int>(j.size()) != dim)
        throw ManifestError("box must list one interval per coordinate: " + j.dump());
    Box b;
    for (const auto& iv : j) {
        if (!iv.is_array() || iv.size() != 2)
            throw ManifestError("interval must be [lo, hi]: " + iv.dump());
        b.push_back({json_rational(iv[0]), json_rational(iv[1])});
    }
    return b;
}

inline Region json_region(const nlohmann::json& j, const ModelSpace& space) {
    Region r{space, {}};
    if (j.contains("boxes"))
        for (const auto& b : j.at("boxes")) r.boxes.push_back(json_box(b, space.n));
    return r;
}

inline ModelSpace json_space(const nlohmann::json& j) {
    try {
        return ModelSpace(j.at("n").get<int>(), j.at("k").get<int>());
    } catch (const GeometryError& e) {
        throw ManifestError(e.what());
    }
}

inline PointQ json_point(const nlohmann::json& j, int dim) {
    if (!j.is_array() || static_cast<int>(j.size()) != dim)
        throw ManifestError("point must have " + std::to_string(dim) + " coordinates");
    PointQ p;
    for (const auto& c : j) p.push_back(json_rational(c));
    return p;
}

}  // namespace detail

inline Manifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ManifestError("cannot open manifest '" + path + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ManifestError(std::string("manifest parse error: ") + e.what());
    }

    Manifest m;
    if (!j.contains("space")) throw ManifestError("manifest is missing \"space\"");
    m.space = detail::json_space(j.at("space"));
    m.lattice = OpenLattice(m.space);

    auto parse_expr = [&](const std::string& text, int dim) {
        try {
            return parse(text, dim);
        } catch (const ParseError& e) {
            throw ManifestError("expression '" + text + "': " + e.what());
        }
    };

    if (j.contains("opens")) {
        m.has_lattice = true;
        for (const auto& [name, spec] : j.at("opens").items())
            m.lattice.add_open(name, detail::json_region(spec, m.space));
        if (j.contains("inclusions"))
            for (const auto& inc : j.at("inclusions")) {
                if (!inc.is_array() || inc.size() != 2)
                    throw ManifestError("inclusion must be [sub, super]");
                try {
                    m.lattice.declare_inclusion(inc[0].get<std::string>(),
                                                inc[1].get<std::string>());
                } catch (const SheafError& e) {
                    throw ManifestError(e.what());
                }
            }
        if (j.contains("intersections"))
            for (const auto& [key, result] : j.at("intersections").items()) {
                auto comma = key.find(',');
                if (comma == std::string::npos)
                    throw ManifestError("intersection key must be \"A,B\": " + key);
                try {
                    m.lattice.declare_intersection(key.substr(0, comma), key.substr(comma + 1),
                                                   result.get<std::string>());
                } catch (const SheafError& e) {
                    throw ManifestError(e.what());
                }
            }
        try {
            m.lattice.validate_geometry();
        } catch (const SheafError& e) {
            throw ManifestError(std::string("geometric inconsistency: ") + e.what());
        }
    }

    if (j.contains("sections")) {
        for (const auto& [name, spec] : j.at("sections").items()) {
            std::string domain = spec.at("domain").get<std::string>();
            if (!m.lattice.has_open(domain))
                throw ManifestError("section '" + name + "' declared over unknown open '" +
                                    domain + "'");
            m.sections[name] =
                Section{parse_expr(spec.at("expr").get<std::string>(), m.space.n), domain};
        }
    }

    if (j.contains("covers")) {
        for (const auto& [name, spec] : j.at("covers").items()) {
            Cover c;
            c.of = spec.at("of").get<std::string>();
            if (!m.lattice.has_open(c.of))
                throw ManifestError("cover '" + name + "' covers unknown open '" + c.of + "'");
            for (const auto& member : spec.at("members")) {
                std::string mn = member.get<std::string>();
                if (!m.lattice.has_open(mn))
                    throw ManifestError("cover '" + name + "' lists unknown open '" + mn + "'");
                c.members.push_back(mn);
            }
            m.covers[name] = c;
        }
    }

    if (j.contains("glue_cases")) {
        for (const auto& spec : j.at("glue_cases")) {
            GlueCase g;
            g.name = spec.at("name").get<std::string>();
            g.cover = spec.at("cover").get<std::string>();
            if (!m.covers.count(g.cover))
                throw ManifestError("glue case '" + g.name + "' names unknown cover '" +
                                    g.cover + "'");
            for (const auto& part : spec.at("parts")) {
                std::string pn = part.get<std::string>();
                if (!m.sections.count(pn))
                    throw ManifestError("glue case '" + g.name + "' names unknown section '" +
                                        pn + "'");
                g.parts.push_back(pn);
            }
            if (g.parts.size() != m.covers.at(g.cover).members.size())
                throw ManifestError("glue case '" + g.name +
                                    "' must provide one part per cover member");
            if (spec.contains("expect"))
                g.expect_pass = spec.at("expect").get<std::string>() == "pass";
            m.glue_cases.push_back(std::move(g));
        }
    }

    if (j.contains("maps")) {
        for (const auto& [name, spec] : j.at("maps").items()) {
            MapDecl decl;
            decl.map.source = detail::json_space(spec.at("source"));
            decl.map.target = detail::json_space(spec.at("target"));
            for (const auto& comp : spec.at("components"))
                decl.map.components.push_back(
                    parse_expr(comp.get<std::string>(), decl.map.source.n));
            try {
                decl.map.validate();
            } catch (const GeometryError& e) {
                throw ManifestError("map '" + name + "': " + e.what());
            }
            if (spec.contains("preimages"))
                for (const auto& [open, pre] : spec.at("preimages").items()) {
                    if (!m.lattice.has_open(open) || !m.lattice.has_open(pre.get<std::string>()))
                        throw ManifestError("map '" + name + "' preimage references unknown open");
                    decl.preimages[open] = pre.get<std::string>();
                }
            m.maps[name] = std::move(decl);
        }
    }

    if (j.contains("pi")) {
        std::map<std::pair<int, int>, ExprPtr> entries;
        for (const auto& [key, text] : j.at("pi").items()) {
            auto comma = key.find(',');
            if (comma == std::string::npos)
                throw ManifestError("bivector key must be \"i,j\": " + key);
            int i = std::stoi(key.substr(0, comma));
            int k = std::stoi(key.substr(comma + 1));
            entries[{i, k}] = parse_expr(text.get<std::string>(), m.space.n);
        }
        try {
            m.pi.emplace(m.space, entries);
        } catch (const PoissonError& e) {
            throw ManifestError(e.what());
        }
    }

    if (j.contains("fibre_products")) {
        for (const auto& [name, spec] : j.at("fibre_products").items()) {
            FibreProductDesc d;
            d.X = detail::json_space(spec.at("X"));
            d.Y = detail::json_space(spec.at("Y"));
            d.Z = detail::json_space(spec.at("Z"));
            d.f = SmoothMapDesc{d.X, d.Z, {}};
            for (const auto& comp : spec.at("f"))
                d.f.components.push_back(parse_expr(comp.get<std::string>(), d.X.n));
            d.g = SmoothMapDesc{d.Y, d.Z, {}};
            for (const auto& comp : spec.at("g"))
                d.g.components.push_back(parse_expr(comp.get<std::string>(), d.Y.n));
            d.region_x = spec.contains("region_x")
                             ? detail::json_region(spec.at("region_x"), d.X)
                             : full_region(d.X);
            d.region_y = spec.contains("region_y")
                             ? detail::json_region(spec.at("region_y"), d.Y)
                             : full_region(d.Y);
            if (spec.contains("step")) d.step = detail::json_rational(spec.at("step"));
            try {
                d.validate();
            } catch (const std::runtime_error& e) {
                throw ManifestError("fibre product '" + name + "': " + e.what());
            }
            m.fibre_products[name] = std::move(d);
        }
    }

    if (j.contains("restriction_twists")) {
        // negative-fixture hook: install a substitution on one restriction edge
        for (const auto& [key, subspec] : j.at("restriction_twists").items()) {
            auto comma = key.find(',');
            if (comma == std::string::npos)
                throw ManifestError("restriction twist key must be \"U,V\": " + key);
            Substitution sub;
            for (const auto& [var, text] : subspec.items()) {
                if (var.size() < 2 || var[0] != 'x')
                    throw ManifestError("twist variable must be named x<i>: " + var);
                sub[std::stoi(var.substr(1))] = parse_expr(text.get<std::string>(), m.space.n);
            }
            m.lattice.region(key.substr(0, comma));   // existence checks
            m.lattice.region(key.substr(comma + 1));
            // stored on the presheaf built below
            m.twists_[{key.substr(0, comma), key.substr(comma + 1)}] = std::move(sub);
        }
    }

    return m;
}

inline FunctionPresheaf presheaf_of(const Manifest& m) {
    return FunctionPresheaf{m.lattice, m.space, m.twists_};
}

}  // namespace poissheaf

#endif
