// Command-line front end: loads a manifest, runs the verification batteries
// and prints deterministic reports. Exit codes: 0 all-pass, 1 any FAIL,
// 2 usage/load error.

#include "poissheaf/commands.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>

using namespace poissheaf;

namespace {

int emit(const Report& report, const std::string& format) {
    if (format == "json")
        std::cout << render_json(report);
    else
        std::cout << report.render_text();
    return report.all_pass() ? 0 : 1;
}

PointQ parse_point(const std::string& text, int dim) {
    PointQ p;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t comma = text.find(',', start);
        std::string piece = text.substr(start, comma == std::string::npos
                                                   ? std::string::npos
                                                   : comma - start);
        if (!piece.empty()) p.push_back(parse_rational(piece));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (static_cast<int>(p.size()) != dim)
        throw ManifestError("point must have " + std::to_string(dim) + " coordinates");
    return p;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sheaf and Poisson-structure verification on manifolds with corners"};
    app.require_subcommand(1);

    std::string manifest_path;
    std::string format = "text";
    RunOptions run;

    app.add_option("--seed", run.seed, "sampling seed");
    app.add_option("--tol", run.tolerance, "numeric tolerance");
    app.add_option("--format", format, "report format: text | json")
        ->check(CLI::IsMember({"text", "json"}));

    auto* sheaf = app.add_subcommand("check-sheaf", "presheaf/sheaf axiom batteries");
    sheaf->add_option("manifest", manifest_path)->required();

    auto* poisson = app.add_subcommand("check-poisson", "Poisson bracket batteries");
    poisson->add_option("manifest", manifest_path)->required();

    std::string f_name, g_name;
    auto* bracket_cmd = app.add_subcommand("bracket", "print the canonical bracket of two sections");
    bracket_cmd->add_option("manifest", manifest_path)->required();
    bracket_cmd->add_option("f", f_name)->required();
    bracket_cmd->add_option("g", g_name)->required();

    std::string fibre_name;
    auto* fibre = app.add_subcommand("fibre", "fibre-product dimension and boundary counts");
    fibre->add_option("manifest", manifest_path)->required();
    fibre->add_option("descriptor", fibre_name)->required();

    std::string section_name, point_text;
    auto* stalk = app.add_subcommand("stalk", "residue and maximal-ideal membership at a point");
    stalk->add_option("manifest", manifest_path)->required();
    stalk->add_option("section", section_name)->required();
    stalk->add_option("point", point_text, "comma-separated coordinates")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        Manifest m = load_manifest(manifest_path);
        if (sheaf->parsed()) return emit(cmd_check_sheaf(m, run), format);
        if (poisson->parsed()) return emit(cmd_check_poisson(m, run), format);
        if (bracket_cmd->parsed()) {
            std::cout << cmd_bracket(m, f_name, g_name) << "\n";
            return 0;
        }
        if (fibre->parsed()) return emit(cmd_fibre(m, fibre_name), format);
        if (stalk->parsed()) {
            std::cout << cmd_stalk(m, section_name, parse_point(point_text, m.space.n));
            return 0;
        }
    } catch (const ManifestError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const SheafError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
