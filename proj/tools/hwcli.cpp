// Command-line front end: box-mesh generation, Hu-Washizu solves,
// moving-frames experiments, and the built-in verification suite.

#include "commands.hpp"

#include <CLI11.hpp>

#include <string>
#include <vector>

int main(int argc, char** argv) {
    CLI::App app{"hwforms: nonlinear elasticity with differential forms"};
    app.require_subcommand(1);

    hwforms::cli::MeshArgs mesh_args;
    auto* mesh = app.add_subcommand("mesh", "generate a box mesh (OFF/TOFF)");
    mesh->add_option("--dim", mesh_args.dim, "spatial dimension (2 or 3)")->required();
    mesh->add_option("--div", mesh_args.div, "divisions per axis, e.g. 8x8 or 2x2x2")->required();
    mesh->add_option("--lo", mesh_args.lo, "lower corner (default 0)");
    mesh->add_option("--hi", mesh_args.hi, "upper corner (default 1)");
    mesh->add_option("--out", mesh_args.out, "output mesh path")->required();

    std::string config_path;
    auto* solve = app.add_subcommand("solve", "run the Hu-Washizu solver from a config file");
    solve->add_option("config", config_path, "key = value config file")->required();

    hwforms::cli::FramesArgs frames_args;
    auto* frames = app.add_subcommand("frames", "structure-equation diagnostics on a chart grid");
    frames->add_option("--field", frames_args.field,
                       "coframe name: cartesian, rot-xy, rot-atan2, sphere")->required();
    frames->add_option("--div", frames_args.div, "grid divisions (default 16)");
    frames->add_option("--refine", frames_args.refine, "number of refinement levels (default 1)");
    frames->add_option("--out", frames_args.out_prefix, "output prefix for CSV/VTK fields");

    auto* check = app.add_subcommand("check", "fast built-in verification suite");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return hwforms::cli::exit_usage;
    }

    if (mesh->parsed()) return hwforms::cli::cmd_mesh(mesh_args);
    if (solve->parsed()) return hwforms::cli::cmd_solve(config_path);
    if (frames->parsed()) return hwforms::cli::cmd_frames(frames_args);
    if (check->parsed()) return hwforms::cli::cmd_check();
    return hwforms::cli::exit_usage;
}
