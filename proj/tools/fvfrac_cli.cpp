#include <chrono>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <CLI11.hpp>

#include "fvfrac/fvfrac.hpp"

namespace {

using namespace fvfrac;

struct Globals {
    std::string config_path;
    std::vector<std::string> overrides;
    int jobs = 0;
    std::string output_dir;
    bool no_timing = false;
    bool quiet = false;
};

RunConfig load_config(const Globals& g, const std::string& command, std::vector<std::string> extra)
{
    std::vector<std::string> overrides = g.overrides;
    if (g.jobs > 0) overrides.push_back("jobs=" + std::to_string(g.jobs));
    if (!g.output_dir.empty()) overrides.push_back("output_dir=" + g.output_dir);
    if (g.no_timing) overrides.push_back("record_timing=false");
    overrides.insert(overrides.end(), extra.begin(), extra.end());
    const std::string text = g.config_path.empty() ? std::string() : read_text_file(g.config_path);
    RunConfig cfg = parse_config(text, overrides, command);
    validate_config(cfg);
    return cfg;
}

std::string output_path(const RunConfig& cfg, const std::string& fallback_stem, const std::string& ext)
{
    const std::string stem = cfg.prefix.empty() ? fallback_stem : cfg.prefix;
    return (cfg.output_dir.empty() ? std::string(".") : cfg.output_dir) + "/" + stem + ext;
}

std::string fixture_stem(const RunConfig& cfg)
{
    return case_name(cfg.harness.id) + "_n" + std::to_string(cfg.face_pairs) + "_s" + std::to_string(cfg.seed);
}

BoundaryKinds kinds_for_discretize(const RawMesh& raw, const RunConfig& cfg)
{
    BoundaryKinds kinds;
    for (const auto& b : raw.boundary) kinds[b.tag] = BoundaryKind::Dirichlet;
    for (const auto& [tag, b] : cfg.boundary) kinds[tag] = b.kind;
    return kinds;
}

DiscretizationOptions discretization_options(const RunConfig& cfg, bool quiet)
{
    DiscretizationOptions opt;
    opt.symmetry = cfg.harness.symmetry;
    opt.condition_warning = cfg.condition_warning;
    if (!quiet)
        opt.warn = [](const std::string& msg) { std::cerr << "warning: " << msg << '\n'; };
    return opt;
}

int run_mesh_gen(const RunConfig& cfg, const std::string& out)
{
    const RawMesh raw = generate_fixture_mesh(cfg.harness, cfg.face_pairs, cfg.seed);
    const std::string path = out.empty() ? output_path(cfg, fixture_stem(cfg), ".mesh") : out;
    write_text_file(path, format_mesh(raw));
    std::cout << "wrote " << path << ": " << raw.vertices.size() << " vertices, " << raw.cells.size() << " cells, "
              << raw.fractures.size() << " fracture segments\n";
    return 0;
}

int run_discretize(const RunConfig& cfg, bool quiet)
{
    const RawMesh raw = ingest_mesh(read_text_file(cfg.mesh_path));
    const auto t0 = std::chrono::steady_clock::now();
    const SplitMesh mesh = prepare_mesh(raw, cfg.harness.beta);
    const auto t1 = std::chrono::steady_clock::now();
    const StressWeights w = discretize(mesh, StiffnessTensor::isotropic(cfg.harness.mu, cfg.harness.lambda),
                                       kinds_for_discretize(raw, cfg), discretization_options(cfg, quiet));
    const auto t2 = std::chrono::steady_clock::now();
    auto ms = [](auto a, auto b) { return std::chrono::duration<double, std::milli>(b - a).count(); };
    std::size_t entries = 0;
    for (const auto& f : w.faces) entries += f.unknowns.size() + f.data.size();
    std::cout << "cells " << mesh.num_cells() << "\nfaces " << mesh.faces.size() << "\nfracture_pairs "
              << mesh.num_pairs() << "\ninteraction_regions " << mesh.interaction_regions.size() << "\nweight_blocks " << entries
              << "\nmax_local_condition " << format_number(w.max_condition) << "\nsplit_ms "
              << format_number(cfg.harness.record_timing ? ms(t0, t1) : 0.0) << "\ndiscretize_ms "
              << format_number(cfg.harness.record_timing ? ms(t1, t2) : 0.0) << '\n';
    return 0;
}

std::string fracture_table(const SolvedProblem& sp)
{
    const SplitMesh& m = sp.problem.mesh;
    const std::vector<Vec2> t = fracture_tractions(sp);
    const std::vector<Vec2> j = local_jumps(sp);
    std::ostringstream os;
    os << "pair,fracture_id,x,y,jump_n,jump_t,traction_n,traction_t\n";
    for (std::size_t p = 0; p < m.num_pairs(); ++p) {
        const Vec2 c = m.plus_face(p).center;
        os << p << ',' << m.fracture_pairs[p].fracture_id << ',' << format_number(c.x()) << ','
           << format_number(c.y()) << ',' << format_number(j[p].x()) << ',' << format_number(j[p].y()) << ','
           << format_number(m.fracture_normal(p).dot(t[p])) << ',' << format_number(m.fracture_tangent(p).dot(t[p]))
           << '\n';
    }
    return os.str();
}

int run_solve(const RunConfig& cfg, bool quiet)
{
    Problem problem;
    std::string stem;
    if (!cfg.mesh_path.empty()) {
        problem.mesh = prepare_mesh(ingest_mesh(read_text_file(cfg.mesh_path)), cfg.harness.beta);
        problem.stiffness.assign(problem.mesh.num_cells(), StiffnessTensor::isotropic(cfg.harness.mu, cfg.harness.lambda));
        problem.bcs = cfg.boundary_conditions();
        problem.closures = cfg.fractures;
        for (const auto& [id, c] : cfg.fractures)
            if (std::holds_alternative<CoulombFriction>(c)) problem.friction = true;
        stem = "solution";
    } else {
        problem = build_problem(cfg.harness, cfg.face_pairs, cfg.seed);
        stem = fixture_stem(cfg);
    }
    if (cfg.body_force.squaredNorm() > 0.0) problem.body_force.assign(problem.mesh.num_cells(), cfg.body_force);
    const SolvedProblem sp = solve_problem(std::move(problem), discretization_options(cfg, quiet), cfg.harness.newton);
    const SplitMesh& m = sp.problem.mesh;
    std::cout << "cells " << m.num_cells() << "\nfracture_pairs " << m.num_pairs() << "\nlinear_residual "
              << format_number(sp.solution.residual) << "\nnewton_iterations " << sp.solution.newton_iterations
              << "\ninterface_equilibrium " << format_number(interface_equilibrium_residual(sp)) << "\nwall_ms "
              << format_number(cfg.harness.record_timing ? sp.wall_ms : 0.0) << '\n';
    if (cfg.write_vtk) {
        const std::string path = output_path(cfg, stem, ".vtk");
        write_vtk(m, sp.solution, path);
        std::cout << "wrote " << path << '\n';
    }
    if (m.num_pairs() > 0) {
        const std::string path = output_path(cfg, stem, "_fracture.csv");
        write_text_file(path, fracture_table(sp));
        std::cout << "wrote " << path << '\n';
    }
    return 0;
}

int run_verify(const RunConfig& cfg, bool quiet)
{
    std::function<void(const std::string&)> progress;
    if (!quiet) progress = [](const std::string& msg) { std::cerr << msg << '\n'; };
    const ErrorReport report = run_case(cfg.harness, progress);
    const std::string stem = cfg.prefix.empty() ? report.case_id : cfg.prefix;
    write_report(report, cfg.output_dir.empty() ? "." : cfg.output_dir, stem);
    bool ok = true;
    for (const auto& c : evaluate_case(cfg.harness, report)) {
        std::cout << c.line() << '\n';
        ok = ok && c.pass;
    }
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Cell-centered finite-volume elasticity with fractures: fixtures, solves and convergence sweeps"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("-c,--config", g.config_path, "Config file (key=value grammar with [sections])")->check(CLI::ExistingFile);
    app.add_option("--set", g.overrides, "Override a config key, e.g. --set tip_radius=0.12")->allow_extra_args(false);
    app.add_option("-j,--jobs", g.jobs, "Parallel solves in verify sweeps")->check(CLI::PositiveNumber);
    app.add_option("-o,--output", g.output_dir, "Output directory");
    app.add_flag("--no-timing", g.no_timing, "Write zero wall times so outputs are byte-identical");
    app.add_flag("-q,--quiet", g.quiet, "No progress or warning messages");

    std::string case_opt, mesh_opt, out_file;
    int face_pairs = 0;
    long long seed = -1;
    auto fixture_options = [&](CLI::App* sub) {
        sub->add_option("--case", case_opt, "case1, case2, case3 or network");
        sub->add_option("-n,--face-pairs", face_pairs, "Face pairs along the 10-unit fracture")->check(CLI::PositiveNumber);
        sub->add_option("-s,--seed", seed, "Fixture seed")->check(CLI::NonNegativeNumber);
    };
    CLI::App* mesh_gen = app.add_subcommand("mesh-gen", "Write a fixture mesh in the exchange format");
    fixture_options(mesh_gen);
    mesh_gen->add_option("-f,--file", out_file, "Output mesh file");
    CLI::App* disc = app.add_subcommand("discretize", "Compute stress weights for a mesh and report timings");
    disc->add_option("-m,--mesh", mesh_opt, "Mesh file");
    CLI::App* solve = app.add_subcommand("solve", "Solve one problem on a mesh file or a case fixture");
    solve->add_option("-m,--mesh", mesh_opt, "Mesh file");
    fixture_options(solve);
    CLI::App* verify = app.add_subcommand("verify", "Run a convergence sweep and check its acceptance criteria");
    verify->add_option("case", case_opt, "case1, case2, case3 or network")->required();

    CLI11_PARSE(app, argc, argv);

    std::vector<std::string> extra;
    if (!case_opt.empty()) extra.push_back("case=" + case_opt);
    if (!mesh_opt.empty()) extra.push_back("mesh=" + mesh_opt);
    if (face_pairs > 0) extra.push_back("face_pairs=" + std::to_string(face_pairs));
    if (seed >= 0) extra.push_back("seed=" + std::to_string(seed));
    try {
        CLI::App* sub = app.get_subcommands().front();
        const std::string command = sub->get_name();
        RunConfig cfg = load_config(g, command, extra);
        if (command == "mesh-gen") return run_mesh_gen(cfg, out_file);
        if (command == "discretize") return run_discretize(cfg, g.quiet);
        if (command == "solve") return run_solve(cfg, g.quiet);
        return run_verify(cfg, g.quiet);
    } catch (const fvfrac::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
