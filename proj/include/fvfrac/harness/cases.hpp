#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "fvfrac/analytic.hpp"
#include "fvfrac/assembly.hpp"
#include "fvfrac/constitutive.hpp"
#include "fvfrac/discretization/local.hpp"
#include "fvfrac/errors.hpp"
#include "fvfrac/harness/fixtures.hpp"
#include "fvfrac/harness/metrics.hpp"
#include "fvfrac/mesh/split_mesh.hpp"
#include "fvfrac/solver.hpp"

namespace fvfrac {

enum class CaseId { Case1, Case2, Case3, Network };

inline std::string case_name(CaseId id)
{
    switch (id) {
    case CaseId::Case1: return "case1";
    case CaseId::Case2: return "case2";
    case CaseId::Case3: return "case3";
    case CaseId::Network: return "network";
    }
    return "?";
}

inline CaseId parse_case_id(const std::string& s)
{
    if (s == "case1") return CaseId::Case1;
    if (s == "case2") return CaseId::Case2;
    if (s == "case3") return CaseId::Case3;
    if (s == "network") return CaseId::Network;
    throw ConfigError("unknown case '" + s + "' (expected case1, case2, case3 or network)");
}

/// Fractures of the intersecting-network study: an X-crossing, a T-junction, a fracture
/// cut by the east boundary and two isolated fractures. Coordinates are multiples of 2.5
/// so every refinement with face_pairs divisible by 4 conforms.
inline std::vector<FractureLine> default_network()
{
    return {
        {{-15.0, 0.0}, {15.0, 0.0}, 1},   {{0.0, -10.0}, {0.0, 10.0}, 2},      {{7.5, 0.0}, {7.5, 10.0}, 3},
        {{12.5, 12.5}, {25.0, 12.5}, 4},  {{-20.0, -12.5}, {-10.0, -12.5}, 5}, {{-10.0, 7.5}, {-10.0, 17.5}, 6},
    };
}

/// Reads fracture lines, one `xa ya xb yb id` per line, `#` comments.
inline std::vector<FractureLine> parse_fracture_lines(std::string_view text)
{
    std::vector<FractureLine> out;
    int number = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        ++number;
        auto raw = text.substr(pos, nl - pos);
        pos = nl + 1;
        if (auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
        const auto tokens = detail::split_ws(detail::trim(raw));
        if (tokens.empty()) continue;
        if (tokens.size() != 5) throw ParseError(number, "fracture line must be 'xa ya xb yb id'");
        FractureLine f;
        f.a = {detail::parse_number<double>(tokens[0], number), detail::parse_number<double>(tokens[1], number)};
        f.b = {detail::parse_number<double>(tokens[2], number), detail::parse_number<double>(tokens[3], number)};
        f.id = detail::parse_number<int>(tokens[4], number);
        out.push_back(f);
    }
    return out;
}

struct CaseSpec {
    CaseId id = CaseId::Case1;
    double half_width = 25.0;
    double fracture_length = 10.0;
    double mu = 1.0;
    double lambda = 1.0;
    double jump = 1e-3;
    double pressure = 1e-3;
    double compression = 1e-3;  // case 3 far-field uniaxial compression
    double alpha_deg = 20.0;
    double friction_angle_deg = 30.0;
    std::vector<int> refinements{8, 16, 32, 64};
    int reference_refinement = 0;  // self-convergence reference; 0 means four times the finest
    int seeds = 3;
    std::uint64_t first_seed = 0;
    double tip_radius = 0.12;
    double singular_radius = 1.0;  // diagnostic exclusion around tips, junctions and boundary crossings
    double beta = 1.0 / 3.0;
    double grading = 0.25;
    double jitter = 0.15;
    StressSymmetry symmetry = StressSymmetry::Weak;
    NewtonConfig newton;
    int jobs = 1;
    bool record_timing = true;
    std::vector<FractureLine> network = default_network();

    void validate() const
    {
        if (refinements.empty()) throw ConfigError("refinement list is empty");
        for (std::size_t k = 0; k < refinements.size(); ++k) {
            if (refinements[k] < 2) throw ConfigError("refinement targets must be at least 2 face pairs");
            if (k > 0 && refinements[k] <= refinements[k - 1])
                throw ConfigError("refinement list must be strictly increasing");
        }
        if (seeds < 1) throw ConfigError("at least one seed is required");
        if (jobs < 1) throw ConfigError("jobs must be at least 1");
        if (!(tip_radius >= 0.0)) throw ConfigError("tip radius must be non-negative");
        if (self_converging() && reference() <= refinements.back())
            throw ConfigError("reference refinement must be finer than every refinement level");
        newton.validate();
    }

    bool self_converging() const { return id != CaseId::Case1; }
    int reference() const { return reference_refinement > 0 ? reference_refinement : 4 * refinements.back(); }
    double h(int face_pairs) const { return fracture_length / face_pairs; }
};

/// Sweep defaults per case. Self-converging cases use a reference four times finer than
/// the finest level, except the network whose reference is capped by the cell budget.
inline CaseSpec default_case_spec(CaseId id)
{
    CaseSpec s;
    s.id = id;
    switch (id) {
    case CaseId::Case1: s.refinements = {8, 16, 32, 64}; break;
    case CaseId::Case2:
    case CaseId::Case3:
        s.refinements = {8, 16, 32};
        s.reference_refinement = 128;
        break;
    case CaseId::Network:
        s.refinements = {8, 16, 32};
        s.reference_refinement = 64;
        break;
    }
    return s;
}

/// One row of a report: a single solve at (refinement, seed).
struct SolveRecord {
    int refinement = 0;  // index into the refinement list
    int face_pairs = 0;
    std::uint64_t seed = 0;
    double h = 0.0;
    double err_u = 0.0;
    double err_T = 0.0;
    double err_T_tip = 0.0;
    int newton_iters = 0;
    double wall_ms = 0.0;
    std::vector<std::pair<std::string, double>> extra;

    double get(const std::string& key) const
    {
        for (const auto& [k, v] : extra)
            if (k == key) return v;
        throw Error("report has no field '" + key + "'");
    }
};

struct AverageRecord {
    int face_pairs = 0;
    double h = 0.0;
    double err_u = 0.0;
    double err_T = 0.0;
    double err_T_tip = 0.0;
    double newton_iters = 0.0;
    double wall_ms = 0.0;
    std::vector<std::pair<std::string, double>> extra;  // seed means of the per-solve diagnostics

    double get(const std::string& key) const
    {
        for (const auto& [k, v] : extra)
            if (k == key) return v;
        throw Error("summary has no field '" + key + "'");
    }
};

struct ErrorReport {
    std::string case_id;
    int seeds = 0;
    std::vector<SolveRecord> rows;
    std::vector<SolveRecord> references;  // diagnostics of the self-convergence reference solves
    std::vector<AverageRecord> averages;
    std::optional<double> order_u;
    std::optional<double> order_T;
    std::optional<double> order_T_tip;
};

/// A fully set-up problem on one fixture mesh.
struct Problem {
    SplitMesh mesh;
    std::vector<StiffnessTensor> stiffness;
    BoundaryConditions bcs;
    FractureConditions closures;
    std::vector<Vec2> body_force;  // per cell, empty for none
    bool friction = false;
};

struct SolvedProblem {
    Problem problem;
    StressWeights weights;
    Solution solution;
    double wall_ms = 0.0;
};

inline double case_poisson(const CaseSpec& s) { return poisson_ratio(s.mu, s.lambda); }

/// Displacement-discontinuity oracle of case 1.
inline PlacedCrack case1_oracle(const CaseSpec& s)
{
    PlacedCrack c;
    c.crack.half_length = 0.5 * s.fracture_length;
    c.crack.nu = case_poisson(s);
    c.crack.mu = s.mu;
    c.crack.dt = s.jump;
    return c;
}

/// Far-field stress of case 3 in mesh coordinates, where the fracture lies on the x-axis
/// and the load axis is rotated by -alpha.
inline Mat2 case3_stress(const CaseSpec& s)
{
    const Case3BoundaryData d = case3_boundary_data(-s.compression, s.mu, s.lambda);
    const Mat2 r = rotation(-degrees_to_radians(s.alpha_deg));
    return r * d.stress * r.transpose();
}

inline std::vector<FractureLine> case_fractures(const CaseSpec& s)
{
    if (s.id == CaseId::Network) return s.network;
    const double a = 0.5 * s.fracture_length;
    return {{{-a, 0.0}, {a, 0.0}, 0}};
}

inline RawMesh generate_fixture_mesh(const CaseSpec& s, int face_pairs, std::uint64_t seed)
{
    if (face_pairs < 2) throw MeshError("fixture needs at least 2 fracture face pairs");
    FixtureSpec f;
    f.half_width = s.half_width;
    f.fractures = case_fractures(s);
    f.h = s.h(face_pairs);
    f.grading = s.grading;
    f.jitter = s.jitter;
    f.seed = detail::mix_seed(seed, static_cast<std::uint64_t>(face_pairs));
    return generate_mesh(f);
}

inline Problem build_problem(const CaseSpec& s, int face_pairs, std::uint64_t seed)
{
    Problem p;
    p.mesh = prepare_mesh(generate_fixture_mesh(s, face_pairs, seed), s.beta);
    p.stiffness.assign(p.mesh.num_cells(), StiffnessTensor::isotropic(s.mu, s.lambda));
    switch (s.id) {
    case CaseId::Case1: {
        const PlacedCrack oracle = case1_oracle(s);
        for (int tag = 1; tag <= 4; ++tag)
            p.bcs[tag] = BoundaryCondition::dirichlet([oracle](const Vec2& x) { return oracle.displacement(x); });
        p.closures.push_back({0, PrescribedJump{{Vec2(0.0, s.jump)}}});
        break;
    }
    case CaseId::Case2: {
        for (int tag = 1; tag <= 4; ++tag) p.bcs[tag] = BoundaryCondition::dirichlet(Vec2(0.0, 0.0));
        // the pressure acts against the plus normal
        const Vec2 n = p.mesh.num_pairs() > 0 ? p.mesh.fracture_normal(0) : Vec2(0.0, -1.0);
        p.closures.push_back({0, PrescribedTraction{{Vec2(-s.pressure * n)}}});
        break;
    }
    case CaseId::Case3: {
        const Mat2 stress = case3_stress(s);
        const Mat2 strain = isotropic_compliance(stress, s.mu, s.lambda);
        p.bcs[1] = BoundaryCondition::neumann(Vec2(stress * Vec2(0.0, -1.0)));
        p.bcs[2] = BoundaryCondition::neumann(Vec2(stress * Vec2(1.0, 0.0)));
        p.bcs[3] = BoundaryCondition::neumann(Vec2(stress * Vec2(0.0, 1.0)));
        p.bcs[4] = BoundaryCondition::dirichlet([strain](const Vec2& x) { return Vec2(strain * x); });
        p.closures.push_back({0, CoulombFriction{std::tan(degrees_to_radians(s.friction_angle_deg))}});
        p.friction = true;
        break;
    }
    case CaseId::Network: {
        for (int tag = 1; tag <= 4; ++tag) p.bcs[tag] = BoundaryCondition::dirichlet(Vec2(0.0, 0.0));
        for (int id : fracture_ids(p.mesh)) p.closures.push_back({id, PrescribedJump{{Vec2(0.0, s.jump)}}});
        break;
    }
    }
    return p;
}

/// Discretizes and solves; friction problems go through Newton's method.
inline SolvedProblem solve_problem(Problem problem, const DiscretizationOptions& options, const NewtonConfig& newton)
{
    const auto t0 = std::chrono::steady_clock::now();
    SolvedProblem out;
    out.problem = std::move(problem);
    const Problem& p = out.problem;
    out.weights = discretize(p.mesh, p.stiffness, kinds_of(p.bcs), options);
    const Eigen::VectorXd data = boundary_data(p.mesh, out.weights.boundary, p.bcs);
    const double scale = stiffness_scale(p.stiffness);
    if (p.friction) {
        const FrictionProblem fp = make_friction_problem(p.mesh, out.weights, data, p.closures, p.body_force, scale);
        out.solution = solve_friction(fp, newton, out.weights, data);
    } else {
        const GlobalSystem sys = assemble_global(p.mesh, out.weights, data, p.closures, p.body_force, nullptr, scale);
        out.solution = solve_linear(sys, out.weights, data);
    }
    out.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

inline SolvedProblem solve_case(const CaseSpec& s, int face_pairs, std::uint64_t seed)
{
    DiscretizationOptions opt;
    opt.symmetry = s.symmetry;
    return solve_problem(build_problem(s, face_pairs, seed), opt, s.newton);
}

// ---- per-solve diagnostics -------------------------------------------------------

/// Plus-side traction per length on each fracture pair.
inline std::vector<Vec2> fracture_tractions(const SolvedProblem& sp)
{
    const SplitMesh& m = sp.problem.mesh;
    std::vector<Vec2> t(m.num_pairs());
    for (std::size_t p = 0; p < m.num_pairs(); ++p)
        t[p] = sp.solution.tractions[m.fracture_pairs[p].plus_face] / m.plus_face(p).measure;
    return t;
}

/// max |T+ + T-| over pairs relative to the largest face traction.
inline double interface_equilibrium_residual(const SolvedProblem& sp)
{
    const SplitMesh& m = sp.problem.mesh;
    double tmax = 0.0, r = 0.0;
    for (std::size_t f = 0; f < m.faces.size(); ++f) tmax = std::max(tmax, sp.solution.tractions[f].norm());
    for (const auto& pr : m.fracture_pairs)
        r = std::max(r, (sp.solution.tractions[pr.plus_face] + sp.solution.tractions[pr.minus_face]).norm());
    return tmax > 0.0 ? r / tmax : r;
}

/// Jumps in the fracture frame: x = normal, y = tangential.
inline std::vector<Vec2> local_jumps(const SolvedProblem& sp)
{
    const SplitMesh& m = sp.problem.mesh;
    std::vector<Vec2> out(m.num_pairs());
    for (std::size_t p = 0; p < m.num_pairs(); ++p) {
        const Vec2 j = sp.solution.jump(static_cast<int>(p));
        out[p] = {m.fracture_normal(p).dot(j), m.fracture_tangent(p).dot(j)};
    }
    return out;
}

/// Fracture-face displacement pairs (u+, u-) interleaved per pair.
inline std::vector<Vec2> fracture_displacements(const SolvedProblem& sp, int side)
{
    const SplitMesh& m = sp.problem.mesh;
    std::vector<Vec2> out(m.num_pairs());
    for (std::size_t p = 0; p < m.num_pairs(); ++p)
        out[p] = side > 0 ? sp.solution.plus(static_cast<int>(p)) : sp.solution.minus(static_cast<int>(p));
    return out;
}

/// Sneddon comparison: max |opening - analytic| over pairs, skipping the outermost face
/// at each end.
inline double sneddon_max_deviation(const CaseSpec& s, const SolvedProblem& sp)
{
    const SplitMesh& m = sp.problem.mesh;
    const double nu = case_poisson(s);
    const double a = 0.5 * s.fracture_length;
    double worst = 0.0;
    const std::vector<Vec2> jumps = local_jumps(sp);
    for (std::size_t p = 0; p < m.num_pairs(); ++p) {
        const Face& f = m.plus_face(p);
        if (a - std::abs(f.center.x()) < f.measure) continue;
        const double opening = -jumps[p].x();
        worst = std::max(worst, std::abs(opening - sneddon_opening(f.center.x(), s.pressure, s.fracture_length, s.mu, nu)));
    }
    return worst;
}

/// Linear interpolation of a per-pair scalar along the x-axis fracture at position x.
inline double interpolate_along(const SplitMesh& m, const std::vector<double>& v, double x)
{
    std::vector<std::pair<double, double>> pts;
    for (std::size_t p = 0; p < m.num_pairs(); ++p) pts.emplace_back(m.plus_face(p).center.x(), v[p]);
    std::sort(pts.begin(), pts.end());
    if (pts.empty()) throw Error("no fracture faces to interpolate");
    if (x <= pts.front().first) return pts.front().second;
    for (std::size_t k = 0; k + 1 < pts.size(); ++k)
        if (x <= pts[k + 1].first) {
            const double t = (x - pts[k].first) / (pts[k + 1].first - pts[k].first);
            return (1.0 - t) * pts[k].second + t * pts[k + 1].second;
        }
    return pts.back().second;
}

struct FrictionAudit {
    double law_residual = 0.0;    // max | |T_tau| - mu_f |T_n| | / |T_n|
    double normal_jump = 0.0;     // max |n . (u+ - u-)| / fracture length
    double mean_normal = 0.0;     // mean T_n over faces away from tips
    double mean_shear = 0.0;      // mean |T_tau| over faces away from tips
    double mid_slip = 0.0;
};

inline FrictionAudit audit_friction(const CaseSpec& s, const SolvedProblem& sp)
{
    const SplitMesh& m = sp.problem.mesh;
    const double mu_f = std::tan(degrees_to_radians(s.friction_angle_deg));
    const std::vector<Vec2> t = fracture_tractions(sp);
    const std::vector<Vec2> jumps = local_jumps(sp);
    FrictionAudit a;
    std::vector<double> slip(m.num_pairs());
    int count = 0;
    for (std::size_t p = 0; p < m.num_pairs(); ++p) {
        const double tn = m.fracture_normal(p).dot(t[p]);
        const double tt = m.fracture_tangent(p).dot(t[p]);
        a.law_residual = std::max(a.law_residual, std::abs(std::abs(tt) - mu_f * std::abs(tn)) / std::abs(tn));
        a.normal_jump = std::max(a.normal_jump, std::abs(jumps[p].x()) / s.fracture_length);
        slip[p] = std::abs(jumps[p].y());
        if (0.5 * s.fracture_length - std::abs(m.plus_face(p).center.x()) > 0.1 * s.fracture_length) {
            a.mean_normal += tn;
            a.mean_shear += std::abs(tt);
            ++count;
        }
    }
    if (count > 0) {
        a.mean_normal /= count;
        a.mean_shear /= count;
    }
    a.mid_slip = interpolate_along(m, slip, 0.0);
    return a;
}

/// Relative L2 distance of plus and minus fracture-face displacements to the reference.
inline double fracture_displacement_error(const SolvedProblem& coarse, const SolvedProblem& ref)
{
    const SplitMesh& cm = coarse.problem.mesh;
    const SplitMesh& fm = ref.problem.mesh;
    double num = 0.0, den = 0.0;
    for (int side : {1, -1}) {
        const std::vector<Vec2> r = transfer_fracture_values(cm, fm, fracture_displacements(ref, side));
        const std::vector<Vec2> c = fracture_displacements(coarse, side);
        for (std::size_t p = 0; p < cm.num_pairs(); ++p) {
            const double w = cm.plus_face(p).measure;
            num += w * (c[p] - r[p]).squaredNorm();
            den += w * r[p].squaredNorm();
        }
    }
    if (!(den > 0.0)) throw Error("fracture displacement reference is zero");
    return std::sqrt(num / den);
}

/// Cell displacement error against the reference sampled in the containing reference cell.
inline double cell_displacement_error(const SolvedProblem& coarse, const SolvedProblem& ref)
{
    const SplitMesh& cm = coarse.problem.mesh;
    const CellLocator loc(ref.problem.mesh);
    double num = 0.0, den = 0.0;
    for (std::size_t c = 0; c < cm.num_cells(); ++c) {
        const int rc = loc.locate(cm.cells[c].centroid);
        if (rc < 0) throw Error("reference mesh does not cover cell " + std::to_string(c));
        const Vec2 r = ref.solution.cell(rc);
        num += cm.cells[c].area * (coarse.solution.cell(static_cast<int>(c)) - r).squaredNorm();
        den += cm.cells[c].area * r.squaredNorm();
    }
    return std::sqrt(num / den);
}

/// Pairs whose face center lies within `radius` of a tip, a junction or a boundary
/// crossing of the fracture network.
inline std::vector<bool> pairs_near_singular_points(const SplitMesh& m, double radius)
{
    std::vector<Vec2> points = tip_points(m);
    // vertices with more than two copies or touching more than two fracture faces
    std::map<int, int> fracture_faces_at;
    for (const auto& pr : m.fracture_pairs)
        for (int v : m.faces[pr.plus_face].vertices) ++fracture_faces_at[m.vertex_origin[v]];
    std::map<int, Vec2> origin_point;
    for (std::size_t v = 0; v < m.vertices.size(); ++v) origin_point[m.vertex_origin[v]] = m.vertices[v];
    for (const auto& [v, n] : fracture_faces_at) {
        const Vec2 p = origin_point[v];
        if (n > 2) points.push_back(p);
        if (n == 1) points.push_back(p);
    }
    std::vector<bool> out(m.num_pairs(), false);
    if (!(radius > 0.0)) return out;
    for (std::size_t p = 0; p < m.num_pairs(); ++p)
        for (const Vec2& q : points)
            if ((m.plus_face(p).center - q).norm() < radius) out[p] = true;
    return out;
}

inline double fracture_traction_error(const SolvedProblem& coarse, const SolvedProblem& ref,
                                      const std::vector<bool>& excluded = {})
{
    const std::vector<Vec2> r = transfer_fracture_values(coarse.problem.mesh, ref.problem.mesh, fracture_tractions(ref));
    return l2_fracture_error(coarse.problem.mesh, fracture_tractions(coarse), r, excluded);
}

/// Errors of one solve. `ref` is the self-convergence reference (null for case 1).
inline SolveRecord evaluate_solve(const CaseSpec& s, const SolvedProblem& sp, const SolvedProblem* ref)
{
    const SplitMesh& m = sp.problem.mesh;
    SolveRecord r;
    r.face_pairs = static_cast<int>(m.num_pairs());
    r.newton_iters = sp.solution.newton_iterations;
    r.wall_ms = s.record_timing ? sp.wall_ms : 0.0;
    r.extra.emplace_back("cells", static_cast<double>(m.num_cells()));
    r.extra.emplace_back("interface_equilibrium", interface_equilibrium_residual(sp));
    r.extra.emplace_back("linear_residual", sp.solution.residual);
    switch (s.id) {
    case CaseId::Case1: {
        const PlacedCrack oracle = case1_oracle(s);
        r.err_u = l2_displacement_error(m, sp.solution, [&](const Vec2& x) { return oracle.displacement(x); });
        std::vector<bool> excluded(m.faces.size(), false);
        for (std::size_t f = 0; f < m.faces.size(); ++f) excluded[f] = m.faces[f].kind == FaceKind::Fracture;
        auto ref_t = [&](int f) { return Vec2(oracle.stress(m.faces[f].center) * (m.faces[f].normal / m.faces[f].measure)); };
        r.err_T = l2_traction_error(m, sp.solution.tractions, ref_t, excluded);
        const std::vector<bool> near = faces_near(m, tip_points(m), s.tip_radius);
        std::size_t dropped = 0;
        for (std::size_t f = 0; f < m.faces.size(); ++f)
            if (near[f] && !excluded[f]) {
                excluded[f] = true;
                ++dropped;
            }
        r.err_T_tip = l2_traction_error(m, sp.solution.tractions, ref_t, excluded);
        double jerr = 0.0;
        for (const Vec2& j : local_jumps(sp)) jerr = std::max(jerr, (j - Vec2(0.0, s.jump)).norm());
        r.extra.emplace_back("tip_faces_excluded", static_cast<double>(dropped));
        r.extra.emplace_back("jump_error", jerr);
        break;
    }
    case CaseId::Case2:
    case CaseId::Case3:
    case CaseId::Network: {
        if (ref) {
            r.err_u = fracture_displacement_error(sp, *ref);
            r.err_T = fracture_traction_error(sp, *ref);
            const std::vector<bool> near = pairs_near_singular_points(m, s.tip_radius);
            const auto dropped = static_cast<double>(std::count(near.begin(), near.end(), true));
            r.err_T_tip = dropped < static_cast<double>(m.num_pairs()) ? fracture_traction_error(sp, *ref, near) : r.err_T;
            const std::vector<bool> far = pairs_near_singular_points(m, s.singular_radius);
            const bool any_far = std::count(far.begin(), far.end(), false) > 0;
            r.extra.emplace_back("err_u_cells", cell_displacement_error(sp, *ref));
            r.extra.emplace_back("tip_faces_excluded", dropped);
            r.extra.emplace_back("err_T_far", any_far ? fracture_traction_error(sp, *ref, far)
                                                      : std::numeric_limits<double>::quiet_NaN());
        }
        if (s.id == CaseId::Case2) {
            r.extra.emplace_back("sneddon_max_deviation", sneddon_max_deviation(s, sp));
            double peak = 0.0;
            for (const Vec2& j : local_jumps(sp)) peak = std::max(peak, -j.x());
            r.extra.emplace_back("peak_opening", peak);
        }
        if (s.id == CaseId::Case3) {
            const FrictionAudit a = audit_friction(s, sp);
            r.extra.emplace_back("friction_law_residual", a.law_residual);
            r.extra.emplace_back("normal_jump", a.normal_jump);
            r.extra.emplace_back("mean_normal_traction", a.mean_normal);
            r.extra.emplace_back("mean_shear_traction", a.mean_shear);
            r.extra.emplace_back("mid_slip", a.mid_slip);
        }
        break;
    }
    }
    return r;
}

/// Runs `tasks` on up to `jobs` threads; the first exception is rethrown.
inline void run_parallel(std::size_t count, int jobs, const std::function<void(std::size_t)>& task)
{
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t k = next++;
            if (k >= count) return;
            try {
                task(k);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mutex);
                if (!error) error = std::current_exception();
                next = count;
            }
        }
    };
    const int n = std::max(1, std::min<int>(jobs, static_cast<int>(count)));
    std::vector<std::thread> threads;
    for (int k = 1; k < n; ++k) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
}

inline void compute_summary(ErrorReport& report, const std::vector<int>& refinements, const CaseSpec& s)
{
    report.averages.clear();
    for (std::size_t k = 0; k < refinements.size(); ++k) {
        AverageRecord a;
        a.h = s.h(refinements[k]);
        int n = 0;
        for (const auto& r : report.rows)
            if (r.refinement == static_cast<int>(k)) {
                a.face_pairs = r.face_pairs;
                a.err_u += r.err_u;
                a.err_T += r.err_T;
                a.err_T_tip += r.err_T_tip;
                a.newton_iters += r.newton_iters;
                a.wall_ms += r.wall_ms;
                if (a.extra.empty()) a.extra = r.extra;
                else
                    for (std::size_t e = 0; e < a.extra.size(); ++e) a.extra[e].second += r.extra[e].second;
                ++n;
            }
        if (n == 0) continue;
        a.err_u /= n;
        a.err_T /= n;
        a.err_T_tip /= n;
        a.newton_iters /= n;
        a.wall_ms /= n;
        for (auto& e : a.extra) e.second /= n;
        report.averages.push_back(a);
    }
    if (report.averages.size() >= 3) {
        std::vector<double> h, eu, et, ett;
        for (const auto& a : report.averages) {
            h.push_back(a.h);
            eu.push_back(a.err_u);
            et.push_back(a.err_T);
            ett.push_back(a.err_T_tip);
        }
        report.order_u = observed_order(h, eu);
        report.order_T = observed_order(h, et);
        report.order_T_tip = observed_order(h, ett);
    }
}

/// Full sweep over refinements and seeds.
inline ErrorReport run_case(const CaseSpec& s, const std::function<void(const std::string&)>& progress = {})
{
    s.validate();
    ErrorReport report;
    report.case_id = case_name(s.id);
    report.seeds = s.seeds;
    const auto seed_of = [&](int k) { return s.first_seed + static_cast<std::uint64_t>(k); };
    auto annotate = [&](int n, std::uint64_t seed, auto&& fn) {
        try {
            return fn();
        } catch (const Error& e) {
            throw Error(report.case_id + " (face_pairs " + std::to_string(n) + ", seed " + std::to_string(seed) +
                        "): " + e.what());
        }
    };

    std::vector<std::optional<SolvedProblem>> refs(s.seeds);
    std::vector<SolveRecord> ref_rows(s.self_converging() ? s.seeds : 0);
    if (s.self_converging()) {
        run_parallel(refs.size(), s.jobs, [&](std::size_t k) {
            const std::uint64_t seed = seed_of(static_cast<int>(k));
            refs[k] = annotate(s.reference(), seed, [&] { return solve_case(s, s.reference(), seed); });
            SolveRecord r = evaluate_solve(s, *refs[k], nullptr);
            r.refinement = -1;
            r.seed = seed;
            r.h = s.h(s.reference());
            ref_rows[k] = std::move(r);
            if (progress) progress(report.case_id + ": reference " + std::to_string(s.reference()) + " seed " + std::to_string(seed) + " done");
        });
    }
    const std::size_t ntasks = s.refinements.size() * static_cast<std::size_t>(s.seeds);
    std::vector<SolveRecord> rows(ntasks);
    run_parallel(ntasks, s.jobs, [&](std::size_t t) {
        const int k = static_cast<int>(t / s.seeds);
        const int j = static_cast<int>(t % s.seeds);
        const int n = s.refinements[k];
        const std::uint64_t seed = seed_of(j);
        rows[t] = annotate(n, seed, [&] {
            const SolvedProblem sp = solve_case(s, n, seed);
            SolveRecord r = evaluate_solve(s, sp, refs[j] ? &*refs[j] : nullptr);
            r.refinement = k;
            r.seed = seed;
            r.h = s.h(n);
            return r;
        });
        if (progress) progress(report.case_id + ": face_pairs " + std::to_string(n) + " seed " + std::to_string(seed) + " done");
    });
    report.rows = std::move(rows);
    report.references = std::move(ref_rows);
    compute_summary(report, s.refinements, s);
    return report;
}

}  // namespace fvfrac
