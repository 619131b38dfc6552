#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fvfrac/analytic.hpp"
#include "fvfrac/harness/cases.hpp"
#include "fvfrac/harness/fixtures.hpp"
#include "fvfrac/io/text.hpp"

namespace fvfrac {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;

    std::string line() const
    {
        return std::string(pass ? "PASS" : "FAIL") + " criterion " + std::to_string(id) + " (" + name + "): " + detail;
    }
};

namespace detail {

inline std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

inline double max_extra(const ErrorReport& r, const std::string& key, bool include_references = true)
{
    double m = 0.0;
    for (const auto& row : r.rows) m = std::max(m, row.get(key));
    if (include_references)
        for (const auto& row : r.references) m = std::max(m, row.get(key));
    return m;
}

inline std::string order_text(const std::optional<double>& o) { return o ? fmt(*o) : std::string("n/a"); }

}  // namespace detail

// ---- property criteria -------------------------------------------------------------

/// Two pentagons and seven triangles on [0,2]^2, with an interior vertex shared by four
/// triangles. Tags 1 south, 2 east, 3 north, 4 west.
inline RawMesh mixed_polygon_mesh()
{
    RawMesh m;
    m.vertices = {{0.0, 0.0}, {1.0, 0.0}, {2.0, 0.0}, {0.0, 1.0}, {0.9, 1.1}, {2.0, 1.0},
                  {0.0, 2.0}, {1.0, 2.0}, {2.0, 2.0}, {1.5, 1.6}, {0.4, 1.05}, {0.0, 1.5}};
    m.cells = {{0, 1, 4, 10, 3}, {1, 2, 5}, {1, 5, 4}, {3, 10, 7, 6, 11}, {10, 4, 7},
               {4, 5, 9},        {5, 8, 9}, {9, 8, 7}, {4, 9, 7}};
    m.boundary = {{0, 1, 1}, {1, 2, 1}, {2, 5, 2}, {5, 8, 2}, {8, 7, 3}, {7, 6, 3}, {6, 11, 4}, {11, 3, 4}, {3, 0, 4}};
    return m;
}

/// The five unfractured patch-test meshes.
inline std::vector<RawMesh> patch_test_meshes()
{
    std::vector<RawMesh> out;
    FixtureSpec a;
    a.half_width = 2.0;
    a.h = 0.5;
    a.seed = 3;
    out.push_back(generate_mesh(a));
    FixtureSpec b = a;
    b.half_width = 3.0;
    b.jitter = 0.3;
    b.seed = 7;
    out.push_back(generate_mesh(b));
    FixtureSpec c;
    c.half_width = 5.0;
    c.h = 1.0;
    c.seed = 11;
    out.push_back(generate_mesh(c));
    // graded mesh with hanging-node fans; the fracture only drives the refinement
    FixtureSpec d;
    d.half_width = 10.0;
    d.h = 0.5;
    d.grading = 0.5;
    d.seed = 5;
    d.fractures = {{{-2.0, 0.0}, {2.0, 0.0}, 0}};
    RawMesh graded = generate_mesh(d);
    graded.fractures.clear();
    out.push_back(std::move(graded));
    out.push_back(mixed_polygon_mesh());
    return out;
}

struct PatchResult {
    double displacement_error = 0.0;  // max |u - u_ref| / max |u_ref|
    double traction_error = 0.0;      // max |T - T_ref| / max |T_ref|
};

/// Solves with the affine field as Dirichlet data on tags 1 and 4 and, when
/// `mixed_boundary` is set, its traction as Neumann data on tags 2 and 3.
inline PatchResult run_patch_test(const RawMesh& raw, const PatchField& field, bool mixed_boundary,
                                  StressSymmetry symmetry = StressSymmetry::Weak)
{
    const SplitMesh mesh = prepare_mesh(raw);
    BoundaryConditions bcs;
    auto exact = [field](const Vec2& x) { return field.displacement(x); };
    const Mat2 stress = field.stress();
    for (int tag = 1; tag <= 4; ++tag) bcs[tag] = BoundaryCondition::dirichlet(exact);
    if (mixed_boundary) {
        bcs[2] = BoundaryCondition::neumann(Vec2(stress * Vec2(1.0, 0.0)));
        bcs[3] = BoundaryCondition::neumann(Vec2(stress * Vec2(0.0, 1.0)));
    }
    DiscretizationOptions opt;
    opt.symmetry = symmetry;
    const StressWeights w = discretize(mesh, field.stiffness, kinds_of(bcs), opt);
    const Eigen::VectorXd data = boundary_data(mesh, w.boundary, bcs);
    const GlobalSystem sys = assemble_global(mesh, w, data, {});
    const Solution sol = solve_linear(sys, w, data);
    PatchResult r;
    double umax = 0.0, tmax = 0.0;
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
        const Vec2 u = exact(mesh.cells[c].centroid);
        umax = std::max(umax, u.norm());
        r.displacement_error = std::max(r.displacement_error, (sol.cell(static_cast<int>(c)) - u).norm());
    }
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        const Vec2 t = stress * mesh.faces[f].normal;
        tmax = std::max(tmax, t.norm());
        r.traction_error = std::max(r.traction_error, (sol.tractions[f] - t).norm());
    }
    r.displacement_error /= umax;
    r.traction_error /= tmax;
    return r;
}

inline std::vector<PatchField> patch_fields()
{
    const StiffnessTensor c = StiffnessTensor::isotropic(1.0, 1.0);
    Mat2 a1, a2, a3;
    a1 << 0.3, -0.2, 0.5, 0.1;
    a2 << 1e-3, 0.0, 0.0, -2.5e-4;
    a3 << -0.7, 0.4, 0.4, 0.25;
    return {patch_field(a1, {0.1, -0.4}, c), patch_field(a2, {0.0, 0.0}, c), patch_field(a3, {2.0, 1.0}, c)};
}

inline CriterionResult check_patch_tests()
{
    CriterionResult r{1, "patch-test exactness", true, ""};
    double worst_u = 0.0, worst_t = 0.0;
    int solves = 0;
    const auto meshes = patch_test_meshes();
    const auto fields = patch_fields();
    for (std::size_t m = 0; m < meshes.size(); ++m)
        for (std::size_t f = 0; f < fields.size(); ++f) {
            const PatchResult p = run_patch_test(meshes[m], fields[f], (m + f) % 2 == 1);
            worst_u = std::max(worst_u, p.displacement_error);
            worst_t = std::max(worst_t, p.traction_error);
            ++solves;
        }
    r.pass = worst_u <= 1e-10 && worst_t <= 1e-10;
    r.detail = std::to_string(solves) + " solves, max relative displacement error " + detail::fmt(worst_u) +
               ", traction error " + detail::fmt(worst_t) + " (limit 1e-10)";
    return r;
}

/// Affine Dirichlet field with a zero prescribed jump on the case-1 fracture.
inline CriterionResult check_zero_jump(int face_pairs = 8)
{
    CaseSpec s = default_case_spec(CaseId::Case1);
    const SplitMesh mesh = prepare_mesh(generate_fixture_mesh(s, face_pairs, 1), s.beta);
    const PatchField field = patch_fields()[0];
    BoundaryConditions bcs;
    for (int tag = 1; tag <= 4; ++tag)
        bcs[tag] = BoundaryCondition::dirichlet([field](const Vec2& x) { return field.displacement(x); });
    const StressWeights w = discretize(mesh, field.stiffness, kinds_of(bcs));
    const Eigen::VectorXd data = boundary_data(mesh, w.boundary, bcs);
    const GlobalSystem sys = assemble_global(mesh, w, data, {{0, PrescribedJump{{Vec2(0.0, 0.0)}}}});
    const Solution sol = solve_linear(sys, w, data);
    double jump = 0.0, cell = 0.0, scale = 0.0;
    for (std::size_t p = 0; p < mesh.num_pairs(); ++p) jump = std::max(jump, sol.jump(static_cast<int>(p)).norm());
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
        const Vec2 u = field.displacement(mesh.cells[c].centroid);
        scale = std::max(scale, u.norm());
        cell = std::max(cell, (sol.cell(static_cast<int>(c)) - u).norm());
    }
    CriterionResult r{7, "zero-jump invisibility", jump <= 1e-10 && cell <= 1e-10 * scale, ""};
    r.detail = std::to_string(mesh.num_pairs()) + " pairs, max |u+ - u-| " + detail::fmt(jump) +
               ", max cell error " + detail::fmt(cell / scale) + " relative (limit 1e-10)";
    return r;
}

/// Finite-difference audit of the displacement-discontinuity kernel and stress field.
inline CriterionResult check_oracles(int points = 50)
{
    CrackConfig c;
    c.dn = 7e-4;
    c.dt = 1e-3;
    std::mt19937_64 rng(20240917);
    std::vector<Vec2> samples;
    while (static_cast<int>(samples.size()) < points) {
        const Vec2 p(12.0 * detail::uniform_pm1(rng), 8.0 * detail::uniform_pm1(rng));
        if (std::abs(p.y()) < 0.2 || (p - Vec2(5.0, 0.0)).norm() < 0.5 || (p + Vec2(5.0, 0.0)).norm() < 0.5) continue;
        samples.push_back(p);
    }
    const double step = 1e-4;
    double worst_derivative = 0.0, worst_divergence = 0.0;
    for (const Vec2& p : samples) {
        const double x = p.x(), y = p.y();
        auto at = [&](double dx, double dy) { return dd_f_and_derivatives(x + dx, y + dy, c); };
        const KernelDerivatives d = at(0, 0), xp = at(step, 0), xm = at(-step, 0), yp = at(0, step), ym = at(0, -step);
        const double inv = 1.0 / (2.0 * step);
        const double pairs[][2] = {
            {d.fx, (xp.f - xm.f) * inv},       {d.fy, (yp.f - ym.f) * inv},     {d.fxx, (xp.fx - xm.fx) * inv},
            {d.fxy, (yp.fx - ym.fx) * inv},    {d.fyy, (yp.fy - ym.fy) * inv},  {d.fxyy, (yp.fxy - ym.fxy) * inv},
            {d.fyyy, (yp.fyy - ym.fyy) * inv}, {d.fxy, (xp.fy - xm.fy) * inv},
        };
        const double first = std::hypot(d.fx, d.fy);
        const double second = std::sqrt(d.fxx * d.fxx + 2 * d.fxy * d.fxy + d.fyy * d.fyy);
        const double third = std::hypot(d.fxyy, d.fyyy);
        const double scales[] = {first, first, second, second, second, third, third, second};
        for (int k = 0; k < 8; ++k)
            worst_derivative = std::max(worst_derivative, std::abs(pairs[k][0] - pairs[k][1]) / scales[k]);

        auto s = [&](double dx, double dy) { return dd_stress(x + dx, y + dy, c); };
        const Mat2 sxp = s(step, 0), sxm = s(-step, 0), syp = s(0, step), sym = s(0, -step);
        const Vec2 div((sxp(0, 0) - sxm(0, 0) + syp(0, 1) - sym(0, 1)) * inv,
                       (sxp(1, 0) - sxm(1, 0) + syp(1, 1) - sym(1, 1)) * inv);
        const double r = std::min((p - Vec2(5.0, 0.0)).norm(), (p + Vec2(5.0, 0.0)).norm());
        const double scale = s(0, 0).cwiseAbs().maxCoeff() / std::min(r, 1.0);
        worst_divergence = std::max(worst_divergence, div.norm() / scale);
    }
    const double young = young_modulus(1.0, 1.0), nu = poisson_ratio(1.0, 1.0);
    const double ends[] = {
        sneddon_opening(-5.0, 1e-3, 10.0, 1.0, nu), sneddon_opening(5.0, 1e-3, 10.0, 1.0, nu),
        friction_slip_analytic(0.0, 1e-3, degrees_to_radians(20.0), degrees_to_radians(30.0), young, nu, 10.0).slip,
        friction_slip_analytic(10.0, 1e-3, degrees_to_radians(20.0), degrees_to_radians(30.0), young, nu, 10.0).slip,
    };
    bool zeros = true;
    for (double e : ends) zeros = zeros && e == 0.0;
    CriterionResult r{9, "oracle self-consistency",
                      worst_derivative <= 1e-6 && worst_divergence <= 1e-5 && zeros, ""};
    r.detail = std::to_string(points) + " points, max relative derivative mismatch " + detail::fmt(worst_derivative) +
               " (limit 1e-6), max scaled divergence " + detail::fmt(worst_divergence) +
               " (limit 1e-5), endpoint zeros " + (zeros ? "exact" : "NOT exact");
    return r;
}

// ---- sweep criteria ----------------------------------------------------------------

inline CriterionResult check_interface_equilibrium(const std::vector<const ErrorReport*>& reports)
{
    double worst = 0.0;
    int solves = 0;
    for (const ErrorReport* r : reports) {
        worst = std::max(worst, detail::max_extra(*r, "interface_equilibrium"));
        solves += static_cast<int>(r->rows.size() + r->references.size());
    }
    CriterionResult c{6, "interface equilibrium", solves > 0 && worst <= 1e-10, ""};
    c.detail = std::to_string(solves) + " solves, max |T+ + T-| / max |T| = " + detail::fmt(worst) + " (limit 1e-10)";
    return c;
}

inline CriterionResult check_case1_displacement(const CaseSpec& s, const ErrorReport& r)
{
    const bool sweep = s.refinements == std::vector<int>{8, 16, 32, 64} && s.seeds >= 3;
    const bool ok = r.order_u && *r.order_u >= 0.7 && *r.order_u <= 1.3;
    CriterionResult c{2, "case 1 displacement convergence", sweep && ok, ""};
    c.detail = "observed order " + detail::order_text(r.order_u) + " (bracket [0.7, 1.3]), " +
               std::to_string(s.seeds) + " seeds" + (sweep ? "" : ", sweep differs from {8,16,32,64} x >=3 seeds");
    return c;
}

inline CriterionResult check_case1_traction(const CaseSpec& s, const ErrorReport& r)
{
    const bool sweep = s.refinements == std::vector<int>{8, 16, 32, 64} && s.seeds >= 3;
    bool monotone = r.averages.size() >= 3;
    for (std::size_t k = r.averages.size() >= 3 ? r.averages.size() - 2 : 1; k < r.averages.size(); ++k)
        monotone = monotone && r.averages[k].err_T_tip <= r.averages[k - 1].err_T_tip;
    const bool whole = r.order_T && *r.order_T <= 0.2;
    const bool tip = r.order_T_tip && *r.order_T_tip >= 0.5;
    CriterionResult c{3, "case 1 traction dichotomy", sweep && whole && tip && monotone, ""};
    c.detail = "whole-domain order " + detail::order_text(r.order_T) + " (limit <= 0.2), tip-excluded order " +
               detail::order_text(r.order_T_tip) + " (limit >= 0.5), tip-excluded errors " +
               (monotone ? "non-increasing" : "NOT non-increasing") + " over the last three levels";
    return c;
}

inline CriterionResult check_case2(const CaseSpec& s, const ErrorReport& r)
{
    const double nu = poisson_ratio(s.mu, s.lambda);
    const double peak = sneddon_opening(0.0, s.pressure, s.fracture_length, s.mu, nu);
    double worst = -1.0;
    for (const auto& row : r.rows)
        if (row.face_pairs == 16) worst = std::max(worst, row.get("sneddon_max_deviation"));
    const bool profile = worst >= 0.0 && worst <= 0.1 * peak;
    const bool order = r.order_u && *r.order_u >= 0.7 && *r.order_u <= 1.3;
    CriterionResult c{4, "case 2 Sneddon profile", profile && order, ""};
    c.detail = (worst >= 0.0 ? "max deviation at 16 pairs " + detail::fmt(worst / peak * 100.0) + "% of peak " +
                                   detail::fmt(peak) + " (limit 10%)"
                             : std::string("no 16-pair solve in the sweep")) +
               ", fracture displacement self-convergence order " + detail::order_text(r.order_u) +
               " (bracket [0.7, 1.3])";
    return c;
}

inline CriterionResult check_case3(const CaseSpec& s, const ErrorReport& r)
{
    int max_newton = 0;
    for (const auto* rows : {&r.rows, &r.references})
        for (const auto& row : *rows) max_newton = std::max(max_newton, row.newton_iters);
    const double law = detail::max_extra(r, "friction_law_residual");
    const double normal = detail::max_extra(r, "normal_jump");
    const double young = young_modulus(s.mu, s.lambda), nu = poisson_ratio(s.mu, s.lambda);
    const double expected = friction_slip_analytic(0.5 * s.fracture_length, s.compression, degrees_to_radians(s.alpha_deg),
                                                   degrees_to_radians(s.friction_angle_deg), young, nu,
                                                   s.fracture_length)
                                .slip;
    double worst_slip = -1.0;
    for (const auto* rows : {&r.rows, &r.references})
        for (const auto& row : *rows)
            if (row.face_pairs >= 64)
                worst_slip = std::max(worst_slip, std::abs(row.get("mid_slip") - expected) / expected);
    const bool order = r.order_u && *r.order_u >= 0.7 && *r.order_u <= 1.3;
    const bool ok = max_newton >= 1 && max_newton <= 3 && law <= 1e-8 && normal <= 1e-10 && worst_slip >= 0.0 &&
                    worst_slip <= 0.15 && order;
    CriterionResult c{5, "case 3 friction", ok, ""};
    c.detail = "Newton iterations <= " + std::to_string(max_newton) + " (limit 3), friction-law residual " +
               detail::fmt(law) + " (limit 1e-8), normal jump / length " + detail::fmt(normal) +
               " (limit 1e-10), mid slip deviation at >= 64 pairs " +
               (worst_slip >= 0.0 ? detail::fmt(worst_slip * 100.0) + "%" : std::string("n/a")) + " of " +
               detail::fmt(expected) + " (limit 15%), self-convergence order " + detail::order_text(r.order_u) +
               " (bracket [0.7, 1.3])";
    return c;
}

inline CriterionResult check_network(const ErrorReport& r)
{
    const bool ok = r.averages.size() >= 3 && r.order_T && *r.order_T >= 0.8;
    CriterionResult c{8, "network traction self-convergence", ok, ""};
    std::string far = "n/a";
    if (r.averages.size() >= 2) {
        std::vector<double> h, e;
        for (const auto& a : r.averages) {
            h.push_back(a.h);
            e.push_back(a.get("err_T_far"));
        }
        far = detail::fmt(observed_order(h, e));
    }
    c.detail = "fracture-face traction order " + detail::order_text(r.order_T) + " over " +
               std::to_string(r.averages.size()) + " levels (limit >= 0.8); diagnostic order away from tips and junctions " +
               far;
    return c;
}

/// Criteria a `verify <case>` run decides.
inline std::vector<CriterionResult> evaluate_case(const CaseSpec& s, const ErrorReport& r)
{
    std::vector<CriterionResult> out;
    switch (s.id) {
    case CaseId::Case1:
        out.push_back(check_case1_displacement(s, r));
        out.push_back(check_case1_traction(s, r));
        break;
    case CaseId::Case2: out.push_back(check_case2(s, r)); break;
    case CaseId::Case3: out.push_back(check_case3(s, r)); break;
    case CaseId::Network: out.push_back(check_network(r)); break;
    }
    out.push_back(check_interface_equilibrium({&r}));
    return out;
}

}  // namespace fvfrac
