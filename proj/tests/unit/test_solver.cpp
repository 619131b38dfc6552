#include <gtest/gtest.h>

#include <cmath>

#include "helpers.hpp"

using namespace fvfrac;
using fvfrac::testing::all_dirichlet;
using fvfrac::testing::grid_mesh;
using fvfrac::testing::solve_on;

namespace {

const StiffnessTensor unit_c = StiffnessTensor::isotropic(1.0, 1.0);

/// Sheared compression of a block with a horizontal fracture: fixed base, loaded top.
struct FrictionSetup {
    SplitMesh mesh;
    BoundaryConditions bcs;
    StressWeights weights;
    Eigen::VectorXd data;
    FractureConditions closures;

    explicit FrictionSetup(double mu_f, Vec2 top = Vec2(1e-3, -2e-3))
    {
        mesh = prepare_mesh(grid_mesh(8, 6, {{2, 3, 6, 3, 0}}, 0.2));
        bcs[1] = BoundaryCondition::dirichlet(Vec2(0.0, 0.0));
        bcs[2] = BoundaryCondition::neumann(Vec2(0.0, 0.0));
        bcs[3] = BoundaryCondition::neumann(top);
        bcs[4] = BoundaryCondition::neumann(Vec2(0.0, 0.0));
        weights = discretize(mesh, unit_c, kinds_of(bcs));
        data = boundary_data(mesh, weights.boundary, bcs);
        closures = {{0, CoulombFriction{mu_f}}};
    }

    FrictionProblem problem() const { return make_friction_problem(mesh, weights, data, closures); }
};

}  // namespace

TEST(NewtonConfig, Validation)
{
    NewtonConfig c;
    EXPECT_NO_THROW(c.validate());
    c.rtol = 0.0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = NewtonConfig{};
    c.max_iterations = 0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = NewtonConfig{};
    c.damping = 1.5;
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(LinearSolve, PatchFieldReproducedWithSmallResidual)
{
    Mat2 a;
    a << 0.3, 0.1, -0.2, 0.4;
    const PatchField field = patch_field(a, Vec2(-1.0, 0.5), unit_c);
    const auto run = solve_on(grid_mesh(5, 4, {}, 0.3), all_dirichlet([field](const Vec2& p) { return field.displacement(p); }));
    EXPECT_LE(run.solution.residual, 1e-10);
    for (std::size_t c = 0; c < run.mesh.num_cells(); ++c) {
        const Vec2 u = field.displacement(run.mesh.cells[c].centroid);
        EXPECT_LE((run.solution.cell(static_cast<int>(c)) - u).norm(), 1e-10 * u.norm());
    }
    for (std::size_t f = 0; f < run.mesh.faces.size(); ++f)
        EXPECT_LE((run.solution.tractions[f] - field.stress() * run.mesh.faces[f].normal).norm(), 1e-12);
}

TEST(LinearSolve, TractionsSatisfyMomentumRows)
{
    const auto run = solve_on(grid_mesh(6, 4, {{1, 2, 5, 2, 0}}, 0.2),
                              all_dirichlet([](const Vec2& p) { return Vec2(1e-3 * p.y(), 0.0); }),
                              {{0, PrescribedJump{{Vec2(0.0, 1e-3)}}}});
    const SplitMesh& m = run.mesh;
    for (std::size_t c = 0; c < m.num_cells(); ++c) {
        Vec2 sum = Vec2::Zero();
        for (int f : m.cells[c].faces) sum += (m.faces[f].owner == static_cast<int>(c) ? 1.0 : -1.0) * run.solution.tractions[f];
        EXPECT_LE(sum.norm(), 1e-13);
    }
}

TEST(LinearSolve, RepeatedSolvesAreIdentical)
{
    const auto a = solve_on(grid_mesh(6, 4, {{1, 2, 5, 2, 0}}, 0.2), all_dirichlet([](const Vec2& p) { return Vec2(0.0, 1e-3 * p.x()); }),
                            {{0, PrescribedTraction{{Vec2(0.0, 1e-3)}}}});
    const Solution b = solve_linear(a.system, a.weights, a.data);
    EXPECT_EQ(a.solution.x, b.x);
}

TEST(FrictionNewton, ConvergesAndSatisfiesLaw)
{
    const FrictionSetup s(0.3);
    const Solution sol = solve_friction(s.problem(), NewtonConfig{}, s.weights, s.data);
    EXPECT_LE(sol.newton_iterations, 3);
    EXPECT_GE(sol.newton_iterations, 2);
    const SplitMesh& m = s.mesh;
    double slip = 0.0;
    for (std::size_t p = 0; p < m.num_pairs(); ++p) {
        const Vec2 t = sol.tractions[m.fracture_pairs[p].plus_face] / m.plus_face(p).measure;
        const double tn = m.fracture_normal(p).dot(t), tt = m.fracture_tangent(p).dot(t);
        EXPECT_LE(std::abs(std::abs(tt) - 0.3 * std::abs(tn)), 1e-8 * std::abs(tn));
        EXPECT_LE(std::abs(m.fracture_normal(p).dot(sol.jump(static_cast<int>(p)))), 1e-10 * 4.0);
        slip = std::max(slip, std::abs(m.fracture_tangent(p).dot(sol.jump(static_cast<int>(p)))));
    }
    EXPECT_GT(slip, 0.0);
}

TEST(FrictionNewton, FrictionlessLimitHasNoShearTraction)
{
    const FrictionSetup s(0.0);
    const Solution sol = solve_friction(s.problem(), NewtonConfig{}, s.weights, s.data);
    const SplitMesh& m = s.mesh;
    double scale = 0.0;
    for (const Vec2& t : sol.tractions) scale = std::max(scale, t.norm());
    for (std::size_t p = 0; p < m.num_pairs(); ++p)
        EXPECT_LE(std::abs(m.fracture_tangent(p).dot(sol.tractions[m.fracture_pairs[p].plus_face])), 1e-12 * scale);
}

TEST(FrictionNewton, SingleIterationCapRaises)
{
    const FrictionSetup s(0.3);
    NewtonConfig cfg;
    cfg.max_iterations = 1;
    try {
        (void)solve_friction(s.problem(), cfg, s.weights, s.data);
        FAIL() << "no ConvergenceError";
    } catch (const ConvergenceError& e) {
        EXPECT_EQ(e.iterations(), 1);
        EXPECT_GT(e.residual(), 0.0);
    }
}

TEST(FrictionNewton, SignFrozenJacobianMatchesCentralDifferences)
{
    const FrictionSetup s(0.3);
    const FrictionProblem fp = s.problem();
    const Eigen::VectorXd x = solve_friction(fp, NewtonConfig{});
    // a perturbed state with well-separated traction signs
    Eigen::VectorXd y = x;
    for (Eigen::Index k = 0; k < y.size(); ++k) y(k) += 1e-6 * std::sin(0.7 * static_cast<double>(k));
    const FrictionSigns signs = fp.signs(y);
    const GlobalSystem lin = fp.build(signs);
    const Eigen::MatrixXd fd = central_difference_jacobian([&](const Eigen::VectorXd& v) { return friction_residual(fp, v); }, y, 1e-9);
    const Eigen::MatrixXd exact = Eigen::MatrixXd(lin.matrix);
    EXPECT_LE((fd - exact).cwiseAbs().maxCoeff(), 1e-6 * exact.cwiseAbs().maxCoeff());
}

TEST(FrictionNewton, ResidualVanishesAtConvergedState)
{
    const FrictionSetup s(0.3);
    const FrictionProblem fp = s.problem();
    const Eigen::VectorXd x = solve_friction(fp, NewtonConfig{});
    const GlobalSystem sys = fp.build(fp.signs(x));
    EXPECT_LE(friction_residual(fp, x).norm(), 1e-9 * sys.rhs.norm());
}
