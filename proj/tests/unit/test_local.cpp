#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "helpers.hpp"

using namespace fvfrac;
using fvfrac::testing::all_dirichlet;
using fvfrac::testing::grid_mesh;
using fvfrac::testing::grid_vertex;

namespace {

const StiffnessTensor unit_c = StiffnessTensor::isotropic(1.0, 1.0);

Eigen::VectorXd random_vector(Eigen::Index n, unsigned seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    Eigen::VectorXd v(n);
    for (Eigen::Index k = 0; k < n; ++k) v(k) = d(rng);
    return v;
}

BoundaryKinds dirichlet_kinds()
{
    return {{1, BoundaryKind::Dirichlet}, {2, BoundaryKind::Dirichlet}, {3, BoundaryKind::Dirichlet}, {4, BoundaryKind::Dirichlet}};
}

bool region_touches_boundary_or_fracture(const SplitMesh& m, int region)
{
    for (int s : m.interaction_regions[region].sub_faces)
        if (m.faces[m.sub_faces[s].face].kind != FaceKind::Interior) return true;
    return false;
}

}  // namespace

TEST(LocalSystem, InteriorRegionBookkeeping)
{
    const SplitMesh m = prepare_mesh(grid_mesh(4, 4, {}, 0.3));
    const BoundaryDataLayout layout = BoundaryDataLayout::build(m, dirichlet_kinds());
    const std::vector<StiffnessTensor> c(m.num_cells(), unit_c);
    const int v = grid_vertex(4, 2, 2);
    const LocalSystem sys = assemble_local(m, v, c, layout, DofMap::from_mesh(m));
    const int k = static_cast<int>(m.interaction_regions[v].sub_cells.size());
    EXPECT_EQ(sys.num_gradients(), 4 * k);
    EXPECT_EQ(sys.stress_rows, 2 * k);
    EXPECT_EQ(sys.displacement_rows, 2 * k);
    EXPECT_EQ(sys.num_rows(), sys.num_gradients());
    EXPECT_TRUE(sys.data_blocks.empty());
}

TEST(LocalSystem, CornerRegionWithTwoDirichletSubFaces)
{
    const SplitMesh m = prepare_mesh(grid_mesh(1, 1));
    const BoundaryDataLayout layout = BoundaryDataLayout::build(m, dirichlet_kinds());
    const std::vector<StiffnessTensor> c(m.num_cells(), unit_c);
    // the (1,0) corner lies in a single triangle for this diagonal pattern
    const int v = grid_vertex(1, 1, 0);
    ASSERT_EQ(m.interaction_regions[v].sub_cells.size(), 1u);
    const LocalSystem sys = assemble_local(m, v, c, layout, DofMap::from_mesh(m));
    EXPECT_EQ(sys.num_gradients(), 4);
    EXPECT_EQ(sys.boundary_rows, 4);
    EXPECT_EQ(sys.num_rows(), 4);
    EXPECT_NO_THROW(eliminate_gradients(sys));
}

TEST(LocalSystem, FracturedRegionHasFaceColumns)
{
    const SplitMesh m = prepare_mesh(grid_mesh(4, 4, {{1, 2, 3, 2, 0}}));
    const BoundaryDataLayout layout = BoundaryDataLayout::build(m, dirichlet_kinds());
    const std::vector<StiffnessTensor> c(m.num_cells(), unit_c);
    const DofMap dofs = DofMap::from_mesh(m);
    for (std::size_t v = 0; v < m.vertices.size(); ++v) {
        const LocalSystem sys = assemble_local(m, static_cast<int>(v), c, layout, dofs);
        EXPECT_EQ(sys.num_rows(), sys.num_gradients()) << "region " << v;
        const bool has_face_columns = std::any_of(sys.unknown_blocks.begin(), sys.unknown_blocks.end(),
                                                  [&](int b) { return b >= dofs.num_cells; });
        const bool touches_fracture = std::any_of(m.interaction_regions[v].sub_faces.begin(),
                                                  m.interaction_regions[v].sub_faces.end(), [&](int s) {
                                                      return m.faces[m.sub_faces[s].face].kind == FaceKind::Fracture;
                                                  });
        EXPECT_EQ(has_face_columns, touches_fracture) << "region " << v;
    }
    for (int tip : m.tips) {
        const LocalSystem sys = assemble_local(m, tip, c, layout, dofs);
        const bool plus = std::any_of(sys.unknown_blocks.begin(), sys.unknown_blocks.end(),
                                      [&](int b) { return b >= dofs.plus_block(0) && b < dofs.minus_block(0); });
        const bool minus = std::any_of(sys.unknown_blocks.begin(), sys.unknown_blocks.end(),
                                       [&](int b) { return b >= dofs.minus_block(0); });
        EXPECT_TRUE(plus && minus);
    }
}

TEST(LocalSystem, UnclassifiedSubFaceRejected)
{
    const SplitMesh m = prepare_mesh(grid_mesh(2, 2));
    BoundaryKinds kinds = dirichlet_kinds();
    kinds.erase(3);
    EXPECT_THROW(discretize(m, unit_c, kinds), AssemblyError);
}

TEST(StressWeights, TranslationGivesZeroTraction)
{
    const SplitMesh m = prepare_mesh(grid_mesh(4, 4, {{1, 2, 3, 2, 0}}, 0.3));
    const StressWeights w = discretize(m, unit_c, dirichlet_kinds());
    const Vec2 t(0.3, -1.7);
    Eigen::VectorXd x(w.dofs.num_dofs()), data(w.boundary.size());
    for (Eigen::Index k = 0; k < x.size(); k += 2) x.segment<2>(k) = t;
    for (Eigen::Index k = 0; k < data.size(); k += 2) data.segment<2>(k) = t;
    for (std::size_t f = 0; f < m.faces.size(); ++f) EXPECT_LE(w.face_traction(static_cast<int>(f), x, data).norm(), 1e-13);
}

TEST(StressWeights, BoundaryFreeFaceBlocksSumToZero)
{
    const SplitMesh m = prepare_mesh(grid_mesh(5, 5, {}, 0.3));
    const StressWeights w = discretize(m, unit_c, dirichlet_kinds());
    int checked = 0;
    for (std::size_t f = 0; f < m.faces.size(); ++f) {
        const Face& face = m.faces[f];
        if (face.kind != FaceKind::Interior) continue;
        if (region_touches_boundary_or_fracture(m, face.vertices[0]) ||
            region_touches_boundary_or_fracture(m, face.vertices[1]))
            continue;
        Mat2 sum = Mat2::Zero();
        for (const auto& [b, block] : w.faces[f].unknowns) sum += block;
        EXPECT_LE(sum.norm(), 1e-13);
        EXPECT_TRUE(w.faces[f].data.empty());
        ++checked;
    }
    EXPECT_GT(checked, 10);
}

TEST(StressWeights, FaceWeightsAreSumsOfSubFaceWeights)
{
    const SplitMesh m = prepare_mesh(grid_mesh(4, 4, {{1, 2, 3, 2, 0}}, 0.2));
    const StressWeights w = discretize(m, unit_c, dirichlet_kinds());
    const Eigen::VectorXd x = random_vector(w.dofs.num_dofs(), 1), data = random_vector(w.boundary.size(), 2);
    for (std::size_t f = 0; f < m.faces.size(); ++f) {
        const Vec2 sum = w.sub_faces[m.faces[f].sub_faces[0]].evaluate(x, data) + w.sub_faces[m.faces[f].sub_faces[1]].evaluate(x, data);
        EXPECT_LE((w.faces[f].evaluate(x, data) - sum).norm(), 1e-13);
    }
}

TEST(StressWeights, ActionReactionOnInteriorSubFaces)
{
    const SplitMesh m = prepare_mesh(grid_mesh(4, 4, {{1, 2, 3, 2, 0}}, 0.3));
    const StressWeights w = discretize(m, unit_c, dirichlet_kinds());
    const Eigen::VectorXd x = random_vector(w.dofs.num_dofs(), 3), data = random_vector(w.boundary.size(), 4);
    for (std::size_t s = 0; s < m.sub_faces.size(); ++s) {
        if (w.classes[s] != SubFaceClass::Interior) continue;
        const Vec2 owner = w.sub_faces[s].evaluate(x, data);
        const Vec2 neighbor = w.sub_faces_neighbor[s].evaluate(x, data);
        EXPECT_LE((owner + neighbor).norm(), 1e-12 * std::max(1.0, owner.norm()));
    }
}

TEST(StressWeights, IndependentOfRegionOrder)
{
    const SplitMesh m = prepare_mesh(grid_mesh(4, 4, {{1, 2, 3, 2, 0}}, 0.3));
    const std::vector<StiffnessTensor> c(m.num_cells(), unit_c);
    std::vector<int> order(m.interaction_regions.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), std::mt19937_64(5));
    const StressWeights a = discretize(m, c, dirichlet_kinds());
    const StressWeights b = discretize(m, c, dirichlet_kinds(), {}, &order);
    const Eigen::VectorXd x = random_vector(a.dofs.num_dofs(), 6), data = random_vector(a.boundary.size(), 7);
    for (std::size_t f = 0; f < m.faces.size(); ++f)
        EXPECT_EQ(a.face_traction(static_cast<int>(f), x, data), b.face_traction(static_cast<int>(f), x, data));
}

TEST(StressWeights, AffineDirichletDataGivesExactFaceTractions)
{
    const SplitMesh m = prepare_mesh(grid_mesh(4, 3, {}, 0.4));
    Mat2 a;
    a << 0.2, -0.5, 0.3, 0.1;
    const PatchField field = patch_field(a, Vec2(0.4, -0.2), unit_c);
    const BoundaryConditions bcs = all_dirichlet([field](const Vec2& p) { return field.displacement(p); });
    const StressWeights w = discretize(m, unit_c, kinds_of(bcs));
    const Eigen::VectorXd data = boundary_data(m, w.boundary, bcs);
    Eigen::VectorXd x(w.dofs.num_dofs());
    for (std::size_t c = 0; c < m.num_cells(); ++c) x.segment<2>(2 * c) = field.displacement(m.cells[c].centroid);
    for (std::size_t f = 0; f < m.faces.size(); ++f) {
        const Vec2 expected = field.stress() * m.faces[f].normal;
        EXPECT_LE((w.face_traction(static_cast<int>(f), x, data) - expected).norm(), 1e-12);
    }
}

TEST(StressWeights, NeumannSubFacesCarryTheirDataExactly)
{
    const SplitMesh m = prepare_mesh(grid_mesh(3, 3, {}, 0.2));
    BoundaryKinds kinds = dirichlet_kinds();
    kinds[2] = BoundaryKind::Neumann;
    const StressWeights w = discretize(m, unit_c, kinds);
    const Eigen::VectorXd x = random_vector(w.dofs.num_dofs(), 8), data = random_vector(w.boundary.size(), 9);
    int neumann = 0;
    for (int b = 0; b < w.boundary.num_blocks(); ++b) {
        if (w.boundary.kind_of_block[b] != BoundaryKind::Neumann) continue;
        const int s = w.boundary.sub_face_of_block[b];
        EXPECT_EQ(w.sub_faces[s].evaluate(x, data), Vec2(data.segment<2>(2 * b)));
        ++neumann;
    }
    EXPECT_EQ(neumann, 6);
}

TEST(StressWeights, ZeroBoundaryDataGivesNoAffineTerm)
{
    const SplitMesh m = prepare_mesh(grid_mesh(3, 3, {{1, 1, 2, 1, 0}}, 0.2));
    const StressWeights w = discretize(m, unit_c, dirichlet_kinds());
    const Eigen::VectorXd data = Eigen::VectorXd::Zero(w.boundary.size());
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(w.dofs.num_dofs());
    for (std::size_t f = 0; f < m.faces.size(); ++f) EXPECT_EQ(w.face_traction(static_cast<int>(f), zero, data).norm(), 0.0);
}

TEST(Elimination, WarnCallbackFiresAboveThreshold)
{
    const SplitMesh m = prepare_mesh(grid_mesh(2, 2));
    DiscretizationOptions opt;
    opt.condition_warning = 1.0;
    int calls = 0;
    opt.warn = [&](const std::string& msg) {
        EXPECT_NE(msg.find("ill conditioned"), std::string::npos);
        ++calls;
    };
    (void)discretize(m, unit_c, dirichlet_kinds(), opt);
    EXPECT_EQ(calls, static_cast<int>(m.vertices.size()));
    opt.condition_warning = 1e12;
    calls = 0;
    (void)discretize(m, unit_c, dirichlet_kinds(), opt);
    EXPECT_EQ(calls, 0);
}

TEST(Elimination, SingularLocalSystemReportsRegion)
{
    const SplitMesh m = prepare_mesh(grid_mesh(2, 2));
    const StiffnessTensor zero = StiffnessTensor::from_components({});
    try {
        (void)discretize(m, zero, dirichlet_kinds());
        FAIL() << "no DiscretizationError";
    } catch (const DiscretizationError& e) {
        EXPECT_GE(e.region(), 0);
        EXPECT_GT(e.condition(), 1e14);
        EXPECT_NE(std::string(e.what()).find("interaction region"), std::string::npos);
    }
}
