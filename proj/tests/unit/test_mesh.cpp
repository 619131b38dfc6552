#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <string>

#include "helpers.hpp"

using namespace fvfrac;
using fvfrac::testing::grid_mesh;
using fvfrac::testing::grid_vertex;

namespace {

const char* unit_square =
    "# unit square, two triangles\n"
    "VERTICES 4\n"
    "0 0\n1 0\n1 1\n0 1\n"
    "CELLS 2\n"
    "3 0 1 2\n"
    "3 0 2 3\n"
    "BOUNDARY 4\n"
    "0 1 1\n1 2 2\n2 3 3\n3 0 4\n";

std::string with_diagonal_fracture()
{
    return std::string(unit_square) + "FRACTURES 1\n0 2 7\n";
}

int count_faces(const SplitMesh& m, FaceKind kind)
{
    return static_cast<int>(std::count_if(m.faces.begin(), m.faces.end(), [&](const Face& f) { return f.kind == kind; }));
}

int copies_of(const SplitMesh& m, int raw_vertex)
{
    return static_cast<int>(std::count(m.vertex_origin.begin(), m.vertex_origin.end(), raw_vertex));
}

std::string expect_parse_error(const std::string& text, int line)
{
    try {
        (void)ingest_mesh(text);
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), line);
        return e.what();
    }
    ADD_FAILURE() << "no ParseError";
    return {};
}

}  // namespace

TEST(MeshIngest, UnitSquareCounts)
{
    const RawMesh raw = ingest_mesh(unit_square);
    EXPECT_EQ(raw.vertices.size(), 4u);
    EXPECT_EQ(raw.cells.size(), 2u);
    const RawTopology topo = build_raw_topology(raw);
    ASSERT_EQ(topo.faces.size(), 5u);
    EXPECT_EQ(std::count_if(topo.faces.begin(), topo.faces.end(), [](const RawFace& f) { return f.is_boundary(); }), 4);
}

TEST(MeshIngest, DiagonalFractureResolvesToInteriorFace)
{
    const RawMesh raw = ingest_mesh(with_diagonal_fracture());
    const RawTopology topo = build_raw_topology(raw);
    const auto f = topo.find(0, 2);
    ASSERT_TRUE(f.has_value());
    EXPECT_FALSE(topo.faces[*f].is_boundary());
    EXPECT_TRUE(topo.faces[*f].is_fracture());
    EXPECT_EQ(topo.faces[*f].fracture_id, 7);
}

TEST(MeshIngest, DanglingIndexReportsLine)
{
    std::string text = unit_square;
    text.replace(text.find("3 0 2 3"), 7, "3 0 2 99");
    const std::string msg = expect_parse_error(text, 9);
    EXPECT_NE(msg.find("dangling vertex index 99"), std::string::npos);
}

TEST(MeshIngest, ParseErrorsCarryLineNumbers)
{
    expect_parse_error("VERTICES 2\n0 0\n1 x\n", 3);
    expect_parse_error("VERTICES 1\n0 0\nCELLS 1\n4 0 0 0\n", 4);
    expect_parse_error("VERTICES 1\n0 0\nEDGES 0\n", 3);
    expect_parse_error("VERTICES 3\n0 0\n", 1);
    expect_parse_error("# only a comment\n", 2);
}

TEST(MeshIngest, NonConformingFractureRejected)
{
    std::string text = std::string(unit_square) + "FRACTURES 1\n1 3 0\n";
    try {
        (void)ingest_mesh(text);
        FAIL() << "no MeshError";
    } catch (const MeshError& e) {
        EXPECT_NE(std::string(e.what()).find("non-conforming"), std::string::npos);
    }
}

TEST(MeshIngest, StructuralErrors)
{
    // clockwise cell
    EXPECT_THROW(ingest_mesh("VERTICES 3\n0 0\n1 0\n0 1\nCELLS 1\n3 0 2 1\nBOUNDARY 3\n0 1 1\n1 2 1\n2 0 1\n"), MeshError);
    // missing boundary marker
    EXPECT_THROW(ingest_mesh("VERTICES 3\n0 0\n1 0\n0 1\nCELLS 1\n3 0 1 2\nBOUNDARY 2\n0 1 1\n1 2 1\n"), MeshError);
    // fracture on the boundary
    EXPECT_THROW(ingest_mesh(std::string(unit_square) + "FRACTURES 1\n0 1 0\n"), MeshError);
}

TEST(MeshIngest, FormatRoundTripIsExact)
{
    const RawMesh raw = fvfrac::testing::grid_mesh(3, 2, {{1, 1, 2, 1, 4}}, 0.3);
    const std::string text = format_mesh(raw);
    const RawMesh back = ingest_mesh(text);
    ASSERT_EQ(back.vertices.size(), raw.vertices.size());
    for (std::size_t v = 0; v < raw.vertices.size(); ++v) EXPECT_EQ(back.vertices[v], raw.vertices[v]);
    EXPECT_EQ(back.cells, raw.cells);
    EXPECT_EQ(format_mesh(back), text);
}

TEST(MeshSplit, SingleImmersedFaceHasTwoTipsAndNoCopies)
{
    const RawMesh raw = grid_mesh(4, 4, {{1, 2, 2, 2, 0}});
    const SplitMesh m = prepare_mesh(raw);
    EXPECT_EQ(m.num_pairs(), 1u);
    EXPECT_EQ(m.vertices.size(), raw.vertices.size());
    EXPECT_EQ(m.tips.size(), 2u);
}

TEST(MeshSplit, CollinearFacesDuplicateSharedVertex)
{
    const RawMesh raw = grid_mesh(4, 4, {{1, 2, 3, 2, 0}});
    const SplitMesh m = prepare_mesh(raw);
    EXPECT_EQ(m.num_pairs(), 2u);
    EXPECT_EQ(copies_of(m, grid_vertex(4, 2, 2)), 2);
    EXPECT_EQ(m.vertices.size(), raw.vertices.size() + 1);
    EXPECT_EQ(m.tips.size(), 2u);
}

TEST(MeshSplit, XCrossingGivesFourCopies)
{
    const RawMesh raw = grid_mesh(4, 4, {{1, 2, 3, 2, 0}, {2, 1, 2, 3, 1}});
    const SplitMesh m = prepare_mesh(raw);
    EXPECT_EQ(m.num_pairs(), 4u);
    EXPECT_EQ(copies_of(m, grid_vertex(4, 2, 2)), 4);
    EXPECT_EQ(m.tips.size(), 4u);
}

TEST(MeshSplit, TJunctionGivesThreeCopies)
{
    const RawMesh raw = grid_mesh(4, 4, {{1, 2, 3, 2, 0}, {2, 2, 2, 3, 1}});
    const SplitMesh m = prepare_mesh(raw);
    EXPECT_EQ(m.num_pairs(), 3u);
    EXPECT_EQ(copies_of(m, grid_vertex(4, 2, 2)), 3);
    EXPECT_EQ(m.tips.size(), 3u);
}

TEST(MeshSplit, BoundaryCrossingSplitsBoundaryVertex)
{
    const RawMesh raw = grid_mesh(4, 4, {{0, 2, 2, 2, 0}});
    const SplitMesh m = prepare_mesh(raw);
    EXPECT_EQ(m.num_pairs(), 2u);
    EXPECT_EQ(copies_of(m, grid_vertex(4, 0, 2)), 2);
    EXPECT_EQ(copies_of(m, grid_vertex(4, 1, 2)), 2);
    ASSERT_EQ(m.tips.size(), 1u);
    EXPECT_EQ(m.vertex_origin[m.tips[0]], grid_vertex(4, 2, 2));
    // both copies of the split boundary vertex keep the west tag on their boundary faces
    std::set<int> west_vertices;
    for (const Face& f : m.faces)
        if (f.kind == FaceKind::Boundary && f.tag == 4)
            for (int v : f.vertices)
                if (m.vertex_origin[v] == grid_vertex(4, 0, 2)) west_vertices.insert(v);
    EXPECT_EQ(west_vertices.size(), 2u);
}

TEST(MeshSplit, FaceAuditAndPairOrientation)
{
    const RawMesh raw = grid_mesh(4, 4, {{1, 2, 3, 2, 0}, {2, 1, 2, 3, 1}});
    const RawTopology topo = build_raw_topology(raw);
    const SplitMesh m = prepare_mesh(raw);
    EXPECT_EQ(m.faces.size(), topo.faces.size() + raw.fractures.size());
    EXPECT_EQ(m.num_cells(), raw.cells.size());
    EXPECT_EQ(count_faces(m, FaceKind::Fracture), 2 * static_cast<int>(m.num_pairs()));
    for (std::size_t p = 0; p < m.num_pairs(); ++p) {
        const Vec2 sum = m.plus_face(p).normal + m.minus_face(p).normal;
        EXPECT_EQ(sum.x(), 0.0);
        EXPECT_EQ(sum.y(), 0.0);
    }
}

TEST(MeshSplit, PlusSideIsLeftOfSegmentDirection)
{
    const SplitMesh m = prepare_mesh(grid_mesh(4, 4, {{1, 2, 3, 2, 0}}));
    for (std::size_t p = 0; p < m.num_pairs(); ++p) {
        EXPECT_GT(m.cells[m.plus_face(p).owner].centroid.y(), 2.0);
        EXPECT_LT(m.cells[m.minus_face(p).owner].centroid.y(), 2.0);
        EXPECT_NEAR(m.fracture_normal(p).y(), -1.0, 1e-15);
        EXPECT_NEAR(m.fracture_tangent(p).x(), -1.0, 1e-15);
    }
}

TEST(MeshRegions, EverySubEntityInExactlyOneRegion)
{
    const SplitMesh m = prepare_mesh(grid_mesh(4, 4, {{0, 2, 3, 2, 0}, {2, 1, 2, 3, 1}}, 0.2));
    std::vector<int> sc(m.sub_cells.size(), 0), sf(m.sub_faces.size(), 0);
    for (const auto& r : m.interaction_regions) {
        for (int s : r.sub_cells) ++sc[s];
        for (int s : r.sub_faces) ++sf[s];
    }
    EXPECT_TRUE(std::all_of(sc.begin(), sc.end(), [](int c) { return c == 1; }));
    EXPECT_TRUE(std::all_of(sf.begin(), sf.end(), [](int c) { return c == 1; }));
    EXPECT_EQ(m.interaction_regions.size(), m.vertices.size());
}

TEST(MeshRegions, InteriorAndBoundaryFanCounts)
{
    const RawMesh raw = grid_mesh(4, 4);
    const SplitMesh m = prepare_mesh(raw);
    auto incident = [&](int v) {
        return static_cast<std::size_t>(std::count_if(raw.cells.begin(), raw.cells.end(), [&](const auto& c) {
            return std::find(c.begin(), c.end(), v) != c.end();
        }));
    };
    for (int v : {grid_vertex(4, 2, 2), grid_vertex(4, 1, 2)}) {
        const auto& r = m.interaction_regions[v];
        EXPECT_EQ(r.sub_cells.size(), incident(v));
        EXPECT_EQ(r.sub_faces.size(), incident(v));
    }
    const int b = grid_vertex(4, 2, 0);
    const auto& r = m.interaction_regions[b];
    const std::size_t k = incident(b);
    EXPECT_EQ(r.sub_cells.size(), k);
    int boundary = 0, interior = 0;
    for (int s : r.sub_faces) (m.faces[m.sub_faces[s].face].kind == FaceKind::Boundary ? boundary : interior)++;
    EXPECT_EQ(boundary, 2);
    EXPECT_EQ(interior, static_cast<int>(k) - 1);
}

TEST(MeshRegions, TipRegionHoldsBothSides)
{
    const SplitMesh m = prepare_mesh(grid_mesh(4, 4, {{1, 2, 3, 2, 0}}));
    for (int tip : m.tips) {
        std::set<int> sides;
        for (int s : m.interaction_regions[tip].sub_faces) {
            const Face& f = m.faces[m.sub_faces[s].face];
            if (f.kind == FaceKind::Fracture) sides.insert(f.side);
        }
        EXPECT_EQ(sides, (std::set<int>{-1, 1}));
    }
}

TEST(MeshRegions, DuplicatedCopyHoldsOwnSectorOnly)
{
    const SplitMesh m = prepare_mesh(grid_mesh(4, 4, {{1, 2, 3, 2, 0}}));
    const int raw_v = grid_vertex(4, 2, 2);
    int seen = 0;
    for (std::size_t v = 0; v < m.vertices.size(); ++v) {
        if (m.vertex_origin[v] != raw_v) continue;
        ++seen;
        const auto& r = m.interaction_regions[v];
        std::set<bool> above;
        for (int s : r.sub_cells) above.insert(m.cells[m.sub_cells[s].cell].centroid.y() > 2.0);
        ASSERT_EQ(above.size(), 1u);
        const int expected_side = *above.begin() ? 1 : -1;
        int fracture = 0;
        for (int s : r.sub_faces) {
            const Face& f = m.faces[m.sub_faces[s].face];
            if (f.kind != FaceKind::Fracture) continue;
            ++fracture;
            EXPECT_EQ(f.side, expected_side);
        }
        EXPECT_EQ(fracture, 2);
    }
    EXPECT_EQ(seen, 2);
}

TEST(MeshGeometry, ContinuityPointsAndNormals)
{
    const SplitMesh m = prepare_mesh(ingest_mesh(unit_square));
    bool found = false;
    for (const SubFace& sf : m.sub_faces) {
        const Face& f = m.faces[sf.face];
        const Vec2 a = m.vertices[f.vertices[0]], b = m.vertices[f.vertices[1]];
        if (m.vertices[sf.vertex] == Vec2(0.0, 0.0) && ((a - Vec2(1, 0)).norm() == 0.0 || (b - Vec2(1, 0)).norm() == 0.0)) {
            EXPECT_NEAR(sf.continuity_point.x(), 1.0 / 3.0, 1e-15);
            EXPECT_EQ(sf.continuity_point.y(), 0.0);
            EXPECT_NEAR(sf.normal.norm(), 0.5, 1e-15);
            EXPECT_NEAR(sf.normal.y(), -0.5, 1e-15);
            found = true;
        }
    }
    EXPECT_TRUE(found);

    const SplitMesh tri = prepare_mesh(ingest_mesh("VERTICES 3\n0 0\n1 0\n0 1\nCELLS 1\n3 0 1 2\nBOUNDARY 3\n0 1 1\n1 2 1\n2 0 1\n"));
    EXPECT_NEAR(tri.cells[0].centroid.x(), 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(tri.cells[0].centroid.y(), 1.0 / 3.0, 1e-15);
}

TEST(MeshGeometry, SubFaceNormalsSumToFaceNormal)
{
    const SplitMesh m = prepare_mesh(grid_mesh(4, 3, {{1, 1, 3, 1, 0}}, 0.4), 0.3);
    for (const Face& f : m.faces) {
        const Vec2 s = m.sub_faces[f.sub_faces[0]].normal + m.sub_faces[f.sub_faces[1]].normal;
        EXPECT_NEAR((s - f.normal).norm(), 0.0, 1e-15);
    }
    for (const SubFace& sf : m.sub_faces) {
        const Face& f = m.faces[sf.face];
        const Vec2 v = m.vertices[sf.vertex];
        const double t = (sf.continuity_point - f.center).norm() / (v - f.center).norm();
        EXPECT_NEAR(t, 0.3, 1e-12);
    }
    for (std::size_t p = 0; p < m.num_pairs(); ++p) {
        const Face& plus = m.plus_face(p);
        const Face& minus = m.minus_face(p);
        for (int e = 0; e < 2; ++e) {
            const Vec2 cp = m.sub_faces[plus.sub_faces[e]].continuity_point;
            const bool match = (cp - m.sub_faces[minus.sub_faces[0]].continuity_point).norm() == 0.0 ||
                               (cp - m.sub_faces[minus.sub_faces[1]].continuity_point).norm() == 0.0;
            EXPECT_TRUE(match);
        }
    }
}

TEST(MeshGeometry, BetaOutsideUnitIntervalRejected)
{
    const RawMesh raw = ingest_mesh(unit_square);
    EXPECT_THROW(prepare_mesh(raw, 0.0), MeshError);
    EXPECT_THROW(prepare_mesh(raw, 1.0), MeshError);
}
