#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "fvfrac/errors.hpp"
#include "fvfrac/mesh/raw_mesh.hpp"
#include "fvfrac/types.hpp"

namespace fvfrac {

enum class FaceKind { Interior, Boundary, Fracture };

struct Face {
    std::array<int, 2> vertices{-1, -1};  // counterclockwise order of the owner cell
    int owner = -1;
    int neighbor = -1;                    // -1 for boundary and fracture faces
    FaceKind kind = FaceKind::Interior;
    int tag = -1;                         // boundary tag, or fracture id for fracture faces
    int pair = -1;                        // fracture pair index
    int side = 0;                         // +1 / -1 on fracture faces
    int raw_face = -1;
    std::array<int, 2> sub_faces{-1, -1};  // sub-face at vertices[0], vertices[1]

    Vec2 center = Vec2::Zero();
    Vec2 normal = Vec2::Zero();  // area weighted, outward from the owner
    double measure = 0.0;
};

struct Cell {
    std::vector<int> vertices;  // counterclockwise
    std::vector<int> faces;     // faces[k] is the edge (vertices[k], vertices[k+1])
    std::vector<int> sub_cells;  // sub_cells[k] belongs to vertices[k]
    Vec2 centroid = Vec2::Zero();
    double area = 0.0;
};

/// Two faces representing the sides of one fracture segment. The plus face belongs to
/// the cell on the left of the segment's declared direction.
struct FracturePair {
    int plus_face = -1;
    int minus_face = -1;
    int fracture_id = 0;
};

struct SubFace {
    int face = -1;
    int vertex = -1;
    int end = 0;  // index of `vertex` in face.vertices
    int region = -1;
    Vec2 normal = Vec2::Zero();            // half of the face's area-weighted normal
    Vec2 continuity_point = Vec2::Zero();
    Vec2 midpoint = Vec2::Zero();
    double measure = 0.0;
};

struct SubCell {
    int cell = -1;
    int vertex = -1;
    int region = -1;
    double area = 0.0;
};

struct InteractionRegion {
    int vertex = -1;
    std::vector<int> sub_cells;
    std::vector<int> sub_faces;
};

/// Polygonal mesh after fracture duplication.
struct SplitMesh {
    std::vector<Vec2> vertices;
    std::vector<int> vertex_origin;  // raw vertex each post-split vertex was copied from
    std::vector<Cell> cells;
    std::vector<Face> faces;
    std::vector<FracturePair> fracture_pairs;
    std::vector<int> tips;  // immersed fracture tips (never duplicated)
    std::vector<SubFace> sub_faces;
    std::vector<SubCell> sub_cells;
    std::vector<InteractionRegion> interaction_regions;
    double beta = 1.0 / 3.0;
    int raw_face_count = 0;

    std::size_t num_cells() const { return cells.size(); }
    std::size_t num_pairs() const { return fracture_pairs.size(); }

    const Face& plus_face(std::size_t p) const { return faces[fracture_pairs[p].plus_face]; }
    const Face& minus_face(std::size_t p) const { return faces[fracture_pairs[p].minus_face]; }

    /// Unit normal of the plus side (pointing out of the plus cell).
    Vec2 fracture_normal(std::size_t p) const
    {
        const Face& f = plus_face(p);
        return f.normal / f.measure;
    }
    /// Unit shear direction: the plus normal rotated by -90 degrees.
    Vec2 fracture_tangent(std::size_t p) const { return rotate_cw(fracture_normal(p)); }
};

namespace detail {

struct DisjointSets {
    std::vector<int> parent;
    explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x)
    {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(int a, int b)
    {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

inline double angle_of(const Vec2& d)
{
    double a = std::atan2(d.y(), d.x());
    return a < 0 ? a + 2.0 * pi : a;
}

inline Vec2 polygon_centroid(const std::vector<Vec2>& pts, double& area)
{
    double a2 = 0.0;
    Vec2 c = Vec2::Zero();
    const Vec2 ref = pts[0];
    for (std::size_t k = 0; k < pts.size(); ++k) {
        const Vec2 p = pts[k] - ref, q = pts[(k + 1) % pts.size()] - ref;
        const double w = cross(p, q);
        a2 += w;
        c += w * (p + q);
    }
    area = 0.5 * a2;
    return ref + c / (3.0 * a2);
}

}  // namespace detail

/// Duplicates fracture faces into (+, -) pairs and vertices into one copy per angular
/// sector. Sectors are the connected components of the cell fan around a vertex when
/// adjacency through fracture faces is cut; an immersed tip has one sector and keeps a
/// single copy. Geometry and interaction regions are not populated.
inline SplitMesh split_fractures(const RawMesh& raw)
{
    const RawTopology topo = build_raw_topology(raw);
    const std::size_t nv = raw.vertices.size();

    std::vector<Vec2> centroids(raw.cells.size());
    for (std::size_t c = 0; c < raw.cells.size(); ++c) {
        std::vector<Vec2> pts;
        for (int v : raw.cells[c]) pts.push_back(raw.vertices[v]);
        double area = 0.0;
        centroids[c] = detail::polygon_centroid(pts, area);
    }

    std::vector<std::vector<int>> vertex_cells(nv), vertex_faces(nv);
    for (std::size_t c = 0; c < raw.cells.size(); ++c)
        for (int v : raw.cells[c]) vertex_cells[v].push_back(static_cast<int>(c));
    for (std::size_t f = 0; f < topo.faces.size(); ++f) {
        vertex_faces[topo.faces[f].a].push_back(static_cast<int>(f));
        vertex_faces[topo.faces[f].b].push_back(static_cast<int>(f));
    }

    SplitMesh mesh;
    mesh.raw_face_count = static_cast<int>(topo.faces.size());
    mesh.vertices = raw.vertices;
    mesh.vertex_origin.resize(nv);
    std::iota(mesh.vertex_origin.begin(), mesh.vertex_origin.end(), 0);

    // copy_of[c][k]: post-split id of the k-th vertex of cell c
    std::vector<std::vector<int>> copy_of(raw.cells.size());
    for (std::size_t c = 0; c < raw.cells.size(); ++c) copy_of[c] = raw.cells[c];

    for (std::size_t v = 0; v < nv; ++v) {
        const auto& fan = vertex_cells[v];
        if (fan.empty()) continue;
        int fracture_faces = 0;
        bool on_boundary = false;
        detail::DisjointSets sets(fan.size());
        auto local = [&](int cell) {
            return static_cast<int>(std::find(fan.begin(), fan.end(), cell) - fan.begin());
        };
        for (int f : vertex_faces[v]) {
            const RawFace& face = topo.faces[f];
            if (face.is_fracture()) {
                ++fracture_faces;
                continue;
            }
            if (face.is_boundary()) {
                on_boundary = true;
                continue;
            }
            sets.unite(local(face.cells[0]), local(face.cells[1]));
        }
        if (fracture_faces == 1 && !on_boundary) mesh.tips.push_back(static_cast<int>(v));
        if (fracture_faces == 0) continue;

        // group cells by component, order components by angle around the vertex
        std::vector<int> roots;
        std::vector<double> start_angle;
        std::vector<int> component(fan.size());
        for (std::size_t k = 0; k < fan.size(); ++k) {
            const int r = sets.find(static_cast<int>(k));
            auto it = std::find(roots.begin(), roots.end(), r);
            const double ang = detail::angle_of(centroids[fan[k]] - raw.vertices[v]);
            if (it == roots.end()) {
                component[k] = static_cast<int>(roots.size());
                roots.push_back(r);
                start_angle.push_back(ang);
            } else {
                component[k] = static_cast<int>(it - roots.begin());
                start_angle[component[k]] = std::min(start_angle[component[k]], ang);
            }
        }
        if (roots.size() < 2) continue;
        std::vector<int> order(roots.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return start_angle[a] < start_angle[b]; });
        std::vector<int> copy_id(roots.size());
        for (std::size_t rank = 0; rank < order.size(); ++rank) {
            if (rank == 0) {
                copy_id[order[rank]] = static_cast<int>(v);
            } else {
                copy_id[order[rank]] = static_cast<int>(mesh.vertices.size());
                mesh.vertices.push_back(raw.vertices[v]);
                mesh.vertex_origin.push_back(static_cast<int>(v));
            }
        }
        for (std::size_t k = 0; k < fan.size(); ++k) {
            const int c = fan[k];
            auto& verts = copy_of[c];
            for (std::size_t j = 0; j < verts.size(); ++j)
                if (raw.cells[c][j] == static_cast<int>(v)) verts[j] = copy_id[component[k]];
        }
    }

    mesh.cells.resize(raw.cells.size());
    for (std::size_t c = 0; c < raw.cells.size(); ++c) {
        mesh.cells[c].vertices = copy_of[c];
        mesh.cells[c].faces.assign(raw.cells[c].size(), -1);
    }

    auto edge_in_cell = [&](int c, int a, int b) -> int {
        const auto& verts = raw.cells[c];
        for (std::size_t k = 0; k < verts.size(); ++k) {
            const int p = verts[k], q = verts[(k + 1) % verts.size()];
            if ((p == a && q == b) || (p == b && q == a)) return static_cast<int>(k);
        }
        return -1;
    };
    auto make_face = [&](int cell, int raw_face, FaceKind kind) {
        const RawFace& rf = topo.faces[raw_face];
        const int k = edge_in_cell(cell, rf.a, rf.b);
        Face face;
        face.owner = cell;
        face.kind = kind;
        face.raw_face = raw_face;
        const auto& verts = mesh.cells[cell].vertices;
        face.vertices = {verts[k], verts[(k + 1) % verts.size()]};
        mesh.cells[cell].faces[k] = static_cast<int>(mesh.faces.size());
        mesh.faces.push_back(face);
        return static_cast<int>(mesh.faces.size()) - 1;
    };

    for (std::size_t f = 0; f < topo.faces.size(); ++f) {
        const RawFace& rf = topo.faces[f];
        const int fi = static_cast<int>(f);
        if (rf.is_fracture()) {
            const auto& seg = raw.fractures[rf.fracture_segment];
            // the cell traversing seg.a -> seg.b counterclockwise lies on its left
            const int c0 = rf.cells[0], c1 = rf.cells[1];
            const bool c0_left = (rf.a == seg.a);
            const int plus_cell = c0_left ? c0 : c1;
            const int minus_cell = c0_left ? c1 : c0;
            const int pair = static_cast<int>(mesh.fracture_pairs.size());
            const int pf = make_face(plus_cell, fi, FaceKind::Fracture);
            const int mf = make_face(minus_cell, fi, FaceKind::Fracture);
            for (int id : {pf, mf}) {
                mesh.faces[id].tag = seg.fracture_id;
                mesh.faces[id].pair = pair;
            }
            mesh.faces[pf].side = +1;
            mesh.faces[mf].side = -1;
            mesh.fracture_pairs.push_back({pf, mf, seg.fracture_id});
        } else if (rf.is_boundary()) {
            const int id = make_face(rf.cells[0], fi, FaceKind::Boundary);
            mesh.faces[id].tag = rf.boundary_tag;
        } else {
            const int id = make_face(rf.cells[0], fi, FaceKind::Interior);
            mesh.faces[id].neighbor = rf.cells[1];
            const int k = edge_in_cell(rf.cells[1], rf.a, rf.b);
            mesh.cells[rf.cells[1]].faces[k] = id;
        }
    }
    return mesh;
}

/// Creates one interaction region per post-split vertex with its sub-cells and sub-faces.
inline void build_interaction_regions(SplitMesh& mesh)
{
    mesh.sub_cells.clear();
    mesh.sub_faces.clear();
    mesh.interaction_regions.assign(mesh.vertices.size(), {});
    for (std::size_t v = 0; v < mesh.vertices.size(); ++v) mesh.interaction_regions[v].vertex = static_cast<int>(v);

    for (std::size_t c = 0; c < mesh.cells.size(); ++c) {
        Cell& cell = mesh.cells[c];
        cell.sub_cells.clear();
        for (int v : cell.vertices) {
            SubCell sc;
            sc.cell = static_cast<int>(c);
            sc.vertex = v;
            sc.region = v;
            cell.sub_cells.push_back(static_cast<int>(mesh.sub_cells.size()));
            mesh.interaction_regions[v].sub_cells.push_back(static_cast<int>(mesh.sub_cells.size()));
            mesh.sub_cells.push_back(sc);
        }
    }
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        Face& face = mesh.faces[f];
        for (int end = 0; end < 2; ++end) {
            SubFace sf;
            sf.face = static_cast<int>(f);
            sf.vertex = face.vertices[end];
            sf.end = end;
            sf.region = sf.vertex;
            face.sub_faces[end] = static_cast<int>(mesh.sub_faces.size());
            mesh.interaction_regions[sf.vertex].sub_faces.push_back(static_cast<int>(mesh.sub_faces.size()));
            mesh.sub_faces.push_back(sf);
        }
    }
}

/// Cell centroids and areas, face centers and area-weighted normals, sub-cell areas,
/// sub-face half normals and continuity points `center + beta (vertex - center)`.
inline void compute_geometry(SplitMesh& mesh, double beta = 1.0 / 3.0)
{
    if (!(beta > 0.0 && beta < 1.0)) throw MeshError("continuity-point parameter beta must lie in (0, 1)");
    mesh.beta = beta;
    for (std::size_t c = 0; c < mesh.cells.size(); ++c) {
        Cell& cell = mesh.cells[c];
        std::vector<Vec2> pts;
        for (int v : cell.vertices) pts.push_back(mesh.vertices[v]);
        cell.centroid = detail::polygon_centroid(pts, cell.area);
        if (!(cell.area > 0.0)) throw MeshError("cell " + std::to_string(c) + " has non-positive area");
    }
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        Face& face = mesh.faces[f];
        const Vec2 a = mesh.vertices[face.vertices[0]], b = mesh.vertices[face.vertices[1]];
        face.measure = (b - a).norm();
        if (!(face.measure > 0.0)) throw MeshError("face " + std::to_string(f) + " has zero length");
        face.center = 0.5 * (a + b);
        face.normal = rotate_cw(b - a);
    }
    for (auto& sf : mesh.sub_faces) {
        const Face& face = mesh.faces[sf.face];
        const Vec2 v = mesh.vertices[sf.vertex];
        sf.normal = 0.5 * face.normal;
        sf.measure = 0.5 * face.measure;
        sf.continuity_point = face.center + beta * (v - face.center);
        sf.midpoint = 0.5 * (face.center + v);
    }
    for (std::size_t c = 0; c < mesh.cells.size(); ++c) {
        const Cell& cell = mesh.cells[c];
        const std::size_t n = cell.vertices.size();
        for (std::size_t k = 0; k < cell.sub_cells.size(); ++k) {
            const Vec2 v = mesh.vertices[cell.vertices[k]];
            const Vec2 next = mesh.vertices[cell.vertices[(k + 1) % n]];
            const Vec2 prev = mesh.vertices[cell.vertices[(k + n - 1) % n]];
            const std::vector<Vec2> quad{v, 0.5 * (v + next), cell.centroid, 0.5 * (prev + v)};
            mesh.sub_cells[cell.sub_cells[k]].area = signed_area(quad);
        }
    }
}

/// split + regions + geometry.
inline SplitMesh prepare_mesh(const RawMesh& raw, double beta = 1.0 / 3.0)
{
    SplitMesh mesh = split_fractures(raw);
    build_interaction_regions(mesh);
    compute_geometry(mesh, beta);
    return mesh;
}

}  // namespace fvfrac
