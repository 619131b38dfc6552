#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "fvfrac/errors.hpp"
#include "fvfrac/mesh/split_mesh.hpp"
#include "fvfrac/types.hpp"

namespace fvfrac {

/// Global unknown ordering: cell-center displacements, then plus-side fracture-face
/// displacements, then minus-side ones. Each block holds the two components.
struct DofMap {
    int num_cells = 0;
    int num_pairs = 0;

    static DofMap from_mesh(const SplitMesh& mesh)
    {
        return {static_cast<int>(mesh.num_cells()), static_cast<int>(mesh.num_pairs())};
    }

    int cell_block(int c) const { return c; }
    int plus_block(int p) const { return num_cells + p; }
    int minus_block(int p) const { return num_cells + num_pairs + p; }
    int num_blocks() const { return num_cells + 2 * num_pairs; }
    int num_dofs() const { return 2 * num_blocks(); }

    /// Block of the displacement unknown living on a fracture face.
    int face_block(const Face& face) const { return face.side > 0 ? plus_block(face.pair) : minus_block(face.pair); }

    bool operator==(const DofMap&) const = default;
};

enum class BoundaryKind { Dirichlet, Neumann };

/// Boundary classification by tag.
using BoundaryKinds = std::map<int, BoundaryKind>;

/// A boundary condition: Dirichlet gives the displacement at a point, Neumann the traction
/// (force per unit length) at a point.
struct BoundaryCondition {
    BoundaryKind kind = BoundaryKind::Dirichlet;
    std::function<Vec2(const Vec2&)> value;

    static BoundaryCondition dirichlet(std::function<Vec2(const Vec2&)> u) { return {BoundaryKind::Dirichlet, std::move(u)}; }
    static BoundaryCondition dirichlet(const Vec2& u)
    {
        return {BoundaryKind::Dirichlet, [u](const Vec2&) { return u; }};
    }
    static BoundaryCondition neumann(std::function<Vec2(const Vec2&)> t) { return {BoundaryKind::Neumann, std::move(t)}; }
    static BoundaryCondition neumann(const Vec2& t)
    {
        return {BoundaryKind::Neumann, [t](const Vec2&) { return t; }};
    }
};

using BoundaryConditions = std::map<int, BoundaryCondition>;

inline BoundaryKinds kinds_of(const BoundaryConditions& bcs)
{
    BoundaryKinds kinds;
    for (const auto& [tag, bc] : bcs) kinds[tag] = bc.kind;
    return kinds;
}

/// One data block (two values) per boundary sub-face: the prescribed displacement at
/// the continuity point (Dirichlet) or the force on the sub-face (Neumann).
struct BoundaryDataLayout {
    std::vector<int> block_of_sub_face;  // -1 for non-boundary sub-faces
    std::vector<int> sub_face_of_block;
    std::vector<BoundaryKind> kind_of_block;

    int num_blocks() const { return static_cast<int>(sub_face_of_block.size()); }
    int size() const { return 2 * num_blocks(); }

    static BoundaryDataLayout build(const SplitMesh& mesh, const BoundaryKinds& kinds)
    {
        BoundaryDataLayout layout;
        layout.block_of_sub_face.assign(mesh.sub_faces.size(), -1);
        for (std::size_t s = 0; s < mesh.sub_faces.size(); ++s) {
            const Face& face = mesh.faces[mesh.sub_faces[s].face];
            if (face.kind != FaceKind::Boundary) continue;
            auto it = kinds.find(face.tag);
            if (it == kinds.end())
                throw AssemblyError("boundary sub-face " + std::to_string(s) + " has tag " + std::to_string(face.tag) +
                                    " with no boundary condition (unclassified sub-face)");
            layout.block_of_sub_face[s] = layout.num_blocks();
            layout.sub_face_of_block.push_back(static_cast<int>(s));
            layout.kind_of_block.push_back(it->second);
        }
        return layout;
    }
};

/// Evaluates boundary conditions into the data vector expected by the stress weights.
inline Eigen::VectorXd boundary_data(const SplitMesh& mesh, const BoundaryDataLayout& layout,
                                     const BoundaryConditions& bcs)
{
    Eigen::VectorXd data = Eigen::VectorXd::Zero(layout.size());
    for (int b = 0; b < layout.num_blocks(); ++b) {
        const SubFace& sf = mesh.sub_faces[layout.sub_face_of_block[b]];
        const Face& face = mesh.faces[sf.face];
        auto it = bcs.find(face.tag);
        if (it == bcs.end()) throw AssemblyError("no boundary condition for tag " + std::to_string(face.tag));
        if (it->second.kind != layout.kind_of_block[b])
            throw AssemblyError("boundary condition kind for tag " + std::to_string(face.tag) +
                                " differs from the one used at discretization");
        const Vec2 v = layout.kind_of_block[b] == BoundaryKind::Dirichlet
                           ? it->second.value(sf.continuity_point)
                           : Vec2(it->second.value(sf.midpoint) * sf.measure);
        data.segment<2>(2 * b) = v;
    }
    return data;
}

}  // namespace fvfrac
