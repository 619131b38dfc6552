#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/LU>

#include "fvfrac/constitutive.hpp"
#include "fvfrac/discretization/dofs.hpp"
#include "fvfrac/errors.hpp"
#include "fvfrac/mesh/split_mesh.hpp"

namespace fvfrac {

enum class SubFaceClass { Interior, Dirichlet, Neumann, Fracture };

struct DiscretizationOptions {
    StressSymmetry symmetry = StressSymmetry::Weak;
    double condition_warning = 1e12;
    std::function<void(const std::string&)> warn;  // called when a region exceeds condition_warning
};

/// Linear map from (unknown blocks, boundary-data blocks) to a traction vector.
struct TractionMap {
    std::vector<std::pair<int, Mat2>> unknowns;
    std::vector<std::pair<int, Mat2>> data;
    Vec2 constant = Vec2::Zero();

    Vec2 evaluate(const Eigen::VectorXd& x, const Eigen::VectorXd& boundary) const
    {
        Vec2 t = constant;
        for (const auto& [b, m] : unknowns) t += m * x.segment<2>(2 * b);
        for (const auto& [b, m] : data) t += m * boundary.segment<2>(2 * b);
        return t;
    }

    void add(const TractionMap& other, double sign = 1.0)
    {
        for (const auto& [b, m] : other.unknowns) unknowns.emplace_back(b, sign * m);
        for (const auto& [b, m] : other.data) data.emplace_back(b, sign * m);
        constant += sign * other.constant;
        compress();
    }

    /// Sorts by block index and merges duplicates.
    void compress()
    {
        auto merge = [](std::vector<std::pair<int, Mat2>>& v) {
            std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
            std::vector<std::pair<int, Mat2>> out;
            for (auto& e : v) {
                if (!out.empty() && out.back().first == e.first)
                    out.back().second += e.second;
                else
                    out.push_back(e);
            }
            v = std::move(out);
        };
        merge(unknowns);
        merge(data);
    }

    Mat2 block(int b) const
    {
        for (const auto& [k, m] : unknowns)
            if (k == b) return m;
        return Mat2::Zero();
    }
};

/// Per-vertex system A G = B X, where G stacks the sub-cell gradients (row-major 2x2
/// each) and X stacks the local cell displacements, fracture-face displacements and
/// boundary data.
struct LocalSystem {
    int region = -1;
    std::vector<int> sub_cells;
    std::vector<double> weights;      // sub-cell area fractions for the average gradient
    std::vector<int> unknown_blocks;  // global unknown block per local column block
    std::vector<int> data_blocks;     // boundary-data block per local data column block
    std::vector<int> sub_faces;
    std::vector<SubFaceClass> classes;

    Eigen::MatrixXd gradient_matrix;
    Eigen::MatrixXd rhs;
    std::vector<Eigen::MatrixXd> owner_traction;     // 2 x ngrad per sub-face: sigma_owner * nu
    std::vector<Eigen::MatrixXd> neighbor_traction;  // 2 x ngrad, interior sub-faces: sigma_neighbor * (-nu)

    int stress_rows = 0;
    int displacement_rows = 0;
    int fracture_rows = 0;
    int boundary_rows = 0;

    int num_gradients() const { return 4 * static_cast<int>(sub_cells.size()); }
    int num_unknown_columns() const { return 2 * static_cast<int>(unknown_blocks.size()); }
    int num_columns() const { return num_unknown_columns() + 2 * static_cast<int>(data_blocks.size()); }
    int num_rows() const { return stress_rows + displacement_rows + fracture_rows + boundary_rows; }
};

/// Eliminated weights of one region: per sub-face, owner-side traction as a 2 x ncols map.
struct LocalWeights {
    int region = -1;
    std::vector<int> sub_faces;
    std::vector<Eigen::MatrixXd> owner;
    std::vector<Eigen::MatrixXd> neighbor;  // empty matrix for non-interior sub-faces
    std::vector<int> unknown_blocks;
    std::vector<int> data_blocks;
    double condition = 0.0;
};

/// Face-level and sub-face-level stress weights. Face maps give the force on the face
/// (traction integrated over its length) seen from the owner, as a function of unknowns
/// and boundary data.
struct StressWeights {
    DofMap dofs;
    BoundaryDataLayout boundary;
    std::vector<TractionMap> faces;
    std::vector<TractionMap> sub_faces;
    std::vector<TractionMap> sub_faces_neighbor;
    std::vector<SubFaceClass> classes;
    double max_condition = 0.0;

    Vec2 face_traction(int f, const Eigen::VectorXd& x, const Eigen::VectorXd& data) const
    {
        return faces[f].evaluate(x, data);
    }
};

namespace detail {

/// 2x4 operator v -> M v on row-major vec(M); used both for M n and G d.
inline Eigen::Matrix<double, 2, 4> contract(const Vec2& v)
{
    Eigen::Matrix<double, 2, 4> m = Eigen::Matrix<double, 2, 4>::Zero();
    m(0, 0) = v.x();
    m(0, 1) = v.y();
    m(1, 2) = v.x();
    m(1, 3) = v.y();
    return m;
}

inline Eigen::Matrix4d transpose_permutation()
{
    Eigen::Matrix4d p = Eigen::Matrix4d::Zero();
    p(0, 0) = p(1, 2) = p(2, 1) = p(3, 3) = 1.0;
    return p;
}

inline SubFaceClass classify(const SplitMesh& mesh, const BoundaryDataLayout& layout, int sf)
{
    const Face& face = mesh.faces[mesh.sub_faces[sf].face];
    switch (face.kind) {
    case FaceKind::Interior: return SubFaceClass::Interior;
    case FaceKind::Fracture: return SubFaceClass::Fracture;
    case FaceKind::Boundary: {
        const int b = layout.block_of_sub_face[sf];
        if (b < 0) throw AssemblyError("boundary sub-face " + std::to_string(sf) + " is unclassified");
        return layout.kind_of_block[b] == BoundaryKind::Dirichlet ? SubFaceClass::Dirichlet : SubFaceClass::Neumann;
    }
    }
    return SubFaceClass::Interior;
}

}  // namespace detail

/// Traction sigma_s * nu of sub-cell `s` (local index) as a row block on all gradients.
inline Eigen::MatrixXd local_traction_operator(const LocalSystem& sys, const std::vector<StiffnessTensor>& stiffness,
                                               const SplitMesh& mesh, int s, const Vec2& nu, StressSymmetry symmetry)
{
    const int ng = sys.num_gradients();
    Eigen::MatrixXd op = Eigen::MatrixXd::Zero(2, ng);
    const Eigen::Matrix4d m = stiffness[mesh.sub_cells[sys.sub_cells[s]].cell].matrix();
    const Eigen::Matrix<double, 2, 4> n = detail::contract(nu);
    const Eigen::Matrix4d pt = detail::transpose_permutation();
    op.block<2, 4>(0, 4 * s) += 0.5 * n * m;
    if (symmetry == StressSymmetry::Full) {
        op.block<2, 4>(0, 4 * s) += 0.5 * n * pt * m;
    } else {
        for (std::size_t t = 0; t < sys.sub_cells.size(); ++t)
            op.block<2, 4>(0, 4 * t) += 0.5 * sys.weights[t] * n * pt * m;
    }
    return op;
}

namespace detail {

inline int local_column_block(LocalSystem& sys, int global_block)
{
    auto it = std::find(sys.unknown_blocks.begin(), sys.unknown_blocks.end(), global_block);
    if (it != sys.unknown_blocks.end()) return static_cast<int>(it - sys.unknown_blocks.begin());
    sys.unknown_blocks.push_back(global_block);
    return static_cast<int>(sys.unknown_blocks.size()) - 1;
}

inline int local_sub_cell(const LocalSystem& sys, const SplitMesh& mesh, int cell)
{
    for (std::size_t s = 0; s < sys.sub_cells.size(); ++s)
        if (mesh.sub_cells[sys.sub_cells[s]].cell == cell) return static_cast<int>(s);
    throw AssemblyError("cell " + std::to_string(cell) + " has no sub-cell in region " + std::to_string(sys.region));
}

/// Row entries are staged before the matrices are sized.
struct StagedRow {
    Eigen::VectorXd grad;
    std::vector<std::pair<int, double>> unknown_cols;  // local unknown column -> coefficient
    std::vector<std::pair<int, double>> data_cols;     // local data column -> coefficient
};

}  // namespace detail

namespace detail {

inline void push_displacement_rows(std::vector<StagedRow>& rows, int ng, int s, const Vec2& d)
{
    const Eigen::Matrix<double, 2, 4> dm = contract(d);
    for (int p = 0; p < 2; ++p) {
        StagedRow r;
        r.grad = Eigen::VectorXd::Zero(ng);
        r.grad.segment<4>(4 * s) = dm.row(p).transpose();
        rows.push_back(std::move(r));
    }
}

}  // namespace detail

/// Adds the fracture-face displacement definitions u_face = u_cell + G (x~ - x_cell) for
/// every fracture sub-face of the region; the face displacement enters as a local
/// unknown column. The traction on the face is evaluated from the owner sub-cell only.
inline void assemble_local_fractured(LocalSystem& sys, std::vector<detail::StagedRow>& rows, const SplitMesh& mesh,
                                     const DofMap& dofs)
{
    const int ng = sys.num_gradients();
    for (std::size_t k = 0; k < sys.sub_faces.size(); ++k) {
        if (sys.classes[k] != SubFaceClass::Fracture) continue;
        const SubFace& sf = mesh.sub_faces[sys.sub_faces[k]];
        const Face& face = mesh.faces[sf.face];
        if (face.pair < 0 || face.pair >= static_cast<int>(mesh.fracture_pairs.size()))
            throw AssemblyError("fracture sub-face " + std::to_string(sys.sub_faces[k]) + " has no paired twin");
        const FracturePair& pair = mesh.fracture_pairs[face.pair];
        const int twin = face.side > 0 ? pair.minus_face : pair.plus_face;
        if (twin < 0 || mesh.faces[twin].pair != face.pair)
            throw AssemblyError("fracture sub-face " + std::to_string(sys.sub_faces[k]) + " has no paired twin");

        const int s = detail::local_sub_cell(sys, mesh, face.owner);
        const int cell_col = detail::local_column_block(sys, dofs.cell_block(face.owner));
        const int face_col = detail::local_column_block(sys, dofs.face_block(face));
        const Vec2 d = sf.continuity_point - mesh.cells[face.owner].centroid;
        detail::push_displacement_rows(rows, ng, s, d);
        for (int p = 0; p < 2; ++p) {
            auto& r = rows[rows.size() - 2 + p];
            r.unknown_cols = {{2 * face_col + p, 1.0}, {2 * cell_col + p, -1.0}};
        }
        sys.fracture_rows += 2;
    }
}

/// Builds the local system of one interaction region.
inline LocalSystem assemble_local(const SplitMesh& mesh, int region, const std::vector<StiffnessTensor>& stiffness,
                                  const BoundaryDataLayout& layout, const DofMap& dofs,
                                  StressSymmetry symmetry = StressSymmetry::Weak)
{
    const InteractionRegion& reg = mesh.interaction_regions.at(region);
    if (reg.sub_cells.empty()) throw AssemblyError("interaction region " + std::to_string(region) + " has no sub-cells");

    LocalSystem sys;
    sys.region = region;
    sys.sub_cells = reg.sub_cells;
    sys.sub_faces = reg.sub_faces;
    double total = 0.0;
    for (int sc : sys.sub_cells) total += mesh.sub_cells[sc].area;
    for (int sc : sys.sub_cells) sys.weights.push_back(mesh.sub_cells[sc].area / total);
    for (int sc : sys.sub_cells) detail::local_column_block(sys, dofs.cell_block(mesh.sub_cells[sc].cell));
    for (int sf : sys.sub_faces) {
        sys.classes.push_back(detail::classify(mesh, layout, sf));
        const int b = layout.block_of_sub_face[sf];
        if (b >= 0) sys.data_blocks.push_back(b);
    }

    const int ng = sys.num_gradients();
    std::vector<detail::StagedRow> rows;
    std::vector<detail::StagedRow> stress, disp, bound;
    int data_index = 0;
    for (std::size_t k = 0; k < sys.sub_faces.size(); ++k) {
        const SubFace& sf = mesh.sub_faces[sys.sub_faces[k]];
        const Face& face = mesh.faces[sf.face];
        const int a = detail::local_sub_cell(sys, mesh, face.owner);
        const Vec2 xa = mesh.cells[face.owner].centroid;
        const Eigen::MatrixXd ta = local_traction_operator(sys, stiffness, mesh, a, sf.normal, symmetry);
        sys.owner_traction.push_back(ta);
        sys.neighbor_traction.emplace_back();
        switch (sys.classes[k]) {
        case SubFaceClass::Interior: {
            const int b = detail::local_sub_cell(sys, mesh, face.neighbor);
            const Vec2 xb = mesh.cells[face.neighbor].centroid;
            const Eigen::MatrixXd tb = local_traction_operator(sys, stiffness, mesh, b, -sf.normal, symmetry);
            sys.neighbor_traction.back() = tb;
            // sigma_a nu = sigma_b nu
            for (int p = 0; p < 2; ++p) {
                detail::StagedRow r;
                r.grad = (ta.row(p) + tb.row(p)).transpose();
                stress.push_back(std::move(r));
            }
            // u_a + G_a (x~ - x_a) = u_b + G_b (x~ - x_b)
            const Eigen::Matrix<double, 2, 4> da = detail::contract(sf.continuity_point - xa);
            const Eigen::Matrix<double, 2, 4> db = detail::contract(sf.continuity_point - xb);
            const int ca = detail::local_column_block(sys, dofs.cell_block(face.owner));
            const int cb = detail::local_column_block(sys, dofs.cell_block(face.neighbor));
            for (int p = 0; p < 2; ++p) {
                detail::StagedRow r;
                r.grad = Eigen::VectorXd::Zero(ng);
                r.grad.segment<4>(4 * a) = da.row(p).transpose();
                r.grad.segment<4>(4 * b) -= db.row(p).transpose();
                r.unknown_cols = {{2 * cb + p, 1.0}, {2 * ca + p, -1.0}};
                disp.push_back(std::move(r));
            }
            sys.stress_rows += 2;
            sys.displacement_rows += 2;
            break;
        }
        case SubFaceClass::Dirichlet: {
            const int ca = detail::local_column_block(sys, dofs.cell_block(face.owner));
            detail::push_displacement_rows(bound, ng, a, sf.continuity_point - xa);
            for (int p = 0; p < 2; ++p) {
                auto& r = bound[bound.size() - 2 + p];
                r.unknown_cols = {{2 * ca + p, -1.0}};
                r.data_cols = {{2 * data_index + p, 1.0}};
            }
            ++data_index;
            sys.boundary_rows += 2;
            break;
        }
        case SubFaceClass::Neumann: {
            for (int p = 0; p < 2; ++p) {
                detail::StagedRow r;
                r.grad = ta.row(p).transpose();
                r.data_cols = {{2 * data_index + p, 1.0}};
                bound.push_back(std::move(r));
            }
            ++data_index;
            sys.boundary_rows += 2;
            break;
        }
        case SubFaceClass::Fracture: break;
        }
    }
    std::vector<detail::StagedRow> frac;
    assemble_local_fractured(sys, frac, mesh, dofs);

    for (auto* group : {&stress, &disp, &frac, &bound})
        for (auto& r : *group) rows.push_back(std::move(r));

    const int nrows = static_cast<int>(rows.size());
    const int nunk = sys.num_unknown_columns();
    sys.gradient_matrix = Eigen::MatrixXd::Zero(nrows, ng);
    sys.rhs = Eigen::MatrixXd::Zero(nrows, sys.num_columns());
    for (int i = 0; i < nrows; ++i) {
        sys.gradient_matrix.row(i) = rows[i].grad.transpose();
        for (const auto& [c, v] : rows[i].unknown_cols) sys.rhs(i, c) += v;
        for (const auto& [c, v] : rows[i].data_cols) sys.rhs(i, nunk + c) += v;
    }
    return sys;
}

/// Solves the local system for all right-hand-side columns at once and turns the
/// gradients into sub-face traction maps.
inline LocalWeights eliminate_gradients(const LocalSystem& sys, const DiscretizationOptions& options = {})
{
    const int n = sys.num_gradients();
    if (sys.num_rows() != n)
        throw DiscretizationError(sys.region, std::numeric_limits<double>::infinity(),
                                  "local system of region " + std::to_string(sys.region) + " is not square (" +
                                      std::to_string(sys.num_rows()) + " rows, " + std::to_string(n) + " gradients)");

    Eigen::MatrixXd a = sys.gradient_matrix;
    Eigen::MatrixXd b = sys.rhs;
    for (int i = 0; i < n; ++i) {
        const double s = a.row(i).cwiseAbs().maxCoeff();
        if (s > 0.0) {
            a.row(i) /= s;
            b.row(i) /= s;
        }
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
    const double rcond = lu.rcond();
    const double condition = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
    if (!(rcond > 1e-14) || !std::isfinite(rcond))
        throw DiscretizationError(sys.region, condition,
                                  "singular local system in interaction region " + std::to_string(sys.region) +
                                      " (condition estimate " + std::to_string(condition) + ")");
    if (condition > options.condition_warning && options.warn)
        options.warn("interaction region " + std::to_string(sys.region) + " is ill conditioned (estimate " +
                     std::to_string(condition) + ")");
    const Eigen::MatrixXd grads = lu.solve(b);

    LocalWeights w;
    w.region = sys.region;
    w.sub_faces = sys.sub_faces;
    w.unknown_blocks = sys.unknown_blocks;
    w.data_blocks = sys.data_blocks;
    w.condition = condition;
    const int nunk = sys.num_unknown_columns();
    int data_index = 0;
    for (std::size_t k = 0; k < sys.sub_faces.size(); ++k) {
        Eigen::MatrixXd owner = sys.owner_traction[k] * grads;
        if (sys.classes[k] == SubFaceClass::Neumann) {
            // the prescribed force is imposed exactly
            owner.setZero();
            owner(0, nunk + 2 * data_index) = 1.0;
            owner(1, nunk + 2 * data_index + 1) = 1.0;
        }
        if (sys.classes[k] == SubFaceClass::Dirichlet || sys.classes[k] == SubFaceClass::Neumann) ++data_index;
        w.owner.push_back(std::move(owner));
        if (sys.classes[k] == SubFaceClass::Interior)
            w.neighbor.push_back(sys.neighbor_traction[k] * grads);
        else
            w.neighbor.emplace_back();
    }
    return w;
}

namespace detail {

inline TractionMap to_traction_map(const Eigen::MatrixXd& m, const std::vector<int>& unknown_blocks,
                                   const std::vector<int>& data_blocks)
{
    TractionMap t;
    for (std::size_t j = 0; j < unknown_blocks.size(); ++j)
        t.unknowns.emplace_back(unknown_blocks[j], m.block<2, 2>(0, 2 * j));
    const int off = 2 * static_cast<int>(unknown_blocks.size());
    for (std::size_t j = 0; j < data_blocks.size(); ++j)
        t.data.emplace_back(data_blocks[j], m.block<2, 2>(0, off + 2 * j));
    t.compress();
    return t;
}

}  // namespace detail

/// Sums sub-face weights into face weights.
inline StressWeights aggregate_face_weights(const SplitMesh& mesh, const DofMap& dofs, const BoundaryDataLayout& layout,
                                            const std::vector<LocalWeights>& locals)
{
    StressWeights w;
    w.dofs = dofs;
    w.boundary = layout;
    w.sub_faces.resize(mesh.sub_faces.size());
    w.sub_faces_neighbor.resize(mesh.sub_faces.size());
    w.classes.resize(mesh.sub_faces.size());
    std::vector<bool> seen(mesh.sub_faces.size(), false);
    for (const auto& loc : locals) {
        w.max_condition = std::max(w.max_condition, loc.condition);
        for (std::size_t k = 0; k < loc.sub_faces.size(); ++k) {
            const int sf = loc.sub_faces[k];
            w.sub_faces[sf] = detail::to_traction_map(loc.owner[k], loc.unknown_blocks, loc.data_blocks);
            if (loc.neighbor[k].size() > 0)
                w.sub_faces_neighbor[sf] = detail::to_traction_map(loc.neighbor[k], loc.unknown_blocks, loc.data_blocks);
            w.classes[sf] = detail::classify(mesh, layout, sf);
            seen[sf] = true;
        }
    }
    for (std::size_t sf = 0; sf < seen.size(); ++sf)
        if (!seen[sf]) throw AssemblyError("sub-face " + std::to_string(sf) + " was not covered by any region");

    w.faces.resize(mesh.faces.size());
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        TractionMap t;
        for (int sf : mesh.faces[f].sub_faces) t.add(w.sub_faces[sf]);
        w.faces[f] = std::move(t);
    }
    return w;
}

/// Full discretization: one local elimination per interaction region, then aggregation.
/// `region_order` permutes the processing order (results do not depend on it).
inline StressWeights discretize(const SplitMesh& mesh, const std::vector<StiffnessTensor>& stiffness,
                                const BoundaryKinds& kinds, const DiscretizationOptions& options = {},
                                const std::vector<int>* region_order = nullptr)
{
    if (stiffness.size() != mesh.num_cells())
        throw AssemblyError("stiffness tensors given for " + std::to_string(stiffness.size()) + " cells, mesh has " +
                            std::to_string(mesh.num_cells()));
    const DofMap dofs = DofMap::from_mesh(mesh);
    const BoundaryDataLayout layout = BoundaryDataLayout::build(mesh, kinds);
    std::vector<LocalWeights> locals;
    locals.reserve(mesh.interaction_regions.size());
    const std::size_t nreg = mesh.interaction_regions.size();
    for (std::size_t k = 0; k < nreg; ++k) {
        const int r = region_order ? (*region_order)[k] : static_cast<int>(k);
        if (mesh.interaction_regions[r].sub_cells.empty()) continue;
        const LocalSystem sys = assemble_local(mesh, r, stiffness, layout, dofs, options.symmetry);
        locals.push_back(eliminate_gradients(sys, options));
    }
    return aggregate_face_weights(mesh, dofs, layout, locals);
}

inline StressWeights discretize(const SplitMesh& mesh, const StiffnessTensor& stiffness, const BoundaryKinds& kinds,
                                const DiscretizationOptions& options = {})
{
    return discretize(mesh, std::vector<StiffnessTensor>(mesh.num_cells(), stiffness), kinds, options);
}

}  // namespace fvfrac
