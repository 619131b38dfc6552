#pragma once

#include <algorithm>
#include <initializer_list>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Sparse>

#include "fvfrac/discretization/local.hpp"
#include "fvfrac/errors.hpp"
#include "fvfrac/mesh/split_mesh.hpp"

namespace fvfrac {

/// Displacement jump u+ - u- per fracture face in the local frame: x = normal
/// component, y = tangential component. A single entry applies to every face.
struct PrescribedJump {
    std::vector<Vec2> jump;
};

/// Traction on the plus side per fracture face (global frame, force per length). A
/// single entry applies to every face.
struct PrescribedTraction {
    std::vector<Vec2> traction;
};

/// |T_tau| = mu_f |T_n| on every face of the fracture, with zero normal jump.
struct CoulombFriction {
    double mu_f = 0.0;
};

using FractureCondition = std::variant<PrescribedJump, PrescribedTraction, CoulombFriction>;

/// Closure per fracture id.
using FractureConditions = std::vector<std::pair<int, FractureCondition>>;

/// Frozen signs of the normal and shear traction per fracture pair, used to linearize
/// the friction law.
struct FrictionSigns {
    std::vector<int> normal;
    std::vector<int> shear;
    bool frictionless = false;  // replace mu_f by zero (initial iterate)

    bool operator==(const FrictionSigns&) const = default;
};

/// A group of rows with local row indices.
struct RowBlock {
    int rows = 0;
    std::vector<Eigen::Triplet<double>> entries;
    Eigen::VectorXd rhs;

    explicit RowBlock(int n = 0) : rows(n), rhs(Eigen::VectorXd::Zero(n)) {}
};

struct GlobalSystem {
    DofMap dofs;
    Eigen::SparseMatrix<double> matrix;
    Eigen::VectorXd rhs;
    int momentum_rows = 0;
    int equilibrium_rows = 0;
    int closure_rows = 0;
};

/// Pairs of one fracture id in mesh order.
inline std::vector<int> pairs_of_fracture(const SplitMesh& mesh, int fracture_id)
{
    std::vector<int> out;
    for (std::size_t p = 0; p < mesh.fracture_pairs.size(); ++p)
        if (mesh.fracture_pairs[p].fracture_id == fracture_id) out.push_back(static_cast<int>(p));
    return out;
}

inline std::vector<int> fracture_ids(const SplitMesh& mesh)
{
    std::vector<int> ids;
    for (const auto& pr : mesh.fracture_pairs)
        if (std::find(ids.begin(), ids.end(), pr.fracture_id) == ids.end()) ids.push_back(pr.fracture_id);
    return ids;
}

namespace detail {

/// Adds `scale * w * x` for a traction map into row block rows (r, r+1); the data part
/// and constant move to the right-hand side.
inline void add_traction(RowBlock& block, int row, const TractionMap& t, const Eigen::VectorXd& data, double scale)
{
    for (const auto& [b, m] : t.unknowns)
        for (int p = 0; p < 2; ++p)
            for (int q = 0; q < 2; ++q) block.entries.emplace_back(row + p, 2 * b + q, scale * m(p, q));
    Vec2 known = t.constant;
    for (const auto& [b, m] : t.data) known += m * data.segment<2>(2 * b);
    block.rhs.segment<2>(row) -= scale * known;
}

/// Adds `scale * v^T T` as a single row.
inline void add_projected_traction(RowBlock& block, int row, const TractionMap& t, const Eigen::VectorXd& data,
                                   const Vec2& v, double scale)
{
    for (const auto& [b, m] : t.unknowns) {
        const Eigen::RowVector2d r = v.transpose() * m;
        for (int q = 0; q < 2; ++q) block.entries.emplace_back(row, 2 * b + q, scale * r(q));
    }
    Vec2 known = t.constant;
    for (const auto& [b, m] : t.data) known += m * data.segment<2>(2 * b);
    block.rhs(row) -= scale * v.dot(known);
}

inline Vec2 per_face_value(const std::vector<Vec2>& values, std::size_t k, std::size_t n, int fracture_id,
                           const char* what)
{
    if (values.size() == 1) return values[0];
    if (values.size() != n)
        throw AssemblyError(std::string(what) + " for fracture " + std::to_string(fracture_id) + " has " +
                            std::to_string(values.size()) + " values for " + std::to_string(n) + " faces");
    return values[k];
}

}  // namespace detail

/// Momentum balance per cell: sum of outward face forces = -|cell| f.
inline RowBlock assemble_momentum(const SplitMesh& mesh, const StressWeights& w, const Eigen::VectorXd& data,
                                  const std::vector<Vec2>& body_force = {})
{
    if (w.faces.size() != mesh.faces.size()) throw AssemblyError("face with missing weights");
    if (!body_force.empty() && body_force.size() != mesh.num_cells())
        throw AssemblyError("body force given for " + std::to_string(body_force.size()) + " cells");
    const int n = static_cast<int>(mesh.num_cells());
    RowBlock block(2 * n);
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        const Face& face = mesh.faces[f];
        detail::add_traction(block, 2 * face.owner, w.faces[f], data, 1.0);
        if (face.neighbor >= 0) detail::add_traction(block, 2 * face.neighbor, w.faces[f], data, -1.0);
    }
    if (!body_force.empty())
        for (int c = 0; c < n; ++c) block.rhs.segment<2>(2 * c) -= mesh.cells[c].area * body_force[c];
    return block;
}

/// Interface equilibrium per pair: (T+ + T-) / |face| = 0.
inline RowBlock assemble_interface_equilibrium(const SplitMesh& mesh, const StressWeights& w,
                                               const Eigen::VectorXd& data)
{
    const int m = static_cast<int>(mesh.num_pairs());
    RowBlock block(2 * m);
    for (int p = 0; p < m; ++p) {
        const FracturePair& pr = mesh.fracture_pairs[p];
        if (pr.plus_face < 0 || pr.minus_face < 0) throw AssemblyError("unmatched fracture pair " + std::to_string(p));
        const double s = 1.0 / mesh.faces[pr.plus_face].measure;
        detail::add_traction(block, 2 * p, w.faces[pr.plus_face], data, s);
        detail::add_traction(block, 2 * p, w.faces[pr.minus_face], data, s);
    }
    return block;
}

/// Closure rows for the pairs of one fracture; rows are indexed by pair (2 per pair) in a
/// block covering all pairs.
inline void build_closure(RowBlock& block, const SplitMesh& mesh, const StressWeights& w, const Eigen::VectorXd& data,
                          int fracture_id, const FractureCondition& condition, const FrictionSigns* signs = nullptr,
                          double stiffness_scale = 1.0)
{
    const DofMap& dofs = w.dofs;
    const std::vector<int> pairs = pairs_of_fracture(mesh, fracture_id);
    if (pairs.empty()) throw AssemblyError("closure given for unknown fracture id " + std::to_string(fracture_id));
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        const int p = pairs[k];
        const int row = 2 * p;
        const Face& plus = mesh.plus_face(p);
        const double inv = 1.0 / plus.measure;
        const Vec2 n = mesh.fracture_normal(p);
        const Vec2 tau = mesh.fracture_tangent(p);
        const int bp = dofs.plus_block(p), bm = dofs.minus_block(p);
        const double js = stiffness_scale * inv;
        if (const auto* jump = std::get_if<PrescribedJump>(&condition)) {
            const Vec2 local = detail::per_face_value(jump->jump, k, pairs.size(), fracture_id, "jump");
            const Vec2 global = local.x() * n + local.y() * tau;
            for (int q = 0; q < 2; ++q) {
                block.entries.emplace_back(row + q, 2 * bp + q, js);
                block.entries.emplace_back(row + q, 2 * bm + q, -js);
            }
            block.rhs.segment<2>(row) += js * global;
        } else if (const auto* trac = std::get_if<PrescribedTraction>(&condition)) {
            const Vec2 t = detail::per_face_value(trac->traction, k, pairs.size(), fracture_id, "traction");
            detail::add_traction(block, row, w.faces[mesh.fracture_pairs[p].plus_face], data, inv);
            block.rhs.segment<2>(row) += t;
        } else {
            const auto& fr = std::get<CoulombFriction>(condition);
            if (!(fr.mu_f >= 0.0)) throw AssemblyError("friction coefficient must be non-negative");
            if (!signs || signs->normal.size() != mesh.num_pairs() || signs->shear.size() != mesh.num_pairs())
                throw AssemblyError("friction closure requires traction signs for every pair");
            const double mu = signs->frictionless ? 0.0 : fr.mu_f;
            const Vec2 v = double(signs->shear[p]) * tau - mu * double(signs->normal[p]) * n;
            const TractionMap& t = w.faces[mesh.fracture_pairs[p].plus_face];
            detail::add_projected_traction(block, row, t, data, v, inv);
            for (int q = 0; q < 2; ++q) {
                block.entries.emplace_back(row + 1, 2 * bp + q, js * n(q));
                block.entries.emplace_back(row + 1, 2 * bm + q, -js * n(q));
            }
        }
    }
}

/// Representative stiffness used to scale displacement-type rows.
inline double stiffness_scale(const std::vector<StiffnessTensor>& stiffness)
{
    double s = 0.0;
    for (const auto& c : stiffness) s = std::max(s, c.scale());
    return s > 0.0 ? s : 1.0;
}

/// Stacks momentum, interface equilibrium and closure rows into the square system.
inline GlobalSystem assemble_global(const SplitMesh& mesh, const StressWeights& w, const Eigen::VectorXd& data,
                                    const FractureConditions& conditions, const std::vector<Vec2>& body_force = {},
                                    const FrictionSigns* signs = nullptr, double scale = 1.0)
{
    const DofMap& dofs = w.dofs;
    if (!(dofs == DofMap::from_mesh(mesh))) throw AssemblyError("dimension mismatch: weights built for another mesh");
    if (data.size() != w.boundary.size())
        throw AssemblyError("dimension mismatch: boundary data has " + std::to_string(data.size()) + " entries, " +
                            std::to_string(w.boundary.size()) + " expected");
    if (std::none_of(w.boundary.kind_of_block.begin(), w.boundary.kind_of_block.end(),
                     [](BoundaryKind k) { return k == BoundaryKind::Dirichlet; }))
        throw IndefiniteProblemError("indefinite problem: no Dirichlet boundary, rigid motions are unconstrained");

    const std::vector<int> ids = fracture_ids(mesh);
    std::map<int, int> seen;
    for (const auto& [id, cond] : conditions) {
        if (++seen[id] > 1)
            throw AssemblyError("dimension mismatch: more than one closure for fracture " + std::to_string(id));
        if (std::find(ids.begin(), ids.end(), id) == ids.end())
            throw AssemblyError("dimension mismatch: closure for fracture " + std::to_string(id) + " which has no faces");
    }
    for (int id : ids)
        if (!seen.count(id)) throw AssemblyError("no closure given for fracture " + std::to_string(id));

    const RowBlock mom = assemble_momentum(mesh, w, data, body_force);
    const RowBlock eq = assemble_interface_equilibrium(mesh, w, data);
    RowBlock cl(2 * static_cast<int>(mesh.num_pairs()));
    for (const auto& [id, cond] : conditions) build_closure(cl, mesh, w, data, id, cond, signs, scale);

    GlobalSystem sys;
    sys.dofs = dofs;
    sys.momentum_rows = mom.rows;
    sys.equilibrium_rows = eq.rows;
    sys.closure_rows = cl.rows;
    const int n = dofs.num_dofs();
    if (mom.rows + eq.rows + cl.rows != n)
        throw AssemblyError("dimension mismatch: " + std::to_string(mom.rows + eq.rows + cl.rows) + " rows for " +
                            std::to_string(n) + " unknowns");
    std::vector<Eigen::Triplet<double>> all;
    all.reserve(mom.entries.size() + eq.entries.size() + cl.entries.size());
    int offset = 0;
    sys.rhs.resize(n);
    for (const RowBlock* b : std::initializer_list<const RowBlock*>{&mom, &eq, &cl}) {
        for (const auto& t : b->entries) all.emplace_back(offset + t.row(), t.col(), t.value());
        sys.rhs.segment(offset, b->rows) = b->rhs;
        offset += b->rows;
    }
    sys.matrix.resize(n, n);
    sys.matrix.setFromTriplets(all.begin(), all.end());
    sys.matrix.makeCompressed();
    return sys;
}

}  // namespace fvfrac
