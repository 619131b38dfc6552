#pragma once

#include <utility>
#include <vector>

#include "fvfrac/fvfrac.hpp"

namespace fvfrac::testing {

/// Unit squares on [0,nx] x [0,ny], each cut into two triangles along alternating
/// diagonals. `fractures` lists grid-point chains as ((i0,j0),(i1,j1),id) straight runs.
struct GridFracture {
    int i0, j0, i1, j1, id;
};

inline int grid_vertex(int nx, int i, int j) { return j * (nx + 1) + i; }

inline RawMesh grid_mesh(int nx, int ny, const std::vector<GridFracture>& fractures = {}, double shear = 0.0)
{
    RawMesh m;
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i) m.vertices.emplace_back(i + shear * j * (j - ny) * i * (i - nx) / (nx * ny), j);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const int a = grid_vertex(nx, i, j), b = grid_vertex(nx, i + 1, j), c = grid_vertex(nx, i + 1, j + 1),
                      d = grid_vertex(nx, i, j + 1);
            if ((i + j) % 2 == 0) {
                m.cells.push_back({a, b, c});
                m.cells.push_back({a, c, d});
            } else {
                m.cells.push_back({a, b, d});
                m.cells.push_back({b, c, d});
            }
        }
    for (int i = 0; i < nx; ++i) {
        m.boundary.push_back({grid_vertex(nx, i, 0), grid_vertex(nx, i + 1, 0), 1});
        m.boundary.push_back({grid_vertex(nx, i + 1, ny), grid_vertex(nx, i, ny), 3});
    }
    for (int j = 0; j < ny; ++j) {
        m.boundary.push_back({grid_vertex(nx, nx, j), grid_vertex(nx, nx, j + 1), 2});
        m.boundary.push_back({grid_vertex(nx, 0, j + 1), grid_vertex(nx, 0, j), 4});
    }
    for (const auto& f : fractures) {
        const int di = (f.i1 > f.i0) - (f.i1 < f.i0), dj = (f.j1 > f.j0) - (f.j1 < f.j0);
        for (int i = f.i0, j = f.j0; i != f.i1 || j != f.j1; i += di, j += dj)
            m.fractures.push_back({grid_vertex(nx, i, j), grid_vertex(nx, i + di, j + dj), f.id});
    }
    return m;
}

inline BoundaryConditions all_dirichlet(const std::function<Vec2(const Vec2&)>& u)
{
    BoundaryConditions bcs;
    for (int tag = 1; tag <= 4; ++tag) bcs[tag] = BoundaryCondition::dirichlet(u);
    return bcs;
}

/// Discretize, assemble and solve a linear problem.
struct LinearRun {
    SplitMesh mesh;
    StressWeights weights;
    Eigen::VectorXd data;
    GlobalSystem system;
    Solution solution;
};

inline LinearRun solve_on(const RawMesh& raw, const BoundaryConditions& bcs, const FractureConditions& closures = {},
                          const StiffnessTensor& c = StiffnessTensor::isotropic(1.0, 1.0))
{
    LinearRun r;
    r.mesh = prepare_mesh(raw);
    r.weights = discretize(r.mesh, c, kinds_of(bcs));
    r.data = boundary_data(r.mesh, r.weights.boundary, bcs);
    r.system = assemble_global(r.mesh, r.weights, r.data, closures);
    r.solution = solve_linear(r.system, r.weights, r.data);
    return r;
}

}  // namespace fvfrac::testing
