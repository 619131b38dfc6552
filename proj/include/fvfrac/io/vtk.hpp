#pragma once

#include <algorithm>
#include <sstream>
#include <string>

#include "fvfrac/errors.hpp"
#include "fvfrac/io/text.hpp"
#include "fvfrac/mesh/split_mesh.hpp"
#include "fvfrac/solver.hpp"

namespace fvfrac {

/// Legacy ASCII unstructured grid. Mesh cells come first, followed by every fracture face
/// as a line cell. Cell data: `displacement` (cell or face unknown), `traction_magnitude`
/// (largest face traction per length of a cell, or the face's own), `side` (0 for cells,
/// +1/-1 for fracture faces) and `fracture_id` (-1 for cells).
inline std::string format_vtk(const SplitMesh& mesh, const Solution& sol)
{
    if (sol.dofs.num_cells != mesh.num_cells() || sol.dofs.num_pairs != mesh.num_pairs() ||
        sol.tractions.size() != mesh.faces.size())
        throw IoError("solution does not match the mesh");
    const std::size_t nc = mesh.num_cells();
    const std::size_t nl = 2 * mesh.num_pairs();
    std::size_t size = 0;
    for (const auto& c : mesh.cells) size += c.vertices.size() + 1;
    size += 3 * nl;

    std::ostringstream os;
    os << "# vtk DataFile Version 3.0\n"
       << "fvfrac solution\n"
       << "ASCII\n"
       << "DATASET UNSTRUCTURED_GRID\n"
       << "POINTS " << mesh.vertices.size() << " double\n";
    for (const Vec2& v : mesh.vertices) os << format_number(v.x()) << ' ' << format_number(v.y()) << " 0\n";
    os << "CELLS " << nc + nl << ' ' << size << '\n';
    for (const auto& c : mesh.cells) {
        os << c.vertices.size();
        for (int v : c.vertices) os << ' ' << v;
        os << '\n';
    }
    for (const auto& pr : mesh.fracture_pairs)
        for (int f : {pr.plus_face, pr.minus_face})
            os << "2 " << mesh.faces[f].vertices[0] << ' ' << mesh.faces[f].vertices[1] << '\n';
    os << "CELL_TYPES " << nc + nl << '\n';
    for (const auto& c : mesh.cells) os << (c.vertices.size() == 3 ? 5 : (c.vertices.size() == 4 ? 9 : 7)) << '\n';
    for (std::size_t k = 0; k < nl; ++k) os << "3\n";

    os << "CELL_DATA " << nc + nl << '\n' << "VECTORS displacement double\n";
    for (std::size_t c = 0; c < nc; ++c) {
        const Vec2 u = sol.cell(static_cast<int>(c));
        os << format_number(u.x()) << ' ' << format_number(u.y()) << " 0\n";
    }
    for (std::size_t p = 0; p < mesh.num_pairs(); ++p)
        for (const Vec2& u : {sol.plus(static_cast<int>(p)), sol.minus(static_cast<int>(p))})
            os << format_number(u.x()) << ' ' << format_number(u.y()) << " 0\n";

    auto per_length = [&](int f) { return sol.tractions[f].norm() / mesh.faces[f].measure; };
    os << "SCALARS traction_magnitude double 1\nLOOKUP_TABLE default\n";
    for (const auto& c : mesh.cells) {
        double t = 0.0;
        for (int f : c.faces) t = std::max(t, per_length(f));
        os << format_number(t) << '\n';
    }
    for (const auto& pr : mesh.fracture_pairs)
        for (int f : {pr.plus_face, pr.minus_face}) os << format_number(per_length(f)) << '\n';

    os << "SCALARS side int 1\nLOOKUP_TABLE default\n";
    for (std::size_t c = 0; c < nc; ++c) os << "0\n";
    for (std::size_t p = 0; p < mesh.num_pairs(); ++p) os << "1\n-1\n";

    os << "SCALARS fracture_id int 1\nLOOKUP_TABLE default\n";
    for (std::size_t c = 0; c < nc; ++c) os << "-1\n";
    for (const auto& pr : mesh.fracture_pairs) os << pr.fracture_id << '\n' << pr.fracture_id << '\n';
    return os.str();
}

inline void write_vtk(const SplitMesh& mesh, const Solution& sol, const std::string& path)
{
    write_text_file(path, format_vtk(mesh, sol));
}

}  // namespace fvfrac
