#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "fvfrac/errors.hpp"
#include "fvfrac/types.hpp"

namespace fvfrac {

struct FractureSegment {
    int a = -1;
    int b = -1;
    int fracture_id = 0;
};

struct BoundaryMarker {
    int a = -1;
    int b = -1;
    int tag = 0;
};

/// Conforming polygonal mesh as read from disk, before fracture splitting.
/// Cells list vertex indices counterclockwise.
struct RawMesh {
    std::vector<Vec2> vertices;
    std::vector<std::vector<int>> cells;
    std::vector<FractureSegment> fractures;
    std::vector<BoundaryMarker> boundary;
};

/// Edge of the raw mesh. `a -> b` follows the counterclockwise order of `cells[0]`.
struct RawFace {
    int a = -1;
    int b = -1;
    int cells[2] = {-1, -1};
    int fracture_id = -1;  // -1 when the face is not a fracture segment
    int fracture_segment = -1;
    int boundary_tag = -1;
    bool is_boundary() const { return cells[1] < 0; }
    bool is_fracture() const { return fracture_segment >= 0; }
};

struct RawTopology {
    std::vector<RawFace> faces;
    std::vector<std::vector<int>> cell_faces;  // cell_faces[c][k]: face of edge (v_k, v_{k+1})
    std::unordered_map<std::uint64_t, int> face_lookup;

    static std::uint64_t key(int a, int b)
    {
        auto lo = static_cast<std::uint64_t>(std::min(a, b));
        auto hi = static_cast<std::uint64_t>(std::max(a, b));
        return (lo << 32) | hi;
    }

    std::optional<int> find(int a, int b) const
    {
        auto it = face_lookup.find(key(a, b));
        if (it == face_lookup.end()) return std::nullopt;
        return it->second;
    }
};

inline double signed_area(const std::vector<Vec2>& pts)
{
    double a = 0.0;
    for (std::size_t k = 0; k < pts.size(); ++k) a += cross(pts[k], pts[(k + 1) % pts.size()]);
    return 0.5 * a;
}

namespace detail {

inline bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2)
{
    auto orient = [](const Vec2& a, const Vec2& b, const Vec2& c) { return cross(b - a, c - a); };
    const double d1 = orient(q1, q2, p1), d2 = orient(q1, q2, p2);
    const double d3 = orient(p1, p2, q1), d4 = orient(p1, p2, q2);
    return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

inline void check_cell_polygon(const RawMesh& mesh, std::size_t c)
{
    const auto& cell = mesh.cells[c];
    const std::string label = "cell " + std::to_string(c);
    if (cell.size() < 3) throw MeshError(label + " has fewer than 3 vertices");
    for (int v : cell) {
        if (v < 0 || static_cast<std::size_t>(v) >= mesh.vertices.size())
            throw MeshError(label + ": dangling vertex index " + std::to_string(v));
    }
    std::vector<int> sorted = cell;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw MeshError(label + " repeats a vertex");

    std::vector<Vec2> pts;
    pts.reserve(cell.size());
    for (int v : cell) pts.push_back(mesh.vertices[v]);
    double scale = 0.0;
    for (const auto& p : pts) scale = std::max(scale, (p - pts[0]).squaredNorm());
    const double area = signed_area(pts);
    if (!(area > 1e-14 * scale)) throw MeshError(label + " has non-positive signed area (vertices must be counterclockwise)");

    const std::size_t n = pts.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 2; j < n; ++j) {
            if (i == 0 && j == n - 1) continue;
            if (segments_intersect(pts[i], pts[(i + 1) % n], pts[j], pts[(j + 1) % n]))
                throw MeshError(label + " is not a simple polygon");
        }
    }
}

}  // namespace detail

/// Builds edge topology and checks every RawMesh invariant:
/// simple positively oriented cells, manifold edges, fracture segments on interior
/// faces, exactly one marker per boundary face.
inline RawTopology build_raw_topology(const RawMesh& mesh)
{
    RawTopology topo;
    topo.cell_faces.resize(mesh.cells.size());
    for (std::size_t c = 0; c < mesh.cells.size(); ++c) {
        detail::check_cell_polygon(mesh, c);
        const auto& cell = mesh.cells[c];
        for (std::size_t k = 0; k < cell.size(); ++k) {
            const int a = cell[k], b = cell[(k + 1) % cell.size()];
            auto [it, inserted] = topo.face_lookup.try_emplace(RawTopology::key(a, b), static_cast<int>(topo.faces.size()));
            if (inserted) {
                RawFace f;
                f.a = a;
                f.b = b;
                f.cells[0] = static_cast<int>(c);
                topo.faces.push_back(f);
            } else {
                RawFace& f = topo.faces[it->second];
                if (f.cells[1] >= 0)
                    throw MeshError("edge (" + std::to_string(a) + "," + std::to_string(b) + ") is shared by more than two cells");
                if (f.a == a)
                    throw MeshError("cells " + std::to_string(f.cells[0]) + " and " + std::to_string(c) +
                                    " traverse a shared edge in the same direction");
                f.cells[1] = static_cast<int>(c);
            }
            topo.cell_faces[c].push_back(it->second);
        }
    }

    for (std::size_t s = 0; s < mesh.fractures.size(); ++s) {
        const auto& seg = mesh.fractures[s];
        const std::string label = "fracture segment " + std::to_string(s) + " (" + std::to_string(seg.a) + "," +
                                  std::to_string(seg.b) + ")";
        auto f = topo.find(seg.a, seg.b);
        if (!f) throw MeshError(label + " is non-conforming: no matching face");
        RawFace& face = topo.faces[*f];
        if (face.is_boundary()) throw MeshError(label + " lies on the domain boundary");
        if (face.is_fracture()) throw MeshError(label + " duplicates another fracture segment");
        face.fracture_segment = static_cast<int>(s);
        face.fracture_id = seg.fracture_id;
    }

    for (std::size_t m = 0; m < mesh.boundary.size(); ++m) {
        const auto& mk = mesh.boundary[m];
        const std::string label = "boundary marker " + std::to_string(m) + " (" + std::to_string(mk.a) + "," +
                                  std::to_string(mk.b) + ")";
        auto f = topo.find(mk.a, mk.b);
        if (!f) throw MeshError(label + " does not match any face");
        RawFace& face = topo.faces[*f];
        if (!face.is_boundary()) throw MeshError(label + " is on an interior face");
        if (face.boundary_tag >= 0) throw MeshError(label + " marks a face that already carries a marker");
        if (mk.tag < 0) throw MeshError(label + " has a negative tag");
        face.boundary_tag = mk.tag;
    }
    for (const auto& face : topo.faces) {
        if (face.is_boundary() && face.boundary_tag < 0)
            throw MeshError("boundary face (" + std::to_string(face.a) + "," + std::to_string(face.b) +
                            ") carries no marker");
    }
    return topo;
}

namespace detail {

inline std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split_ws(std::string_view s)
{
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
        std::size_t j = i;
        while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
        if (j > i) out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

template <class T>
T parse_number(std::string_view tok, int line)
{
    T value{};
    const char* end = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(tok.data(), end, value);
    if (ec != std::errc() || ptr != end) throw ParseError(line, "expected a number, got '" + std::string(tok) + "'");
    return value;
}

}  // namespace detail

/// Reads the section-based mesh exchange format (see docs/mesh_format.md).
inline RawMesh parse_mesh(std::string_view text)
{
    struct Line {
        int number;
        std::vector<std::string_view> tokens;
    };
    std::vector<Line> lines;
    int number = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        ++number;
        auto raw = text.substr(pos, nl - pos);
        if (auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
        raw = detail::trim(raw);
        if (!raw.empty()) lines.push_back({number, detail::split_ws(raw)});
        pos = nl + 1;
    }

    RawMesh mesh;
    bool seen_vertices = false, seen_cells = false, seen_fractures = false, seen_boundary = false;
    std::vector<int> cell_lines;
    std::size_t i = 0;
    auto expect_count = [&](const Line& l) {
        if (l.tokens.size() != 2) throw ParseError(l.number, "section header must be '<NAME> <count>'");
        const long n = detail::parse_number<long>(l.tokens[1], l.number);
        if (n < 0) throw ParseError(l.number, "negative section count");
        return static_cast<std::size_t>(n);
    };
    auto take = [&](std::size_t n, const Line& header) {
        if (i + n > lines.size())
            throw ParseError(header.number, "section declares " + std::to_string(n) + " entries but the file ends early");
    };

    while (i < lines.size()) {
        const Line& header = lines[i++];
        const auto name = header.tokens[0];
        if (name == "VERTICES") {
            if (seen_vertices) throw ParseError(header.number, "duplicate VERTICES section");
            seen_vertices = true;
            const auto n = expect_count(header);
            take(n, header);
            for (std::size_t k = 0; k < n; ++k, ++i) {
                const Line& l = lines[i];
                if (l.tokens.size() != 2) throw ParseError(l.number, "vertex line must be 'x y'");
                mesh.vertices.emplace_back(detail::parse_number<double>(l.tokens[0], l.number),
                                           detail::parse_number<double>(l.tokens[1], l.number));
            }
        } else if (name == "CELLS") {
            if (seen_cells) throw ParseError(header.number, "duplicate CELLS section");
            seen_cells = true;
            const auto n = expect_count(header);
            take(n, header);
            for (std::size_t k = 0; k < n; ++k, ++i) {
                const Line& l = lines[i];
                const int count = detail::parse_number<int>(l.tokens[0], l.number);
                if (count < 3) throw ParseError(l.number, "a cell needs at least 3 vertices");
                if (l.tokens.size() != static_cast<std::size_t>(count) + 1)
                    throw ParseError(l.number, "cell declares " + std::to_string(count) + " vertices but lists " +
                                                   std::to_string(l.tokens.size() - 1));
                std::vector<int> cell;
                for (int v = 0; v < count; ++v) cell.push_back(detail::parse_number<int>(l.tokens[v + 1], l.number));
                mesh.cells.push_back(std::move(cell));
                cell_lines.push_back(l.number);
            }
        } else if (name == "FRACTURES" || name == "BOUNDARY") {
            const bool frac = name == "FRACTURES";
            bool& seen = frac ? seen_fractures : seen_boundary;
            if (seen) throw ParseError(header.number, "duplicate " + std::string(name) + " section");
            seen = true;
            const auto n = expect_count(header);
            take(n, header);
            for (std::size_t k = 0; k < n; ++k, ++i) {
                const Line& l = lines[i];
                if (l.tokens.size() != 3) throw ParseError(l.number, "entry must be 'va vb id'");
                const int a = detail::parse_number<int>(l.tokens[0], l.number);
                const int b = detail::parse_number<int>(l.tokens[1], l.number);
                const int id = detail::parse_number<int>(l.tokens[2], l.number);
                if (frac)
                    mesh.fractures.push_back({a, b, id});
                else
                    mesh.boundary.push_back({a, b, id});
            }
        } else {
            throw ParseError(header.number, "unknown section '" + std::string(name) + "'");
        }
    }
    if (!seen_vertices) throw ParseError(number, "missing VERTICES section");
    if (!seen_cells) throw ParseError(number, "missing CELLS section");

    const int nv = static_cast<int>(mesh.vertices.size());
    for (std::size_t c = 0; c < mesh.cells.size(); ++c) {
        for (int v : mesh.cells[c]) {
            if (v < 0 || v >= nv)
                throw ParseError(cell_lines[c], "dangling vertex index " + std::to_string(v) + " (mesh has " +
                                                    std::to_string(nv) + " vertices)");
        }
    }
    for (const auto& s : mesh.fractures) {
        if (s.a < 0 || s.a >= nv || s.b < 0 || s.b >= nv)
            throw MeshError("fracture segment references dangling vertex index");
    }
    for (const auto& m : mesh.boundary) {
        if (m.a < 0 || m.a >= nv || m.b < 0 || m.b >= nv)
            throw MeshError("boundary marker references dangling vertex index");
    }
    return mesh;
}

/// Parses and validates a mesh document.
inline RawMesh ingest_mesh(std::string_view text)
{
    RawMesh mesh = parse_mesh(text);
    (void)build_raw_topology(mesh);
    return mesh;
}

/// Serializes in the exchange format; `ingest_mesh(format_mesh(m))` reproduces `m` exactly.
inline std::string format_mesh(const RawMesh& mesh)
{
    std::ostringstream os;
    os.precision(17);
    os << "VERTICES " << mesh.vertices.size() << '\n';
    for (const auto& v : mesh.vertices) os << v.x() << ' ' << v.y() << '\n';
    os << "CELLS " << mesh.cells.size() << '\n';
    for (const auto& c : mesh.cells) {
        os << c.size();
        for (int v : c) os << ' ' << v;
        os << '\n';
    }
    os << "FRACTURES " << mesh.fractures.size() << '\n';
    for (const auto& s : mesh.fractures) os << s.a << ' ' << s.b << ' ' << s.fracture_id << '\n';
    os << "BOUNDARY " << mesh.boundary.size() << '\n';
    for (const auto& m : mesh.boundary) os << m.a << ' ' << m.b << ' ' << m.tag << '\n';
    return os.str();
}

}  // namespace fvfrac
