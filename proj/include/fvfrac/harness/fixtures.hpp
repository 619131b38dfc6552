#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "fvfrac/errors.hpp"
#include "fvfrac/mesh/raw_mesh.hpp"
#include "fvfrac/types.hpp"

namespace fvfrac {

/// Axis-aligned fracture line for the fixture generator; faces are listed from `a` to
/// `b`, so the plus side is on the left of that direction.
struct FractureLine {
    Vec2 a = Vec2::Zero();
    Vec2 b = Vec2::Zero();
    int id = 0;
};

/// Graded quadtree triangulation of the square [-half_width, half_width]^2. Cells that
/// touch a fracture have edge length `h`; away from fractures the size grows like
/// h (1 + grading * distance). Interior vertices off the fractures are jittered by up to
/// `jitter` times the local size.
struct FixtureSpec {
    double half_width = 25.0;
    std::vector<FractureLine> fractures;
    double h = 1.0;
    double grading = 0.25;
    double jitter = 0.15;
    std::uint64_t seed = 0;
    int max_root_level = 8;
};

namespace detail {

/// Deterministic uniform number in [-1, 1).
inline double uniform_pm1(std::mt19937_64& rng)
{
    const std::uint64_t bits = rng() >> 11;
    return 2.0 * (static_cast<double>(bits) * 0x1.0p-53) - 1.0;
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt)
{
    std::uint64_t z = seed * 0x9E3779B97F4A7C15ULL + salt + 0x632BE59BD9B4E019ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

struct QuadNode {
    double x0, y0, x1, y1;
    int child = -1;  // index of the first of 4 consecutive children
    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
    double size() const { return std::max(width(), height()); }
};

class QuadForest {
public:
    std::vector<QuadNode> nodes;
    std::vector<double> xs, ys;  // root grid lines
    std::vector<int> roots;      // row-major (iy * nx + ix)

    int nx() const { return static_cast<int>(xs.size()) - 1; }
    int ny() const { return static_cast<int>(ys.size()) - 1; }

    void build_roots()
    {
        for (int j = 0; j < ny(); ++j)
            for (int i = 0; i < nx(); ++i) {
                roots.push_back(static_cast<int>(nodes.size()));
                nodes.push_back({xs[i], ys[j], xs[i + 1], ys[j + 1]});
            }
    }

    void split(int n)
    {
        const QuadNode q = nodes[n];
        const double xm = 0.5 * (q.x0 + q.x1), ym = 0.5 * (q.y0 + q.y1);
        nodes[n].child = static_cast<int>(nodes.size());
        nodes.push_back({q.x0, q.y0, xm, ym});
        nodes.push_back({xm, q.y0, q.x1, ym});
        nodes.push_back({q.x0, ym, xm, q.y1});
        nodes.push_back({xm, ym, q.x1, q.y1});
    }

    /// Leaf containing `p`, or -1 outside the forest.
    int locate(const Vec2& p) const
    {
        if (p.x() <= xs.front() || p.x() >= xs.back() || p.y() <= ys.front() || p.y() >= ys.back()) return -1;
        const int i = static_cast<int>(std::upper_bound(xs.begin(), xs.end(), p.x()) - xs.begin()) - 1;
        const int j = static_cast<int>(std::upper_bound(ys.begin(), ys.end(), p.y()) - ys.begin()) - 1;
        int n = roots[j * nx() + i];
        while (nodes[n].child >= 0) {
            const QuadNode& q = nodes[n];
            const int k = (p.x() >= 0.5 * (q.x0 + q.x1) ? 1 : 0) + (p.y() >= 0.5 * (q.y0 + q.y1) ? 2 : 0);
            n = q.child + k;
        }
        return n;
    }

    std::vector<int> leaves() const
    {
        std::vector<int> out;
        std::vector<int> stack(roots.rbegin(), roots.rend());
        while (!stack.empty()) {
            const int n = stack.back();
            stack.pop_back();
            if (nodes[n].child < 0) {
                out.push_back(n);
            } else {
                for (int k = 3; k >= 0; --k) stack.push_back(nodes[n].child + k);
            }
        }
        return out;
    }
};

inline double box_distance(const QuadNode& q, const FractureLine& f)
{
    const double sx0 = std::min(f.a.x(), f.b.x()), sx1 = std::max(f.a.x(), f.b.x());
    const double sy0 = std::min(f.a.y(), f.b.y()), sy1 = std::max(f.a.y(), f.b.y());
    const double dx = std::max({0.0, q.x0 - sx1, sx0 - q.x1});
    const double dy = std::max({0.0, q.y0 - sy1, sy0 - q.y1});
    return std::hypot(dx, dy);
}

inline bool on_segment(const Vec2& p, const FractureLine& f, double tol)
{
    const Vec2 d = f.b - f.a;
    const double len2 = d.squaredNorm();
    const double t = (p - f.a).dot(d) / len2;
    if (t < -tol || t > 1.0 + tol) return false;
    return (f.a + std::clamp(t, 0.0, 1.0) * d - p).norm() <= tol * std::sqrt(len2);
}

}  // namespace detail

/// Builds the fixture triangulation; deterministic in (spec, seed).
inline RawMesh generate_mesh(const FixtureSpec& spec)
{
    const double w = spec.half_width;
    const double h = spec.h;
    if (!(h > 0.0) || !(w > 0.0)) throw MeshError("fixture mesh needs positive size and domain");
    const double tol = 1e-9 * h;
    for (const auto& f : spec.fractures) {
        if (std::abs(f.a.x() - f.b.x()) > tol && std::abs(f.a.y() - f.b.y()) > tol)
            throw MeshError("fixture fractures must be axis aligned");
        if ((f.a - f.b).norm() < h * 0.5) throw MeshError("fixture fracture shorter than the cell size");
    }

    // root block B = h 2^k: the largest dyadic multiple of h that tiles the x-extent and
    // keeps every fracture coordinate on a level-k line
    auto is_multiple = [&](double v, double b) { return std::abs(v / b - std::round(v / b)) < 1e-9; };
    if (!is_multiple(2.0 * w, h)) throw MeshError("domain width must be a multiple of the fixture cell size");
    double block = h;
    for (int k = 1; k <= spec.max_root_level; ++k) {
        const double b = h * std::pow(2.0, k);
        if (b > w) break;
        if (!is_multiple(2.0 * w, b)) break;
        block = b;
    }
    for (const auto& f : spec.fractures)
        for (const Vec2& p : {f.a, f.b})
            if (!is_multiple(p.x() + w, h) || !is_multiple(p.y(), h))
                throw MeshError("fixture fracture end (" + std::to_string(p.x()) + ", " + std::to_string(p.y()) +
                                ") is not on the cell-size lattice");

    detail::QuadForest forest;
    const int nbx = static_cast<int>(std::llround(2.0 * w / block));
    for (int i = 0; i <= nbx; ++i) forest.xs.push_back(-w + i * block);
    forest.xs.back() = w;
    // y lines through 0 in steps of B; partial end rows absorb the remainder
    {
        const int full = static_cast<int>(std::floor(w / block + 1e-9));
        double rem = w - full * block;
        int top = full;
        if (rem < 0.5 * block - tol && rem > tol) --top;  // merge a thin remainder into the last row
        std::vector<double> ys;
        ys.push_back(-w);
        for (int j = -top; j <= top; ++j)
            if (std::abs(j * block) < w - tol) ys.push_back(j * block);
        ys.push_back(w);
        forest.ys = ys;
    }
    forest.build_roots();

    auto target = [&](const detail::QuadNode& q) {
        if (spec.fractures.empty()) return h;
        double d = std::numeric_limits<double>::infinity();
        for (const auto& f : spec.fractures) d = std::min(d, detail::box_distance(q, f));
        return h * (1.0 + spec.grading * d);
    };
    {
        std::vector<int> stack(forest.roots.begin(), forest.roots.end());
        while (!stack.empty()) {
            const int n = stack.back();
            stack.pop_back();
            if (forest.nodes[n].size() > target(forest.nodes[n]) * (1.0 + 1e-9) && forest.nodes[n].width() > h * (1.0 + 1e-9)) {
                forest.split(n);
                for (int k = 0; k < 4; ++k) stack.push_back(forest.nodes[n].child + k);
            }
        }
    }
    // 2:1 balance across edges
    for (bool changed = true; changed;) {
        changed = false;
        for (int n : forest.leaves()) {
            const detail::QuadNode q = forest.nodes[n];
            const double e = 1e-6 * q.width();
            const Vec2 probes[4] = {{0.5 * (q.x0 + q.x1), q.y0 - e},
                                    {q.x1 + e, 0.5 * (q.y0 + q.y1)},
                                    {0.5 * (q.x0 + q.x1), q.y1 + e},
                                    {q.x0 - e, 0.5 * (q.y0 + q.y1)}};
            for (const Vec2& p : probes) {
                const int m = forest.locate(p);
                if (m >= 0 && forest.nodes[m].width() > 2.0 * q.width() * (1.0 + 1e-9)) {
                    forest.split(m);
                    changed = true;
                }
            }
        }
    }

    const std::vector<int> leaves = forest.leaves();
    RawMesh mesh;
    std::map<std::pair<long long, long long>, int> index;
    std::vector<double> local_size;
    const double unit = h / 64.0;
    auto vertex = [&](const Vec2& p, double size) {
        const auto key = std::make_pair(std::llround(p.x() / unit), std::llround(p.y() / unit));
        auto it = index.find(key);
        if (it != index.end()) {
            local_size[it->second] = std::min(local_size[it->second], size);
            return it->second;
        }
        const int id = static_cast<int>(mesh.vertices.size());
        index.emplace(key, id);
        mesh.vertices.push_back(p);
        local_size.push_back(size);
        return id;
    };
    auto find_vertex = [&](const Vec2& p) {
        auto it = index.find({std::llround(p.x() / unit), std::llround(p.y() / unit)});
        return it == index.end() ? -1 : it->second;
    };
    for (int n : leaves) {
        const auto& q = forest.nodes[n];
        const double s = std::min(q.width(), q.height());
        vertex({q.x0, q.y0}, s);
        vertex({q.x1, q.y0}, s);
        vertex({q.x1, q.y1}, s);
        vertex({q.x0, q.y1}, s);
    }

    std::mt19937_64 rng(detail::mix_seed(spec.seed, 0x5EED));
    auto is_domain_corner = [&](double x, double y) {
        return std::abs(std::abs(x) - w) < tol && std::abs(std::abs(y) - w) < tol;
    };
    for (int n : leaves) {
        const auto& q = forest.nodes[n];
        const Vec2 corners[4] = {{q.x0, q.y0}, {q.x1, q.y0}, {q.x1, q.y1}, {q.x0, q.y1}};
        std::vector<int> loop;
        bool hanging = false;
        for (int k = 0; k < 4; ++k) {
            loop.push_back(find_vertex(corners[k]));
            const int m = find_vertex(0.5 * (corners[k] + corners[(k + 1) % 4]));
            if (m >= 0) {
                loop.push_back(m);
                hanging = true;
            }
        }
        if (!hanging) {
            const bool flip_random = (rng() >> 63) != 0;
            bool through_bl = !flip_random;
            if (is_domain_corner(q.x0, q.y0) || is_domain_corner(q.x1, q.y1)) through_bl = true;
            if (is_domain_corner(q.x1, q.y0) || is_domain_corner(q.x0, q.y1)) through_bl = false;
            const int bl = loop[0], br = loop[1], tr = loop[2], tl = loop[3];
            if (through_bl) {
                mesh.cells.push_back({bl, br, tr});
                mesh.cells.push_back({bl, tr, tl});
            } else {
                mesh.cells.push_back({bl, br, tl});
                mesh.cells.push_back({br, tr, tl});
            }
        } else {
            const int c = vertex({0.5 * (q.x0 + q.x1), 0.5 * (q.y0 + q.y1)}, 0.5 * std::min(q.width(), q.height()));
            for (std::size_t k = 0; k < loop.size(); ++k)
                mesh.cells.push_back({c, loop[k], loop[(k + 1) % loop.size()]});
        }
    }

    // fractures: chains of lattice vertices along each line
    for (const auto& f : spec.fractures) {
        std::vector<std::pair<double, int>> on;
        const Vec2 d = f.b - f.a;
        for (std::size_t v = 0; v < mesh.vertices.size(); ++v)
            if (detail::on_segment(mesh.vertices[v], f, 1e-9)) on.emplace_back((mesh.vertices[v] - f.a).dot(d), static_cast<int>(v));
        std::sort(on.begin(), on.end());
        if (on.size() < 2) throw MeshError("fixture fracture does not conform to the grid");
        for (std::size_t k = 0; k + 1 < on.size(); ++k) mesh.fractures.push_back({on[k].second, on[k + 1].second, f.id});
    }

    // boundary tags: 1 south, 2 east, 3 north, 4 west
    for (const auto& cell : mesh.cells)
        for (std::size_t k = 0; k < cell.size(); ++k) {
            const int a = cell[k], b = cell[(k + 1) % cell.size()];
            const Vec2 pa = mesh.vertices[a], pb = mesh.vertices[b];
            int tag = 0;
            if (std::abs(pa.y() + w) < tol && std::abs(pb.y() + w) < tol) tag = 1;
            else if (std::abs(pa.x() - w) < tol && std::abs(pb.x() - w) < tol) tag = 2;
            else if (std::abs(pa.y() - w) < tol && std::abs(pb.y() - w) < tol) tag = 3;
            else if (std::abs(pa.x() + w) < tol && std::abs(pb.x() + w) < tol) tag = 4;
            if (tag) mesh.boundary.push_back({a, b, tag});
        }

    // jitter interior vertices that are off the fractures
    std::vector<bool> movable(mesh.vertices.size(), true);
    for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
        const Vec2 p = mesh.vertices[v];
        if (std::abs(std::abs(p.x()) - w) < tol || std::abs(std::abs(p.y()) - w) < tol) movable[v] = false;
        for (const auto& f : spec.fractures)
            if (detail::on_segment(p, f, 1e-9)) movable[v] = false;
    }
    const std::vector<Vec2> base = mesh.vertices;
    std::vector<double> base_area;
    for (const auto& cell : mesh.cells) base_area.push_back(signed_area({base[cell[0]], base[cell[1]], base[cell[2]]}));
    double amplitude = spec.jitter;
    for (int attempt = 0; attempt <= 5; ++attempt) {
        std::mt19937_64 jr(detail::mix_seed(spec.seed, 0x717E4));
        for (std::size_t v = 0; v < base.size(); ++v) {
            const double dx = detail::uniform_pm1(jr), dy = detail::uniform_pm1(jr);
            mesh.vertices[v] = movable[v] ? Vec2(base[v] + amplitude * local_size[v] * Vec2(dx, dy)) : base[v];
        }
        bool ok = true;
        for (std::size_t c = 0; c < mesh.cells.size() && ok; ++c) {
            const auto& cell = mesh.cells[c];
            const double a = signed_area({mesh.vertices[cell[0]], mesh.vertices[cell[1]], mesh.vertices[cell[2]]});
            if (!(a > 1e-3 * base_area[c])) ok = false;
        }
        if (ok) return mesh;
        amplitude *= 0.5;
    }
    throw MeshError("fixture jitter inverted a triangle after 5 retries");
}

}  // namespace fvfrac
