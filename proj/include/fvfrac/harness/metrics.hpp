#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "fvfrac/errors.hpp"
#include "fvfrac/mesh/split_mesh.hpp"
#include "fvfrac/solver.hpp"

namespace fvfrac {

/// Cell-area weighted relative L2 error of cell-center displacements against `reference`
/// evaluated at the centroids.
inline double l2_displacement_error(const SplitMesh& mesh, const Solution& sol,
                                    const std::function<Vec2(const Vec2&)>& reference)
{
    double num = 0.0, den = 0.0;
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
        const Vec2 r = reference(mesh.cells[c].centroid);
        num += mesh.cells[c].area * (sol.cell(static_cast<int>(c)) - r).squaredNorm();
        den += mesh.cells[c].area * r.squaredNorm();
    }
    if (!(den > 0.0)) throw Error("displacement error: reference norm is zero");
    return std::sqrt(num / den);
}

/// Face-measure weighted relative L2 error of tractions (force per length) over the faces
/// not marked in `excluded`. `numeric` holds face forces as returned by the solver;
/// `reference` gives the traction per length for a face.
inline double l2_traction_error(const SplitMesh& mesh, const std::vector<Vec2>& numeric,
                                const std::function<Vec2(int)>& reference, const std::vector<bool>& excluded)
{
    double num = 0.0, den = 0.0;
    std::size_t used = 0;
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        if (!excluded.empty() && excluded[f]) continue;
        const double m = mesh.faces[f].measure;
        const Vec2 r = reference(static_cast<int>(f));
        num += m * (numeric[f] / m - r).squaredNorm();
        den += m * r.squaredNorm();
        ++used;
    }
    if (used == 0) throw Error("traction error: every face is excluded");
    if (!(den > 0.0)) throw Error("traction error: reference norm is zero");
    return std::sqrt(num / den);
}

/// Faces whose center lies closer than `radius` to any of `points`.
inline std::vector<bool> faces_near(const SplitMesh& mesh, const std::vector<Vec2>& points, double radius)
{
    std::vector<bool> out(mesh.faces.size(), false);
    if (!(radius > 0.0)) return out;
    for (std::size_t f = 0; f < mesh.faces.size(); ++f)
        for (const Vec2& p : points)
            if ((mesh.faces[f].center - p).norm() < radius) out[f] = true;
    return out;
}

inline std::vector<Vec2> tip_points(const SplitMesh& mesh)
{
    std::vector<Vec2> out;
    for (int v : mesh.tips) out.push_back(mesh.vertices[v]);
    return out;
}

/// Least-squares slope of log(error) against log(h).
inline double observed_order(const std::vector<double>& h, const std::vector<double>& err)
{
    if (h.size() != err.size() || h.size() < 2) throw Error("observed order needs at least two (h, error) pairs");
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double n = static_cast<double>(h.size());
    for (std::size_t k = 0; k < h.size(); ++k) {
        if (!(h[k] > 0.0) || !(err[k] > 0.0)) throw Error("observed order needs positive h and errors");
        const double x = std::log(h[k]), y = std::log(err[k]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double d = n * sxx - sx * sx;
    if (!(std::abs(d) > 0.0)) throw Error("observed order needs distinct h values");
    return (n * sxy - sx * sy) / d;
}

/// Uniform bucket grid for containing-cell lookup.
class CellLocator {
public:
    explicit CellLocator(const SplitMesh& mesh) : mesh_(&mesh)
    {
        lo_ = Vec2::Constant(std::numeric_limits<double>::infinity());
        Vec2 hi = -lo_;
        for (const Vec2& v : mesh.vertices) {
            lo_ = lo_.cwiseMin(v);
            hi = hi.cwiseMax(v);
        }
        const double n = std::max(1.0, std::sqrt(static_cast<double>(mesh.num_cells())));
        nx_ = ny_ = static_cast<int>(n);
        size_ = (hi - lo_).cwiseQuotient(Vec2(nx_, ny_)) * (1.0 + 1e-12);
        buckets_.assign(static_cast<std::size_t>(nx_) * ny_, {});
        for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
            Vec2 bl = Vec2::Constant(std::numeric_limits<double>::infinity()), tr = -bl;
            for (int v : mesh.cells[c].vertices) {
                bl = bl.cwiseMin(mesh.vertices[v]);
                tr = tr.cwiseMax(mesh.vertices[v]);
            }
            const auto [i0, j0] = bucket(bl);
            const auto [i1, j1] = bucket(tr);
            for (int j = j0; j <= j1; ++j)
                for (int i = i0; i <= i1; ++i) buckets_[j * nx_ + i].push_back(static_cast<int>(c));
        }
    }

    /// Cell containing `p` (closest by centroid among candidates if on an edge), -1 if none.
    int locate(const Vec2& p) const
    {
        const auto [i, j] = bucket(p);
        int best = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (int c : buckets_[j * nx_ + i]) {
            if (!contains(c, p)) continue;
            const double d = (mesh_->cells[c].centroid - p).squaredNorm();
            if (d < best_d) {
                best = c;
                best_d = d;
            }
        }
        return best;
    }

private:
    std::pair<int, int> bucket(const Vec2& p) const
    {
        const int i = std::clamp(static_cast<int>((p.x() - lo_.x()) / size_.x()), 0, nx_ - 1);
        const int j = std::clamp(static_cast<int>((p.y() - lo_.y()) / size_.y()), 0, ny_ - 1);
        return {i, j};
    }

    bool contains(int c, const Vec2& p) const
    {
        const auto& vs = mesh_->cells[c].vertices;
        const double eps = 1e-12 * std::sqrt(mesh_->cells[c].area);
        for (std::size_t k = 0; k < vs.size(); ++k) {
            const Vec2 a = mesh_->vertices[vs[k]], b = mesh_->vertices[vs[(k + 1) % vs.size()]];
            if (cross(b - a, p - a) < -eps * (b - a).norm()) return false;
        }
        return true;
    }

    const SplitMesh* mesh_;
    Vec2 lo_, size_;
    int nx_ = 1, ny_ = 1;
    std::vector<std::vector<int>> buckets_;
};

/// Length-weighted average of per-pair reference quantities over each coarse fracture
/// pair; pairs are matched by fracture id and by the reference face center lying on the
/// coarse face segment.
inline std::vector<Vec2> transfer_fracture_values(const SplitMesh& coarse, const SplitMesh& fine,
                                                  const std::vector<Vec2>& fine_values)
{
    std::vector<Vec2> out(coarse.num_pairs(), Vec2::Zero());
    for (std::size_t p = 0; p < coarse.num_pairs(); ++p) {
        const Face& cf = coarse.plus_face(p);
        const Vec2 a = coarse.vertices[cf.vertices[0]], b = coarse.vertices[cf.vertices[1]];
        const Vec2 d = b - a;
        const double len2 = d.squaredNorm();
        Vec2 acc = Vec2::Zero();
        double wsum = 0.0;
        for (std::size_t q = 0; q < fine.num_pairs(); ++q) {
            if (fine.fracture_pairs[q].fracture_id != coarse.fracture_pairs[p].fracture_id) continue;
            const Face& ff = fine.plus_face(q);
            const double t = (ff.center - a).dot(d) / len2;
            if (t <= 0.0 || t >= 1.0) continue;
            if (std::abs(cross(d, ff.center - a)) > 1e-9 * len2) continue;
            acc += ff.measure * fine_values[q];
            wsum += ff.measure;
        }
        if (!(wsum > 0.0))
            throw Error("fracture face " + std::to_string(p) + " has no matching reference faces");
        if (std::abs(wsum - cf.measure) > 1e-8 * cf.measure)
            throw Error("reference fracture faces do not nest inside coarse face " + std::to_string(p));
        out[p] = acc / wsum;
    }
    return out;
}

/// Relative L2 error of per-pair vectors weighted by face measure.
inline double l2_fracture_error(const SplitMesh& mesh, const std::vector<Vec2>& numeric,
                                const std::vector<Vec2>& reference, const std::vector<bool>& excluded = {})
{
    double num = 0.0, den = 0.0;
    for (std::size_t p = 0; p < mesh.num_pairs(); ++p) {
        if (!excluded.empty() && excluded[p]) continue;
        const double m = mesh.plus_face(p).measure;
        num += m * (numeric[p] - reference[p]).squaredNorm();
        den += m * reference[p].squaredNorm();
    }
    if (!(den > 0.0)) throw Error("fracture error: reference norm is zero");
    return std::sqrt(num / den);
}

}  // namespace fvfrac
