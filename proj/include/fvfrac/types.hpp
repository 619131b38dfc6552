#pragma once

#include <cmath>

#include <Eigen/Dense>

namespace fvfrac {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

inline constexpr double pi = 3.14159265358979323846;

/// z-component of the 2D cross product.
inline double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

/// Rotates by -90 degrees (clockwise).
inline Vec2 rotate_cw(const Vec2& v) { return {v.y(), -v.x()}; }

inline Mat2 rotation(double angle)
{
    Mat2 r;
    r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
    return r;
}

inline double degrees_to_radians(double deg) { return deg * pi / 180.0; }

}  // namespace fvfrac
