#pragma once

#include <cmath>
#include <string>

#include "fvfrac/constitutive.hpp"
#include "fvfrac/errors.hpp"
#include "fvfrac/types.hpp"

namespace fvfrac {

/// Straight crack centered at the origin along the x-axis with a constant displacement
/// jump. The plus side is y > 0, its outward normal is -e_y and the shear direction is
/// -e_x, so `dn` and `dt` are the components of u(x, 0+) - u(x, 0-) along those axes.
struct CrackConfig {
    double half_length = 5.0;
    double nu = 0.25;
    double mu = 1.0;
    double dn = 0.0;
    double dt = 0.0;

    void validate() const
    {
        if (!(half_length > 0.0)) throw OracleError("crack half-length must be positive");
        if (!(nu >= 0.0 && nu < 0.5)) throw OracleError("Poisson ratio must lie in [0, 0.5)");
    }
};

struct KernelDerivatives {
    double f = 0.0;
    double fx = 0.0;
    double fy = 0.0;
    double fxx = 0.0;
    double fxy = 0.0;
    double fyy = 0.0;
    double fxyy = 0.0;
    double fyyy = 0.0;
};

/// The kernel f(x, y) = -1/(4 pi (1 - nu)) [y (t1 - t2) - (x - a) ln r1 + (x + a) ln r2]
/// and its partial derivatives. On the crack line y = +0 and y = -0 select the upper and
/// lower one-sided limits.
inline KernelDerivatives dd_f_and_derivatives(double x, double y, const CrackConfig& c)
{
    c.validate();
    const double a = c.half_length;
    const double x1 = x - a, x2 = x + a;
    const double r1s = x1 * x1 + y * y, r2s = x2 * x2 + y * y;
    if (r1s == 0.0 || r2s == 0.0)
        throw OracleError("displacement-discontinuity field evaluated at a crack tip (" + std::to_string(x) + ", " +
                          std::to_string(y) + ")");
    const double k = -1.0 / (4.0 * pi * (1.0 - c.nu));
    const double t1 = std::atan2(y, x1), t2 = std::atan2(y, x2);
    const double l1 = 0.5 * std::log(r1s), l2 = 0.5 * std::log(r2s);
    const double r1q = r1s * r1s, r2q = r2s * r2s;
    KernelDerivatives d;
    d.f = k * (y * (t1 - t2) - x1 * l1 + x2 * l2);
    d.fx = k * (l2 - l1);
    d.fy = k * (t1 - t2);
    d.fxx = k * (x2 / r2s - x1 / r1s);
    d.fyy = -d.fxx;
    d.fxy = k * (y / r2s - y / r1s);
    d.fxyy = k * ((y * y - x1 * x1) / r1q + (x2 * x2 - y * y) / r2q);
    d.fyyy = k * (2.0 * x2 * y / r2q - 2.0 * x1 * y / r1q);
    return d;
}

inline Vec2 dd_displacement(double x, double y, const CrackConfig& c)
{
    const KernelDerivatives d = dd_f_and_derivatives(x, y, c);
    const double nu = c.nu;
    const double ux = c.dt * (2.0 * (1.0 - nu) * d.fy - y * d.fxx) + c.dn * (-(1.0 - 2.0 * nu) * d.fx - y * d.fxy);
    const double uy = c.dt * ((1.0 - 2.0 * nu) * d.fx - y * d.fxy) + c.dn * (2.0 * (1.0 - nu) * d.fy - y * d.fyy);
    return {ux, uy};
}

/// Stress tensor of the displacement-discontinuity field.
inline Mat2 dd_stress(double x, double y, const CrackConfig& c)
{
    const KernelDerivatives d = dd_f_and_derivatives(x, y, c);
    const double g2 = 2.0 * c.mu;
    const double sxx = g2 * c.dt * (2.0 * d.fxy + y * d.fxyy) + g2 * c.dn * (d.fyy + y * d.fyyy);
    const double syy = g2 * c.dt * (-y * d.fxyy) + g2 * c.dn * (d.fyy - y * d.fyyy);
    const double sxy = g2 * c.dt * (d.fyy + y * d.fyyy) + g2 * c.dn * (-y * d.fxyy);
    Mat2 s;
    s << sxx, sxy, sxy, syy;
    return s;
}

/// Crack placed at `center` and rotated by `angle`; fields are evaluated in the crack
/// frame and rotated back.
struct PlacedCrack {
    CrackConfig crack;
    Vec2 center = Vec2::Zero();
    double angle = 0.0;

    Vec2 to_local(const Vec2& p) const { return rotation(angle).transpose() * (p - center); }
    Vec2 displacement(const Vec2& p) const
    {
        const Vec2 q = to_local(p);
        return rotation(angle) * dd_displacement(q.x(), q.y(), crack);
    }
    Mat2 stress(const Vec2& p) const
    {
        const Vec2 q = to_local(p);
        const Mat2 r = rotation(angle);
        return r * dd_stress(q.x(), q.y(), crack) * r.transpose();
    }
};

/// Opening of a pressurized crack at distance `eta` from its center.
inline double sneddon_opening(double eta, double pressure, double length, double mu, double nu)
{
    const double h = 0.5 * length;
    if (std::abs(eta) > h) throw OracleError("position " + std::to_string(eta) + " lies outside the crack");
    const double s = 1.0 - (eta * eta) / (h * h);
    return (1.0 - nu) * pressure * length / mu * std::sqrt(std::max(s, 0.0));
}

struct FrictionSlip {
    double normal_traction = 0.0;
    double shear_traction = 0.0;
    double slip = 0.0;
};

/// Slip on a frictional crack under uniaxial compression `sigma_xx` (positive in
/// compression) inclined at `alpha` with friction angle `phi`; `eta` runs from one tip.
inline FrictionSlip friction_slip_analytic(double eta, double sigma_xx, double alpha, double phi, double young,
                                           double nu, double length)
{
    if (eta < 0.0 || eta > length) throw OracleError("position " + std::to_string(eta) + " lies outside the crack");
    const double sa = std::sin(alpha), ca = std::cos(alpha);
    FrictionSlip out;
    out.normal_traction = -sigma_xx * sa * sa;
    out.shear_traction = sigma_xx * sa * (ca - sa * std::tan(phi));
    const double h = 0.5 * length;
    const double r = h * h - (eta - h) * (eta - h);
    out.slip = 4.0 * (1.0 - nu * nu) * out.shear_traction / young * std::sqrt(std::max(r, 0.0));
    return out;
}

/// Strain of a uniform plane-strain stress state for isotropic Lame parameters.
inline Mat2 isotropic_compliance(const Mat2& stress, double mu, double lambda)
{
    const double tr = stress.trace();
    return (stress - lambda / (2.0 * (lambda + mu)) * tr * Mat2::Identity()) / (2.0 * mu);
}

struct Case3BoundaryData {
    Vec2 right = Vec2::Zero();   // traction on the side with outward normal +e_x
    Vec2 left = Vec2::Zero();    // -e_x
    Vec2 top = Vec2::Zero();     // +e_y
    Vec2 bottom = Vec2::Zero();  // -e_y
    double duy_dy = 0.0;
    Mat2 stress = Mat2::Zero();
    Mat2 strain = Mat2::Zero();
};

/// Uniaxial stress diag(sigma_xx, 0) (tension positive): side tractions and the
/// transverse strain used for the displacement side.
inline Case3BoundaryData case3_boundary_data(double sigma_xx, double mu, double lambda)
{
    if (!(mu > 0.0) || !(lambda + mu > 0.0)) throw MaterialError("Lame parameters must satisfy mu > 0, lambda + mu > 0");
    Case3BoundaryData d;
    d.stress << sigma_xx, 0.0, 0.0, 0.0;
    d.right = d.stress * Vec2(1.0, 0.0);
    d.left = d.stress * Vec2(-1.0, 0.0);
    d.top = d.stress * Vec2(0.0, 1.0);
    d.bottom = d.stress * Vec2(0.0, -1.0);
    d.strain = isotropic_compliance(d.stress, mu, lambda);
    d.duy_dy = -sigma_xx * lambda / (4.0 * mu * (lambda + mu));
    return d;
}

/// Affine displacement u = A x + b and its constant stress C : sym(A).
struct PatchField {
    Mat2 a = Mat2::Zero();
    Vec2 b = Vec2::Zero();
    StiffnessTensor stiffness;

    Vec2 displacement(const Vec2& x) const { return a * x + b; }
    Mat2 stress() const { return stiffness.apply(0.5 * (a + a.transpose())); }
};

inline PatchField patch_field(const Mat2& a, const Vec2& b, const StiffnessTensor& c) { return {a, b, c}; }

}  // namespace fvfrac
