#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "fvfrac/fvfrac.hpp"

using namespace fvfrac;

namespace {

CrackConfig shear_crack()
{
    CrackConfig c;
    c.dt = 1e-3;
    return c;
}

}  // namespace

TEST(DisplacementDiscontinuity, KernelAtCenter)
{
    const KernelDerivatives d = dd_f_and_derivatives(0.0, +0.0, CrackConfig{});
    EXPECT_NEAR(d.f, -10.0 * std::log(5.0) / (3.0 * pi), 1e-14);
    EXPECT_NEAR(d.f, -1.7077, 1e-4);
}

TEST(DisplacementDiscontinuity, KernelEvenInX)
{
    const CrackConfig c;
    for (double x : {0.5, 3.0, 7.0})
        for (double y : {-2.0, 0.3, 4.0})
            EXPECT_NEAR(dd_f_and_derivatives(x, y, c).f, dd_f_and_derivatives(-x, y, c).f, 1e-14);
}

TEST(DisplacementDiscontinuity, PartialsMatchFiniteDifferencesAtThreeTwo)
{
    const CrackConfig c;
    const double h = 1e-5, x = 3.0, y = 2.0;
    auto at = [&](double dx, double dy) { return dd_f_and_derivatives(x + dx, y + dy, c); };
    const KernelDerivatives d = at(0, 0), xp = at(h, 0), xm = at(-h, 0), yp = at(0, h), ym = at(0, -h);
    auto close = [](double analytic, double fd) { EXPECT_NEAR(analytic, fd, 1e-6 * std::abs(analytic)); };
    close(d.fx, (xp.f - xm.f) / (2 * h));
    close(d.fy, (yp.f - ym.f) / (2 * h));
    close(d.fxx, (xp.fx - xm.fx) / (2 * h));
    close(d.fxy, (yp.fx - ym.fx) / (2 * h));
    close(d.fyy, (yp.fy - ym.fy) / (2 * h));
    close(d.fxyy, (yp.fxy - ym.fxy) / (2 * h));
    close(d.fyyy, (yp.fyy - ym.fyy) / (2 * h));
}

TEST(DisplacementDiscontinuity, TipEvaluationRejected)
{
    const CrackConfig c;
    EXPECT_THROW(dd_f_and_derivatives(5.0, 0.0, c), OracleError);
    EXPECT_THROW(dd_displacement(-5.0, 0.0, c), OracleError);
    EXPECT_THROW(dd_stress(5.0, 0.0, c), OracleError);
    CrackConfig bad;
    bad.nu = 0.5;
    EXPECT_THROW(dd_displacement(1.0, 1.0, bad), OracleError);
    bad = CrackConfig{};
    bad.half_length = 0.0;
    EXPECT_THROW(dd_displacement(1.0, 1.0, bad), OracleError);
}

TEST(DisplacementDiscontinuity, FarFieldDecay)
{
    const CrackConfig c = shear_crack();
    EXPECT_LT(dd_displacement(100.0, 100.0, c).norm(), dd_displacement(10.0, 10.0, c).norm());
    double previous = std::numeric_limits<double>::infinity();
    for (double r = 15.0; r <= 200.0; r *= 1.3) {
        const double s = dd_stress(r * 0.6, r * 0.8, c).norm();
        EXPECT_LT(s, previous);
        previous = s;
    }
}

TEST(DisplacementDiscontinuity, JumpRecoveryAcrossCrackLine)
{
    const CrackConfig c = shear_crack();
    for (double x : {-4.5, -2.0, 0.0, 1.0, 4.0}) {
        const Vec2 jump = dd_displacement(x, 1e-8, c) - dd_displacement(x, -1e-8, c);
        // the shear direction of the plus side (y > 0, outward normal -e_y) is -e_x
        EXPECT_NEAR(-jump.x(), 1e-3, 1e-4);
        EXPECT_NEAR(jump.y(), 0.0, 1e-4);
    }
    for (double x : {-8.0, 6.0, 20.0}) {
        const Vec2 jump = dd_displacement(x, 1e-8, c) - dd_displacement(x, -1e-8, c);
        EXPECT_NEAR(jump.norm(), 0.0, 1e-4);
    }
    CrackConfig opening;
    opening.dn = 1e-3;
    const Vec2 jn = dd_displacement(1.0, 1e-8, opening) - dd_displacement(1.0, -1e-8, opening);
    EXPECT_NEAR(-jn.y(), 1e-3, 1e-4);
}

TEST(DisplacementDiscontinuity, ZeroJumpGivesZeroField)
{
    const CrackConfig c;
    EXPECT_EQ(dd_displacement(2.0, 3.0, c).norm(), 0.0);
    EXPECT_EQ(dd_stress(2.0, 3.0, c).norm(), 0.0);
}

TEST(DisplacementDiscontinuity, Superposition)
{
    CrackConfig a, b, ab;
    a.dn = 3e-4;
    b.dt = -7e-4;
    ab.dn = a.dn;
    ab.dt = b.dt;
    for (const Vec2& p : {Vec2(1.0, 2.0), Vec2(-6.0, 0.5), Vec2(8.0, -3.0)}) {
        EXPECT_LE((dd_displacement(p.x(), p.y(), ab) - dd_displacement(p.x(), p.y(), a) - dd_displacement(p.x(), p.y(), b)).norm(),
                  1e-18);
        EXPECT_LE((dd_stress(p.x(), p.y(), ab) - dd_stress(p.x(), p.y(), a) - dd_stress(p.x(), p.y(), b)).norm(), 1e-18);
    }
}

TEST(DisplacementDiscontinuity, StressInEquilibriumAtFourThree)
{
    CrackConfig c = shear_crack();
    c.dn = 5e-4;
    const double h = 1e-4;
    auto s = [&](double x, double y) { return dd_stress(x, y, c); };
    const Vec2 div((s(4 + h, 3)(0, 0) - s(4 - h, 3)(0, 0) + s(4, 3 + h)(0, 1) - s(4, 3 - h)(0, 1)) / (2 * h),
                   (s(4 + h, 3)(1, 0) - s(4 - h, 3)(1, 0) + s(4, 3 + h)(1, 1) - s(4, 3 - h)(1, 1)) / (2 * h));
    EXPECT_LE(div.norm(), 1e-5 * s(4, 3).cwiseAbs().maxCoeff());
}

TEST(DisplacementDiscontinuity, StressMatchesHookeOfFiniteDifferenceStrain)
{
    CrackConfig c = shear_crack();
    c.dn = 4e-4;
    const double h = 1e-5;
    for (const Vec2& p : {Vec2(3.0, 2.0), Vec2(-7.0, 1.5), Vec2(0.5, -4.0)}) {
        const Vec2 ux = (dd_displacement(p.x() + h, p.y(), c) - dd_displacement(p.x() - h, p.y(), c)) / (2 * h);
        const Vec2 uy = (dd_displacement(p.x(), p.y() + h, c) - dd_displacement(p.x(), p.y() - h, c)) / (2 * h);
        Mat2 g;
        g << ux.x(), uy.x(), ux.y(), uy.y();
        const double lambda = 2.0 * c.mu * c.nu / (1.0 - 2.0 * c.nu);
        const Mat2 ref = hooke_stress(c.mu, lambda, 0.5 * (g + g.transpose()));
        EXPECT_LE((dd_stress(p.x(), p.y(), c) - ref).norm(), 1e-6 * ref.norm());
    }
}

TEST(DisplacementDiscontinuity, RotationCovariance)
{
    PlacedCrack placed;
    placed.crack = shear_crack();
    placed.crack.dn = 2e-4;
    placed.angle = degrees_to_radians(20.0);
    const Mat2 r = rotation(placed.angle);
    for (const Vec2& q : {Vec2(1.0, 2.0), Vec2(-6.0, -0.7), Vec2(9.0, 4.0)}) {
        const Vec2 direct = r * dd_displacement(q.x(), q.y(), placed.crack);
        EXPECT_LE((placed.displacement(r * q) - direct).norm(), 1e-12 * direct.norm());
        const Mat2 sd = r * dd_stress(q.x(), q.y(), placed.crack) * r.transpose();
        EXPECT_LE((placed.stress(r * q) - sd).norm(), 1e-12 * sd.norm());
    }
}

TEST(Sneddon, Examples)
{
    const double nu = poisson_ratio(1.0, 1.0);
    EXPECT_EQ(sneddon_opening(5.0, 1e-3, 10.0, 1.0, nu), 0.0);
    EXPECT_EQ(sneddon_opening(-5.0, 1e-3, 10.0, 1.0, nu), 0.0);
    EXPECT_NEAR(sneddon_opening(0.0, 1e-3, 10.0, 1.0, nu), 7.5e-3, 1e-15);
    for (double eta : {0.5, 2.0, 4.9}) EXPECT_EQ(sneddon_opening(eta, 1e-3, 10.0, 1.0, nu), sneddon_opening(-eta, 1e-3, 10.0, 1.0, nu));
    EXPECT_THROW(sneddon_opening(5.1, 1e-3, 10.0, 1.0, nu), OracleError);
}

TEST(FrictionSlip, Examples)
{
    const double a = degrees_to_radians(20.0), phi = degrees_to_radians(30.0);
    const double young = young_modulus(1.0, 1.0), nu = poisson_ratio(1.0, 1.0);
    const FrictionSlip mid = friction_slip_analytic(5.0, 1e-3, a, phi, young, nu, 10.0);
    EXPECT_NEAR(mid.normal_traction, -1.1698e-4, 1e-8);
    EXPECT_NEAR(mid.shear_traction, 2.539e-4, 1e-7);
    EXPECT_NEAR(mid.slip, 1.904e-3, 1e-6);
    EXPECT_EQ(friction_slip_analytic(0.0, 1e-3, a, phi, young, nu, 10.0).slip, 0.0);
    EXPECT_EQ(friction_slip_analytic(10.0, 1e-3, a, phi, young, nu, 10.0).slip, 0.0);
    EXPECT_THROW(friction_slip_analytic(-0.1, 1e-3, a, phi, young, nu, 10.0), OracleError);
    EXPECT_THROW(friction_slip_analytic(10.1, 1e-3, a, phi, young, nu, 10.0), OracleError);
}

TEST(Case3Boundary, Examples)
{
    const Case3BoundaryData d = case3_boundary_data(1e-3, 1.0, 1.0);
    EXPECT_NEAR(d.duy_dy, -1.25e-4, 1e-18);
    EXPECT_NEAR(d.strain(1, 1), d.duy_dy, 1e-18);
    EXPECT_EQ(d.top.norm(), 0.0);
    EXPECT_EQ(d.bottom.norm(), 0.0);
    EXPECT_EQ(d.right, Vec2(1e-3, 0.0));
    EXPECT_EQ(d.left, Vec2(-1e-3, 0.0));
    const Mat2 back = StiffnessTensor::isotropic(1.0, 1.0).apply(d.strain);
    EXPECT_LE((back - d.stress).norm(), 1e-18);
    EXPECT_THROW(case3_boundary_data(1e-3, 0.0, 1.0), MaterialError);
}

TEST(PatchField, Examples)
{
    const StiffnessTensor c = StiffnessTensor::isotropic(1.0, 1.0);
    EXPECT_EQ(patch_field(Mat2::Zero(), Vec2(1.0, 2.0), c).stress().norm(), 0.0);
    Mat2 skew;
    skew << 0.0, 1.0, -1.0, 0.0;
    EXPECT_EQ(patch_field(skew, Vec2::Zero(), c).stress().norm(), 0.0);
    Mat2 a = Mat2::Zero();
    a(0, 0) = 1.0;
    Mat2 expected = Mat2::Zero();
    expected(0, 0) = 3.0;
    expected(1, 1) = 1.0;
    EXPECT_EQ(patch_field(a, Vec2::Zero(), c).stress(), expected);
    EXPECT_EQ(patch_field(a, Vec2(0.5, 0.0), c).displacement(Vec2(2.0, 3.0)), Vec2(2.5, 0.0));
}

TEST(OracleCheck, FiftyRandomPointsPass)
{
    const auto r = check_oracles(50);
    EXPECT_TRUE(r.pass) << r.detail;
}
