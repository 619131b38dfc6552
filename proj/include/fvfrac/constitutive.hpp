#pragma once

#include <array>
#include <cmath>
#include <string>

#include "fvfrac/errors.hpp"
#include "fvfrac/types.hpp"

namespace fvfrac {

/// Rank-4 stiffness tensor in 2D. Applied as (C:G)_pq = sum_rs C_pqrs G_rs on the full
/// (possibly non-symmetric) gradient.
///
/// The isotropic constructor stores C_pqrs = lambda d_pq d_rs + 2 mu d_pr d_qs. On any
/// symmetric argument this is Hooke's law 2 mu eps + lambda tr(eps) I; on a general
/// gradient it keeps the skew part, which the weakly symmetric stress below needs.
class StiffnessTensor {
public:
    StiffnessTensor() { c_.fill(0.0); }

    static StiffnessTensor isotropic(double mu, double lambda)
    {
        if (!(mu > 0.0) || !(lambda + mu > 0.0) || !std::isfinite(lambda))
            throw MaterialError("Lame parameters must satisfy mu > 0 and lambda + mu > 0 (mu=" + std::to_string(mu) +
                                ", lambda=" + std::to_string(lambda) + ")");
        StiffnessTensor c;
        for (int p = 0; p < 2; ++p)
            for (int q = 0; q < 2; ++q)
                for (int r = 0; r < 2; ++r)
                    for (int s = 0; s < 2; ++s)
                        c.at(p, q, r, s) = lambda * (p == q) * (r == s) + 2.0 * mu * (p == r) * (q == s);
        c.mu_ = mu;
        c.lambda_ = lambda;
        return c;
    }

    /// General tensor; `components[((p*2+q)*2+r)*2+s]`.
    static StiffnessTensor from_components(const std::array<double, 16>& components)
    {
        StiffnessTensor c;
        c.c_ = components;
        c.mu_ = 0.25 * (c.at(0, 1, 0, 1) + c.at(0, 1, 1, 0) + c.at(1, 0, 0, 1) + c.at(1, 0, 1, 0));
        c.lambda_ = c.at(0, 0, 1, 1);
        return c;
    }

    double& at(int p, int q, int r, int s) { return c_[((p * 2 + q) * 2 + r) * 2 + s]; }
    double at(int p, int q, int r, int s) const { return c_[((p * 2 + q) * 2 + r) * 2 + s]; }

    Mat2 apply(const Mat2& g) const
    {
        Mat2 out = Mat2::Zero();
        for (int p = 0; p < 2; ++p)
            for (int q = 0; q < 2; ++q)
                for (int r = 0; r < 2; ++r)
                    for (int s = 0; s < 2; ++s) out(p, q) += at(p, q, r, s) * g(r, s);
        return out;
    }

    /// Matrix acting on row-major vec(G) = (G_xx, G_xy, G_yx, G_yy).
    Eigen::Matrix4d matrix() const
    {
        Eigen::Matrix4d m;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) m(i, j) = c_[i * 4 + j];
        return m;
    }

    /// Representative shear stiffness, used for row scaling.
    double scale() const { return std::max(std::abs(mu_), 0.25 * std::abs(matrix().trace())); }
    double mu() const { return mu_; }
    double lambda() const { return lambda_; }

private:
    std::array<double, 16> c_{};
    double mu_ = 0.0;
    double lambda_ = 0.0;
};

enum class StressSymmetry {
    Weak,  ///< transpose term built from the interaction-region average gradient
    Full,  ///< transpose term built from the sub-cell's own gradient
};

/// (C:G + (C:G_avg)^T) / 2. With G_avg = G this is the symmetric Hooke stress.
inline Mat2 stress_from_gradient(const StiffnessTensor& c, const Mat2& g, const Mat2& g_avg)
{
    return 0.5 * (c.apply(g) + c.apply(g_avg).transpose());
}

inline Mat2 hooke_stress(double mu, double lambda, const Mat2& strain)
{
    return 2.0 * mu * strain + lambda * strain.trace() * Mat2::Identity();
}

/// Plane-strain Poisson ratio lambda / (2 (lambda + mu)).
inline double poisson_ratio(double mu, double lambda) { return lambda / (2.0 * (lambda + mu)); }

inline double young_modulus(double mu, double lambda) { return mu * (3.0 * lambda + 2.0 * mu) / (lambda + mu); }

}  // namespace fvfrac
