#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/SparseLU>
#ifdef FVFRAC_HAVE_UMFPACK
#include <Eigen/UmfPackSupport>
#endif

#include "fvfrac/assembly.hpp"
#include "fvfrac/errors.hpp"

namespace fvfrac {

/// Sparse LU with a fill-reducing ordering. UMFPACK when available, Eigen's SparseLU
/// otherwise. The symbolic analysis is kept between factorizations of matrices with the
/// same pattern.
class SparseDirectSolver {
public:
    void analyze(const Eigen::SparseMatrix<double>& a)
    {
        lu_.analyzePattern(a);
        analyzed_ = true;
        rows_ = a.rows();
        nnz_ = a.nonZeros();
    }

    void factorize(const Eigen::SparseMatrix<double>& a)
    {
        if (!analyzed_ || a.rows() != rows_ || a.nonZeros() != nnz_) analyze(a);
        lu_.factorize(a);
        if (lu_.info() != Eigen::Success)
            throw SolverError("sparse factorization failed (numerically singular matrix of size " +
                              std::to_string(a.rows()) + ")" + detail_message());
    }

    Eigen::VectorXd solve(const Eigen::VectorXd& b)
    {
        Eigen::VectorXd x = lu_.solve(b);
        if (lu_.info() != Eigen::Success || !x.allFinite()) throw SolverError("sparse triangular solve failed");
        return x;
    }

private:
#ifdef FVFRAC_HAVE_UMFPACK
    Eigen::UmfPackLU<Eigen::SparseMatrix<double>> lu_;
    std::string detail_message() const { return ""; }
#else
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
    std::string detail_message() { return ": " + lu_.lastErrorMessage(); }
#endif
    bool analyzed_ = false;
    Eigen::Index rows_ = -1;
    Eigen::Index nnz_ = -1;
};

struct Solution {
    DofMap dofs;
    Eigen::VectorXd x;
    Eigen::VectorXd data;
    std::vector<Vec2> tractions;  // force on every face, owner orientation
    double residual = 0.0;        // relative linear residual of the last solve
    int newton_iterations = 0;
    std::vector<double> residual_log;

    Vec2 cell(int c) const { return x.segment<2>(2 * dofs.cell_block(c)); }
    Vec2 plus(int p) const { return x.segment<2>(2 * dofs.plus_block(p)); }
    Vec2 minus(int p) const { return x.segment<2>(2 * dofs.minus_block(p)); }
    Vec2 jump(int p) const { return plus(p) - minus(p); }
};

struct NewtonConfig {
    double rtol = 1e-10;
    double atol = -1.0;  // negative: 1e-14 times the system scale
    int max_iterations = 20;
    double damping = 1.0;

    void validate() const
    {
        if (!(rtol > 0.0)) throw ConfigError("newton relative tolerance must be positive");
        if (max_iterations < 1) throw ConfigError("newton max iterations must be at least 1");
        if (!(damping > 0.0 && damping <= 1.0)) throw ConfigError("newton damping must lie in (0, 1]");
    }
};

inline double relative_residual(const Eigen::SparseMatrix<double>& a, const Eigen::VectorXd& x,
                                const Eigen::VectorXd& b)
{
    const double nb = b.norm();
    const double r = (a * x - b).norm();
    return nb > 0.0 ? r / nb : r;
}

/// Solve with up to two steps of iterative refinement on an existing factorization.
inline Eigen::VectorXd solve_factored(SparseDirectSolver& lu, const Eigen::SparseMatrix<double>& a,
                                      const Eigen::VectorXd& b, double& residual)
{
    Eigen::VectorXd x = lu.solve(b);
    residual = relative_residual(a, x, b);
    for (int k = 0; k < 2 && residual > 1e-13; ++k) {
        x += lu.solve(b - a * x);
        residual = relative_residual(a, x, b);
    }
    if (!(residual <= 1e-8))
        throw SolverError("sparse direct solve is inaccurate (relative residual " + std::to_string(residual) + ")");
    return x;
}

/// Forces on every face from the weights.
inline std::vector<Vec2> compute_face_tractions(const StressWeights& w, const Eigen::VectorXd& x,
                                                const Eigen::VectorXd& data)
{
    std::vector<Vec2> t(w.faces.size());
    for (std::size_t f = 0; f < w.faces.size(); ++f) t[f] = w.faces[f].evaluate(x, data);
    return t;
}

inline Solution make_solution(const StressWeights& w, Eigen::VectorXd x, const Eigen::VectorXd& data, double residual)
{
    Solution s;
    s.dofs = w.dofs;
    s.x = std::move(x);
    s.data = data;
    s.residual = residual;
    s.tractions = compute_face_tractions(w, s.x, data);
    return s;
}

/// Direct sparse solve; returns the unknown vector and the relative residual.
inline Eigen::VectorXd solve_linear(const GlobalSystem& sys, double* residual = nullptr)
{
    SparseDirectSolver lu;
    lu.analyze(sys.matrix);
    lu.factorize(sys.matrix);
    double r = 0.0;
    Eigen::VectorXd x = solve_factored(lu, sys.matrix, sys.rhs, r);
    if (residual) *residual = r;
    return x;
}

inline Solution solve_linear(const GlobalSystem& sys, const StressWeights& w, const Eigen::VectorXd& data)
{
    double r = 0.0;
    Eigen::VectorXd x = solve_linear(sys, &r);
    return make_solution(w, std::move(x), data, r);
}

/// The pieces Newton's method needs: a builder of the linearized system for frozen
/// signs, and the sign extraction at an iterate.
struct FrictionProblem {
    std::function<GlobalSystem(const FrictionSigns&)> build;
    std::function<FrictionSigns(const Eigen::VectorXd&)> signs;
    std::size_t num_pairs = 0;
};

/// Signs of the plus-side normal and shear tractions at `x`. A vanishing shear traction
/// takes the sign opposing the current slip.
inline FrictionSigns traction_signs(const SplitMesh& mesh, const StressWeights& w, const Eigen::VectorXd& data,
                                    const Eigen::VectorXd& x)
{
    const std::size_t m = mesh.num_pairs();
    FrictionSigns s;
    s.normal.assign(m, 1);
    s.shear.assign(m, 1);
    std::vector<Vec2> local(m);
    double scale = 0.0;
    for (std::size_t p = 0; p < m; ++p) {
        const Vec2 t = w.faces[mesh.fracture_pairs[p].plus_face].evaluate(x, data) / mesh.plus_face(p).measure;
        local[p] = {mesh.fracture_normal(p).dot(t), mesh.fracture_tangent(p).dot(t)};
        scale = std::max(scale, t.norm());
    }
    const DofMap dofs = w.dofs;
    for (std::size_t p = 0; p < m; ++p) {
        s.normal[p] = local[p].x() >= 0.0 ? 1 : -1;
        if (std::abs(local[p].y()) > 1e-8 * scale) {
            s.shear[p] = local[p].y() > 0.0 ? 1 : -1;
        } else {
            const Vec2 jump = x.segment<2>(2 * dofs.plus_block(p)) - x.segment<2>(2 * dofs.minus_block(p));
            s.shear[p] = mesh.fracture_tangent(p).dot(jump) > 0.0 ? -1 : 1;
        }
    }
    return s;
}

inline FrictionProblem make_friction_problem(const SplitMesh& mesh, const StressWeights& w, const Eigen::VectorXd& data,
                                             const FractureConditions& conditions,
                                             const std::vector<Vec2>& body_force = {}, double scale = 1.0)
{
    FrictionProblem fp;
    fp.num_pairs = mesh.num_pairs();
    fp.build = [&mesh, &w, data, conditions, body_force, scale](const FrictionSigns& s) {
        return assemble_global(mesh, w, data, conditions, body_force, &s, scale);
    };
    fp.signs = [&mesh, &w, data](const Eigen::VectorXd& x) { return traction_signs(mesh, w, data, x); };
    return fp;
}

/// Residual of the full nonlinear row set at `x`: the linearization at x's own signs is
/// exact there.
inline Eigen::VectorXd friction_residual(const FrictionProblem& fp, const Eigen::VectorXd& x)
{
    const GlobalSystem sys = fp.build(fp.signs(x));
    return sys.matrix * x - sys.rhs;
}

/// Newton iteration with frozen traction signs. The first iterate is the frictionless
/// solve. Returns the unknown vector; `iterations` counts linear solves.
inline Eigen::VectorXd solve_friction(const FrictionProblem& fp, const NewtonConfig& cfg, int* iterations = nullptr,
                                      std::vector<double>* log = nullptr, double* linear_residual = nullptr)
{
    cfg.validate();
    FrictionSigns signs;
    signs.normal.assign(fp.num_pairs, 1);
    signs.shear.assign(fp.num_pairs, 1);
    signs.frictionless = true;

    SparseDirectSolver lu;
    GlobalSystem sys = fp.build(signs);
    lu.analyze(sys.matrix);
    lu.factorize(sys.matrix);
    double lres = 0.0;
    Eigen::VectorXd x = solve_factored(lu, sys.matrix, sys.rhs, lres);
    int iter = 1;
    std::vector<FrictionSigns> history;
    int repeats = 0;
    for (;;) {
        const FrictionSigns s = fp.signs(x);
        sys = fp.build(s);
        const double nb = sys.rhs.norm();
        const double res = (sys.matrix * x - sys.rhs).norm();
        const double atol = cfg.atol >= 0.0 ? cfg.atol : 1e-14 * std::max(nb, 1e-300);
        if (log) log->push_back(nb > 0.0 ? res / nb : res);
        if (res <= cfg.rtol * nb + atol) break;
        if (iter >= cfg.max_iterations)
            throw ConvergenceError(iter, res,
                                   "friction Newton iteration did not converge in " + std::to_string(iter) +
                                       " iterations (residual " + std::to_string(res) + ")");
        for (std::size_t k = 0; k + 1 < history.size(); ++k)
            if (history[k] == s) {
                if (++repeats >= 2)
                    throw ConvergenceError(iter, res,
                                           "friction Newton iteration is cycling between traction sign patterns "
                                           "after " +
                                               std::to_string(iter) + " iterations");
                break;
            }
        history.push_back(s);
        lu.factorize(sys.matrix);
        const Eigen::VectorXd xn = solve_factored(lu, sys.matrix, sys.rhs, lres);
        x += cfg.damping * (xn - x);
        ++iter;
    }
    if (iterations) *iterations = iter;
    if (linear_residual) *linear_residual = lres;
    return x;
}

inline Solution solve_friction(const FrictionProblem& fp, const NewtonConfig& cfg, const StressWeights& w,
                               const Eigen::VectorXd& data)
{
    int iters = 0;
    double lres = 0.0;
    std::vector<double> log;
    Eigen::VectorXd x = solve_friction(fp, cfg, &iters, &log, &lres);
    Solution s = make_solution(w, std::move(x), data, lres);
    s.newton_iterations = iters;
    s.residual_log = std::move(log);
    return s;
}

/// Central-difference Jacobian of `f` at `x` (test utility for the sign-frozen Jacobian).
inline Eigen::MatrixXd central_difference_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                                                   const Eigen::VectorXd& x, double step)
{
    const Eigen::VectorXd f0 = f(x);
    Eigen::MatrixXd j(f0.size(), x.size());
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        Eigen::VectorXd xp = x, xm = x;
        xp(k) += step;
        xm(k) -= step;
        j.col(k) = (f(xp) - f(xm)) / (2.0 * step);
    }
    return j;
}

}  // namespace fvfrac
