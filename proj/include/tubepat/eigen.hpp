#pragma once

#include "grid.hpp"
#include "operators.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <cmath>
#include <stdexcept>

namespace tubepat {

struct EigenPair {
    double lambda = 0.0;
    ScalarField phi;
    int iterations = 0;
    double residual = 0.0;
    bool converged = false;
};

namespace detail {

// A0 = -L - M diag(W): the stiffness side of the linearized pencil
// A0 phi = lambda M phi whose smallest eigenvalue decides stability.
inline Eigen::SparseMatrix<double> pencil_matrix(const DiscreteOperator& op,
                                                 const Eigen::VectorXd& potential) {
    Eigen::SparseMatrix<double> A = -op.stiffness;
    Eigen::VectorXd d = op.mass.cwiseProduct(potential);
    for (int k = 0; k < A.rows(); ++k) A.coeffRef(k, k) -= d[k];
    A.makeCompressed();
    return A;
}

} // namespace detail

// Generalized Rayleigh quotient q^T (-L - M diag(W)) q / q^T M q.
inline double rayleigh_quotient(const DiscreteOperator& op, const ScalarField& potential,
                                const ScalarField& q) {
    const Eigen::VectorXd& x = q.values;
    double num = -x.dot(op.stiffness * x) -
                 x.dot(op.mass.cwiseProduct(potential.values).cwiseProduct(x));
    double den = x.dot(op.mass.cwiseProduct(x));
    if (!(den > 0.0)) throw std::invalid_argument("rayleigh_quotient: zero test field");
    return num / den;
}

// Principal (smallest) eigenpair of -L phi - M W phi = lambda M phi by
// shift-inverted power iteration with an adaptive shift.  The initial
// shift sigma0 = -max(W_+) - 1 makes A - sigma M positive definite; once
// the Rayleigh estimate settles, the shift chases it from below, which
// keeps the iteration count low even when the spectrum is clustered.
inline EigenPair principal_eigenpair(const DiscreteOperator& op, const ScalarField& potential,
                                     double tol = 1e-10, int max_iter = 500) {
    if (!op.grid.same_shape(potential.grid))
        throw std::invalid_argument("principal_eigenpair: potential grid mismatch");
    const int N = op.grid.size();
    Eigen::SparseMatrix<double> A0 = detail::pencil_matrix(op, potential.values);
    const Eigen::VectorXd& M = op.mass;

    double sigma = -std::max(potential.values.maxCoeff(), 0.0) - 1.0;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;

    auto factor = [&](double s) -> bool {
        Eigen::SparseMatrix<double> A = A0;
        for (int k = 0; k < N; ++k) A.coeffRef(k, k) -= s * M[k];
        ldlt.compute(A);
        return ldlt.info() == Eigen::Success && (ldlt.vectorD().array() > 0.0).all();
    };
    if (!factor(sigma))
        throw std::runtime_error("principal_eigenpair: initial shift not positive definite");

    Eigen::VectorXd x = Eigen::VectorXd::Constant(N, 1.0);
    x += 1e-3 * Eigen::VectorXd::LinSpaced(N, -1.0, 1.0); // break symmetry
    x /= std::sqrt(x.dot(M.cwiseProduct(x)));

    // Residuals are measured relative to the operator magnitude (~1/h^2);
    // an absolute threshold would sit below the roundoff plateau on fine
    // grids.
    double opscale = std::max(1.0, (A0.diagonal().array() / M.array()).abs().maxCoeff());
    double thresh = tol * opscale;

    EigenPair out;
    double lambda = 0.0;
    for (int it = 1; it <= max_iter; ++it) {
        Eigen::VectorXd y = ldlt.solve(M.cwiseProduct(x));
        y /= std::sqrt(y.dot(M.cwiseProduct(y)));
        lambda = y.dot(A0 * y) / y.dot(M.cwiseProduct(y));
        Eigen::VectorXd r = A0 * y - lambda * M.cwiseProduct(y);
        r.array() /= M.array();
        double resnorm = r.norm() / y.norm();
        x = y;
        out.iterations = it;
        out.residual = resnorm;
        if (resnorm < thresh) {
            out.converged = true;
            break;
        }
        // Chase the estimate: keep the shift strictly below lambda by a
        // margin tied to the current residual, and never move it down.
        double target = lambda - std::max(2.0 * resnorm, 16.0 * thresh);
        if (target - sigma > 0.1 * (lambda - sigma)) {
            if (factor(target)) {
                sigma = target;
            } else if (!factor(sigma)) {
                throw std::runtime_error("principal_eigenpair: shift update lost "
                                         "positive definiteness");
            }
        }
    }

    // Normalize: unit sup norm, principal component positive.
    int imax = 0;
    x.cwiseAbs().maxCoeff(&imax);
    x *= (x[imax] > 0.0 ? 1.0 : -1.0) / std::abs(x[imax]);
    out.lambda = lambda;
    out.phi = ScalarField(op.grid, x);
    return out;
}

} // namespace tubepat
