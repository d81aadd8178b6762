#pragma once

#include "eigen.hpp"
#include "nonlinearity.hpp"
#include "operators.hpp"
#include "surface.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <cmath>
#include <string>
#include <vector>

namespace tubepat {

struct NewtonResult {
    ScalarField u;
    double residual = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> history;
};

namespace detail {

// Residual of the stationary problem in operator scale:
// R = M^{-1} L u + f(u), measured in the sup norm.
inline Eigen::VectorXd stationary_residual(const DiscreteOperator& op, const Nonlinearity& nl,
                                           const Eigen::VectorXd& u) {
    Eigen::VectorXd r = op.stiffness * u;
    r.array() /= op.mass.array();
    r += nl.eval(u);
    return r;
}

} // namespace detail

inline double stationary_residual_norm(const DiscreteOperator& op, const Nonlinearity& nl,
                                       const ScalarField& u) {
    return detail::stationary_residual(op, nl, u.values).cwiseAbs().maxCoeff();
}

// Damped Newton for L u + M f(u) = 0.  The Jacobian L + M diag(f'(u)) is
// symmetric; steps are accepted under a sup-norm Armijo condition and the
// factorization falls back to diagonal regularization near folds.
inline NewtonResult newton_solve(const DiscreteOperator& op, const Nonlinearity& nl,
                                 const ScalarField& u0, double tol = 1e-11,
                                 int max_iter = 50) {
    const int N = op.grid.size();
    Eigen::VectorXd u = u0.values;
    NewtonResult out;

    auto resnorm = [&](const Eigen::VectorXd& v) {
        return detail::stationary_residual(op, nl, v).cwiseAbs().maxCoeff();
    };

    double rn = resnorm(u);
    out.history.push_back(rn);
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;

    for (int it = 0; it < max_iter && rn >= tol; ++it) {
        Eigen::VectorXd fp = nl.eval_prime(u);
        Eigen::SparseMatrix<double> J = op.stiffness;
        for (int k = 0; k < N; ++k) J.coeffRef(k, k) += op.mass[k] * fp[k];
        Eigen::VectorXd rhs = -(op.stiffness * u + op.mass.cwiseProduct(nl.eval(u)));

        ldlt.compute(J);
        double mu = 1e-10 * (1.0 + fp.cwiseAbs().maxCoeff());
        while (ldlt.info() != Eigen::Success && mu < 1e6) {
            Eigen::SparseMatrix<double> Jr = J;
            for (int k = 0; k < N; ++k) Jr.coeffRef(k, k) -= mu * op.mass[k];
            ldlt.compute(Jr);
            mu *= 100.0;
        }
        if (ldlt.info() != Eigen::Success)
            throw std::runtime_error("newton_solve: fold detected, singular Jacobian");

        Eigen::VectorXd delta = ldlt.solve(rhs);

        // Sup-norm Armijo backtracking.
        double t = 1.0, rn_new = rn;
        Eigen::VectorXd u_new = u;
        bool accepted = false;
        for (int ls = 0; ls < 25; ++ls) {
            Eigen::VectorXd cand = u + t * delta;
            double rc = resnorm(cand);
            if (rc < (1.0 - 0.25 * t) * rn) {
                u_new = std::move(cand);
                rn_new = rc;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        out.iterations = it + 1;
        if (!accepted) break; // stalled; report the last residual
        u = std::move(u_new);
        rn = rn_new;
        out.history.push_back(rn);
    }

    out.u = ScalarField(op.grid, std::move(u));
    out.residual = rn;
    out.converged = rn < tol;
    return out;
}

struct ContinuationStep {
    double kappa = 0.0;
    double residual = 0.0;
    double lambda1 = 0.0;
    double sup_gap = 0.0; // sup |U_kappa - U_0|
};

struct ContinuationTrace {
    std::vector<ContinuationStep> steps;
    double kappa0 = 0.0;      // largest curvature reached
    bool reached_target = false;
    std::string stop_reason;  // empty when the target was reached
    ScalarField field;        // pattern at kappa0
    double lambda1 = 0.0;     // principal eigenvalue at kappa0
};

// Continue the straight-tube pattern in the axis curvature kappa by damped
// Newton with step halving (at most `max_halvings` per step).  Stops at the
// target, at a fold, or when stability is lost.
inline ContinuationTrace continue_in_kappa(std::shared_ptr<const ProfileCurve> profile,
                                           const Nonlinearity& nl, const ScalarField& u_base,
                                           double kappa_target, int nsteps = 16,
                                           int max_halvings = 3, double newton_tol = 1e-10,
                                           double lambda_min = 0.0, double eig_tol = 1e-9) {
    if (kappa_target <= 0.0)
        throw std::invalid_argument("continue_in_kappa: kappa_target must be positive");
    if (nsteps < 1) throw std::invalid_argument("continue_in_kappa: nsteps >= 1 required");

    const Grid2D& grid = u_base.grid;
    ContinuationTrace trace;
    trace.field = u_base;

    double kappa = 0.0;
    double dk_full = kappa_target / nsteps;
    double dk = dk_full;
    ScalarField u = u_base;

    while (kappa < kappa_target * (1.0 - 1e-12)) {
        double kappa_try = std::min(kappa + dk, kappa_target);
        int halvings = 0;
        bool step_ok = false;
        while (true) {
            BentTube tube(profile, kappa_try);
            DiscreteOperator op = assemble(tube, grid);
            NewtonResult nr = newton_solve(op, nl, u, newton_tol);
            if (nr.converged) {
                EigenPair ep = principal_eigenpair(op, ScalarField(grid, nl.eval_prime(nr.u.values)),
                                                   eig_tol);
                if (ep.lambda <= lambda_min) {
                    trace.stop_reason = "stability lost at kappa = " + std::to_string(kappa_try);
                    break;
                }
                u = nr.u;
                kappa = kappa_try;
                trace.steps.push_back({kappa, nr.residual, ep.lambda,
                                       (u.values - u_base.values).cwiseAbs().maxCoeff()});
                trace.field = u;
                trace.lambda1 = ep.lambda;
                step_ok = true;
                break;
            }
            if (++halvings > max_halvings) {
                trace.stop_reason = "fold detected near kappa = " + std::to_string(kappa_try);
                break;
            }
            dk *= 0.5;
            kappa_try = kappa + dk;
        }
        if (!step_ok) break;
        dk = std::min(2.0 * dk, dk_full); // recover the nominal step size
    }

    trace.kappa0 = kappa;
    trace.reached_target = kappa >= kappa_target * (1.0 - 1e-12);
    return trace;
}

} // namespace tubepat
