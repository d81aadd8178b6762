#pragma once

#include "newton.hpp"
#include "nonlinearity.hpp"
#include "operators.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

namespace tubepat {

struct Trajectory {
    std::vector<double> times;
    std::vector<double> sup_dev; // sup |u(t) - reference|
    ScalarField final_state;
    bool aborted = false;
    int abort_step = -1;
};

// IMEX Euler: (M - dt L) u+ = M (u + dt f(u)).  Diffusion implicit,
// reaction explicit; stable for dt below the reaction scale 1/Lip(f).
// Deviations are measured against `reference` if given, else against u0.
inline Trajectory integrate(const DiscreteOperator& op, const Nonlinearity& nl,
                            const ScalarField& u0, double T, double dt = 0.0,
                            const ScalarField* reference = nullptr) {
    if (T <= 0.0) throw std::invalid_argument("integrate: T must be positive");
    if (dt <= 0.0) dt = 0.5 / std::max(nl.lipschitz(), 1e-30);
    const Eigen::VectorXd& M = op.mass;
    Eigen::SparseMatrix<double> A = -dt * op.stiffness;
    for (int k = 0; k < A.rows(); ++k) A.coeffRef(k, k) += M[k];
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
    if (ldlt.info() != Eigen::Success)
        throw std::runtime_error("integrate: diffusion solve failed to factorize");

    const Eigen::VectorXd& ref = reference ? reference->values : u0.values;
    Eigen::VectorXd u = u0.values;
    Trajectory tr;
    int nsteps = static_cast<int>(std::ceil(T / dt - 1e-12));
    tr.times.reserve(nsteps + 1);
    tr.sup_dev.reserve(nsteps + 1);
    tr.times.push_back(0.0);
    tr.sup_dev.push_back((u - ref).cwiseAbs().maxCoeff());
    for (int step = 1; step <= nsteps; ++step) {
        Eigen::VectorXd rhs = M.cwiseProduct(u + dt * nl.eval(u));
        u = ldlt.solve(rhs);
        if (!u.allFinite()) {
            tr.aborted = true;
            tr.abort_step = step;
            break;
        }
        tr.times.push_back(std::min(step * dt, T));
        tr.sup_dev.push_back((u - ref).cwiseAbs().maxCoeff());
    }
    tr.final_state = ScalarField(op.grid, std::move(u));
    return tr;
}

// Backward-Euler stepper with a frozen Jacobian factorization.  With
// dt * max f'_+ < 1 the update map is inverse-monotone (M-matrix), so it
// preserves nodewise ordering of solutions; that is what makes the sandwich
// argument in stability_probe rigorous at the discrete level.
class BackwardEulerStepper {
public:
    BackwardEulerStepper(const DiscreteOperator& op, const Nonlinearity& nl, double dt)
        : op_(op), nl_(nl), dt_(dt) {
        if (dt <= 0.0) throw std::invalid_argument("BackwardEulerStepper: dt must be positive");
        if (dt * std::max(nl.max_slope(), 0.0) >= 1.0)
            throw std::invalid_argument("BackwardEulerStepper: dt * max f'_+ >= 1 breaks "
                                        "monotonicity");
    }

    // Solve M(v - dt f(v)) - dt L v = M u for v by Newton, refactoring the
    // (frozen) Jacobian only when convergence degrades.
    ScalarField step(const ScalarField& u) {
        const Eigen::VectorXd& M = op_.mass;
        Eigen::VectorXd v = u.values;
        double scale = std::max(1.0, v.cwiseAbs().maxCoeff());
        if (!have_factor_) refactor(v);
        for (int it = 0; it < 30; ++it) {
            Eigen::VectorXd g = M.cwiseProduct(v - dt_ * nl_.eval(v)) -
                                dt_ * (op_.stiffness * v) - M.cwiseProduct(u.values);
            double gn = (g.array() / M.array()).abs().maxCoeff();
            if (gn < 1e-12 * scale) return ScalarField(op_.grid, std::move(v));
            // The frozen factorization only contracts linearly; once it has
            // had its chance, rebuild at the current iterate every pass.
            if (it >= 6) refactor(v);
            v -= ldlt_.solve(g);
            ++solves_since_refactor_;
        }
        throw std::runtime_error("BackwardEulerStepper: implicit solve did not converge");
    }

    double dt() const { return dt_; }

private:
    void refactor(const Eigen::VectorXd& v) {
        Eigen::VectorXd fp = nl_.eval_prime(v);
        Eigen::SparseMatrix<double> J = -dt_ * op_.stiffness;
        for (int k = 0; k < J.rows(); ++k)
            J.coeffRef(k, k) += op_.mass[k] * (1.0 - dt_ * fp[k]);
        ldlt_.compute(J);
        if (ldlt_.info() != Eigen::Success)
            throw std::runtime_error("BackwardEulerStepper: factorization failed");
        have_factor_ = true;
        solves_since_refactor_ = 0;
    }

    const DiscreteOperator& op_;
    const Nonlinearity& nl_;
    double dt_;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
    bool have_factor_ = false;
    int solves_since_refactor_ = 0;
};

// Smooth random perturbation: truncated Fourier sum (<= 8 modes per
// direction, respecting the grid topology), normalized to unit sup norm.
inline ScalarField random_smooth_field(const Grid2D& grid, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int modes = 8;
    const bool per = grid.s_topology == STopology::Periodic;
    ScalarField eta(grid);
    for (int ms = 0; ms <= modes; ++ms) {
        for (int mt = 0; mt <= (grid.ntheta > 1 ? modes : 0); ++mt) {
            double a = gauss(rng), b = gauss(rng), c = gauss(rng);
            double decay = 1.0 / (1.0 + ms * ms + mt * mt);
            for (int i = 0; i < grid.ns; ++i) {
                double xs = grid.s(i) / grid.s_extent;
                double base_s = per ? (a * std::cos(2.0 * M_PI * ms * xs) +
                                       b * std::sin(2.0 * M_PI * ms * xs))
                                    : (a + b) * std::cos(M_PI * ms * xs);
                for (int j = 0; j < grid.ntheta; ++j) {
                    double t = grid.theta(j);
                    eta(i, j) += decay * base_s *
                                 (std::cos(mt * t) + c * std::sin(mt * t));
                }
            }
        }
    }
    double m = eta.sup_norm();
    if (m > 0.0) eta.values /= m;
    return eta;
}

struct ProbeTrial {
    std::string label;
    double max_dev = 0.0;
    double final_dev = 0.0;
    std::vector<double> times;
    std::vector<double> sup_dev;
};

struct StabilityReport {
    double delta = 0.0;
    double dt = 0.0;
    double T = 0.0;
    bool sandwich_ok = true; // nodewise ordering u- <= u <= u+ held throughout
    bool pass = false;       // max dev <= 2 delta and final dev <= delta / 10
    std::vector<ProbeTrial> trials;
};

// Perturb the equilibrium by +delta, -delta and random smooth fields of sup
// norm delta, evolve everything in lockstep with monotone backward Euler,
// and check that (a) the constant perturbations sandwich the others at
// every step, (b) no trial ever strays past 2*delta, (c) everything has
// come back within delta/10 by time T.
inline StabilityReport stability_probe(const DiscreteOperator& op, const Nonlinearity& nl,
                                       const ScalarField& U, double delta = 0.0,
                                       double T = 50.0, double dt = 0.0, int trials = 3,
                                       unsigned seed = 12345, int record_stride = 16) {
    if (trials < 2) throw std::invalid_argument("stability_probe: trials >= 2 required");
    if (delta <= 0.0) delta = 1e-2 * U.sup_norm();
    if (dt <= 0.0) dt = std::min(1e-2, 0.5 / std::max(nl.max_slope(), 1e-30));

    BackwardEulerStepper stepper(op, nl, dt);
    StabilityReport rep;
    rep.delta = delta;
    rep.dt = dt;
    rep.T = T;

    std::vector<ScalarField> u;
    rep.trials.resize(trials);
    rep.trials[0].label = "plus";
    rep.trials[1].label = "minus";
    u.push_back(ScalarField(U.grid, U.values.array() + delta));
    u.push_back(ScalarField(U.grid, U.values.array() - delta));
    for (int t = 2; t < trials; ++t) {
        rep.trials[t].label = "random-" + std::to_string(t - 2);
        ScalarField eta = random_smooth_field(U.grid, seed + t);
        u.push_back(ScalarField(U.grid, U.values + delta * eta.values));
    }

    int nsteps = static_cast<int>(std::ceil(T / dt - 1e-12));
    auto record = [&](int step) {
        double time = std::min(step * dt, T);
        for (int t = 0; t < trials; ++t) {
            double dev = (u[t].values - U.values).cwiseAbs().maxCoeff();
            rep.trials[t].max_dev = std::max(rep.trials[t].max_dev, dev);
            rep.trials[t].final_dev = dev;
            if (step % record_stride == 0 || step == nsteps) {
                rep.trials[t].times.push_back(time);
                rep.trials[t].sup_dev.push_back(dev);
            }
        }
    };
    record(0);

    const double order_tol = 1e-10 * std::max(1.0, U.sup_norm());
    for (int step = 1; step <= nsteps; ++step) {
        for (int t = 0; t < trials; ++t) u[t] = stepper.step(u[t]);
        for (int t = 2; t < trials; ++t) {
            if (((u[t].values - u[1].values).array() < -order_tol).any() ||
                ((u[0].values - u[t].values).array() < -order_tol).any())
                rep.sandwich_ok = false;
        }
        if (((u[0].values - u[1].values).array() < -order_tol).any())
            rep.sandwich_ok = false;
        record(step);
    }

    rep.pass = rep.sandwich_ok;
    for (const auto& t : rep.trials)
        rep.pass = rep.pass && t.max_dev <= 2.0 * delta && t.final_dev <= delta / 10.0;
    return rep;
}

// Least-squares exponential decay rate of sup_dev over the window where the
// deviation is between hi*delta and lo*delta (avoids the nonlinear initial
// transient and the flat floor at the end).
inline double decay_rate(const std::vector<double>& times, const std::vector<double>& devs,
                         double lo, double hi) {
    double st = 0, sy = 0, stt = 0, sty = 0;
    int n = 0;
    for (size_t k = 0; k < times.size(); ++k) {
        if (devs[k] <= lo || devs[k] >= hi || devs[k] <= 0.0) continue;
        double x = times[k], y = std::log(devs[k]);
        st += x;
        sy += y;
        stt += x * x;
        sty += x * y;
        ++n;
    }
    if (n < 2) throw std::runtime_error("decay_rate: too few points in the fit window");
    double denom = n * stt - st * st;
    return -(n * sty - st * sy) / denom;
}

} // namespace tubepat
