#pragma once

#include "grid.hpp"
#include "surface.hpp"

#include <Eigen/Sparse>
#include <functional>
#include <stdexcept>
#include <vector>

namespace tubepat {

// Finite-volume discretization of the Laplace-Beltrami operator
//   Lu = (1/(Phi Psi)) [ d_s((Psi/Phi) u_s) + d_theta((Phi/Psi) u_theta) ]
// on a cell-centered grid.  `stiffness` is the symmetric negative
// semidefinite flux matrix (rows sum to zero) and `mass` the diagonal cell
// measures, so M^{-1} L approximates the operator itself.
struct DiscreteOperator {
    Grid2D grid;
    Eigen::SparseMatrix<double> stiffness;
    Eigen::VectorXd mass;
    // Metric coefficients at the cell centers, kept for gradients and
    // diagnostics.
    Eigen::VectorXd psi_node;
    Eigen::VectorXd phi_node;
};

// Generic assembly kernel; psi is a function of s, phi of (s, theta).
// Face coefficients are evaluated at face midpoints, which gives second
// order accuracy for smooth fields.
inline DiscreteOperator assemble(const Grid2D& grid,
                                 const std::function<double(double)>& psi,
                                 const std::function<double(double, double)>& phi) {
    const int ns = grid.ns, nt = grid.ntheta, N = grid.size();
    const double hs = grid.hs, ht = grid.htheta;
    const bool s_periodic = grid.s_topology == STopology::Periodic;

    DiscreteOperator op;
    op.grid = grid;
    op.mass.resize(N);
    op.psi_node.resize(N);
    op.phi_node.resize(N);

    auto check = [](double v) {
        if (!(v > 0.0)) throw std::runtime_error("assemble: degenerate metric");
        return v;
    };

    for (int i = 0; i < ns; ++i) {
        double si = grid.s(i), pv = check(psi(si));
        for (int j = 0; j < nt; ++j) {
            int k = grid.index(i, j);
            double ph = check(phi(si, grid.theta(j)));
            op.psi_node[k] = pv;
            op.phi_node[k] = ph;
            op.mass[k] = ph * pv * hs * ht;
        }
    }

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<size_t>(N) * 5);
    auto add_face = [&](int ka, int kb, double coef) {
        trip.emplace_back(ka, ka, -coef);
        trip.emplace_back(kb, kb, -coef);
        trip.emplace_back(ka, kb, coef);
        trip.emplace_back(kb, ka, coef);
    };

    // Longitudinal faces at s = (i+1) hs between cells i and i+1 (wrapping
    // if periodic; skipped at the ends of a Neumann interval, which is the
    // mirror-ghost condition).
    int i_max = s_periodic ? ns : ns - 1;
    for (int i = 0; i < i_max; ++i) {
        double sf = (i + 1) * hs;
        int inb = (i + 1) % ns;
        double pv = check(psi(sf));
        for (int j = 0; j < nt; ++j) {
            double ph = check(phi(sf, grid.theta(j)));
            add_face(grid.index(i, j), grid.index(inb, j), pv / ph * ht / hs);
        }
    }

    // Angular faces at theta = (j+1/2) ht between cells j and j+1,
    // periodic; absent in the axisymmetric case ntheta == 1.
    if (nt > 1) {
        for (int i = 0; i < ns; ++i) {
            double si = grid.s(i), pv = check(psi(si));
            for (int j = 0; j < nt; ++j) {
                double tf = (j + 0.5) * ht;
                double ph = check(phi(si, tf));
                add_face(grid.index(i, j), grid.index(i, (j + 1) % nt), ph / pv * hs / ht);
            }
        }
    }

    op.stiffness.resize(N, N);
    op.stiffness.setFromTriplets(trip.begin(), trip.end());
    op.stiffness.makeCompressed();
    return op;
}

// Straight tube D: kappa = 0, Neumann in s.
inline DiscreteOperator assemble(const ProfileCurve& profile, const Grid2D& grid) {
    return assemble(
        grid, [&](double s) { return profile.psi(s); },
        [&](double s, double t) { return metric_phi(profile.psi(s), profile.dpsi(s), 0.0, t); });
}

inline DiscreteOperator assemble(const BentTube& tube, const Grid2D& grid) {
    return assemble(
        grid, [&](double s) { return tube.psi(s); },
        [&](double s, double t) { return tube.phi(s, t); });
}

inline DiscreteOperator assemble(const GluedSurface& surf, const Grid2D& grid) {
    if (grid.s_topology != STopology::Periodic)
        throw std::invalid_argument("assemble: glued surface requires a periodic grid");
    return assemble(
        grid, [&](double s) { return surf.psi(s); },
        [&](double s, double t) { return surf.phi(s, t); });
}

// M^{-1} L u: the discrete Laplace-Beltrami operator applied to a field.
inline ScalarField apply(const DiscreteOperator& op, const ScalarField& u) {
    if (!op.grid.same_shape(u.grid))
        throw std::invalid_argument("apply: field grid does not match operator");
    Eigen::VectorXd v = op.stiffness * u.values;
    v.array() /= op.mass.array();
    return ScalarField(op.grid, std::move(v));
}

// Nodal covariant gradient components (u_s / Phi, u_theta / Psi) by central
// differences (one-sided at Neumann ends).
inline void gradient_components(const DiscreteOperator& op, const ScalarField& u,
                                Eigen::VectorXd& gs, Eigen::VectorXd& gt) {
    const Grid2D& g = op.grid;
    const int ns = g.ns, nt = g.ntheta;
    const bool per = g.s_topology == STopology::Periodic;
    gs.resize(g.size());
    gt.resize(g.size());
    for (int i = 0; i < ns; ++i) {
        int im = per ? (i + ns - 1) % ns : std::max(i - 1, 0);
        int ip = per ? (i + 1) % ns : std::min(i + 1, ns - 1);
        double ds = (per || (i > 0 && i < ns - 1)) ? 2.0 * g.hs : g.hs;
        for (int j = 0; j < nt; ++j) {
            int k = g.index(i, j);
            gs[k] = (u(ip, j) - u(im, j)) / ds / op.phi_node[k];
            if (nt > 1) {
                int jm = (j + nt - 1) % nt, jp = (j + 1) % nt;
                gt[k] = (u(i, jp) - u(i, jm)) / (2.0 * g.htheta) / op.psi_node[k];
            } else {
                gt[k] = 0.0;
            }
        }
    }
}

// |grad u|^2 = (u_s / Phi)^2 + (u_theta / Psi)^2 at the cell centers.
inline ScalarField gradient_sq(const DiscreteOperator& op, const ScalarField& u) {
    Eigen::VectorXd gs, gt;
    gradient_components(op, u, gs, gt);
    return ScalarField(op.grid, (gs.array().square() + gt.array().square()).matrix());
}

} // namespace tubepat
