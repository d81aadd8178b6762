#pragma once

#include "operators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace tubepat {

struct CriticalCluster {
    double s = 0.0;
    double theta = 0.0;
    int size = 0; // number of flagged nodes
};

struct CriticalPointResult {
    int count = 0;
    std::vector<CriticalCluster> clusters;
    std::vector<char> flags; // per-node, for coverage queries
};

// Count critical points of a field.  A node is flagged when, along each
// coordinate direction, the corresponding covariant gradient component
// either changes sign across the node (3-node stencil) or falls below
// tol_rel * max |grad U|.  The directional test is what keeps saddles whose
// zero crossings come from the *other* direction from being over-counted,
// and keeps the junction circles of a glued pattern from merging into
// rings.  Flagged nodes are clustered with 4-connectivity (wrapping with
// the grid topology); the representative of a cluster is its node of
// smallest gradient.
inline CriticalPointResult count_critical_points(const DiscreteOperator& op,
                                                 const ScalarField& u,
                                                 double tol_rel = 1e-4) {
    const Grid2D& g = op.grid;
    const int ns = g.ns, nt = g.ntheta;
    const bool per = g.s_topology == STopology::Periodic;

    Eigen::VectorXd gs, gt;
    gradient_components(op, u, gs, gt);
    double gmax = (gs.array().square() + gt.array().square()).sqrt().maxCoeff();
    double uscale = std::max(1.0, u.values.cwiseAbs().maxCoeff());
    if (gmax <= 1e-12 * uscale)
        throw std::runtime_error("count_critical_points: degenerate field");
    double tol = tol_rel * gmax;

    CriticalPointResult out;
    out.flags.assign(g.size(), 0);
    auto sat = [&](int i) { return per ? (i + ns) % ns : std::clamp(i, 0, ns - 1); };

    for (int i = 0; i < ns; ++i) {
        for (int j = 0; j < nt; ++j) {
            double a0 = gs[g.index(sat(i - 1), j)], a1 = gs[g.index(i, j)],
                   a2 = gs[g.index(sat(i + 1), j)];
            double mn = std::min({a0, a1, a2}), mx = std::max({a0, a1, a2});
            bool flag_s = mn < tol && mx > -tol;
            bool flag_t = true;
            if (nt > 1) {
                double b0 = gt[g.index(i, (j + nt - 1) % nt)], b1 = gt[g.index(i, j)],
                       b2 = gt[g.index(i, (j + 1) % nt)];
                double bn = std::min({b0, b1, b2}), bx = std::max({b0, b1, b2});
                flag_t = bn < tol && bx > -tol;
            }
            out.flags[g.index(i, j)] = (flag_s && flag_t) ? 1 : 0;
        }
    }

    // 4-connected components over the flagged set.
    std::vector<int> label(g.size(), -1);
    std::vector<int> stack;
    for (int k0 = 0; k0 < g.size(); ++k0) {
        if (!out.flags[k0] || label[k0] >= 0) continue;
        int c = out.count++;
        CriticalCluster cl;
        double best = std::numeric_limits<double>::infinity();
        stack.assign(1, k0);
        label[k0] = c;
        while (!stack.empty()) {
            int k = stack.back();
            stack.pop_back();
            int i = k / nt, j = k % nt;
            double mag = gs[k] * gs[k] + gt[k] * gt[k];
            if (mag < best) {
                best = mag;
                cl.s = g.s(i);
                cl.theta = g.theta(j);
            }
            ++cl.size;
            auto visit = [&](int i2, int j2) {
                int k2 = g.index(i2, j2);
                if (out.flags[k2] && label[k2] < 0) {
                    label[k2] = c;
                    stack.push_back(k2);
                }
            };
            if (per || i > 0) visit(sat(i - 1), j);
            if (per || i < ns - 1) visit(sat(i + 1), j);
            if (nt > 1) {
                visit(i, (j + nt - 1) % nt);
                visit(i, (j + 1) % nt);
            }
        }
        out.clusters.push_back(cl);
    }
    return out;
}

// Check that each of the 4n symmetry points (s = junction k*l, theta in
// {0, pi}) of a glued pattern lies inside some cluster: the nearest grid
// node (or one of its 4-neighbors) must be flagged.
inline bool covers_symmetry_points(const CriticalPointResult& res, const Grid2D& grid,
                                   int n, double l) {
    const int ns = grid.ns, nt = grid.ntheta;
    auto flagged_near = [&](double s, double theta) {
        int i = static_cast<int>(std::floor(s / grid.hs)) % ns;
        int j = static_cast<int>(std::round(theta / grid.htheta)) % nt;
        for (int di = -1; di <= 1; ++di) {
            for (int dj = -1; dj <= 1; ++dj) {
                int i2 = (i + di + ns) % ns, j2 = (j + dj + nt) % nt;
                if (res.flags[grid.index(i2, j2)]) return true;
            }
        }
        return false;
    };
    for (int k = 0; k < 2 * n; ++k) {
        if (!flagged_near(k * l, 0.0)) return false;
        if (!flagged_near(k * l, M_PI)) return false;
    }
    return true;
}

} // namespace tubepat
