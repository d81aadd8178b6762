#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>

namespace tubepat {

// Topology of the longitudinal (s) direction.  The angular direction theta
// is always 2*pi-periodic.
enum class STopology { NeumannInterval, Periodic };

// Cell-centered tensor grid on [0, s_extent] x [0, 2*pi).
//   s_i     = (i + 1/2) * hs,   i = 0..ns-1
//   theta_j = j * htheta,       j = 0..ntheta-1
// Fields are stored row-major with s outer: index = i * ntheta + j.
struct Grid2D {
    int ns = 0;
    int ntheta = 0;
    double s_extent = 0.0;
    double hs = 0.0;
    double htheta = 0.0;
    STopology s_topology = STopology::NeumannInterval;

    Grid2D() = default;

    Grid2D(double extent, int ns_, int ntheta_, STopology topo)
        : ns(ns_), ntheta(ntheta_), s_extent(extent), s_topology(topo) {
        if (extent <= 0.0)
            throw std::invalid_argument("Grid2D: s_extent must be positive");
        if (ns < 8)
            throw std::invalid_argument("Grid2D: ns >= 8 required, got " + std::to_string(ns));
        // ntheta == 1 is the axisymmetric special case (single angular cell,
        // no theta coupling); otherwise at least 8 cells.
        if (ntheta != 1 && ntheta < 8)
            throw std::invalid_argument("Grid2D: ntheta >= 8 (or == 1) required, got " +
                                        std::to_string(ntheta));
        hs = extent / ns;
        htheta = 2.0 * M_PI / ntheta;
    }

    static Grid2D neumann(double length, int ns, int ntheta) {
        return Grid2D(length, ns, ntheta, STopology::NeumannInterval);
    }
    static Grid2D periodic(double period, int ns, int ntheta) {
        return Grid2D(period, ns, ntheta, STopology::Periodic);
    }

    int size() const { return ns * ntheta; }
    int index(int i, int j) const { return i * ntheta + j; }
    double s(int i) const { return (i + 0.5) * hs; }
    double theta(int j) const { return j * htheta; }

    bool same_shape(const Grid2D& o) const {
        return ns == o.ns && ntheta == o.ntheta &&
               std::abs(s_extent - o.s_extent) < 1e-12 * s_extent &&
               s_topology == o.s_topology;
    }
};

// A scalar field sampled at the cell centers of a Grid2D.
struct ScalarField {
    Grid2D grid;
    Eigen::VectorXd values;

    ScalarField() = default;
    explicit ScalarField(const Grid2D& g) : grid(g), values(Eigen::VectorXd::Zero(g.size())) {}
    ScalarField(const Grid2D& g, Eigen::VectorXd v) : grid(g), values(std::move(v)) {
        if (values.size() != grid.size())
            throw std::invalid_argument("ScalarField: value count does not match grid");
    }

    double& operator()(int i, int j) { return values[grid.index(i, j)]; }
    double operator()(int i, int j) const { return values[grid.index(i, j)]; }

    double sup_norm() const { return values.size() ? values.cwiseAbs().maxCoeff() : 0.0; }
};

} // namespace tubepat
