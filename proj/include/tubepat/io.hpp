#pragma once

#include "dynamics.hpp"
#include "grid.hpp"
#include "newton.hpp"
#include "nonlinearity.hpp"
#include "operators.hpp"
#include "surface.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace tubepat {

// All numeric output uses 17 significant digits, enough to round-trip an
// IEEE double exactly.
inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_nonlinearity_csv(std::ostream& out, const Nonlinearity& nl) {
    out << "u,f,fp\n";
    const auto& u = nl.knots();
    const auto& f = nl.values();
    const auto& d = nl.slopes();
    for (size_t k = 0; k < u.size(); ++k)
        out << fmt17(u[k]) << ',' << fmt17(f[k]) << ',' << fmt17(d[k]) << '\n';
}

inline void write_continuation_csv(std::ostream& out, const ContinuationTrace& trace) {
    out << "kappa,residual,lambda1,sup_gap\n";
    for (const auto& st : trace.steps)
        out << fmt17(st.kappa) << ',' << fmt17(st.residual) << ',' << fmt17(st.lambda1)
            << ',' << fmt17(st.sup_gap) << '\n';
}

inline void write_trajectory_csv(std::ostream& out, const std::vector<double>& times,
                                 const std::vector<double>& sup_dev) {
    out << "t,sup_dev\n";
    for (size_t k = 0; k < times.size(); ++k)
        out << fmt17(times[k]) << ',' << fmt17(sup_dev[k]) << '\n';
}

// Field values with their grid coordinates, row-major (s outer).
inline void write_field_csv(std::ostream& out, const ScalarField& u) {
    out << "s,theta,u\n";
    const Grid2D& g = u.grid;
    for (int i = 0; i < g.ns; ++i)
        for (int j = 0; j < g.ntheta; ++j)
            out << fmt17(g.s(i)) << ',' << fmt17(g.theta(j)) << ',' << fmt17(u(i, j)) << '\n';
}

// Sparse matrix as "row,col,value" triplets (diagnostic dump).
inline void write_matrix_csv(std::ostream& out, const Eigen::SparseMatrix<double>& m) {
    out << "row,col,value\n";
    for (int k = 0; k < m.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it)
            out << it.row() << ',' << it.col() << ',' << fmt17(it.value()) << '\n';
}

namespace detail {

// Quad mesh over the grid nodes; the theta seam always wraps, the s seam
// wraps only on periodic (glued) grids.  Vertices are emitted row-major
// (s outer) to match the field storage, optionally displaced along the
// surface normal direction by the field (for visualising patterns).
template <class Embed>
inline void write_obj_impl(std::ostream& out, const Grid2D& g, Embed&& embed) {
    for (int i = 0; i < g.ns; ++i) {
        for (int j = 0; j < g.ntheta; ++j) {
            Vec3 x = embed(g.s(i), g.theta(j));
            out << "v " << fmt17(x[0]) << ' ' << fmt17(x[1]) << ' ' << fmt17(x[2]) << '\n';
        }
    }
    const bool s_wrap = g.s_topology == STopology::Periodic;
    int imax = s_wrap ? g.ns : g.ns - 1;
    if (g.ntheta < 3) return; // no sensible quads around the circle
    for (int i = 0; i < imax; ++i) {
        int i2 = (i + 1) % g.ns;
        for (int j = 0; j < g.ntheta; ++j) {
            int j2 = (j + 1) % g.ntheta;
            // OBJ indices are 1-based.
            out << "f " << g.index(i, j) + 1 << ' ' << g.index(i2, j) + 1 << ' '
                << g.index(i2, j2) + 1 << ' ' << g.index(i, j2) + 1 << '\n';
        }
    }
}

} // namespace detail

inline void write_obj(std::ostream& out, const BentTube& tube, const Grid2D& grid) {
    detail::write_obj_impl(out, grid, [&](double s, double t) { return tube.embed(s, t); });
}

inline void write_obj(std::ostream& out, const GluedSurface& surf, const Grid2D& grid) {
    detail::write_obj_impl(out, grid, [&](double s, double t) { return surf.embed(s, t); });
}

inline std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open output file '" + path + "'");
    return out;
}

} // namespace tubepat
