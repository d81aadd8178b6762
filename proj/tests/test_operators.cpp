#include <catch2/catch_amalgamated.hpp>
#include <tubepat/operators.hpp>

#include <cmath>
#include <memory>
#include <random>

using namespace tubepat;

namespace {

// sup-norm error of the discrete Laplacian against a closed form.
double cylinder_error(int ns) {
    auto prof = std::make_shared<CosineProfile>(1.0, 0.0, 1.0); // Psi == 1
    Grid2D g = Grid2D::neumann(1.0, ns, 8);
    DiscreteOperator op = assemble(*prof, g);
    ScalarField u(g), exact(g);
    for (int i = 0; i < g.ns; ++i)
        for (int j = 0; j < g.ntheta; ++j) {
            u(i, j) = std::cos(M_PI * g.s(i));
            exact(i, j) = -M_PI * M_PI * std::cos(M_PI * g.s(i));
        }
    return (apply(op, u).values - exact.values).cwiseAbs().maxCoeff();
}

double torus_error(int ntheta) {
    double a = 1.0, kappa = 0.4;
    Grid2D g = Grid2D::periodic(1.0, 8, ntheta);
    DiscreteOperator op = assemble(
        g, [&](double) { return a; },
        [&](double, double t) { return metric_phi(a, 0.0, kappa, t); });
    ScalarField u(g), exact(g);
    for (int i = 0; i < g.ns; ++i)
        for (int j = 0; j < g.ntheta; ++j) {
            double t = g.theta(j);
            u(i, j) = std::cos(t);
            exact(i, j) = -(std::cos(t) - kappa * a * std::cos(2.0 * t)) /
                          (a * a * (1.0 - kappa * a * std::cos(t)));
        }
    return (apply(op, u).values - exact.values).cwiseAbs().maxCoeff();
}

} // namespace

TEST_CASE("discrete Laplacian matches closed forms at second order") {
    double e64 = cylinder_error(64), e128 = cylinder_error(128);
    double order = std::log2(e64 / e128);
    CHECK(order > 1.9);
    CHECK(order < 2.1);

    double t64 = torus_error(64), t128 = torus_error(128);
    double torder = std::log2(t64 / t128);
    CHECK(torder > 1.9);
    CHECK(torder < 2.1);
}

TEST_CASE("stiffness matrix structure") {
    auto prof = std::make_shared<CosineProfile>(1.0, 0.5, 1.0);
    BentTube tube(prof, 0.3);
    Grid2D g = Grid2D::neumann(1.0, 16, 8);
    DiscreteOperator op = assemble(tube, g);

    // rows sum to zero (constants are in the kernel)
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(g.size());
    CHECK((op.stiffness * ones).cwiseAbs().maxCoeff() < 1e-12);

    // symmetry via random vectors
    std::mt19937 rng(7);
    std::normal_distribution<double> gauss;
    for (int trial = 0; trial < 5; ++trial) {
        Eigen::VectorXd x(g.size()), y(g.size());
        for (int k = 0; k < g.size(); ++k) {
            x[k] = gauss(rng);
            y[k] = gauss(rng);
        }
        CHECK(std::abs(x.dot(op.stiffness * y) - y.dot(op.stiffness * x)) <
              1e-12 * x.norm() * y.norm() * 10.0);
        // negative semidefinite
        CHECK(x.dot(op.stiffness * x) <= 1e-12);
    }

    // positive mass, metric stored at nodes
    CHECK(op.mass.minCoeff() > 0.0);
    CHECK(op.psi_node.minCoeff() > 0.0);
    CHECK(op.phi_node.minCoeff() > 0.0);
}

TEST_CASE("periodic glued operator wraps in s") {
    auto prof = std::make_shared<CosineProfile>(1.0, 0.5, 1.0);
    GluedSurface surf(prof, 5);
    Grid2D g = Grid2D::periodic(surf.period(), 32, 8);
    DiscreteOperator op = assemble(surf, g);
    // first and last s-rows are coupled
    bool coupled = false;
    for (int j = 0; j < g.ntheta; ++j)
        if (op.stiffness.coeff(g.index(0, j), g.index(g.ns - 1, j)) != 0.0) coupled = true;
    CHECK(coupled);
    CHECK((op.stiffness * Eigen::VectorXd::Ones(g.size())).cwiseAbs().maxCoeff() < 1e-12);
    CHECK_THROWS_AS(assemble(surf, Grid2D::neumann(surf.period(), 32, 8)),
                    std::invalid_argument);
}

TEST_CASE("Dirichlet energy matches -u^T L u (integration by parts)") {
    auto prof = std::make_shared<CosineProfile>(1.0, 0.4, 1.0);
    BentTube tube(prof, 0.3);
    Grid2D g = Grid2D::neumann(1.0, 96, 96);
    DiscreteOperator op = assemble(tube, g);
    ScalarField u(g);
    for (int i = 0; i < g.ns; ++i)
        for (int j = 0; j < g.ntheta; ++j)
            u(i, j) = std::cos(M_PI * g.s(i)) * std::cos(g.theta(j));
    double quad = -u.values.dot(op.stiffness * u.values);
    double nodal = op.mass.dot(gradient_sq(op, u).values);
    CHECK(quad == Catch::Approx(nodal).epsilon(5e-3));
}

TEST_CASE("degenerate metric is rejected") {
    Grid2D g = Grid2D::neumann(1.0, 16, 8);
    CHECK_THROWS_WITH(assemble(
                          g, [](double) { return 1.0; }, [](double, double) { return 0.0; }),
                      Catch::Matchers::ContainsSubstring("degenerate metric"));
    CHECK_THROWS_WITH(assemble(
                          g, [](double s) { return s < 0.5 ? 1.0 : -1.0; },
                          [](double, double) { return 1.0; }),
                      Catch::Matchers::ContainsSubstring("degenerate metric"));
}

TEST_CASE("axisymmetric grid (ntheta = 1) behaves like the 1d operator") {
    auto prof = std::make_shared<CosineProfile>(1.0, 0.0, 1.0);
    Grid2D g1 = Grid2D::neumann(1.0, 64, 1);
    DiscreteOperator op = assemble(*prof, g1);
    ScalarField u(g1);
    for (int i = 0; i < g1.ns; ++i) u(i, 0) = std::cos(M_PI * g1.s(i));
    ScalarField lap = apply(op, u);
    for (int i = 1; i < g1.ns - 1; ++i)
        CHECK(lap(i, 0) ==
              Catch::Approx(-M_PI * M_PI * std::cos(M_PI * g1.s(i))).margin(5e-3));
}
