#include <catch2/catch_amalgamated.hpp>
#include <tubepat/grid.hpp>

using namespace tubepat;

TEST_CASE("grid geometry and indexing") {
    Grid2D g = Grid2D::neumann(2.0, 16, 8);
    CHECK(g.size() == 128);
    CHECK(g.hs == Catch::Approx(0.125));
    CHECK(g.htheta == Catch::Approx(2.0 * M_PI / 8));
    CHECK(g.s(0) == Catch::Approx(0.0625));
    CHECK(g.s(15) == Catch::Approx(2.0 - 0.0625));
    CHECK(g.theta(0) == 0.0);
    CHECK(g.index(3, 5) == 3 * 8 + 5); // row-major, s outer

    Grid2D gp = Grid2D::periodic(4.0, 32, 8);
    CHECK(gp.s_topology == STopology::Periodic);
    CHECK(gp.hs == Catch::Approx(0.125));
}

TEST_CASE("grid validation") {
    CHECK_THROWS_AS(Grid2D::neumann(1.0, 4, 8), std::invalid_argument);
    CHECK_THROWS_AS(Grid2D::neumann(1.0, 16, 4), std::invalid_argument);
    CHECK_THROWS_AS(Grid2D::neumann(-1.0, 16, 8), std::invalid_argument);
    // axisymmetric special case
    CHECK_NOTHROW(Grid2D::neumann(1.0, 256, 1));
}

TEST_CASE("scalar field storage") {
    Grid2D g = Grid2D::neumann(1.0, 8, 8);
    ScalarField u(g);
    CHECK(u.values.size() == 64);
    CHECK(u.sup_norm() == 0.0);
    u(2, 3) = -5.0;
    CHECK(u.values[2 * 8 + 3] == -5.0);
    CHECK(u.sup_norm() == 5.0);
    CHECK_THROWS_AS(ScalarField(g, Eigen::VectorXd::Zero(10)), std::invalid_argument);
}
