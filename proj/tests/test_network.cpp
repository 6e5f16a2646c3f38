#include <catch_amalgamated.hpp>

#include "freqmarket/network.hpp"
#include "freqmarket/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

using namespace freqmarket;
using Catch::Approx;

namespace {

Network two_bus() {
    NetworkSpec spec;
    spec.buses = 2;
    spec.edges = {{0, 1}};
    spec.gamma = Vector::Ones(1);
    spec.inertia = Vector::Ones(2);
    spec.damping = Vector::Ones(2);
    return Network(spec);
}

Network three_bus_ring() {
    NetworkSpec spec;
    spec.buses = 3;
    spec.edges = {{0, 1}, {1, 2}, {0, 2}};
    spec.gamma = Vector(3);
    spec.gamma << 10.0, 8.0, 5.0;
    spec.inertia = Vector(3);
    spec.inertia << 2.0, 1.5, 0.1;
    spec.damping = Vector(3);
    spec.damping << 1.5, 1.2, 1.0;
    return Network(spec);
}

Network ieee14() { return builtin_scenario("ieee14-sigma300").network.build(); }

Vector random_vector(std::mt19937_64& rng, Eigen::Index n, double scale) {
    std::uniform_real_distribution<double> u(-scale, scale);
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = u(rng);
    return v;
}

}  // namespace

TEST_CASE("incidence matrix of the smallest graph", "[network]") {
    const Matrix d = incidence_matrix(two_bus());
    REQUIRE(d.rows() == 2);
    REQUIRE(d.cols() == 1);
    CHECK(d(0, 0) == 1.0);
    CHECK(d(1, 0) == -1.0);
}

TEST_CASE("incidence matrix of a path graph", "[network]") {
    NetworkSpec spec;
    spec.buses = 3;
    spec.edges = {{0, 1}, {1, 2}};
    spec.gamma = Vector::Ones(2);
    spec.inertia = Vector::Ones(3);
    spec.damping = Vector::Ones(3);
    const Matrix d = incidence_matrix(Network(spec));
    Matrix expected(3, 2);
    expected << 1, 0, -1, 1, 0, -1;
    CHECK(d == expected);
}

TEST_CASE("IEEE 14-bus incidence has zero column sums", "[network]") {
    const Matrix d = incidence_matrix(ieee14());
    REQUIRE(d.rows() == 14);
    REQUIRE(d.cols() == 20);
    CHECK(d.colwise().sum().cwiseAbs().maxCoeff() == 0.0);
    for (Eigen::Index k = 0; k < d.cols(); ++k) {
        CHECK((d.col(k).array() == 1.0).count() == 1);
        CHECK((d.col(k).array() == -1.0).count() == 1);
    }
}

TEST_CASE("tree pseudo-inverse of the two-bus tree", "[network]") {
    const Matrix p = tree_pseudo_inverse(two_bus());
    REQUIRE(p.rows() == 1);
    CHECK(p(0, 0) == Approx(0.5));
    CHECK(p(0, 1) == Approx(-0.5));
}

TEST_CASE("tree pseudo-inverse is a left inverse for explicit and default trees", "[network]") {
    Scenario s = builtin_scenario("ieee14-sigma300");
    const Network bfs = s.network.build();
    // 1-2, 2-3, 3-4, 4-5, 5-6, 4-7, 7-8, 4-9, 9-10, 6-11, 6-12, 6-13, 9-14
    s.network.tree = {0, 2, 5, 6, 9, 7, 13, 8, 15, 10, 11, 12, 16};
    const Network explicit_tree = s.network.build();
    for (const Network* net : {&bfs, &explicit_tree}) {
        const Matrix id = net->tree_pseudo_inverse() * net->tree_incidence();
        CHECK((id - Matrix::Identity(13, 13)).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("default tree is the breadth-first tree from bus 1", "[network]") {
    auto tree = ieee14().tree_edges();
    std::sort(tree.begin(), tree.end());
    CHECK(tree == std::vector<std::size_t>{0, 1, 2, 3, 7, 8, 9, 10, 11, 12, 13, 15, 16});
}

TEST_CASE("potential gradient vanishes at zero angles", "[network]") {
    const Network net = ieee14();
    CHECK(potential_gradient(net, Vector::Zero(13)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("potential gradient of the two-bus line", "[network]") {
    const Network net = two_bus();
    const Vector phi = Vector::Constant(1, std::numbers::pi / 6.0);
    CHECK(potential_gradient(net, phi)[0] == Approx(0.5));
}

TEST_CASE("tree gradient reproduces the line flows", "[network][property]") {
    const Network net = ieee14();
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const Vector delta = random_vector(rng, 14, 0.3);
        const Vector phi = net.phi_from_delta(delta);
        const Vector lhs = net.tree_incidence() * net.potential_gradient(phi);
        const Vector rhs = net.line_flow_injection(delta);
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("potential gradient and Hessian match finite differences", "[network][property]") {
    const Network net = ieee14();
    std::mt19937_64 rng(12);
    const Vector phi = random_vector(rng, 13, 0.2);
    const Vector g = net.potential_gradient(phi);
    const Matrix h = net.potential_hessian(phi);
    const double step = 1e-6;
    for (Eigen::Index j = 0; j < phi.size(); ++j) {
        Vector up = phi;
        Vector down = phi;
        up[j] += step;
        down[j] -= step;
        CHECK((net.potential(up) - net.potential(down)) / (2 * step) == Approx(g[j]).margin(1e-6));
        const Vector column = (net.potential_gradient(up) - net.potential_gradient(down)) / (2 * step);
        CHECK((column - h.col(j)).cwiseAbs().maxCoeff() < 1e-5);
    }
}

TEST_CASE("swing fields at an equilibrium", "[network]") {
    const Network net = three_bus_ring();
    const Vector p = Vector::Constant(3, 0.4);
    const SwingRate rd = swing_field_delta(net, Vector::Zero(3), Vector::Zero(3), p, p);
    const SwingRate rp = swing_field_phi(net, Vector::Zero(2), Vector::Zero(3), p, p);
    CHECK(rd.angle.isZero());
    CHECK(rd.omega.isZero());
    CHECK(rp.angle.isZero());
    CHECK(rp.omega.isZero());
}

TEST_CASE("two-bus swing acceleration", "[network]") {
    const Network net = two_bus();
    Vector delta(2);
    delta << std::numbers::pi / 6.0, 0.0;
    const SwingRate r = swing_field_delta(net, delta, Vector::Zero(2), Vector::Zero(2), Vector::Zero(2));
    CHECK(r.omega[0] == Approx(-0.5));
    CHECK(r.omega[1] == Approx(0.5));
}

TEST_CASE("uniform frequency does not move tree angles", "[network]") {
    const Network net = ieee14();
    const SwingRate r = swing_field_phi(net, Vector::Zero(13), Vector::Ones(14), Vector::Zero(14),
                                        Vector::Zero(14));
    CHECK(r.angle.cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("both coordinate systems agree on the frequency dynamics", "[network][property]") {
    const Network net = ieee14();
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 50; ++trial) {
        const Vector delta = random_vector(rng, 14, 0.4);
        const Vector omega = random_vector(rng, 14, 0.1);
        const Vector pg = random_vector(rng, 14, 1.0).cwiseAbs();
        const Vector pd = random_vector(rng, 14, 1.0).cwiseAbs();
        const SwingRate rd = swing_field_delta(net, delta, omega, pg, pd);
        const SwingRate rp = swing_field_phi(net, net.phi_from_delta(delta), omega, pg, pd);
        CHECK((rd.omega - rp.omega).cwiseAbs().maxCoeff() < 1e-10);
        CHECK((net.phi_from_delta(rd.angle) - rp.angle).cwiseAbs().maxCoeff() < 1e-12);
        // The network term cancels in the inertia-weighted sum.
        const double lhs = net.inertia().dot(rd.omega);
        const double rhs = -net.damping().dot(omega) + (pg - pd).sum();
        CHECK(lhs == Approx(rhs).margin(1e-10));
    }
}

TEST_CASE("security constraint boundaries", "[network]") {
    const Network net = two_bus();
    CHECK(security_constraint_holds(net, Vector::Zero(1)));
    CHECK_FALSE(security_constraint_holds(net, Vector::Constant(1, std::numbers::pi / 2.0)));
    CHECK(security_constraint_holds(net, Vector::Constant(1, 1.5)));
}

TEST_CASE("invalid networks are rejected", "[network][errors]") {
    NetworkSpec spec;
    spec.buses = 3;
    spec.edges = {{0, 1}};
    spec.gamma = Vector::Ones(1);
    spec.inertia = Vector::Ones(3);
    spec.damping = Vector::Ones(3);
    CHECK_THROWS_AS(Network(spec), NetworkError);  // bus 3 disconnected

    spec.edges = {{0, 1}, {1, 2}, {0, 2}};
    spec.gamma = Vector::Ones(3);
    spec.tree_edges = {0, 0};
    CHECK_THROWS_AS(Network(spec), NetworkError);  // repeated tree edge

    spec.tree_edges = {0};
    CHECK_THROWS_AS(Network(spec), NetworkError);  // too few tree edges

    spec.tree_edges = {};
    spec.inertia[1] = 0.0;
    CHECK_THROWS_AS(Network(spec), NetworkError);

    spec.inertia[1] = 1.0;
    spec.gamma[2] = -1.0;
    CHECK_THROWS_AS(Network(spec), NetworkError);

    spec.gamma[2] = 1.0;
    spec.edges[2] = {2, 2};
    CHECK_THROWS_AS(Network(spec), NetworkError);
}
