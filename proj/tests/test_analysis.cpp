#include <catch_amalgamated.hpp>

#include "freqmarket/analysis.hpp"
#include "freqmarket/scenario.hpp"

#include <random>

using namespace freqmarket;
using Catch::Approx;

namespace {

struct Fixture {
    Scenario scenario = builtin_scenario("three-bus");
    ClosedLoop plant{scenario.network.build(), scenario.costs, scenario.load_pu(), scenario.gains};
    ReferenceEquilibrium ref = reference_equilibrium(plant.network(), plant.costs(), plant.load());
};

SystemState perturbed(const SystemState& x, std::mt19937_64& rng, double r) {
    std::uniform_real_distribution<double> u(-r, r);
    SystemState y = x;
    for (Vector* v : {&y.phi, &y.omega, &y.bid, &y.p_gen}) {
        for (Eigen::Index i = 0; i < v->size(); ++i) (*v)[i] += u(rng);
    }
    y.bid = y.bid.cwiseMax(0.0);
    y.p_gen = y.p_gen.cwiseMax(0.0);
    y.lambda += u(rng);
    return y;
}

}  // namespace

TEST_CASE("reference equilibrium of the three-bus case", "[analysis]") {
    const Fixture f;
    const auto& x = f.ref.state;
    CHECK(x.p_gen.sum() == Approx(1.5));
    CHECK(x.p_gen[2] == 0.0);
    CHECK(x.bid[0] == Approx(x.lambda));
    CHECK(x.bid[2] == Approx(1e4));
    CHECK(x.omega.isZero());
    // 20 P1 + 10 = 40 P2 + 15 with P1 + P2 = 1.5
    CHECK(x.p_gen[0] == Approx(65.0 / 60.0));
    CHECK(x.lambda == Approx(20.0 * 65.0 / 60.0 + 10.0));
}

TEST_CASE("Lyapunov function vanishes at the reference", "[analysis]") {
    const Fixture f;
    const LyapunovFunction v(f.plant.network(), f.plant.gains(), f.ref.state);
    CHECK(v.value(f.ref.state) == Approx(0.0).margin(1e-14));
    CHECK(v.gradient(f.ref.state).max_abs() < 1e-12);
}

TEST_CASE("Lyapunov gradient matches finite differences", "[analysis][property]") {
    const Fixture f;
    const LyapunovFunction v(f.plant.network(), f.plant.gains(), f.ref.state);
    std::mt19937_64 rng(41);
    const double h = 1e-6;
    for (int trial = 0; trial < 20; ++trial) {
        const SystemState x = perturbed(f.ref.state, rng, 0.2);
        const StateRate g = v.gradient(x);
        const auto probe = [&](auto member, Eigen::Index i, double expected) {
            SystemState up = x;
            SystemState down = x;
            (up.*member)[i] += h;
            (down.*member)[i] -= h;
            CHECK((v.value(up) - v.value(down)) / (2 * h) == Approx(expected).margin(1e-6));
        };
        for (Eigen::Index i = 0; i < x.phi.size(); ++i) probe(&SystemState::phi, i, g.phi[i]);
        for (Eigen::Index i = 0; i < 3; ++i) {
            probe(&SystemState::omega, i, g.omega[i]);
            probe(&SystemState::bid, i, g.bid[i]);
            probe(&SystemState::p_gen, i, g.p_gen[i]);
        }
        SystemState up = x;
        SystemState down = x;
        up.lambda += h;
        down.lambda -= h;
        CHECK((v.value(up) - v.value(down)) / (2 * h) == Approx(g.lambda).margin(1e-6));
    }
}

TEST_CASE("Lyapunov function is positive near the reference", "[analysis][property]") {
    const Fixture f;
    const LyapunovFunction v(f.plant.network(), f.plant.gains(), f.ref.state);
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 200; ++trial) CHECK(v.value(perturbed(f.ref.state, rng, 0.1)) > 0.0);
}

TEST_CASE("a pure frequency deviation dissipates through damping", "[analysis]") {
    const Fixture f;
    const LyapunovFunction v(f.plant.network(), f.plant.gains(), f.ref.state);
    SystemState x = f.ref.state;
    x.omega << 0.01, -0.02, 0.015;
    const Vector& m = f.plant.network().inertia();
    const Vector& a = f.plant.network().damping();
    CHECK(v.value(x) == Approx(0.5 * x.omega.dot(m.cwiseProduct(x.omega))));
    CHECK(v.gradient(x).dot(f.plant.field(x)) == Approx(-x.omega.dot(a.cwiseProduct(x.omega))));
}

TEST_CASE("with zero frequency feedback only the market block remains", "[analysis]") {
    Fixture f;
    Gains gains = f.scenario.gains;
    gains.sigma = 0.0;
    const LyapunovFunction v(f.plant.network(), gains, f.ref.state);
    SystemState x = f.ref.state;
    x.omega << 0.3, 0.1, -0.2;
    x.phi *= 1.5;
    CHECK(v.value(x) == 0.0);
    x.lambda += 2.0;
    CHECK(v.value(x) == Approx(0.5 * gains.tau_lambda * 4.0));
    CHECK(v.gradient(x).omega.isZero());
}

TEST_CASE("Lyapunov monitor records the largest increment", "[analysis]") {
    LyapunovMonitor monitor(1e-6);
    for (double value : {5.0, 4.0, 4.0000005, 3.0}) monitor.observe(value);
    CHECK(monitor.initial() == 5.0);
    CHECK(monitor.last() == 3.0);
    CHECK(monitor.count() == 4);
    CHECK(monitor.max_increment() == Approx(5e-7));
    CHECK(monitor.descent());
    monitor.observe(3.1);
    CHECK_FALSE(monitor.descent());
    monitor.reset();
    CHECK(monitor.count() == 0);
    CHECK(monitor.descent());
}

TEST_CASE("the reference passes the efficiency check", "[analysis]") {
    const Fixture f;
    const auto report = check_equilibrium_efficiency(f.plant.costs(), f.ref.state, f.plant.load(), 1e-8);
    CHECK(report.pass);
    CHECK(report.kkt_residual() < 1e-10);
    CHECK(report.mu[2] > 0.0);
    CHECK(report.in_interval == std::vector<bool>{true, true, true});
}

TEST_CASE("efficiency failures are attributed", "[analysis]") {
    const Fixture f;
    SystemState x = f.ref.state;
    x.bid[2] = x.lambda - 1.0;  // idle bus undercuts the price
    auto report = check_equilibrium_efficiency(f.plant.costs(), x, f.plant.load(), 1e-6);
    CHECK_FALSE(report.pass);
    CHECK(report.interval == Approx(1.0));
    CHECK_FALSE(report.in_interval[2]);

    x = f.ref.state;
    x.p_gen[0] += 0.01;
    report = check_equilibrium_efficiency(f.plant.costs(), x, f.plant.load(), 1e-6);
    CHECK_FALSE(report.pass);
    CHECK(report.balance == Approx(0.01));

    x = f.ref.state;
    x.omega[1] = 5e-4;
    CHECK_FALSE(check_equilibrium_efficiency(f.plant.costs(), x, f.plant.load(), 1e-6).pass);
    CHECK(check_equilibrium_efficiency(f.plant.costs(), x, f.plant.load(), 1e-6, 1e-3).pass);
}

TEST_CASE("sampled descent condition near the equilibrium", "[analysis]") {
    const Fixture f;
    const auto sample = descent_condition_sample(f.plant, f.ref.state, 2000, 0.1, 43);
    CHECK(sample.samples == 2000);
    CHECK(sample.max_inner <= 1e-9);
}

TEST_CASE("convergence monitor needs a sustained small rate", "[analysis]") {
    ConvergenceMonitor monitor(1e-6, 0.5);
    CHECK_FALSE(monitor.observe(0.0, 1e-7));
    CHECK_FALSE(monitor.observe(0.4, 1e-7));
    CHECK_FALSE(monitor.observe(0.45, 1e-3));
    CHECK_FALSE(monitor.observe(0.5, 1e-7));
    CHECK(monitor.observe(1.0, 1e-7));
    monitor.reset();
    CHECK_FALSE(monitor.converged(1.0));
}
