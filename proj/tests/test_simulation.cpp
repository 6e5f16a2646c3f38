#include <catch_amalgamated.hpp>

#include "freqmarket/analysis.hpp"
#include "freqmarket/scenario.hpp"
#include "freqmarket/simulation.hpp"

#include <cmath>

using namespace freqmarket;
using Catch::Approx;

namespace {

ClosedLoop three_bus_plant() {
    const Scenario s = builtin_scenario("three-bus");
    return ClosedLoop(s.network.build(), s.costs, s.load_pu(), s.gains);
}

}  // namespace

TEST_CASE("changes at one instant form a single event", "[simulation]") {
    EventSchedule events;
    events.add(15.0, CostChange{2, QuadraticCost(60, 38)});
    events.add(1.0, LoadChange{2, 94.2});
    events.add(15.0, CostChange{5, QuadraticCost(75, 45)});
    REQUIRE(events.size() == 2);
    CHECK(events.events()[0].time == 1.0);
    CHECK(events.events()[1].changes.size() == 2);
    CHECK(events.boundaries(20.0) == std::vector<double>{0.0, 1.0, 15.0, 20.0});
    CHECK_THROWS_AS(events.add(-1.0, LoadChange{0, 1}), std::invalid_argument);
    CHECK_THROWS_AS(events.add(NAN, LoadChange{0, 1}), std::invalid_argument);
}

TEST_CASE("applying an event converts MW to per unit", "[simulation]") {
    ClosedLoop plant = three_bus_plant();
    EventSchedule events;
    events.add(2.0, LoadChange{2, 180});
    events.add(2.0, CostChange{0, QuadraticCost(25, 12)});
    apply(events.events().front(), plant);
    CHECK(plant.load()[2] == Approx(1.8));
    CHECK(plant.costs()[0] == QuadraticCost(25, 12));
}

TEST_CASE("steps are aligned to event times", "[simulation]") {
    ClosedLoop plant = three_bus_plant();
    const SystemState x0 = reference_equilibrium(plant.network(), plant.costs(), plant.load()).state;
    SimulationSetup setup{plant, x0, {}, 1.0, 0.1, 2};
    setup.events.add(0.35, LoadChange{2, 160});
    std::vector<double> event_times;
    SimulationHooks hooks;
    hooks.on_event = [&](double t, const ClosedLoop& p, const SystemState&) {
        event_times.push_back(t);
        CHECK(p.load()[2] == Approx(1.6));
    };
    const Trajectory traj = simulate(setup, hooks);
    CHECK(traj.steps == 11);
    CHECK(traj.final_time == 1.0);
    CHECK_FALSE(traj.stopped_early);
    REQUIRE(event_times.size() == 1);
    CHECK(event_times[0] == 0.35);
    std::vector<double> times;
    for (const auto& s : traj.samples) times.push_back(s.time);
    const std::vector<double> expected{0.0, 0.2, 0.35, 0.35, 0.55, 0.75, 0.95, 1.0};
    REQUIRE(times.size() == expected.size());
    for (std::size_t k = 0; k < times.size(); ++k) CHECK(times[k] == Approx(expected[k]));
    // The pre-event and post-event samples share one state.
    CHECK(traj.samples[2].state.omega == traj.samples[3].state.omega);
}

TEST_CASE("an equilibrium stays put", "[simulation]") {
    ClosedLoop plant = three_bus_plant();
    const SystemState x0 = reference_equilibrium(plant.network(), plant.costs(), plant.load()).state;
    const Trajectory traj = simulate({plant, x0, {}, 2.0, 1e-3, 100});
    const SystemState& x = traj.samples.back().state;
    CHECK((x.p_gen - x0.p_gen).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((x.bid - x0.bid).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(x.omega.cwiseAbs().maxCoeff() < 1e-10);
    CHECK(x.lambda == Approx(x0.lambda).margin(1e-8));
}

TEST_CASE("a step hook can stop the run", "[simulation]") {
    ClosedLoop plant = three_bus_plant();
    const SystemState x0 = reference_equilibrium(plant.network(), plant.costs(), plant.load()).state;
    SimulationHooks hooks;
    hooks.on_step = [](double t, const SystemState&, const ClosedLoop&) { return t >= 0.5 - 1e-12; };
    const Trajectory traj = simulate({plant, x0, {}, 2.0, 0.01, 1000}, hooks);
    CHECK(traj.stopped_early);
    CHECK(traj.final_time == Approx(0.5));
    CHECK(traj.samples.back().time == Approx(0.5));
}

TEST_CASE("invalid simulation setups are rejected", "[simulation][errors]") {
    ClosedLoop plant = three_bus_plant();
    const SystemState x0 = reference_equilibrium(plant.network(), plant.costs(), plant.load()).state;
    SimulationSetup late{plant, x0, {}, 1.0, 0.01, 1};
    late.events.add(1.0, LoadChange{2, 160});
    CHECK_THROWS_AS(simulate(late), std::invalid_argument);
    CHECK_THROWS_AS(simulate({plant, x0, {}, 1.0, 0.0, 1}), std::invalid_argument);
    CHECK_THROWS_AS(simulate({plant, x0, {}, 1.0, 0.01, 0}), std::invalid_argument);
    SystemState negative = x0;
    negative.p_gen[0] = -0.1;
    CHECK_THROWS_AS(simulate({plant, negative, {}, 1.0, 0.01, 1}), std::invalid_argument);
}

TEST_CASE("swing trajectories agree in both angle coordinates", "[simulation]") {
    const Scenario s = builtin_scenario("three-bus");
    const Network net = s.network.build();
    Vector delta0(3);
    delta0 << 0.1, 0.0, -0.15;
    Vector omega0(3);
    omega0 << 0.05, -0.02, 0.0;
    Vector pg(3);
    pg << 0.9, 0.6, 0.0;
    const Vector pd = s.load_pu();
    const auto a = integrate_swing_delta(net, delta0, omega0, pg, pd, 1e-3, 2.0);
    const auto b = integrate_swing_phi(net, net.phi_from_delta(delta0), omega0, pg, pd, 1e-3, 2.0);
    REQUIRE(a.times.size() == b.times.size());
    double worst = 0.0;
    for (std::size_t k = 0; k < a.omega.size(); ++k) {
        worst = std::max(worst, (a.omega[k] - b.omega[k]).cwiseAbs().maxCoeff());
    }
    CHECK(worst < 1e-10);
    CHECK(a.times.back() == 2.0);
}

TEST_CASE("RK4 swing integration is fourth order", "[simulation]") {
    const Scenario s = builtin_scenario("three-bus");
    const Network net = s.network.build();
    Vector delta0(3);
    delta0 << 0.2, 0.0, -0.2;
    const Vector omega0 = Vector::Zero(3);
    Vector pg(3);
    pg << 0.9, 0.6, 0.0;
    const Vector pd = s.load_pu();
    const auto run = [&](double dt) { return integrate_swing_delta(net, delta0, omega0, pg, pd, dt, 1.0).omega.back(); };
    const Vector a = run(0.02);
    const Vector b = run(0.01);
    const Vector c = run(0.005);
    const double ratio = (a - b).cwiseAbs().maxCoeff() / (b - c).cwiseAbs().maxCoeff();
    CHECK(ratio == Approx(16.0).margin(3.0));
}
