#include <catch_amalgamated.hpp>

#include "freqmarket/runner.hpp"

#include <filesystem>
#include <fstream>

using namespace freqmarket;
using Catch::Approx;
using Catch::Matchers::ContainsSubstring;

namespace {

std::filesystem::path scratch(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("freqmarket_" + name);
    std::filesystem::remove_all(dir);
    return dir;
}

}  // namespace

TEST_CASE("convergence assessment against the optimum", "[runner]") {
    DispatchSolution opt{Vector(3), 40.0, Vector::Zero(3)};
    opt.power << 1.0, 0.5, 0.0;
    SystemState x;
    x.omega = Vector::Constant(3, 1e-4);
    x.bid = Vector(3);
    x.bid << 40.1, 39.95, 100.0;
    x.p_gen = Vector(3);
    x.p_gen << 1.005, 0.497, 0.002;
    auto c = assess_convergence(x, opt);
    CHECK(c.converged);
    CHECK(c.dispatch == Approx(0.006));
    CHECK(c.bids == Approx(0.1 / 40.0));

    x.bid[0] = 40.3;
    CHECK_FALSE(assess_convergence(x, opt).converged);
    x.bid[0] = 40.0;
    x.omega[2] = 2e-3;
    CHECK_FALSE(assess_convergence(x, opt).converged);
}

TEST_CASE("hourly cost uses the MVA base", "[runner]") {
    const CostProfile costs({QuadraticCost(26, 7.5), QuadraticCost(70, 30)});
    Vector p(2);
    p << 2.0, 0.0;
    CHECK(hourly_cost(costs, p) == Approx(100.0 * (52.0 + 15.0)));
}

TEST_CASE("dispatch stages of the IEEE 14-bus scenario", "[runner]") {
    const auto stages = dispatch_stages(builtin_scenario("ieee14-sigma300"));
    REQUIRE(stages.size() == 3);
    CHECK(stages[1].t_start == 1.0);
    CHECK(stages[1].load.sum() * 100 == Approx(260.4));
    CHECK(hourly_cost(stages[0].costs, stages[0].solution.power) == Approx(8828.85).epsilon(1e-5));
    CHECK(hourly_cost(stages[1].costs, stages[1].solution.power) == Approx(9703.79).epsilon(1e-5));
    CHECK(stages[2].solution.lambda == Approx(50.20466).epsilon(1e-6));
    CHECK(stages[2].solution.active_count() == 5);
    CHECK(hourly_cost(stages[2].costs, stages[2].solution.power) == Approx(8588.24).epsilon(1e-5));
    CHECK_THAT(format_dispatch(stages), ContainsSubstring("active 1 2 3 6 8"));
}

TEST_CASE("three-bus run converges after its load step", "[runner]") {
    const auto dir = scratch("runner");
    RunOptions options;
    options.out_dir = dir;
    const RunSummary summary = run(builtin_scenario("three-bus"), options);
    REQUIRE(summary.segments.size() == 2);
    CHECK(summary.all_converged());
    CHECK(summary.min_bid >= 0.0);
    CHECK(summary.min_p_gen >= 0.0);
    for (const auto& seg : summary.segments) {
        CHECK(seg.efficiency.pass);
        CHECK(seg.lyapunov_descent);
        CHECK(seg.lyapunov_halved());
        CHECK(seg.cost == Approx(seg.optimum_cost).epsilon(1e-3));
    }
    CHECK(summary.segments[1].t_start == 5.0);
    CHECK(summary.segments[1].max_abs_omega > 1e-3);
    CHECK(summary.segments[1].restoration_time > 0.0);
    CHECK(std::filesystem::exists(dir / "summary.txt"));
    CHECK_THAT(format_summary(summary), ContainsSubstring("segments 2"));

    const TrajectoryTable table = read_trajectory(dir / "trajectory.csv");
    CHECK(table.buses == 3);
    const Scenario scenario = builtin_scenario("three-bus");
    const TrajectoryCheck check = check_trajectory(table, &scenario);
    CHECK(check.segments == 2);
    CHECK(check.nonnegative);
    CHECK(check.descent);
    REQUIRE(check.final_efficiency);
    CHECK(check.pass());
    std::filesystem::remove_all(dir);
}

TEST_CASE("trajectory files round-trip and reject malformed rows", "[runner]") {
    const auto dir = scratch("io");
    std::filesystem::create_directories(dir);
    SystemState x{Vector::Zero(1), Vector::Constant(2, 1e-3), Vector::Constant(2, 40.0),
                  Vector::Constant(2, 0.75), 40.0};
    {
        TrajectoryWriter writer(dir / "t.csv", 2);
        writer.write(0.0, x, 0.5);
        writer.write(0.1, x, 0.25);
    }
    const auto table = read_trajectory(dir / "t.csv");
    REQUIRE(table.rows() == 2);
    CHECK(table.p_gen_mw[1][0] == Approx(75.0));
    CHECK(table.lyapunov[1] == 0.25);
    CHECK(trajectory_header(2).size() == 9);

    std::ofstream(dir / "bad.csv") << "t,omega_1\n0,1,2\n";
    CHECK_THROWS(read_trajectory(dir / "bad.csv"));

    const auto falling = check_trajectory(table, nullptr);
    CHECK(falling.descent);
    std::ofstream(dir / "up.csv") << "t,omega_1,omega_2,b_1,b_2,pg_mw_1,pg_mw_2,lambda,V\n"
                                  << "0,0,0,1,1,1,-1,1,0.1\n0.1,0,0,1,1,1,1,1,0.2\n";
    const auto bad = check_trajectory(read_trajectory(dir / "up.csv"), nullptr);
    CHECK_FALSE(bad.descent);
    CHECK_FALSE(bad.nonnegative);
    CHECK_FALSE(bad.pass());
    std::filesystem::remove_all(dir);
}
