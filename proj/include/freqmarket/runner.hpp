#pragma once

#include "freqmarket/analysis.hpp"
#include "freqmarket/scenario.hpp"
#include "freqmarket/trajectory_io.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace freqmarket {

/// Segment-end convergence to the dispatch optimum: |omega|_inf < 1e-3,
/// setpoints within 1% of P* (inactive buses within 1% of max P*), producing
/// generators' bids within 0.5% of lambda*.
struct SegmentConvergence {
    double omega = 0.0;
    double dispatch = 0.0;  ///< worst relative setpoint error
    double bids = 0.0;      ///< worst relative bid error on producing buses
    bool converged = false;
};

SegmentConvergence assess_convergence(const SystemState& x, const DispatchSolution& optimum);

struct SegmentSummary {
    double t_start = 0.0;
    double t_end = 0.0;
    DispatchSolution optimum;
    double optimum_cost = 0.0;  ///< $/h
    SystemState final_state;
    Vector load;                ///< pu, during the segment
    CostProfile costs;          ///< during the segment
    double cost = 0.0;          ///< $/h at the final setpoints
    double max_abs_omega = 0.0;
    double restoration_time = 0.0;  ///< from t_start until |omega|_inf stays below 1e-3
    EfficiencyReport efficiency;
    bool lyapunov_descent = true;
    double lyapunov_max_increment = 0.0;
    double lyapunov_initial = 0.0;
    double lyapunov_final = 0.0;
    SegmentConvergence convergence;

    Vector p_gen_mw() const { return final_state.p_gen * kPerUnitBaseMW; }
    /// Final V at most half the initial one (or V stayed at zero).
    bool lyapunov_halved() const;
};

struct RunSummary {
    std::string scenario;
    std::vector<SegmentSummary> segments;
    double final_time = 0.0;
    std::size_t steps = 0;
    bool stopped_early = false;
    double min_bid = 0.0;
    double min_p_gen = 0.0;

    bool all_converged() const;
};

struct RunOptions {
    std::optional<std::filesystem::path> out_dir;
    /// Stop once, after the last event, the projected field has stayed below 1e-6
    /// for 0.5 s and the state passes the efficiency check.
    bool stop_on_convergence = true;
    double efficiency_tolerance = 1e-4;
    double frequency_tolerance = 1e-3;
};

/// $/h of per-unit setpoints.
double hourly_cost(const CostProfile& costs, const Vector& p_gen);

SystemState initial_state(const Scenario& scenario, const Network& net);

/// Simulates the scenario and analyses every segment. With an output
/// directory, writes trajectory.csv and summary.txt (also on failure).
RunSummary run(const Scenario& scenario, const RunOptions& options = {});

std::string format_summary(const RunSummary& summary);

/// Dispatch optimum of every segment of a scenario.
struct DispatchStage {
    double t_start;
    Vector load;
    CostProfile costs;
    DispatchSolution solution;
};

std::vector<DispatchStage> dispatch_stages(const Scenario& scenario);
std::string format_dispatch(const std::vector<DispatchStage>& stages);

/// Offline analysis of a saved trajectory.
struct TrajectoryCheck {
    std::size_t rows = 0;
    std::size_t segments = 0;
    double min_bid = 0.0;
    double min_p_gen = 0.0;
    double max_lyapunov_increment = 0.0;
    bool nonnegative = false;
    bool descent = false;
    std::optional<EfficiencyReport> final_efficiency;  ///< needs the scenario

    bool pass() const;
    std::string describe() const;
};

TrajectoryCheck check_trajectory(const TrajectoryTable& table, const Scenario* scenario,
                                 double slack = 1e-6);

}  // namespace freqmarket
