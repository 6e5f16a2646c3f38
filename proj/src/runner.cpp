#include "freqmarket/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>

namespace freqmarket {

namespace {

constexpr double kRestorationThreshold = 1e-3;

std::string mw_list(const Vector& pu) {
    std::string out;
    for (Eigen::Index i = 0; i < pu.size(); ++i) {
        if (i) out += ' ';
        out += format_number(pu[i] * kPerUnitBaseMW);
    }
    return out;
}

std::string fixed(double v, int digits = 2) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string sci(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

}  // namespace

SegmentConvergence assess_convergence(const SystemState& x, const DispatchSolution& optimum) {
    SegmentConvergence c;
    c.omega = x.omega.cwiseAbs().maxCoeff();
    const double scale = optimum.power.maxCoeff();
    for (Eigen::Index i = 0; i < x.p_gen.size(); ++i) {
        const double target = optimum.power[i];
        if (target > 0.0) {
            c.dispatch = std::max(c.dispatch, std::abs(x.p_gen[i] - target) / target);
            c.bids = std::max(c.bids, std::abs(x.bid[i] - optimum.lambda) / optimum.lambda);
        } else {
            c.dispatch = std::max(c.dispatch, std::abs(x.p_gen[i]) / scale);
        }
    }
    c.converged = c.omega < kRestorationThreshold && c.dispatch <= 0.01 && c.bids <= 0.005;
    return c;
}

bool SegmentSummary::lyapunov_halved() const {
    if (lyapunov_initial <= 1e-12) return lyapunov_final <= 1e-12;
    return lyapunov_final <= 0.5 * lyapunov_initial;
}

bool RunSummary::all_converged() const {
    return std::all_of(segments.begin(), segments.end(),
                       [](const SegmentSummary& s) { return s.convergence.converged; });
}

double hourly_cost(const CostProfile& costs, const Vector& p_gen) {
    return kPerUnitBaseMW * costs.total(p_gen.cwiseMax(0.0));
}

SystemState initial_state(const Scenario& scenario, const Network& net) {
    if (scenario.initial_mode == InitialMode::SteadyState) {
        return reference_equilibrium(net, scenario.costs, scenario.load_pu()).state;
    }
    const InitialCondition& ic = scenario.initial.value();
    return {ic.phi, ic.omega, ic.bid, ic.p_gen_mw / kPerUnitBaseMW, ic.lambda};
}

namespace {

/// Per-segment bookkeeping driven by the simulation hooks.
class SegmentTracker {
public:
    SegmentTracker(const RunOptions& options, RunSummary& summary)
        : options_(options), summary_(summary) {}

    void begin(double t, const ClosedLoop& plant) {
        current_ = SegmentSummary{};
        current_.t_start = t;
        current_.load = plant.load();
        current_.costs = plant.costs();
        const ReferenceEquilibrium ref =
            reference_equilibrium(plant.network(), plant.costs(), plant.load());
        current_.optimum = ref.dispatch;
        current_.optimum_cost = hourly_cost(plant.costs(), ref.dispatch.power);
        lyapunov_ = std::make_unique<LyapunovFunction>(plant.network(), plant.gains(), ref.state);
        monitor_.reset();
        last_excursion_ = -1.0;
        open_ = true;
    }

    void observe(double t, const SystemState& x) {
        const double v = lyapunov_->value(x);
        monitor_.observe(v);
        const double w = x.omega.cwiseAbs().maxCoeff();
        current_.max_abs_omega = std::max(current_.max_abs_omega, w);
        if (w >= kRestorationThreshold) last_excursion_ = t;
        summary_.min_bid = std::min(summary_.min_bid, x.bid.minCoeff());
        summary_.min_p_gen = std::min(summary_.min_p_gen, x.p_gen.minCoeff());
    }

    double value(const SystemState& x) const { return lyapunov_->value(x); }

    void close(double t, const SystemState& x) {
        if (!open_) return;
        current_.t_end = t;
        current_.final_state = x;
        current_.cost = hourly_cost(current_.costs, x.p_gen);
        current_.restoration_time = last_excursion_ < 0.0 ? 0.0 : last_excursion_ - current_.t_start;
        current_.efficiency = check_equilibrium_efficiency(current_.costs, x, current_.load,
                                                           options_.efficiency_tolerance,
                                                           options_.frequency_tolerance);
        current_.lyapunov_descent = monitor_.descent();
        current_.lyapunov_max_increment = monitor_.max_increment();
        current_.lyapunov_initial = monitor_.initial();
        current_.lyapunov_final = monitor_.last();
        current_.convergence = assess_convergence(x, current_.optimum);
        summary_.segments.push_back(std::move(current_));
        open_ = false;
    }

private:
    const RunOptions& options_;
    RunSummary& summary_;
    SegmentSummary current_;
    std::unique_ptr<LyapunovFunction> lyapunov_;
    LyapunovMonitor monitor_;
    double last_excursion_ = -1.0;
    bool open_ = false;
};

void write_summary(const std::filesystem::path& dir, const RunSummary& summary) {
    std::ofstream out(dir / "summary.txt");
    if (!out) throw std::runtime_error("cannot write summary in '" + dir.string() + "'");
    out << format_summary(summary);
}

}  // namespace

RunSummary run(const Scenario& scenario, const RunOptions& options) {
    scenario.validate();
    const Network net = scenario.network.build();
    RunSummary summary;
    summary.scenario = scenario.name;

    SimulationSetup setup{ClosedLoop(net, scenario.costs, scenario.load_pu(), scenario.gains),
                          initial_state(scenario, net),
                          scenario.events,
                          scenario.t_end,
                          scenario.dt,
                          scenario.stride};
    summary.min_bid = setup.initial.bid.minCoeff();
    summary.min_p_gen = setup.initial.p_gen.minCoeff();

    std::unique_ptr<TrajectoryWriter> writer;
    if (options.out_dir) {
        std::filesystem::create_directories(*options.out_dir);
        writer = std::make_unique<TrajectoryWriter>(*options.out_dir / "trajectory.csv", net.buses());
    }

    const double last_event =
        scenario.events.empty() ? 0.0 : scenario.events.events().back().time;
    SegmentTracker tracker(options, summary);
    ConvergenceMonitor convergence;
    bool started = false;
    SystemState last;

    SimulationHooks hooks;
    hooks.on_event = [&](double t, const ClosedLoop& plant, const SystemState& x) {
        tracker.close(t, x);
        tracker.begin(t, plant);
        tracker.observe(t, x);
        started = true;
        convergence.reset();
    };
    hooks.on_step = [&](double t, const SystemState& x, const ClosedLoop& plant) {
        if (!started) {
            tracker.begin(t, plant);
            started = true;
        }
        tracker.observe(t, x);
        last = x;
        if (!options.stop_on_convergence || t < last_event) return false;
        if (!convergence.observe(t, plant.field(x).max_abs())) return false;
        return check_equilibrium_efficiency(plant.costs(), x, plant.load(), options.efficiency_tolerance,
                                            options.frequency_tolerance)
            .pass;
    };
    hooks.on_sample = [&](const Sample& s, const ClosedLoop& plant, bool) {
        if (!started) {
            tracker.begin(s.time, plant);
            started = true;
        }
        if (writer) writer->write(s.time, s.state, tracker.value(s.state));
    };

    try {
        const Trajectory traj = simulate(std::move(setup), hooks);
        summary.final_time = traj.final_time;
        summary.steps = traj.steps;
        summary.stopped_early = traj.stopped_early;
        tracker.close(traj.final_time, traj.samples.back().state);
    } catch (const IntegrationError& e) {
        tracker.close(e.time(), last);
        if (writer) writer->flush();
        if (options.out_dir) write_summary(*options.out_dir, summary);
        throw;
    }
    if (options.out_dir) write_summary(*options.out_dir, summary);
    return summary;
}

std::string format_summary(const RunSummary& s) {
    std::ostringstream out;
    out << "scenario " << (s.scenario.empty() ? "(unnamed)" : s.scenario) << '\n'
        << "final_time " << format_number(s.final_time) << "  steps " << s.steps
        << "  stopped_on_convergence " << (s.stopped_early ? "yes" : "no") << '\n'
        << "min_bid " << format_number(s.min_bid) << "  min_p_gen " << format_number(s.min_p_gen)
        << '\n'
        << "segments " << s.segments.size() << "\n\n"
        << "segment  t_range           cost_$/h   ED_cost_$/h  lambda      max|omega|  "
           "restore_s  efficient  V_descent  converged\n";
    for (std::size_t k = 0; k < s.segments.size(); ++k) {
        const auto& seg = s.segments[k];
        char line[256];
        std::snprintf(line, sizeof line,
                      "%-8zu [%6.2f, %6.2f]  %-10s %-12s %-11s %-11s %-10s %-10s %-10s %s\n", k + 1,
                      seg.t_start, seg.t_end, fixed(seg.cost).c_str(),
                      fixed(seg.optimum_cost).c_str(), fixed(seg.final_state.lambda, 4).c_str(),
                      sci(seg.max_abs_omega).c_str(), fixed(seg.restoration_time, 3).c_str(),
                      seg.efficiency.pass ? "pass" : "FAIL", seg.lyapunov_descent ? "pass" : "FAIL",
                      seg.convergence.converged ? "yes" : "no");
        out << line;
    }
    for (std::size_t k = 0; k < s.segments.size(); ++k) {
        const auto& seg = s.segments[k];
        out << "\n[segment " << k + 1 << "]\n"
            << "p_gen_mw " << mw_list(seg.final_state.p_gen) << '\n'
            << "ed_p_mw " << mw_list(seg.optimum.power) << '\n'
            << "bid " << mw_list(seg.final_state.bid / kPerUnitBaseMW) << '\n'
            << "ed_lambda " << format_number(seg.optimum.lambda) << '\n'
            << "efficiency " << seg.efficiency.describe() << '\n'
            << "convergence omega=" << sci(seg.convergence.omega)
            << " dispatch_rel=" << sci(seg.convergence.dispatch)
            << " bid_rel=" << sci(seg.convergence.bids) << '\n'
            << "lyapunov initial=" << sci(seg.lyapunov_initial) << " final=" << sci(seg.lyapunov_final)
            << " max_increment=" << sci(seg.lyapunov_max_increment) << '\n';
    }
    return out.str();
}

std::vector<DispatchStage> dispatch_stages(const Scenario& scenario) {
    scenario.validate();
    ClosedLoop plant(scenario.network.build(), scenario.costs, scenario.load_pu(), scenario.gains);
    std::vector<DispatchStage> stages;
    const auto add = [&](double t) {
        stages.push_back({t, plant.load(), plant.costs(),
                          solve_economic_dispatch(plant.costs(), plant.load())});
    };
    std::size_t k = 0;
    const auto& events = scenario.events.events();
    if (!events.empty() && events.front().time == 0.0) apply(events[k++], plant);
    add(0.0);
    for (; k < events.size(); ++k) {
        apply(events[k], plant);
        add(events[k].time);
    }
    return stages;
}

std::string format_dispatch(const std::vector<DispatchStage>& stages) {
    std::ostringstream out;
    for (std::size_t k = 0; k < stages.size(); ++k) {
        const auto& st = stages[k];
        out << "[stage " << k + 1 << "] from t=" << format_number(st.t_start) << '\n'
            << "total_load_mw " << format_number(st.load.sum() * kPerUnitBaseMW) << '\n'
            << "lambda " << format_number(st.solution.lambda) << '\n'
            << "cost_per_hour " << fixed(hourly_cost(st.costs, st.solution.power)) << '\n'
            << "active";
        for (Eigen::Index i = 0; i < st.solution.power.size(); ++i) {
            if (st.solution.power[i] > 0.0) out << ' ' << i + 1;
        }
        out << "\np_mw " << mw_list(st.solution.power) << "\nmu";
        for (Eigen::Index i = 0; i < st.solution.mu.size(); ++i) {
            out << ' ' << format_number(st.solution.mu[i]);
        }
        out << "\n\n";
    }
    return out.str();
}

bool TrajectoryCheck::pass() const {
    return nonnegative && descent && (!final_efficiency || final_efficiency->pass);
}

std::string TrajectoryCheck::describe() const {
    std::ostringstream out;
    out << "rows " << rows << "  segments " << segments << '\n'
        << "nonnegativity " << (nonnegative ? "pass" : "FAIL") << " (min b "
        << format_number(min_bid) << ", min P_g " << format_number(min_p_gen) << " MW)\n"
        << "lyapunov_descent " << (descent ? "pass" : "FAIL") << " (max increment "
        << sci(max_lyapunov_increment) << ")\n";
    if (final_efficiency) {
        out << "final_efficiency " << final_efficiency->describe() << '\n';
    } else {
        out << "final_efficiency skipped (no scenario given)\n";
    }
    return out.str();
}

TrajectoryCheck check_trajectory(const TrajectoryTable& table, const Scenario* scenario,
                                 double slack) {
    if (table.rows() == 0) throw std::runtime_error("trajectory has no rows");
    TrajectoryCheck c;
    c.rows = table.rows();
    c.segments = 1;
    c.min_bid = std::numeric_limits<double>::infinity();
    c.min_p_gen = std::numeric_limits<double>::infinity();
    double excess = 0.0;
    for (std::size_t r = 0; r < table.rows(); ++r) {
        c.min_bid = std::min(c.min_bid, table.bid[r].minCoeff());
        c.min_p_gen = std::min(c.min_p_gen, table.p_gen_mw[r].minCoeff());
        if (r == 0) continue;
        if (table.time[r] == table.time[r - 1]) {
            ++c.segments;
            continue;
        }
        double allowance = slack;
        if (scenario) {
            allowance *= std::max(1.0, std::round((table.time[r] - table.time[r - 1]) / scenario->dt));
        }
        const double increment = table.lyapunov[r] - table.lyapunov[r - 1];
        c.max_lyapunov_increment = std::max(c.max_lyapunov_increment, increment);
        excess = std::max(excess, increment - allowance);
    }
    c.nonnegative = c.min_bid >= 0.0 && c.min_p_gen >= 0.0;
    c.descent = excess <= 0.0;
    if (scenario) {
        if (scenario->network.buses != table.buses) {
            throw std::runtime_error("trajectory has " + std::to_string(table.buses) +
                                     " buses, scenario has " +
                                     std::to_string(scenario->network.buses));
        }
        ClosedLoop plant(scenario->network.build(), scenario->costs, scenario->load_pu(),
                         scenario->gains);
        for (const auto& e : scenario->events.events()) {
            if (e.time <= table.time.back()) apply(e, plant);
        }
        const std::size_t r = table.rows() - 1;
        SystemState x;
        x.omega = table.omega[r];
        x.bid = table.bid[r];
        x.p_gen = table.p_gen_mw[r] / kPerUnitBaseMW;
        x.lambda = table.lambda[r];
        c.final_efficiency = check_equilibrium_efficiency(plant.costs(), x, plant.load(), 1e-4, 1e-3);
    }
    return c;
}

}  // namespace freqmarket
