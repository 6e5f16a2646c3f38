#pragma once

#include "freqmarket/dynamics.hpp"

#include <functional>
#include <variant>
#include <vector>

namespace freqmarket {

/// New load at one bus, in MW.
struct LoadChange {
    std::size_t bus;
    double mw;

    friend bool operator==(const LoadChange&, const LoadChange&) = default;
};

/// New cost coefficients at one bus.
struct CostChange {
    std::size_t bus;
    QuadraticCost cost;

    friend bool operator==(const CostChange&, const CostChange&) = default;
};

using ParameterChange = std::variant<LoadChange, CostChange>;

struct Event {
    double time;
    std::vector<ParameterChange> changes;
};

/// Time-ordered parameter changes. Changes added at the same instant form one
/// event, so event times are strictly increasing.
class EventSchedule {
public:
    void add(double time, ParameterChange change);

    const std::vector<Event>& events() const noexcept { return events_; }
    bool empty() const noexcept { return events_.empty(); }
    std::size_t size() const noexcept { return events_.size(); }

    /// Segment boundaries [0, t_1, ..., t_k, t_end].
    std::vector<double> boundaries(double t_end) const;

private:
    std::vector<Event> events_;
};

constexpr double kPerUnitBaseMW = 100.0;

void apply(const Event& event, ClosedLoop& plant);

struct Sample {
    double time;
    SystemState state;
};

struct SimulationHooks {
    /// Called after an event has been applied, before the step leaving it.
    std::function<void(double time, const ClosedLoop& plant, const SystemState& x)> on_event;
    /// Called for the initial state and after every accepted step. Returning
    /// true stops the run.
    std::function<bool(double time, const SystemState& x, const ClosedLoop& plant)> on_step;
    /// Called whenever a sample is recorded.
    std::function<void(const Sample& sample, const ClosedLoop& plant, bool event_boundary)> on_sample;
};

struct SimulationSetup {
    ClosedLoop plant;
    SystemState initial;
    EventSchedule events;
    double t_end = 0.0;
    double dt = 5e-4;
    std::size_t stride = 1;  ///< record every stride-th step
};

struct Trajectory {
    std::vector<Sample> samples;
    double final_time = 0.0;
    std::size_t steps = 0;
    bool stopped_early = false;
};

/// Integrates the closed loop with projected forward Euler. Steps are aligned
/// to event times; the new parameters apply to the step starting at the event.
/// Samples are taken every `stride` steps, at every event time and at the end.
Trajectory simulate(SimulationSetup setup, const SimulationHooks& hooks = {});

/// Swing-only trajectory with fixed injections, for coordinate comparisons.
struct SwingTrajectory {
    std::vector<double> times;
    std::vector<Vector> omega;
};

/// Classical RK4 on the bus-angle form.
SwingTrajectory integrate_swing_delta(const Network& net, const Vector& delta0,
                                      const Vector& omega0, const Vector& p_gen,
                                      const Vector& p_load, double dt, double t_end);

/// Classical RK4 on the tree-angle form.
SwingTrajectory integrate_swing_phi(const Network& net, const Vector& phi0, const Vector& omega0,
                                    const Vector& p_gen, const Vector& p_load, double dt,
                                    double t_end);

}  // namespace freqmarket
