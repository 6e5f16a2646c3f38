#include "freqmarket/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace freqmarket {

void EventSchedule::add(double time, ParameterChange change) {
    if (!std::isfinite(time) || time < 0.0) {
        throw std::invalid_argument("event time must be finite and nonnegative");
    }
    auto it = std::lower_bound(events_.begin(), events_.end(), time,
                               [](const Event& e, double t) { return e.time < t; });
    if (it != events_.end() && it->time == time) {
        it->changes.push_back(std::move(change));
    } else {
        events_.insert(it, Event{time, {std::move(change)}});
    }
}

std::vector<double> EventSchedule::boundaries(double t_end) const {
    std::vector<double> out{0.0};
    for (const auto& e : events_) {
        if (e.time > 0.0) out.push_back(e.time);
    }
    out.push_back(t_end);
    return out;
}

void apply(const Event& event, ClosedLoop& plant) {
    for (const auto& change : event.changes) {
        std::visit(
            [&](const auto& c) {
                using T = std::decay_t<decltype(c)>;
                if constexpr (std::is_same_v<T, LoadChange>) {
                    plant.set_load(c.bus, c.mw / kPerUnitBaseMW);
                } else {
                    plant.set_cost(c.bus, c.cost);
                }
            },
            change);
    }
}

Trajectory simulate(SimulationSetup setup, const SimulationHooks& hooks) {
    if (!(setup.dt > 0.0) || !std::isfinite(setup.dt)) {
        throw std::invalid_argument("simulate: dt must be positive");
    }
    if (!(setup.t_end > 0.0) || !std::isfinite(setup.t_end)) {
        throw std::invalid_argument("simulate: t_end must be positive");
    }
    if (setup.stride == 0) throw std::invalid_argument("simulate: stride must be at least 1");
    for (const auto& e : setup.events.events()) {
        if (e.time >= setup.t_end) {
            throw std::invalid_argument("simulate: event at t=" + std::to_string(e.time) +
                                        " is not before t_end");
        }
    }
    ClosedLoop& plant = setup.plant;
    plant.require_shape(setup.initial);
    if (setup.initial.bid.minCoeff() < 0.0 || setup.initial.p_gen.minCoeff() < 0.0) {
        throw std::invalid_argument("simulate: initial bids and setpoints must be nonnegative");
    }

    Trajectory traj;
    SystemState x = std::move(setup.initial);
    double t = 0.0;
    const auto record = [&](bool boundary) {
        traj.samples.push_back({t, x});
        if (hooks.on_sample) hooks.on_sample(traj.samples.back(), plant, boundary);
    };
    const auto& events = setup.events.events();
    std::size_t next_event = 0;
    if (!events.empty() && events.front().time == 0.0) {
        apply(events.front(), plant);
        if (hooks.on_event) hooks.on_event(0.0, plant, x);
        next_event = 1;
    }
    record(false);
    if (hooks.on_step && hooks.on_step(t, x, plant)) {
        traj.stopped_early = true;
        return traj;
    }

    const std::vector<double> bounds = setup.events.boundaries(setup.t_end);
    for (std::size_t s = 0; s + 1 < bounds.size(); ++s) {
        const double a = bounds[s];
        const double b = bounds[s + 1];
        const auto n_steps =
            static_cast<std::size_t>(std::max(1.0, std::ceil((b - a) / setup.dt - 1e-9)));
        for (std::size_t k = 1; k <= n_steps; ++k) {
            const double t_next = k == n_steps ? b : a + static_cast<double>(k) * setup.dt;
            x = plant.step(x, t_next - t, t);
            t = t_next;
            ++traj.steps;
            const bool stop = hooks.on_step && hooks.on_step(t, x, plant);
            if (stop) {
                record(false);
                traj.final_time = t;
                traj.stopped_early = true;
                return traj;
            }
            if (k < n_steps && traj.steps % setup.stride == 0) record(false);
        }
        record(false);
        if (next_event < events.size() && events[next_event].time == b) {
            apply(events[next_event], plant);
            if (hooks.on_event) hooks.on_event(t, plant, x);
            ++next_event;
            record(true);
        }
    }
    traj.final_time = t;
    return traj;
}

namespace {

template <typename Field>
SwingTrajectory rk4(Vector angle, Vector omega, double dt, double t_end,
                    Field field) {
    if (!(dt > 0.0) || !(t_end > 0.0)) throw std::invalid_argument("RK4: dt and t_end must be positive");
    SwingTrajectory out;
    out.times.push_back(0.0);
    out.omega.push_back(omega);
    const auto n_steps = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
    for (std::size_t k = 1; k <= n_steps; ++k) {
        const double h = std::min(dt, t_end - out.times.back());
        const SwingRate k1 = field(angle, omega);
        const SwingRate k2 = field(angle + 0.5 * h * k1.angle, omega + 0.5 * h * k1.omega);
        const SwingRate k3 = field(angle + 0.5 * h * k2.angle, omega + 0.5 * h * k2.omega);
        const SwingRate k4 = field(angle + h * k3.angle, omega + h * k3.omega);
        angle += h / 6.0 * (k1.angle + 2.0 * k2.angle + 2.0 * k3.angle + k4.angle);
        omega += h / 6.0 * (k1.omega + 2.0 * k2.omega + 2.0 * k3.omega + k4.omega);
        out.times.push_back(k == n_steps ? t_end : static_cast<double>(k) * dt);
        out.omega.push_back(omega);
    }
    return out;
}

}  // namespace

SwingTrajectory integrate_swing_delta(const Network& net, const Vector& delta0,
                                      const Vector& omega0, const Vector& p_gen,
                                      const Vector& p_load, double dt, double t_end) {
    return rk4(delta0, omega0, dt, t_end, [&](const Vector& d, const Vector& w) {
        return swing_field_delta(net, d, w, p_gen, p_load);
    });
}

SwingTrajectory integrate_swing_phi(const Network& net, const Vector& phi0, const Vector& omega0,
                                    const Vector& p_gen, const Vector& p_load, double dt,
                                    double t_end) {
    return rk4(phi0, omega0, dt, t_end, [&](const Vector& p, const Vector& w) {
        return swing_field_phi(net, p, w, p_gen, p_load);
    });
}

}  // namespace freqmarket
