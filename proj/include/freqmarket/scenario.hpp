#pragma once

#include "freqmarket/simulation.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace freqmarket {

class ScenarioError : public std::runtime_error {
public:
    ScenarioError(const std::string& source, std::size_t line, const std::string& message);
    explicit ScenarioError(const std::string& message) : std::runtime_error(message) {}
};

struct NetworkDescription {
    std::size_t buses = 0;
    std::vector<Edge> edges;
    Vector susceptance;  ///< per edge, pu
    Vector voltage;      ///< per bus, pu
    Vector inertia;
    Vector damping;
    std::vector<std::size_t> tree;  ///< edge indices; empty selects the default tree

    Network build() const;
};

enum class InitialMode { SteadyState, Explicit };

/// Explicit initial condition; powers in MW.
struct InitialCondition {
    Vector phi;
    Vector omega;
    Vector bid;
    Vector p_gen_mw;
    double lambda = 0.0;
};

/// One reproducible experiment: plant, market data, gains, events and run
/// settings. Loads are kept in MW.
struct Scenario {
    std::string name;
    NetworkDescription network;
    CostProfile costs;
    Vector load_mw;
    Gains gains;
    InitialMode initial_mode = InitialMode::SteadyState;
    std::optional<InitialCondition> initial;
    EventSchedule events;
    double t_end = 0.0;
    double dt = 5e-4;
    std::size_t stride = 100;

    Vector load_pu() const { return load_mw / kPerUnitBaseMW; }
    void validate() const;
};

Scenario parse_scenario(const std::string& text, const std::string& source = "<string>");
Scenario load_scenario(const std::string& path);
std::string dump_scenario(const Scenario& scenario);

std::vector<std::string> builtin_scenario_names();
/// Throws ScenarioError for an unknown name.
Scenario builtin_scenario(const std::string& name);
/// A built-in name, or else a path to a scenario file.
Scenario resolve_scenario(const std::string& name_or_path);

}  // namespace freqmarket
