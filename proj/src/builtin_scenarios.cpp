#include "freqmarket/scenario.hpp"

namespace freqmarket {

namespace {

// Standard IEEE 14-bus branch reactances (pu); line susceptance is 1/x.
struct Branch {
    std::size_t from;
    std::size_t to;
    double x;
};

constexpr Branch kIeee14Branches[] = {
    {1, 2, 0.05917},  {1, 5, 0.22304},  {2, 3, 0.19797},  {2, 4, 0.17632},  {2, 5, 0.17388},
    {3, 4, 0.17103},  {4, 5, 0.04211},  {4, 7, 0.20912},  {4, 9, 0.55618},  {5, 6, 0.25202},
    {6, 11, 0.19890}, {6, 12, 0.25581}, {6, 13, 0.13027}, {7, 8, 0.17615},  {7, 9, 0.11001},
    {9, 10, 0.08450}, {9, 14, 0.27038}, {10, 11, 0.19207}, {12, 13, 0.19988}, {13, 14, 0.34802},
};

Scenario ieee14(double sigma) {
    constexpr std::size_t n = 14;
    Scenario s;
    s.name = sigma > 0.0 ? "ieee14-sigma300" : "ieee14-sigma0";
    s.network.buses = n;
    s.network.susceptance = Vector(static_cast<Eigen::Index>(std::size(kIeee14Branches)));
    for (std::size_t k = 0; k < std::size(kIeee14Branches); ++k) {
        const auto& br = kIeee14Branches[k];
        s.network.edges.push_back({br.from - 1, br.to - 1});
        s.network.susceptance[static_cast<Eigen::Index>(k)] = 1.0 / br.x;
    }
    s.network.voltage = Vector(n);
    s.network.voltage << 1.06, 1.045, 1.01, 1.019, 1.02, 1.06, 1.06, 1.06, 1.056, 1.051, 1.057,
        1.055, 1.05, 1.036;

    const std::size_t generators[] = {0, 1, 2, 5, 7};
    const double inertia[] = {4.4, 4.3, 4.2, 4.1, 4.0};
    const double q[] = {26, 70, 150, 150, 300};
    const double c[] = {7.5, 30, 90, 82.5, 75};
    s.network.inertia = Vector::Constant(n, 0.1);
    s.network.damping = Vector::Constant(n, 2.5);
    std::vector<QuadraticCost> costs(n, QuadraticCost(1e4, 1e4));
    for (std::size_t g = 0; g < std::size(generators); ++g) {
        const auto i = static_cast<Eigen::Index>(generators[g]);
        s.network.inertia[i] = inertia[g];
        s.network.damping[i] = 3.0;
        costs[generators[g]] = QuadraticCost(q[g], c[g]);
    }
    s.costs = CostProfile(std::move(costs));

    s.load_mw = Vector(n);
    s.load_mw << 0, 22, 80, 48, 7.6, 11, 0, 0, 30, 9.0, 3.5, 6.1, 14, 15;

    s.gains = Gains::defaults(n);
    s.gains.tau_b.setConstant(5e-3);
    s.gains.tau_g.setConstant(50.0);
    s.gains.tau_lambda = 3e-3;
    s.gains.rho = 300.0;
    s.gains.sigma = sigma;

    s.events.add(1.0, LoadChange{2, 94.2});
    s.events.add(15.0, CostChange{2, QuadraticCost(60, 38)});
    s.events.add(15.0, CostChange{5, QuadraticCost(75, 45)});
    s.events.add(15.0, CostChange{7, QuadraticCost(68, 23)});

    s.t_end = sigma > 0.0 ? 5000.0 : 60.0;
    s.dt = 5e-4;
    s.stride = 200;
    return s;
}

Scenario three_bus() {
    Scenario s;
    s.name = "three-bus";
    s.network.buses = 3;
    s.network.edges = {{0, 1}, {1, 2}, {0, 2}};
    s.network.susceptance = Vector(3);
    s.network.susceptance << 10.0, 8.0, 5.0;
    s.network.voltage = Vector::Ones(3);
    s.network.inertia = Vector(3);
    s.network.inertia << 2.0, 1.5, 0.1;
    s.network.damping = Vector(3);
    s.network.damping << 1.5, 1.2, 1.0;
    s.costs = CostProfile({QuadraticCost(20, 10), QuadraticCost(40, 15), QuadraticCost(1e4, 1e4)});
    s.load_mw = Vector(3);
    s.load_mw << 0, 0, 150;
    s.gains = Gains::defaults(3);
    s.gains.tau_b.setConstant(0.02);
    s.gains.tau_g.setConstant(0.5);
    s.gains.tau_lambda = 0.02;
    s.gains.rho = 10.0;
    s.gains.sigma = 3.0;
    s.events.add(5.0, LoadChange{2, 180});
    s.t_end = 30.0;
    s.dt = 1e-3;
    s.stride = 50;
    return s;
}

}  // namespace

std::vector<std::string> builtin_scenario_names() {
    return {"ieee14-sigma300", "ieee14-sigma0", "three-bus"};
}

Scenario builtin_scenario(const std::string& name) {
    Scenario s;
    if (name == "ieee14-sigma300") {
        s = ieee14(300.0);
    } else if (name == "ieee14-sigma0") {
        s = ieee14(0.0);
    } else if (name == "three-bus") {
        s = three_bus();
    } else {
        throw ScenarioError("unknown built-in scenario '" + name + "'");
    }
    s.validate();
    return s;
}

}  // namespace freqmarket
