#pragma once

#include "freqmarket/costs.hpp"
#include "freqmarket/network.hpp"

#include <stdexcept>
#include <string>

namespace freqmarket {

/// Closed-loop state x = (phi, omega, b, P_g, lambda). Powers in per-unit.
struct SystemState {
    Vector phi;
    Vector omega;
    Vector bid;
    Vector p_gen;
    double lambda = 0.0;

    bool all_finite() const;
};

/// Rate of change of a SystemState, same layout.
struct StateRate {
    Vector phi;
    Vector omega;
    Vector bid;
    Vector p_gen;
    double lambda = 0.0;

    double max_abs() const;
    double dot(const StateRate& other) const;
};

struct Gains {
    Vector tau_b;
    Vector tau_g;
    double tau_lambda = 1.0;
    double rho = 300.0;
    double sigma = 300.0;

    /// tau = 1 everywhere, rho = sigma = 300.
    static Gains defaults(std::size_t buses);
    void validate(std::size_t buses) const;
};

class IntegrationError : public std::runtime_error {
public:
    IntegrationError(const std::string& what, double time, SystemState state);

    double time() const noexcept { return time_; }
    const SystemState& state() const noexcept { return state_; }

private:
    double time_;
    SystemState state_;
};

class InfeasibleInjection : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// [a]^+_b: a if b > 0, max(a, 0) if b = 0.
double project_rate(double a, double b);
Vector project_rate(const Vector& a, const Vector& b);

/// tau_b b' = [P_g - grad C*(b)]^+_b.
Vector bid_field(const CostProfile& costs, const Vector& bid, const Vector& p_gen,
                 const Vector& tau_b);

struct IsoRate {
    Vector p_gen;
    double lambda;
};

/// tau_g P_g' = [1 lambda - b + rho 1 1^T (P_d - P_g) - sigma^2 omega]^+_{P_g},
/// tau_lambda lambda' = 1^T (P_d - P_g).
IsoRate iso_field(const Vector& bid, const Vector& p_gen, double lambda, const Vector& omega,
                  const Vector& p_load, const Gains& gains);

/// Network, market data and gains of one closed-loop configuration. The load
/// and costs change at scenario events; the network does not.
class ClosedLoop {
public:
    ClosedLoop(Network network, CostProfile costs, Vector p_load, Gains gains);

    const Network& network() const noexcept { return net_; }
    const CostProfile& costs() const noexcept { return costs_; }
    const Vector& load() const noexcept { return load_; }
    const Gains& gains() const noexcept { return gains_; }

    void set_load(std::size_t bus, double per_unit);
    void set_cost(std::size_t bus, QuadraticCost cost);

    /// Projected closed-loop vector field.
    StateRate field(const SystemState& x) const;
    /// Unprojected drift F(x).
    StateRate drift(const SystemState& x) const;

    /// Projected forward Euler. phi, omega, lambda advance by dt * rate; b and
    /// P_g become max(0, value + dt * unprojected rate).
    SystemState step(const SystemState& x, double dt, double time = 0.0) const;

    void require_shape(const SystemState& x) const;

private:
    Network net_;
    CostProfile costs_;
    Vector load_;
    Gains gains_;
};

/// Solves D_t grad U(phi) = P_g - P_d by damped Newton from phi = 0.
/// Throws InfeasibleInjection on imbalance, divergence or a security violation.
Vector find_synchronous_equilibrium(const Network& net, const Vector& p_gen, const Vector& p_load);

}  // namespace freqmarket
