#pragma once

#include "freqmarket/dynamics.hpp"
#include "freqmarket/market.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace freqmarket {

/// Efficient equilibrium built from the dispatch optimum: omega = 0,
/// lambda = lambda*, P_g = P*, b = grad C(P*), phi from the synchronous solve.
struct ReferenceEquilibrium {
    SystemState state;
    DispatchSolution dispatch;
};

ReferenceEquilibrium reference_equilibrium(const Network& net, const CostProfile& costs,
                                           const Vector& p_load);

/// V(x) = U(phi) - (phi - phi_ref)^T grad U(phi_ref) - U(phi_ref) + 1/2 |omega|_M^2
///        + 1/(2 sigma^2) (|b - b_ref|_tau_b^2 + |P_g - P_ref|_tau_g^2 + tau_lambda (lambda - lambda_ref)^2)
/// for sigma > 0. For sigma = 0 only the market block, with unit scaling, is kept.
class LyapunovFunction {
public:
    LyapunovFunction(const Network& net, const Gains& gains, SystemState reference);

    double value(const SystemState& x) const;
    StateRate gradient(const SystemState& x) const;
    const SystemState& reference() const noexcept { return ref_; }

private:
    const Network* net_;
    Gains gains_;
    SystemState ref_;
    double ref_potential_;
    Vector ref_gradient_;
    double market_weight_;
    bool physical_;
};

/// Tracks per-step increments of V within one segment.
class LyapunovMonitor {
public:
    explicit LyapunovMonitor(double slack = 1e-6) : slack_(slack) {}

    void reset();
    void observe(double value);

    bool descent() const noexcept { return max_increment_ <= slack_; }
    double max_increment() const noexcept { return max_increment_; }
    double initial() const noexcept { return initial_; }
    double last() const noexcept { return last_; }
    std::size_t count() const noexcept { return count_; }

private:
    double slack_;
    double max_increment_ = 0.0;
    double initial_ = 0.0;
    double last_ = 0.0;
    std::size_t count_ = 0;
};

struct EfficiencyReport {
    double frequency = 0.0;        ///< |omega|_inf
    double balance = 0.0;          ///< |1^T (P_d - P_g)|
    double sign = 0.0;             ///< max(0, -mu)
    double complementarity = 0.0;  ///< max |P_i mu_i|
    double conjugate = 0.0;        ///< max |P_i - grad C_i*(b_i)|
    double interval = 0.0;         ///< distance of b_i to [lambda, grad C_i(P_i)]
    Vector mu;                     ///< grad C(P_g) - 1 lambda
    std::vector<bool> in_interval;
    double tolerance = 0.0;
    double frequency_tolerance = 0.0;
    bool pass = false;

    double kkt_residual() const;
    std::string describe() const;
};

/// All residuals are compared against `tolerance`, except |omega|_inf which
/// uses `frequency_tolerance` when given.
EfficiencyReport check_equilibrium_efficiency(const CostProfile& costs, const SystemState& x,
                                              const Vector& p_load, double tolerance,
                                              std::optional<double> frequency_tolerance = {});

struct DescentSample {
    double max_inner = 0.0;  ///< max <grad V(x), projected field(x)>
    double radius = 0.0;     ///< angle radius finally used
    std::size_t shrinks = 0;
    std::size_t samples = 0;
};

/// Samples states in a box around the reference, clipped to the nonnegative
/// orthant. The angle radius is halved whenever a draw leaves the security
/// region.
DescentSample descent_condition_sample(const ClosedLoop& plant, const SystemState& reference,
                                       std::size_t samples, double radius, std::uint64_t seed);

/// Declares convergence once |rate|_inf stays below a threshold for a hold time.
class ConvergenceMonitor {
public:
    explicit ConvergenceMonitor(double threshold = 1e-6, double hold = 0.5)
        : threshold_(threshold), hold_(hold) {}

    void reset() { since_ = -1.0; }
    /// Returns true once converged.
    bool observe(double time, double rate_norm);
    bool converged(double time) const { return since_ >= 0.0 && time - since_ >= hold_; }

private:
    double threshold_;
    double hold_;
    double since_ = -1.0;
};

}  // namespace freqmarket
