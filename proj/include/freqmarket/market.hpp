#pragma once

#include "freqmarket/costs.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace freqmarket {

class MarketError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Primal-dual optimizer of the economic dispatch problem
///   min C(P)  s.t.  1^T P = 1^T P_d,  P >= 0.
struct DispatchSolution {
    Vector power;   ///< P*, per unit
    double lambda;  ///< price of the balance constraint
    Vector mu;      ///< multipliers of P >= 0

    std::size_t active_count() const;
};

struct DispatchOptions {
    double balance_tolerance = 1e-10;  ///< on |1^T P(lambda) - 1^T P_d|, pu
    int max_iterations = 200;
};

/// Bisection on lambda with P_i(lambda) = max(0, (lambda - c_i)/q_i), then a
/// closed-form refinement of lambda on the identified active set.
DispatchSolution solve_economic_dispatch(const CostProfile& costs, const Vector& p_load,
                                         const DispatchOptions& options = {});

/// Largest violation of stationarity, balance, sign and complementarity.
double kkt_residual(const DispatchSolution& solution, const CostProfile& costs,
                    double total_load);

/// Nonnegative per-bus bids.
class BidProfile {
public:
    explicit BidProfile(Vector bids);

    std::size_t size() const noexcept { return static_cast<std::size_t>(bids_.size()); }
    double operator[](std::size_t i) const { return bids_[static_cast<Eigen::Index>(i)]; }
    const Vector& values() const noexcept { return bids_; }

    /// Copy with bus i's bid replaced.
    BidProfile with(std::size_t i, double bid) const;

private:
    Vector bids_;
};

/// One optimizer of the ISO problem  min b^T P  s.t.  1^T P = 1^T P_d, P >= 0.
struct IsoAllocation {
    Vector power;  ///< load split equally across the minimum-bid set
    bool unique;   ///< false when the minimum bid is shared by several buses
    double value;  ///< optimal payment b^T P = min(b) 1^T P_d
    std::vector<std::size_t> argmin;
};

IsoAllocation solve_iso_lp(const BidProfile& bids, const Vector& p_load);

/// Pi_i = P_i b_i - C_i(P_i).
double payoff(std::size_t bus, const BidProfile& bids, const Vector& allocation,
              const CostProfile& costs);

struct BidInterval {
    double lower;
    double upper;

    bool contains(double bid, double tolerance = 0.0) const {
        return bid >= lower - tolerance && bid <= upper + tolerance;
    }
};

/// Every bid with lambda* <= b_i <= grad C_i(P*_i) is an efficient Nash
/// equilibrium. Requires at least two buses with P*_i > 0.
std::vector<BidInterval> efficient_nash_interval(const DispatchSolution& solution,
                                                 const CostProfile& costs);

struct EfficientBidCheck {
    bool efficient = false;
    std::vector<std::size_t> failing_buses;
    std::string diagnostics;
};

/// True iff P* solves the ISO problem at these bids and every P*_i is the
/// profit-maximizing production grad C_i*(b_i).
EfficientBidCheck verify_efficient_bid(const BidProfile& bids, const DispatchSolution& solution,
                                       const CostProfile& costs, double tolerance = 1e-6);

/// Range of payoffs generator `bus` can receive after unilaterally moving its
/// bid, over every ISO optimizer for the deviated profile.
struct DeviationPayoff {
    double worst;
    double best;
};

DeviationPayoff deviation_payoff(std::size_t bus, double deviated_bid, const BidProfile& bids,
                                 double total_load, const CostProfile& costs);

struct NashDeviationReport {
    /// Largest payoff gain found per bus (worst-case optimizer rule); <= 0 means
    /// no sampled deviation was profitable.
    Vector max_gain;
    std::size_t samples_per_bus = 0;

    bool holds(double tolerance) const { return max_gain.maxCoeff() <= tolerance; }
};

/// Samples unilateral deviations for every generator. Baseline payoff uses the
/// given allocation; a deviation is profitable only if it pays more under every
/// ISO optimizer of the deviated profile.
NashDeviationReport sample_unilateral_deviations(const BidProfile& bids, const Vector& allocation,
                                                 double total_load, const CostProfile& costs,
                                                 std::size_t samples_per_bus, std::uint64_t seed);

}  // namespace freqmarket
