#include "freqmarket/market.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace freqmarket {

namespace {

double dispatched_total(const CostProfile& costs, double lambda) {
    double sum = 0.0;
    for (const auto& c : costs.costs()) sum += c.conjugate_gradient(lambda);
    return sum;
}

bool ties(double a, double b) {
    return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

std::size_t DispatchSolution::active_count() const {
    return static_cast<std::size_t>((power.array() > 0.0).count());
}

DispatchSolution solve_economic_dispatch(const CostProfile& costs, const Vector& p_load,
                                         const DispatchOptions& options) {
    if (static_cast<std::size_t>(p_load.size()) != costs.size()) {
        throw MarketError("economic dispatch: load vector does not match cost profile");
    }
    if (costs.size() == 0) throw MarketError("economic dispatch: empty cost profile");
    const double total = p_load.sum();
    if (!(total > 0.0)) throw MarketError("economic dispatch: total load must be positive");

    const Vector q = costs.curvatures();
    const Vector c = costs.linear_coefficients();
    double lo = 0.0;
    double hi = c.maxCoeff() + q.maxCoeff() * total;
    double lambda = 0.5 * (lo + hi);
    for (int it = 0; it < options.max_iterations; ++it) {
        lambda = 0.5 * (lo + hi);
        const double mismatch = dispatched_total(costs, lambda) - total;
        if (std::abs(mismatch) <= options.balance_tolerance) break;
        if (mismatch > 0.0) {
            hi = lambda;
        } else {
            lo = lambda;
        }
    }

    // Solve the balance equation exactly on the active set the bisection found.
    double inv_q = 0.0;
    double c_over_q = 0.0;
    for (Eigen::Index i = 0; i < q.size(); ++i) {
        if (c[i] < lambda) {
            inv_q += 1.0 / q[i];
            c_over_q += c[i] / q[i];
        }
    }
    if (inv_q > 0.0) {
        const double refined = (total + c_over_q) / inv_q;
        bool same_set = true;
        for (Eigen::Index i = 0; i < q.size(); ++i) {
            if ((c[i] < lambda) != (c[i] < refined)) same_set = false;
        }
        if (same_set) lambda = refined;
    }

    DispatchSolution sol;
    sol.lambda = lambda;
    sol.power = Vector(q.size());
    sol.mu = Vector(q.size());
    for (Eigen::Index i = 0; i < q.size(); ++i) {
        sol.power[i] = std::max(0.0, (lambda - c[i]) / q[i]);
        sol.mu[i] = sol.power[i] > 0.0 ? 0.0 : c[i] - lambda;
    }
    return sol;
}

double kkt_residual(const DispatchSolution& solution, const CostProfile& costs,
                    double total_load) {
    const Vector grad = costs.gradient(solution.power);
    double r = std::abs(solution.power.sum() - total_load);
    for (Eigen::Index i = 0; i < grad.size(); ++i) {
        r = std::max(r, std::abs(grad[i] - solution.lambda - solution.mu[i]));
        r = std::max(r, std::max(0.0, -solution.power[i]));
        r = std::max(r, std::max(0.0, -solution.mu[i]));
        r = std::max(r, std::abs(solution.power[i] * solution.mu[i]));
    }
    return r;
}

BidProfile::BidProfile(Vector bids) : bids_(std::move(bids)) {
    for (Eigen::Index i = 0; i < bids_.size(); ++i) {
        if (!std::isfinite(bids_[i]) || bids_[i] < 0.0) {
            throw MarketError("bid profile: bid " + std::to_string(i + 1) + " must be nonnegative");
        }
    }
}

BidProfile BidProfile::with(std::size_t i, double bid) const {
    Vector b = bids_;
    b[static_cast<Eigen::Index>(i)] = bid;
    return BidProfile(std::move(b));
}

IsoAllocation solve_iso_lp(const BidProfile& bids, const Vector& p_load) {
    if (static_cast<std::size_t>(p_load.size()) != bids.size() || bids.size() == 0) {
        throw MarketError("ISO problem: bids and load must have the same nonzero length");
    }
    const double total = p_load.sum();
    if (!(total > 0.0)) throw MarketError("ISO problem: total load must be positive");

    const double lowest = bids.values().minCoeff();
    IsoAllocation out;
    for (std::size_t i = 0; i < bids.size(); ++i) {
        if (ties(bids[i], lowest)) out.argmin.push_back(i);
    }
    out.power = Vector::Zero(p_load.size());
    const double share = total / static_cast<double>(out.argmin.size());
    for (std::size_t i : out.argmin) out.power[static_cast<Eigen::Index>(i)] = share;
    out.unique = out.argmin.size() == 1;
    out.value = lowest * total;
    return out;
}

double payoff(std::size_t bus, const BidProfile& bids, const Vector& allocation,
              const CostProfile& costs) {
    const double p = allocation[static_cast<Eigen::Index>(bus)];
    return p * bids[bus] - costs[bus].value(p);
}

std::vector<BidInterval> efficient_nash_interval(const DispatchSolution& solution,
                                                 const CostProfile& costs) {
    if (solution.active_count() < 2) {
        throw MarketError("efficient Nash characterization needs at least two producing generators");
    }
    std::vector<BidInterval> out;
    out.reserve(costs.size());
    for (std::size_t i = 0; i < costs.size(); ++i) {
        const double p = solution.power[static_cast<Eigen::Index>(i)];
        const double upper = p > 0.0 ? solution.lambda : costs[i].gradient(p);
        out.push_back({solution.lambda, upper});
    }
    return out;
}

EfficientBidCheck verify_efficient_bid(const BidProfile& bids, const DispatchSolution& solution,
                                       const CostProfile& costs, double tolerance) {
    EfficientBidCheck check;
    std::ostringstream why;
    const double lowest = bids.values().minCoeff();
    double highest_active = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < bids.size(); ++i) {
        if (solution.power[static_cast<Eigen::Index>(i)] > 0.0) {
            highest_active = std::max(highest_active, bids[i]);
        }
    }

    for (std::size_t i = 0; i < bids.size(); ++i) {
        const double p = solution.power[static_cast<Eigen::Index>(i)];
        bool failed = false;
        if (p > 0.0 && bids[i] > lowest + tolerance) {
            why << "bus " << i + 1 << ": producing but bid " << bids[i] << " exceeds minimum bid "
                << lowest << "; ";
            failed = true;
        }
        if (p == 0.0 && bids[i] < highest_active - tolerance) {
            why << "bus " << i + 1 << ": idle but bid " << bids[i]
                << " undercuts a producing generator; ";
            failed = true;
        }
        const double desired = costs[i].conjugate_gradient(bids[i]);
        if (std::abs(desired - p) > tolerance) {
            why << "bus " << i + 1 << ": desired production " << desired << " differs from " << p
                << "; ";
            failed = true;
        }
        if (failed) check.failing_buses.push_back(i);
    }
    check.efficient = check.failing_buses.empty();
    check.diagnostics = check.efficient ? "efficient" : why.str();
    return check;
}

DeviationPayoff deviation_payoff(std::size_t bus, double deviated_bid, const BidProfile& bids,
                                 double total_load, const CostProfile& costs) {
    double others = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < bids.size(); ++j) {
        if (j != bus) others = std::min(others, bids[j]);
    }
    const auto profit = [&](double p) { return p * deviated_bid - costs[bus].value(p); };
    if (ties(deviated_bid, others)) {
        // Any split of the load among the tied bidders is optimal.
        const double at_zero = profit(0.0);
        const double at_full = profit(total_load);
        const double interior = std::clamp(costs[bus].conjugate_gradient(deviated_bid), 0.0, total_load);
        return {std::min(at_zero, at_full), std::max({at_zero, at_full, profit(interior)})};
    }
    const double p = deviated_bid < others ? total_load : 0.0;
    return {profit(p), profit(p)};
}

NashDeviationReport sample_unilateral_deviations(const BidProfile& bids, const Vector& allocation,
                                                 double total_load, const CostProfile& costs,
                                                 std::size_t samples_per_bus, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    NashDeviationReport report;
    report.samples_per_bus = samples_per_bus;
    report.max_gain = Vector::Constant(static_cast<Eigen::Index>(bids.size()),
                                       -std::numeric_limits<double>::infinity());
    const double ceiling = 2.0 * bids.values().maxCoeff() + 1.0;
    for (std::size_t i = 0; i < bids.size(); ++i) {
        const double baseline = payoff(i, bids, allocation, costs);
        double others = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < bids.size(); ++j) {
            if (j != i) others = std::min(others, bids[j]);
        }
        std::uniform_real_distribution<double> wide(0.0, ceiling);
        std::uniform_real_distribution<double> near(-0.05, 0.05);
        for (std::size_t s = 0; s < samples_per_bus; ++s) {
            // Every fourth sample probes just around the competing minimum bid.
            double b = (s % 4 == 3) ? std::max(0.0, others * (1.0 + near(rng))) : wide(rng);
            if (b == bids[i]) b = std::nextafter(b, ceiling);
            const double gain = deviation_payoff(i, b, bids, total_load, costs).worst - baseline;
            auto& best = report.max_gain[static_cast<Eigen::Index>(i)];
            best = std::max(best, gain);
        }
    }
    return report;
}

}  // namespace freqmarket
