#include "freqmarket/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace freqmarket {

ReferenceEquilibrium reference_equilibrium(const Network& net, const CostProfile& costs,
                                           const Vector& p_load) {
    ReferenceEquilibrium ref;
    ref.dispatch = solve_economic_dispatch(costs, p_load);
    ref.state.phi = find_synchronous_equilibrium(net, ref.dispatch.power, p_load);
    ref.state.omega = Vector::Zero(p_load.size());
    ref.state.bid = costs.gradient(ref.dispatch.power);
    for (Eigen::Index i = 0; i < p_load.size(); ++i) {
        if (ref.dispatch.power[i] > 0.0) ref.state.bid[i] = ref.dispatch.lambda;
    }
    ref.state.p_gen = ref.dispatch.power;
    ref.state.lambda = ref.dispatch.lambda;
    return ref;
}

LyapunovFunction::LyapunovFunction(const Network& net, const Gains& gains, SystemState reference)
    : net_(&net),
      gains_(gains),
      ref_(std::move(reference)),
      ref_potential_(net.potential(ref_.phi)),
      ref_gradient_(net.potential_gradient(ref_.phi)),
      market_weight_(gains.sigma > 0.0 ? 1.0 / (gains.sigma * gains.sigma) : 1.0),
      physical_(gains.sigma > 0.0) {}

double LyapunovFunction::value(const SystemState& x) const {
    const Vector db = x.bid - ref_.bid;
    const Vector dp = x.p_gen - ref_.p_gen;
    const double dl = x.lambda - ref_.lambda;
    const double market = db.dot(gains_.tau_b.cwiseProduct(db)) +
                          dp.dot(gains_.tau_g.cwiseProduct(dp)) + gains_.tau_lambda * dl * dl;
    double v = 0.5 * market_weight_ * market;
    if (physical_) {
        v += net_->potential(x.phi) - (x.phi - ref_.phi).dot(ref_gradient_) - ref_potential_ +
             0.5 * x.omega.dot(net_->inertia().cwiseProduct(x.omega));
    }
    return v;
}

StateRate LyapunovFunction::gradient(const SystemState& x) const {
    StateRate g;
    if (physical_) {
        g.phi = net_->potential_gradient(x.phi) - ref_gradient_;
        g.omega = net_->inertia().cwiseProduct(x.omega);
    } else {
        g.phi = Vector::Zero(x.phi.size());
        g.omega = Vector::Zero(x.omega.size());
    }
    g.bid = market_weight_ * gains_.tau_b.cwiseProduct(x.bid - ref_.bid);
    g.p_gen = market_weight_ * gains_.tau_g.cwiseProduct(x.p_gen - ref_.p_gen);
    g.lambda = market_weight_ * gains_.tau_lambda * (x.lambda - ref_.lambda);
    return g;
}

void LyapunovMonitor::reset() {
    max_increment_ = 0.0;
    initial_ = 0.0;
    last_ = 0.0;
    count_ = 0;
}

void LyapunovMonitor::observe(double value) {
    if (count_ == 0) {
        initial_ = value;
    } else {
        max_increment_ = std::max(max_increment_, value - last_);
    }
    last_ = value;
    ++count_;
}

double EfficiencyReport::kkt_residual() const {
    return std::max({balance, sign, complementarity});
}

std::string EfficiencyReport::describe() const {
    std::ostringstream out;
    out.precision(3);
    out << std::scientific << "frequency=" << frequency << " balance=" << balance
        << " sign=" << sign << " complementarity=" << complementarity
        << " conjugate=" << conjugate << " interval=" << interval << " -> "
        << (pass ? "pass" : "FAIL");
    return out.str();
}

EfficiencyReport check_equilibrium_efficiency(const CostProfile& costs, const SystemState& x,
                                              const Vector& p_load, double tolerance,
                                              std::optional<double> frequency_tolerance) {
    EfficiencyReport r;
    r.tolerance = tolerance;
    r.frequency_tolerance = frequency_tolerance.value_or(tolerance);
    r.frequency = x.omega.cwiseAbs().maxCoeff();
    r.balance = std::abs(p_load.sum() - x.p_gen.sum());
    const Vector p = x.p_gen.cwiseMax(0.0);
    r.mu = costs.gradient(p) - Vector::Constant(p.size(), x.lambda);
    r.in_interval.resize(static_cast<std::size_t>(p.size()));
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        const auto& cost = costs[static_cast<std::size_t>(i)];
        r.sign = std::max(r.sign, std::max(0.0, -r.mu[i]));
        r.complementarity = std::max(r.complementarity, std::abs(p[i] * r.mu[i]));
        const double b = std::max(0.0, x.bid[i]);
        r.conjugate = std::max(r.conjugate, std::abs(p[i] - cost.conjugate_gradient(b)));
        const double upper = std::max(x.lambda, cost.gradient(p[i]));
        const double gap = std::max({0.0, x.lambda - b, b - upper});
        r.interval = std::max(r.interval, gap);
        r.in_interval[static_cast<std::size_t>(i)] = gap <= tolerance;
    }
    r.pass = r.frequency <= r.frequency_tolerance && r.balance <= tolerance && r.sign <= tolerance &&
             r.complementarity <= tolerance && r.conjugate <= tolerance &&
             r.interval <= tolerance;
    return r;
}

DescentSample descent_condition_sample(const ClosedLoop& plant, const SystemState& reference,
                                       std::size_t samples, double radius, std::uint64_t seed) {
    const Network& net = plant.network();
    if (!security_constraint_holds(net, reference.phi)) {
        throw std::invalid_argument("descent sampling: reference violates the security constraint");
    }
    const LyapunovFunction lyapunov(net, plant.gains(), reference);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const auto jitter = [&](const Vector& centre, double r) {
        Vector v(centre.size());
        for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = centre[i] + r * unit(rng);
        return v;
    };

    DescentSample out;
    out.radius = radius;
    out.max_inner = -std::numeric_limits<double>::infinity();
    while (out.samples < samples) {
        SystemState x;
        x.phi = jitter(reference.phi, out.radius);
        if (!security_constraint_holds(net, x.phi)) {
            out.radius *= 0.5;
            ++out.shrinks;
            continue;
        }
        x.omega = jitter(reference.omega, radius);
        x.bid = jitter(reference.bid, radius).cwiseMax(0.0);
        x.p_gen = jitter(reference.p_gen, radius).cwiseMax(0.0);
        x.lambda = reference.lambda + radius * unit(rng);
        out.max_inner = std::max(out.max_inner, lyapunov.gradient(x).dot(plant.field(x)));
        ++out.samples;
    }
    return out;
}

bool ConvergenceMonitor::observe(double time, double rate_norm) {
    if (rate_norm < threshold_) {
        if (since_ < 0.0) since_ = time;
    } else {
        since_ = -1.0;
    }
    return converged(time);
}

}  // namespace freqmarket
