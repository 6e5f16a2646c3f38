#include "freqmarket/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace freqmarket {

namespace {

Eigen::Index bus_count(std::size_t n) { return static_cast<Eigen::Index>(n); }

void require_length(const Vector& v, std::size_t n, const char* what) {
    if (static_cast<std::size_t>(v.size()) != n) {
        throw std::invalid_argument(std::string(what) + ": expected " + std::to_string(n) +
                                    " entries, got " + std::to_string(v.size()));
    }
}

std::string describe(const SystemState& x) {
    std::ostringstream out;
    const Eigen::IOFormat row(Eigen::StreamPrecision, Eigen::DontAlignCols, " ", " ", "", "", "[",
                              "]");
    out << "phi=" << x.phi.transpose().format(row) << " omega=" << x.omega.transpose().format(row)
        << " b=" << x.bid.transpose().format(row) << " P_g=" << x.p_gen.transpose().format(row)
        << " lambda=" << x.lambda;
    return out.str();
}

}  // namespace

bool SystemState::all_finite() const {
    return phi.allFinite() && omega.allFinite() && bid.allFinite() && p_gen.allFinite() &&
           std::isfinite(lambda);
}

double StateRate::max_abs() const {
    double m = std::abs(lambda);
    for (const Vector* v : {&phi, &omega, &bid, &p_gen}) {
        if (v->size() > 0) m = std::max(m, v->cwiseAbs().maxCoeff());
    }
    return m;
}

double StateRate::dot(const StateRate& other) const {
    return phi.dot(other.phi) + omega.dot(other.omega) + bid.dot(other.bid) +
           p_gen.dot(other.p_gen) + lambda * other.lambda;
}

Gains Gains::defaults(std::size_t buses) {
    Gains g;
    g.tau_b = Vector::Ones(bus_count(buses));
    g.tau_g = Vector::Ones(bus_count(buses));
    return g;
}

void Gains::validate(std::size_t buses) const {
    require_length(tau_b, buses, "tau_b");
    require_length(tau_g, buses, "tau_g");
    const auto positive = [](double x) { return std::isfinite(x) && x > 0.0; };
    for (Eigen::Index i = 0; i < tau_b.size(); ++i) {
        if (!positive(tau_b[i]) || !positive(tau_g[i])) {
            throw std::invalid_argument("gains: tau_b and tau_g must be positive");
        }
    }
    if (!positive(tau_lambda)) throw std::invalid_argument("gains: tau_lambda must be positive");
    if (!positive(rho)) throw std::invalid_argument("gains: rho must be positive");
    if (!std::isfinite(sigma) || sigma < 0.0) {
        throw std::invalid_argument("gains: sigma must be nonnegative");
    }
}

IntegrationError::IntegrationError(const std::string& what, double time, SystemState state)
    : std::runtime_error(what + " at t=" + std::to_string(time) + ": " + describe(state)),
      time_(time),
      state_(std::move(state)) {}

double project_rate(double a, double b) {
    if (b < 0.0) throw std::domain_error("project_rate: state component is negative");
    return b > 0.0 ? a : std::max(a, 0.0);
}

Vector project_rate(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw std::invalid_argument("project_rate: size mismatch");
    Vector out(a.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) out[i] = project_rate(a[i], b[i]);
    return out;
}

namespace {

Vector bid_drift(const CostProfile& costs, const Vector& bid, const Vector& p_gen,
                 const Vector& tau_b) {
    return (p_gen - costs.conjugate_gradient(bid)).cwiseQuotient(tau_b);
}

IsoRate iso_drift(const Vector& bid, const Vector& p_gen, double lambda, const Vector& omega,
                  const Vector& p_load, const Gains& gains) {
    const double imbalance = p_load.sum() - p_gen.sum();
    const double s2 = gains.sigma * gains.sigma;
    Vector rate = (Vector::Constant(bid.size(), lambda + gains.rho * imbalance) - bid - s2 * omega)
                      .cwiseQuotient(gains.tau_g);
    return {std::move(rate), imbalance / gains.tau_lambda};
}

}  // namespace

Vector bid_field(const CostProfile& costs, const Vector& bid, const Vector& p_gen,
                 const Vector& tau_b) {
    return project_rate(bid_drift(costs, bid, p_gen, tau_b), bid);
}

IsoRate iso_field(const Vector& bid, const Vector& p_gen, double lambda, const Vector& omega,
                  const Vector& p_load, const Gains& gains) {
    if (bid.size() != p_gen.size() || omega.size() != p_gen.size() ||
        p_load.size() != p_gen.size() || gains.tau_g.size() != p_gen.size()) {
        throw std::invalid_argument("iso_field: per-bus vectors must share one length");
    }
    IsoRate r = iso_drift(bid, p_gen, lambda, omega, p_load, gains);
    r.p_gen = project_rate(r.p_gen, p_gen);
    return r;
}

ClosedLoop::ClosedLoop(Network network, CostProfile costs, Vector p_load, Gains gains)
    : net_(std::move(network)),
      costs_(std::move(costs)),
      load_(std::move(p_load)),
      gains_(std::move(gains)) {
    require_length(load_, net_.buses(), "load");
    if (costs_.size() != net_.buses()) throw std::invalid_argument("costs: one cost per bus required");
    gains_.validate(net_.buses());
}

void ClosedLoop::set_load(std::size_t bus, double per_unit) {
    if (bus >= net_.buses()) throw std::out_of_range("set_load: bus out of range");
    load_[static_cast<Eigen::Index>(bus)] = per_unit;
}

void ClosedLoop::set_cost(std::size_t bus, QuadraticCost cost) { costs_.set(bus, cost); }

void ClosedLoop::require_shape(const SystemState& x) const {
    require_length(x.phi, net_.tree_size(), "state phi");
    require_length(x.omega, net_.buses(), "state omega");
    require_length(x.bid, net_.buses(), "state bid");
    require_length(x.p_gen, net_.buses(), "state p_gen");
}

StateRate ClosedLoop::drift(const SystemState& x) const {
    require_shape(x);
    SwingRate swing = swing_field_phi(net_, x.phi, x.omega, x.p_gen, load_);
    IsoRate iso = iso_drift(x.bid, x.p_gen, x.lambda, x.omega, load_, gains_);
    return {std::move(swing.angle), std::move(swing.omega),
            bid_drift(costs_, x.bid, x.p_gen, gains_.tau_b), std::move(iso.p_gen), iso.lambda};
}

StateRate ClosedLoop::field(const SystemState& x) const {
    StateRate r = drift(x);
    r.bid = project_rate(r.bid, x.bid);
    r.p_gen = project_rate(r.p_gen, x.p_gen);
    return r;
}

SystemState ClosedLoop::step(const SystemState& x, double dt, double time) const {
    if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
    const StateRate r = drift(x);
    if (!(r.phi.allFinite() && r.omega.allFinite() && r.bid.allFinite() && r.p_gen.allFinite() &&
          std::isfinite(r.lambda))) {
        throw IntegrationError("non-finite rate", time, x);
    }
    SystemState next;
    next.phi = x.phi + dt * r.phi;
    next.omega = x.omega + dt * r.omega;
    next.lambda = x.lambda + dt * r.lambda;
    next.bid = (x.bid + dt * r.bid).cwiseMax(0.0);
    next.p_gen = (x.p_gen + dt * r.p_gen).cwiseMax(0.0);
    if (!next.all_finite()) throw IntegrationError("non-finite state", time + dt, next);
    return next;
}

Vector find_synchronous_equilibrium(const Network& net, const Vector& p_gen,
                                    const Vector& p_load) {
    require_length(p_gen, net.buses(), "p_gen");
    require_length(p_load, net.buses(), "p_load");
    const Vector injection = p_gen - p_load;
    const double scale = std::max(1.0, injection.cwiseAbs().maxCoeff());
    if (std::abs(injection.sum()) > 1e-9 * scale) {
        throw InfeasibleInjection("synchronous equilibrium: generation and load are not balanced");
    }
    const Vector target = net.tree_pseudo_inverse() * injection;
    const auto residual = [&](const Vector& phi) {
        return (net.tree_incidence() * net.potential_gradient(phi) - injection).cwiseAbs().maxCoeff();
    };

    Vector phi = Vector::Zero(bus_count(net.tree_size()));
    double r = residual(phi);
    for (int it = 0; it < 100 && r >= 1e-13; ++it) {
        const Vector g = net.potential_gradient(phi) - target;
        Eigen::LDLT<Matrix> solver(net.potential_hessian(phi));
        if (solver.info() != Eigen::Success || !solver.isPositive()) break;
        const Vector dir = solver.solve(g);
        if (!dir.allFinite()) break;
        double t = 1.0;
        Vector trial = phi - dir;
        double rt = residual(trial);
        while (rt >= r && t > 1e-6) {
            t *= 0.5;
            trial = phi - t * dir;
            rt = residual(trial);
        }
        if (rt >= r) break;
        phi = std::move(trial);
        r = rt;
    }
    if (!(r < 1e-10)) {
        throw InfeasibleInjection("synchronous equilibrium: Newton iteration did not converge "
                                  "(residual " + std::to_string(r) + ")");
    }
    if (!security_constraint_holds(net, phi)) {
        throw InfeasibleInjection("synchronous equilibrium violates the security constraint");
    }
    return phi;
}

}  // namespace freqmarket
