#include "freqmarket/costs.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace freqmarket {

namespace {

void require_nonnegative(double x, const char* what) {
    if (!(x >= 0.0)) throw std::domain_error(std::string(what) + " must be nonnegative");
}

}  // namespace

QuadraticCost::QuadraticCost(double q, double c) : q_(q), c_(c) {
    if (!std::isfinite(q) || q <= 0.0) {
        throw std::invalid_argument("quadratic cost: curvature q must be positive");
    }
    if (!std::isfinite(c) || c < 0.0) {
        throw std::invalid_argument("quadratic cost: linear coefficient c must be nonnegative");
    }
}

double QuadraticCost::value(double power) const {
    require_nonnegative(power, "power");
    return 0.5 * q_ * power * power + c_ * power;
}

double QuadraticCost::gradient(double power) const {
    require_nonnegative(power, "power");
    return q_ * power + c_;
}

double QuadraticCost::conjugate_value(double bid) const {
    require_nonnegative(bid, "bid");
    const double excess = std::max(0.0, bid - c_);
    return excess * excess / (2.0 * q_);
}

double QuadraticCost::conjugate_gradient(double bid) const {
    require_nonnegative(bid, "bid");
    return std::max(0.0, (bid - c_) / q_);
}

CostProfile::CostProfile(std::vector<QuadraticCost> costs) : costs_(std::move(costs)) {}

void CostProfile::require_size(const Vector& v) const {
    if (static_cast<std::size_t>(v.size()) != costs_.size()) {
        throw std::invalid_argument("cost profile: vector length " + std::to_string(v.size()) +
                                    " does not match " + std::to_string(costs_.size()) + " buses");
    }
}

double CostProfile::total(const Vector& power) const {
    require_size(power);
    double sum = 0.0;
    for (std::size_t i = 0; i < costs_.size(); ++i) {
        sum += costs_[i].value(power[static_cast<Eigen::Index>(i)]);
    }
    return sum;
}

Vector CostProfile::gradient(const Vector& power) const {
    require_size(power);
    Vector g(power.size());
    for (std::size_t i = 0; i < costs_.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        g[k] = costs_[i].gradient(power[k]);
    }
    return g;
}

Vector CostProfile::conjugate_gradient(const Vector& bids) const {
    require_size(bids);
    Vector p(bids.size());
    for (std::size_t i = 0; i < costs_.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        p[k] = costs_[i].conjugate_gradient(bids[k]);
    }
    return p;
}

Vector CostProfile::curvatures() const {
    Vector q(static_cast<Eigen::Index>(costs_.size()));
    for (std::size_t i = 0; i < costs_.size(); ++i) q[static_cast<Eigen::Index>(i)] = costs_[i].q();
    return q;
}

Vector CostProfile::linear_coefficients() const {
    Vector c(static_cast<Eigen::Index>(costs_.size()));
    for (std::size_t i = 0; i < costs_.size(); ++i) c[static_cast<Eigen::Index>(i)] = costs_[i].c();
    return c;
}

}  // namespace freqmarket
