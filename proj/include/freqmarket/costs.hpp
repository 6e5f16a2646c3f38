#pragma once

#include "freqmarket/network.hpp"

#include <concepts>
#include <stdexcept>
#include <vector>

namespace freqmarket {

/// Any strongly convex generation cost usable by the market and the bidding
/// dynamics. The conjugate gradient must return argmax_{P>=0} { b P - C(P) }.
template <typename C>
concept GenerationCost = requires(const C& cost, double x) {
    { cost.value(x) } -> std::convertible_to<double>;
    { cost.gradient(x) } -> std::convertible_to<double>;
    { cost.conjugate_value(x) } -> std::convertible_to<double>;
    { cost.conjugate_gradient(x) } -> std::convertible_to<double>;
};

/// C(P) = q P^2 / 2 + c P with q > 0, c >= 0. Power in per-unit, money in $/h.
class QuadraticCost {
public:
    QuadraticCost(double q, double c);

    double q() const noexcept { return q_; }
    double c() const noexcept { return c_; }

    double value(double power) const;
    double gradient(double power) const;
    /// C*(b) = max_{P>=0} { b P - C(P) } = max(0, b - c)^2 / (2 q).
    double conjugate_value(double bid) const;
    /// Profit-maximizing production at price b: max(0, (b - c) / q).
    double conjugate_gradient(double bid) const;

    friend bool operator==(const QuadraticCost&, const QuadraticCost&) = default;

private:
    double q_;
    double c_;
};

static_assert(GenerationCost<QuadraticCost>);

/// One generator cost per bus.
class CostProfile {
public:
    CostProfile() = default;
    explicit CostProfile(std::vector<QuadraticCost> costs);

    std::size_t size() const noexcept { return costs_.size(); }
    const QuadraticCost& operator[](std::size_t i) const { return costs_.at(i); }
    const std::vector<QuadraticCost>& costs() const noexcept { return costs_; }

    void set(std::size_t bus, QuadraticCost cost) { costs_.at(bus) = cost; }

    /// Sum_i C_i(P_i).
    double total(const Vector& power) const;
    Vector gradient(const Vector& power) const;
    Vector conjugate_gradient(const Vector& bids) const;
    /// Curvatures q_i, linear coefficients c_i.
    Vector curvatures() const;
    Vector linear_coefficients() const;

private:
    void require_size(const Vector& v) const;

    std::vector<QuadraticCost> costs_;
};

}  // namespace freqmarket
