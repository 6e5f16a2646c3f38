#include "freqmarket/network.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <numeric>
#include <string>

namespace freqmarket {

namespace {

class DisjointSets {
public:
    explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    bool unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        parent_[b] = a;
        return true;
    }

private:
    std::vector<std::size_t> parent_;
};

void require_positive(const Vector& v, std::size_t expected, const char* what) {
    if (static_cast<std::size_t>(v.size()) != expected) {
        throw NetworkError(std::string(what) + ": expected " + std::to_string(expected) +
                           " entries, got " + std::to_string(v.size()));
    }
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i]) || v[i] <= 0.0) {
            throw NetworkError(std::string(what) + "[" + std::to_string(i + 1) +
                               "] must be positive and finite");
        }
    }
}

}  // namespace

Vector line_weights(const std::vector<Edge>& edges, const Vector& susceptance,
                    const Vector& voltage) {
    if (static_cast<std::size_t>(susceptance.size()) != edges.size()) {
        throw NetworkError("susceptance: one value per edge required");
    }
    Vector gamma(static_cast<Eigen::Index>(edges.size()));
    for (std::size_t k = 0; k < edges.size(); ++k) {
        const auto [i, j] = edges[k];
        if (i >= static_cast<std::size_t>(voltage.size()) ||
            j >= static_cast<std::size_t>(voltage.size())) {
            throw NetworkError("edge " + std::to_string(k + 1) + " references a missing bus voltage");
        }
        gamma[static_cast<Eigen::Index>(k)] =
            susceptance[static_cast<Eigen::Index>(k)] * voltage[static_cast<Eigen::Index>(i)] *
            voltage[static_cast<Eigen::Index>(j)];
    }
    return gamma;
}

std::vector<std::size_t> bfs_spanning_tree(std::size_t buses, const std::vector<Edge>& edges) {
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adjacent(buses);
    for (std::size_t k = 0; k < edges.size(); ++k) {
        adjacent[edges[k].from].emplace_back(edges[k].to, k);
        adjacent[edges[k].to].emplace_back(edges[k].from, k);
    }
    std::vector<bool> seen(buses, false);
    std::vector<std::size_t> tree;
    std::deque<std::size_t> queue{0};
    seen[0] = true;
    while (!queue.empty()) {
        const std::size_t u = queue.front();
        queue.pop_front();
        for (const auto& [v, k] : adjacent[u]) {
            if (seen[v]) continue;
            seen[v] = true;
            tree.push_back(k);
            queue.push_back(v);
        }
    }
    if (tree.size() + 1 != buses) throw NetworkError("network graph is not connected");
    std::sort(tree.begin(), tree.end());
    return tree;
}

Network::Network(NetworkSpec spec)
    : n_(spec.buses),
      edges_(std::move(spec.edges)),
      tree_(std::move(spec.tree_edges)),
      gamma_(std::move(spec.gamma)),
      inertia_(std::move(spec.inertia)),
      damping_(std::move(spec.damping)) {
    if (n_ < 2) throw NetworkError("a network needs at least two buses");
    if (edges_.empty()) throw NetworkError("a network needs at least one edge");
    for (std::size_t k = 0; k < edges_.size(); ++k) {
        const auto& e = edges_[k];
        if (e.from >= n_ || e.to >= n_) {
            throw NetworkError("edge " + std::to_string(k + 1) + " references bus outside 1.." +
                               std::to_string(n_));
        }
        if (e.from == e.to) throw NetworkError("edge " + std::to_string(k + 1) + " is a self-loop");
    }
    require_positive(gamma_, edges_.size(), "gamma");
    require_positive(inertia_, n_, "inertia");
    require_positive(damping_, n_, "damping");

    // Connectivity check doubles as the default tree.
    auto bfs_tree = bfs_spanning_tree(n_, edges_);
    if (tree_.empty()) tree_ = std::move(bfs_tree);

    if (tree_.size() != n_ - 1) {
        throw NetworkError("tree must contain exactly n-1 = " + std::to_string(n_ - 1) + " edges");
    }
    DisjointSets sets(n_);
    for (std::size_t k : tree_) {
        if (k >= edges_.size()) throw NetworkError("tree edge index out of range");
        if (!sets.unite(edges_[k].from, edges_[k].to)) {
            throw NetworkError("tree edges contain a cycle or a repeated edge");
        }
    }

    const auto n = static_cast<Eigen::Index>(n_);
    const auto m = static_cast<Eigen::Index>(edges_.size());
    incidence_ = Matrix::Zero(n, m);
    for (Eigen::Index k = 0; k < m; ++k) {
        const auto& e = edges_[static_cast<std::size_t>(k)];
        incidence_(static_cast<Eigen::Index>(e.from), k) = 1.0;
        incidence_(static_cast<Eigen::Index>(e.to), k) = -1.0;
    }
    tree_incidence_ = Matrix(n, n - 1);
    for (Eigen::Index j = 0; j < n - 1; ++j) {
        tree_incidence_.col(j) = incidence_.col(static_cast<Eigen::Index>(tree_[static_cast<std::size_t>(j)]));
    }
    const Matrix gram = tree_incidence_.transpose() * tree_incidence_;
    Eigen::LDLT<Matrix> ldlt(gram);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        ldlt.vectorD().minCoeff() <= 1e-12) {
        throw NetworkError("tree incidence matrix is rank deficient");
    }
    tree_pinv_ = ldlt.solve(tree_incidence_.transpose());
    angle_map_ = incidence_.transpose() * tree_pinv_.transpose();
    gradient_map_ = tree_pinv_ * incidence_;
}

Vector Network::edge_angles(const Vector& phi) const { return angle_map_ * phi; }

Vector Network::phi_from_delta(const Vector& delta) const {
    return tree_incidence_.transpose() * delta;
}

Vector Network::delta_from_phi(const Vector& phi) const { return tree_pinv_.transpose() * phi; }

double Network::potential(const Vector& phi) const {
    return -gamma_.dot(edge_angles(phi).array().cos().matrix());
}

Vector Network::potential_gradient(const Vector& phi) const {
    const Vector s = edge_angles(phi).array().sin();
    return gradient_map_ * gamma_.cwiseProduct(s);
}

Matrix Network::potential_hessian(const Vector& phi) const {
    const Vector w = gamma_.cwiseProduct(Vector(edge_angles(phi).array().cos()));
    return gradient_map_ * w.asDiagonal() * gradient_map_.transpose();
}

Vector Network::line_flow_injection(const Vector& delta) const {
    const Vector s = (incidence_.transpose() * delta).array().sin();
    return incidence_ * gamma_.cwiseProduct(s);
}

Matrix incidence_matrix(const Network& net) { return net.incidence(); }

Matrix tree_pseudo_inverse(const Network& net) { return net.tree_pseudo_inverse(); }

Vector potential_gradient(const Network& net, const Vector& phi) {
    return net.potential_gradient(phi);
}

namespace {

void require_bus_vectors(const Network& net, const Vector& omega, const Vector& p_gen,
                         const Vector& p_load) {
    const auto n = static_cast<Eigen::Index>(net.buses());
    if (omega.size() != n || p_gen.size() != n || p_load.size() != n) {
        throw std::invalid_argument("swing field: per-bus vectors must have length n");
    }
}

}  // namespace

SwingRate swing_field_delta(const Network& net, const Vector& delta, const Vector& omega,
                            const Vector& p_gen, const Vector& p_load) {
    require_bus_vectors(net, omega, p_gen, p_load);
    if (delta.size() != static_cast<Eigen::Index>(net.buses())) {
        throw std::invalid_argument("swing_field_delta: delta must have length n");
    }
    const Vector accel = -net.line_flow_injection(delta) - net.damping().cwiseProduct(omega) +
                         p_gen - p_load;
    return {omega, accel.cwiseQuotient(net.inertia())};
}

SwingRate swing_field_phi(const Network& net, const Vector& phi, const Vector& omega,
                          const Vector& p_gen, const Vector& p_load) {
    require_bus_vectors(net, omega, p_gen, p_load);
    if (phi.size() != static_cast<Eigen::Index>(net.tree_size())) {
        throw std::invalid_argument("swing_field_phi: phi must have length n-1");
    }
    const Vector accel = -net.tree_incidence() * net.potential_gradient(phi) -
                         net.damping().cwiseProduct(omega) + p_gen - p_load;
    return {net.tree_incidence().transpose() * omega, accel.cwiseQuotient(net.inertia())};
}

bool security_constraint_holds(const Network& net, const Vector& phi) {
    constexpr double half_pi = std::numbers::pi / 2.0;
    const Vector angles = net.edge_angles(phi);
    for (Eigen::Index k = 0; k < angles.size(); ++k) {
        if (!(std::abs(angles[k]) < half_pi)) return false;
    }
    return true;
}

}  // namespace freqmarket
