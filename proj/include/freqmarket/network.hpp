#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace freqmarket {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Thrown when a network description violates a structural invariant
/// (disconnected graph, non-tree edge subset, nonpositive weights...).
class NetworkError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Directed transmission line; `from` is the positive end. Buses are 0-based.
struct Edge {
    std::size_t from = 0;
    std::size_t to = 0;

    friend bool operator==(const Edge&, const Edge&) = default;
};

/// Raw description of a transmission network, before validation.
struct NetworkSpec {
    std::size_t buses = 0;
    std::vector<Edge> edges;
    Vector gamma;    ///< per-edge line weight B_ij V_i V_j (pu)
    Vector inertia;  ///< per-bus M_i
    Vector damping;  ///< per-bus A_i
    /// Indices into `edges` forming a spanning tree. Empty selects the
    /// breadth-first tree rooted at bus 0.
    std::vector<std::size_t> tree_edges;
};

/// gamma_k = B_k V_i V_j for every edge k = (i, j).
Vector line_weights(const std::vector<Edge>& edges, const Vector& susceptance,
                    const Vector& voltage);

/// Deterministic breadth-first spanning tree rooted at bus 0. Neighbours are
/// visited in edge-list order. Throws NetworkError if the graph is disconnected.
std::vector<std::size_t> bfs_spanning_tree(std::size_t buses, const std::vector<Edge>& edges);

/// Immutable validated network with the incidence matrices precomputed.
///
/// Angles are held either per bus (delta) or per tree edge
/// (phi = D_t^T delta). The potential is U(phi) = -1^T Gamma cos(D^T D_t^{+T} phi).
class Network {
public:
    explicit Network(NetworkSpec spec);

    std::size_t buses() const noexcept { return n_; }
    std::size_t lines() const noexcept { return edges_.size(); }
    std::size_t tree_size() const noexcept { return n_ - 1; }

    const std::vector<Edge>& edges() const noexcept { return edges_; }
    const std::vector<std::size_t>& tree_edges() const noexcept { return tree_; }
    const Vector& gamma() const noexcept { return gamma_; }
    const Vector& inertia() const noexcept { return inertia_; }
    const Vector& damping() const noexcept { return damping_; }

    /// D, n x m.
    const Matrix& incidence() const noexcept { return incidence_; }
    /// D_t, n x (n-1).
    const Matrix& tree_incidence() const noexcept { return tree_incidence_; }
    /// D_t^+ = (D_t^T D_t)^{-1} D_t^T, (n-1) x n.
    const Matrix& tree_pseudo_inverse() const noexcept { return tree_pinv_; }

    /// Per-edge angle differences D^T D_t^{+T} phi.
    Vector edge_angles(const Vector& phi) const;
    Vector phi_from_delta(const Vector& delta) const;
    /// Zero-mean bus angles consistent with phi.
    Vector delta_from_phi(const Vector& phi) const;

    double potential(const Vector& phi) const;
    Vector potential_gradient(const Vector& phi) const;
    Matrix potential_hessian(const Vector& phi) const;

    /// Net power leaving each bus through the lines, D Gamma sin(D^T delta).
    Vector line_flow_injection(const Vector& delta) const;

private:
    std::size_t n_;
    std::vector<Edge> edges_;
    std::vector<std::size_t> tree_;
    Vector gamma_;
    Vector inertia_;
    Vector damping_;
    Matrix incidence_;
    Matrix tree_incidence_;
    Matrix tree_pinv_;
    Matrix angle_map_;     // D^T D_t^{+T}, m x (n-1)
    Matrix gradient_map_;  // D_t^+ D, (n-1) x m
};

Matrix incidence_matrix(const Network& net);
Matrix tree_pseudo_inverse(const Network& net);
Vector potential_gradient(const Network& net, const Vector& phi);

struct SwingRate {
    Vector angle;  ///< delta-dot (per bus) or phi-dot (per tree edge)
    Vector omega;
};

/// delta' = omega, M omega' = -D Gamma sin(D^T delta) - A omega + P_g - P_d.
SwingRate swing_field_delta(const Network& net, const Vector& delta, const Vector& omega,
                            const Vector& p_gen, const Vector& p_load);

/// phi' = D_t^T omega, M omega' = -D_t grad U(phi) - A omega + P_g - P_d.
SwingRate swing_field_phi(const Network& net, const Vector& phi, const Vector& omega,
                          const Vector& p_gen, const Vector& p_load);

/// True iff every induced line angle lies strictly inside (-pi/2, pi/2).
bool security_constraint_holds(const Network& net, const Vector& phi);

}  // namespace freqmarket
