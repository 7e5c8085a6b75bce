#pragma once

#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "habitat/tree.hpp"

namespace habitat {

// One-step conditional martingale measures at a node: the closed polytope
// { q >= 0 : sum q = 1, sum_j q_j (S_child_j - S_node) = 0 }.
struct MeasurePolytope {
    int node = -1;
    Eigen::MatrixXd eq_matrix;  // (1 + d) x m, first row all ones
    Eigen::VectorXd eq_rhs;     // (1, 0, ..., 0)
    std::vector<Eigen::VectorXd> vertices;
    double interior_radius = 0.0;  // max eps such that q >= eps is feasible

    bool singleton() const { return vertices.size() == 1; }
};

struct arbitrage_error : std::runtime_error {
    arbitrage_error(int node_, Eigen::VectorXd farkas_, const std::string& what_)
        : std::runtime_error(what_), node(node_), farkas(std::move(farkas_)) {}
    int node;
    Eigen::VectorXd farkas;  // duals on [sum q = 1; martingale rows]
};

// Throws arbitrage_error when no strictly positive conditional measure exists.
MeasurePolytope node_polytope(const EventTree& tree, int node);

// Polytopes for all non-terminal nodes, indexed by node id.
std::vector<MeasurePolytope> node_polytopes(const EventTree& tree);

bool is_complete(const EventTree& tree);

// Martingale-measure density process Y with Y(root) = 1.
struct DensityProcess {
    std::vector<double> values;  // node-indexed
    bool interior = true;        // all conditionals strictly positive
    std::vector<Eigen::VectorXd> conditionals;  // per node id; empty at leaves
};

// q[id] must lie in node id's polytope (closure allowed, 1e-9 tolerance).
DensityProcess density_from_conditionals(const EventTree& tree,
                                         const std::vector<Eigen::VectorXd>& q);

}  // namespace habitat
