#pragma once

// Shared generators for randomized tests: arbitrage-free trees by
// construction (children moves are drawn so a strictly positive conditional
// martingale measure exists), habits respecting alpha*dt < 1, interior
// densities, and nonnegative auxiliary plans.

#include <vector>

#include "habitat/habit.hpp"
#include "habitat/polytope.hpp"
#include "habitat/rng.hpp"
#include "habitat/tree.hpp"

namespace habitat::testing {

inline EventTree random_tree(Rng& rng, int max_steps = 3, int max_branch = 3,
                             int assets = 1) {
    const int steps = rng.uniform_int(1, max_steps);
    std::vector<double> times(steps + 1);
    times[0] = 0.0;
    for (int k = 1; k <= steps; ++k) times[k] = times[k - 1] + rng.uniform(0.3, 1.0);

    std::vector<TreeNode> nodes;
    TreeNode root;
    root.parent = -1;
    root.prices = Eigen::VectorXd::NullaryExpr(assets, [&](int) { return rng.uniform(0.5, 2.0); });
    nodes.push_back(root);

    int level_begin = 0, level_end = 1;
    for (int k = 0; k < steps; ++k) {
        const int next_begin = static_cast<int>(nodes.size());
        for (int i = level_begin; i < level_end; ++i) {
            const int m = rng.uniform_int(2, max_branch);
            // Mix with uniform so no branch weight degenerates.
            const Eigen::VectorXd u = Eigen::VectorXd::Constant(m, 1.0 / m);
            const Eigen::VectorXd p = 0.8 * rng.dirichlet(m) + 0.2 * u;
            const Eigen::VectorXd q = 0.8 * rng.dirichlet(m) + 0.2 * u;
            Eigen::MatrixXd moves(assets, m);
            for (int a = 0; a < assets; ++a) {
                double acc = 0.0;
                const double scale = 0.3 * nodes[i].prices[a];
                for (int j = 0; j + 1 < m; ++j) {
                    moves(a, j) = rng.uniform(-scale, scale);
                    acc += q[j] * moves(a, j);
                }
                moves(a, m - 1) = -acc / q[m - 1];
            }
            for (int j = 0; j < m; ++j) {
                TreeNode nd;
                nd.parent = i;
                nd.prob = p[j];
                nd.prices = nodes[i].prices + moves.col(j);
                for (int a = 0; a < assets; ++a)
                    nd.prices[a] = std::max(nd.prices[a], 1e-3);  // keep prices positive
                nodes.push_back(nd);
            }
            // Re-balance the last move so the measure stays exact after
            // clamping, shrinking all moves together while any price is
            // nonpositive (scaling preserves sum q * dS = 0).
            const int base = static_cast<int>(nodes.size()) - m;
            for (int a = 0; a < assets; ++a) {
                double acc = 0.0;
                for (int j = 0; j + 1 < m; ++j)
                    acc += q[j] * (nodes[base + j].prices[a] - nodes[i].prices[a]);
                nodes[base + m - 1].prices[a] = nodes[i].prices[a] - acc / q[m - 1];
                int guard = 0;
                while (nodes[base + m - 1].prices[a] <= 1e-6 && guard++ < 60) {
                    for (int j = 0; j < m; ++j)
                        nodes[base + j].prices[a] =
                            nodes[i].prices[a] + 0.25 * (nodes[base + j].prices[a] -
                                                         nodes[i].prices[a]);
                }
            }
        }
        level_begin = next_begin;
        level_end = static_cast<int>(nodes.size());
    }
    return EventTree(std::move(times), std::move(nodes));
}

inline HabitSpec random_habit(Rng& rng, const EventTree& tree, bool deterministic = false) {
    HabitSpec h;
    h.alpha.assign(tree.node_count(), 0.0);
    h.delta.assign(tree.node_count(), 0.0);
    double max_dt = 0.0;
    for (int k = 0; k < tree.steps(); ++k) max_dt = std::max(max_dt, tree.dt(k));
    std::vector<double> alpha_by_epoch(tree.steps()), delta_by_epoch(tree.steps());
    for (int k = 0; k < tree.steps(); ++k) {
        alpha_by_epoch[k] = rng.uniform(0.0, 0.9 / max_dt);
        delta_by_epoch[k] = rng.uniform(0.0, 1.5);
    }
    for (int i = 0; i < tree.node_count(); ++i) {
        if (tree.is_terminal(i)) continue;
        const int k = tree.node(i).depth;
        h.alpha[i] = deterministic ? alpha_by_epoch[k] : rng.uniform(0.0, 0.9 / max_dt);
        h.delta[i] = deterministic ? delta_by_epoch[k] : rng.uniform(0.0, 1.5);
    }
    return h;
}

inline DensityProcess random_interior_density(Rng& rng, const EventTree& tree) {
    std::vector<Eigen::VectorXd> q(tree.node_count());
    for (int i = 0; i < tree.node_count(); ++i) {
        if (tree.is_terminal(i)) continue;
        MeasurePolytope poly = node_polytope(tree, i);
        Eigen::VectorXd mix = rng.dirichlet(static_cast<int>(poly.vertices.size()));
        Eigen::VectorXd qi = Eigen::VectorXd::Zero(poly.eq_matrix.cols());
        for (size_t v = 0; v < poly.vertices.size(); ++v) qi += mix[v] * poly.vertices[v];
        q[i] = qi;
    }
    return density_from_conditionals(tree, q);
}

inline Plan random_auxiliary_plan(Rng& rng, const EventTree& tree, double scale = 1.0) {
    Plan p;
    p.kind = plan_kind::auxiliary;
    p.values.assign(tree.node_count(), 0.0);
    for (int i = 0; i < tree.node_count(); ++i)
        if (!tree.is_terminal(i)) p.values[i] = rng.uniform(0.0, scale);
    return p;
}

}  // namespace habitat::testing
