#include "habitat/domain.hpp"

#include <cmath>
#include <limits>

#include "habitat/lp.hpp"

namespace habitat {

namespace {

constexpr double kReplicableTol = 1e-9;

struct SweepResult {
    double value;
    std::vector<Eigen::VectorXd> conditionals;
    bool interior;
};

// F(n) = pay(n) dt + opt_q sum_j q_j F(child_j), optimum over the vertex list.
SweepResult backward_sweep(const EventTree& tree, const std::vector<double>& payments,
                           const std::vector<MeasurePolytope>& polys, bool maximize) {
    std::vector<double> F(tree.node_count(), 0.0);
    SweepResult out;
    out.conditionals.assign(tree.node_count(), Eigen::VectorXd());
    out.interior = true;
    for (int i = tree.node_count() - 1; i >= 0; --i) {
        if (tree.is_terminal(i)) continue;
        const TreeNode& nd = tree.node(i);
        const MeasurePolytope& poly = polys[i];
        double best = maximize ? -std::numeric_limits<double>::infinity()
                               : std::numeric_limits<double>::infinity();
        int best_v = -1;
        for (size_t v = 0; v < poly.vertices.size(); ++v) {
            double s = 0.0;
            for (size_t j = 0; j < nd.children.size(); ++j)
                s += poly.vertices[v][j] * F[nd.children[j]];
            if ((maximize && s > best + 1e-15) || (!maximize && s < best - 1e-15)) {
                best = s;
                best_v = static_cast<int>(v);
            }
        }
        F[i] = payments[i] * tree.dt(nd.depth) + best;
        out.conditionals[i] = poly.vertices[best_v];
        if (out.conditionals[i].minCoeff() <= 1e-12) out.interior = false;
    }
    out.value = F[0];
    return out;
}

}  // namespace

PriceBounds price_bounds(const EventTree& tree, const HabitSpec& habit) {
    WeightPair wp = weights(tree, habit);
    auto polys = node_polytopes(tree);  // throws arbitrage_error on bad trees

    std::vector<double> pay(tree.node_count(), 0.0);
    for (int i = 0; i < tree.node_count(); ++i)
        if (!tree.is_terminal(i)) pay[i] = wp.w[i];

    SweepResult hi = backward_sweep(tree, pay, polys, /*maximize=*/true);
    SweepResult lo = backward_sweep(tree, pay, polys, /*maximize=*/false);

    PriceBounds out;
    out.p_bar = hi.value;
    out.p_low = lo.value;
    out.replicable = out.p_bar - out.p_low <= kReplicableTol * (1.0 + out.p_bar);
    out.argmax_conditionals = std::move(hi.conditionals);
    out.argmin_conditionals = std::move(lo.conditionals);
    out.argmax_interior = hi.interior;
    out.argmin_interior = lo.interior;
    return out;
}

double shadow_price_lp(const EventTree& tree, const HabitSpec& habit, bool maximize) {
    WeightPair wp = weights(tree, habit);
    const int n = tree.node_count();
    const int d = tree.asset_count();

    // Variables: Q(id) for id = 1..n-1; Q(root) = 1 moves into the rhs.
    int rows = 0;
    for (int i = 0; i < n; ++i)
        if (!tree.is_terminal(i)) rows += 1 + d;

    LinearProgram lp;
    lp.maximize = maximize;
    lp.objective = Eigen::VectorXd::Zero(n - 1);
    for (int i = 1; i < n; ++i)
        if (!tree.is_terminal(i))
            lp.objective[i - 1] = wp.w[i] * tree.dt(tree.node(i).depth);
    lp.eq_matrix.setZero(rows, n - 1);
    lp.eq_rhs.setZero(rows);

    int r = 0;
    const double root_obj = wp.w[0] * tree.dt(0);
    for (int i = 0; i < n; ++i) {
        if (tree.is_terminal(i)) continue;
        const TreeNode& nd = tree.node(i);
        // Flow conservation: sum_c Q(c) - Q(i) = 0 (Q(root) = 1 on the rhs).
        for (int c : nd.children) lp.eq_matrix(r, c - 1) = 1.0;
        if (i == 0)
            lp.eq_rhs[r] = 1.0;
        else
            lp.eq_matrix(r, i - 1) = -1.0;
        ++r;
        for (int a = 0; a < d; ++a) {
            for (int c : nd.children)
                lp.eq_matrix(r, c - 1) = tree.node(c).prices[a] - nd.prices[a];
            ++r;
        }
    }

    SolveStatus st = solve_lp(lp);
    if (st.status != solve_state::optimal)
        throw std::runtime_error("shadow_price_lp: solve failed (" +
                                 std::string(to_string(st.status)) + ")");
    return st.objective + root_obj;
}

bool in_effective_domain(double x, double z, const PriceBounds& bounds, bool closure) {
    if (z < 0.0) return false;
    if (closure) return x >= z * bounds.p_bar && x >= 0.0;
    if (z == 0.0) return x > 0.0;
    return x > z * bounds.p_bar;
}

bool in_enlarged_domain(double x, double z, const PriceBounds& bounds, bool closure) {
    const double edge = z >= 0.0 ? z * bounds.p_bar : z * bounds.p_low;
    return closure ? x >= edge : x > edge;
}

bool in_dual_cone(double y, double r, const PriceBounds& bounds) {
    if (bounds.replicable)
        throw routing_error(
            "dual cone degenerates when the shadow endowment is replicable; "
            "use the one-dimensional dual");
    return y > 0.0 && bounds.p_low * y < r && r < bounds.p_bar * y;
}

SuperhedgeResult superhedge(const EventTree& tree, const std::vector<double>& payments,
                            const std::vector<MeasurePolytope>& polys) {
    SuperhedgeResult out;
    out.value.assign(tree.node_count(), 0.0);
    out.strategy.assign(tree.node_count(), Eigen::VectorXd());
    out.conditionals.assign(tree.node_count(), Eigen::VectorXd());

    const int d = tree.asset_count();
    for (int i = tree.node_count() - 1; i >= 0; --i) {
        if (tree.is_terminal(i)) continue;
        const TreeNode& nd = tree.node(i);
        const int m = static_cast<int>(nd.children.size());

        // max_q sum_j q_j V(child_j) over the node polytope; the duals on the
        // rows [1; dS] provide the hedge: lambda + H dS_j >= V(child_j).
        LinearProgram lp;
        lp.maximize = true;
        lp.objective.resize(m);
        for (int j = 0; j < m; ++j) lp.objective[j] = out.value[nd.children[j]];
        lp.eq_matrix = polys[i].eq_matrix;
        lp.eq_rhs = polys[i].eq_rhs;
        SolveStatus st = solve_lp(lp);
        if (st.status != solve_state::optimal)
            throw std::runtime_error("superhedge: node LP failed at node " +
                                     std::to_string(i));
        out.value[i] = payments[i] * tree.dt(nd.depth) + st.objective;
        out.conditionals[i] = st.solution;
        out.strategy[i] = st.row_duals.tail(d);
    }
    return out;
}

}  // namespace habitat
