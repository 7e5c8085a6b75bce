#include "habitat/habit.hpp"

#include <cmath>
#include <stdexcept>

namespace habitat {

HabitSpec constant_habit(const EventTree& tree, double alpha, double delta) {
    HabitSpec h;
    h.alpha.assign(tree.node_count(), alpha);
    h.delta.assign(tree.node_count(), delta);
    return h;
}

void check_habit(const EventTree& tree, const HabitSpec& habit) {
    if (static_cast<int>(habit.alpha.size()) != tree.node_count() ||
        static_cast<int>(habit.delta.size()) != tree.node_count())
        throw std::invalid_argument("habit: alpha/delta must be indexed by node id");
    for (int i = 0; i < tree.node_count(); ++i) {
        if (tree.is_terminal(i)) continue;
        if (!(habit.alpha[i] >= 0.0) || !(habit.delta[i] >= 0.0))
            throw std::invalid_argument("habit: negative discount at node " + std::to_string(i));
        const double adt = habit.alpha[i] * tree.dt(tree.node(i).depth);
        if (!(adt < 1.0))
            throw std::invalid_argument("habit: alpha*dt = " + std::to_string(adt) +
                                        " >= 1 at node " + std::to_string(i) +
                                        "; grid too coarse");
    }
}

WeightPair weights(const EventTree& tree, const HabitSpec& habit) {
    check_habit(tree, habit);
    WeightPair wp;
    wp.w.assign(tree.node_count(), 1.0);
    wp.w_tilde.assign(tree.node_count(), 1.0);
    for (int i = 1; i < tree.node_count(); ++i) {
        const int p = tree.node(i).parent;
        const double dt = tree.dt(tree.node(p).depth);
        wp.w[i] = wp.w[p] * (1.0 + (habit.delta[p] - habit.alpha[p]) * dt);
        wp.w_tilde[i] = wp.w_tilde[p] * (1.0 - habit.alpha[p] * dt);
    }
    return wp;
}

std::vector<double> habit_path(const EventTree& tree, const HabitSpec& habit, const Plan& c,
                               double z) {
    if (c.kind != plan_kind::consumption)
        throw std::invalid_argument("habit_path: expected a consumption plan");
    std::vector<double> Z(tree.node_count(), 0.0);
    Z[0] = z;
    for (int i = 1; i < tree.node_count(); ++i) {
        const int p = tree.node(i).parent;
        const double dt = tree.dt(tree.node(p).depth);
        Z[i] = (1.0 - habit.alpha[p] * dt) * Z[p] + habit.delta[p] * dt * c.values[p];
    }
    return Z;
}

Plan to_auxiliary(const EventTree& tree, const HabitSpec& habit, const Plan& c, double z) {
    std::vector<double> Z = habit_path(tree, habit, c, z);
    Plan aux;
    aux.kind = plan_kind::auxiliary;
    aux.values.assign(tree.node_count(), 0.0);
    for (int i = 0; i < tree.node_count(); ++i) {
        if (tree.is_terminal(i)) continue;
        double v = c.values[i] - Z[i];
        if (v < -1e-12)
            throw std::invalid_argument("to_auxiliary: consumption below the standard of living"
                                        " at node " + std::to_string(i) +
                                        " (c - Z = " + std::to_string(v) + ")");
        aux.values[i] = std::max(v, 0.0);
    }
    return aux;
}

Plan from_auxiliary(const EventTree& tree, const HabitSpec& habit, const Plan& aux, double z) {
    if (aux.kind != plan_kind::auxiliary)
        throw std::invalid_argument("from_auxiliary: expected an auxiliary plan");
    std::vector<double> Zt(tree.node_count(), 0.0);
    Zt[0] = z;
    for (int i = 1; i < tree.node_count(); ++i) {
        const int p = tree.node(i).parent;
        const double dt = tree.dt(tree.node(p).depth);
        Zt[i] = (1.0 + (habit.delta[p] - habit.alpha[p]) * dt) * Zt[p] +
                habit.delta[p] * dt * aux.values[p];
    }
    Plan c;
    c.kind = plan_kind::consumption;
    c.values.assign(tree.node_count(), 0.0);
    for (int i = 0; i < tree.node_count(); ++i)
        if (!tree.is_terminal(i)) c.values[i] = aux.values[i] + Zt[i];
    return c;
}

Plan subsistence_plan(const EventTree& tree, const HabitSpec& habit, double z) {
    if (z < 0.0) throw std::invalid_argument("subsistence_plan: z must be >= 0");
    WeightPair wp = weights(tree, habit);
    Plan c;
    c.kind = plan_kind::consumption;
    c.values.assign(tree.node_count(), 0.0);
    for (int i = 0; i < tree.node_count(); ++i)
        if (!tree.is_terminal(i)) c.values[i] = z * wp.w[i];
    return c;
}

double pairing(const EventTree& tree, const std::vector<double>& a,
               const std::vector<double>& b) {
    if (static_cast<int>(a.size()) != tree.node_count() ||
        static_cast<int>(b.size()) != tree.node_count())
        throw std::invalid_argument("pairing: processes must be indexed by node id");
    double s = 0.0;
    for (int i = 0; i < tree.node_count(); ++i) {
        if (tree.is_terminal(i)) continue;
        const TreeNode& nd = tree.node(i);
        s += nd.path_prob * a[i] * b[i] * tree.dt(nd.depth);
    }
    return s;
}

AuxiliaryDual auxiliary_dual(const EventTree& tree, const HabitSpec& habit,
                             const DensityProcess& density) {
    check_habit(tree, habit);
    WeightPair wp = weights(tree, habit);
    const int n = tree.node_count();

    // M(n) = E[ sum_{k >= e(n)}^{N-1} (w_k / w(n)) Y_k dt_k | n ], reverse sweep.
    std::vector<double> M(n, 0.0);
    for (int i = n - 1; i >= 0; --i) {
        if (tree.is_terminal(i)) continue;
        const TreeNode& nd = tree.node(i);
        double tail = 0.0;
        for (int c : nd.children) {
            const TreeNode& ch = tree.node(c);
            tail += (ch.path_prob / nd.path_prob) * (wp.w[c] / wp.w[i]) * M[c];
        }
        M[i] = density.values[i] * tree.dt(nd.depth) + tail;
    }

    AuxiliaryDual out;
    out.gamma.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        if (tree.is_terminal(i)) continue;
        const TreeNode& nd = tree.node(i);
        double tail = 0.0;
        for (int c : nd.children) tail += (tree.node(c).path_prob / nd.path_prob) * M[c];
        out.gamma[i] = density.values[i] + habit.delta[i] * tail;
    }
    out.source = density;
    return out;
}

std::pair<double, double> budget_identity_residuals(const EventTree& tree,
                                                    const HabitSpec& habit, const Plan& c,
                                                    double z,
                                                    const DensityProcess& density) {
    WeightPair wp = weights(tree, habit);
    Plan aux = to_auxiliary(tree, habit, c, z);
    AuxiliaryDual gam = auxiliary_dual(tree, habit, density);

    const double cY = pairing(tree, c.values, density.values);
    const double cgG = pairing(tree, aux.values, gam.gamma);
    const double wtG = pairing(tree, wp.w_tilde, gam.gamma);
    const double wY = pairing(tree, wp.w, density.values);

    return {cY - cgG - z * wtG, wtG - wY};
}

}  // namespace habitat
