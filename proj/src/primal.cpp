#include "habitat/primal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace habitat {

namespace {

// One budget constraint <c~, Gamma> <= x - z <w~, Gamma> in coefficient form.
struct GammaConstraint {
    std::vector<double> gamma;  // node-indexed
    double price_wtilde = 0.0;  // <w~, Gamma>
};

GammaConstraint make_constraint(const EventTree& tree, const HabitSpec& habit,
                                const WeightPair& wp, const DensityProcess& den) {
    GammaConstraint gc;
    gc.gamma = auxiliary_dual(tree, habit, den).gamma;
    gc.price_wtilde = pairing(tree, wp.w_tilde, gc.gamma);
    return gc;
}

// All vertex-combination constraints when the product count is tractable;
// empty when the caller should fall back to constraint generation.
std::vector<GammaConstraint> enumerate_vertex_gammas(const EventTree& tree,
                                                     const HabitSpec& habit,
                                                     const WeightPair& wp,
                                                     const std::vector<MeasurePolytope>& polys,
                                                     long cap) {
    std::vector<int> open_nodes;
    long combos = 1;
    for (int i = 0; i < tree.node_count(); ++i) {
        if (tree.is_terminal(i)) continue;
        open_nodes.push_back(i);
        combos *= static_cast<long>(polys[i].vertices.size());
        if (combos > cap) return {};
    }
    // Keep the constraint-matrix work bounded even when the count is modest.
    if (combos * static_cast<long>(open_nodes.size()) > 200000) return {};

    std::vector<GammaConstraint> out;
    std::vector<size_t> pick(open_nodes.size(), 0);
    std::vector<Eigen::VectorXd> q(tree.node_count());
    for (long c = 0; c < combos; ++c) {
        for (size_t k = 0; k < open_nodes.size(); ++k)
            q[open_nodes[k]] = polys[open_nodes[k]].vertices[pick[k]];
        out.push_back(make_constraint(tree, habit, wp,
                                      density_from_conditionals(tree, q)));
        for (size_t k = 0; k < pick.size(); ++k) {
            if (++pick[k] < polys[open_nodes[k]].vertices.size()) break;
            pick[k] = 0;
        }
    }
    return out;
}

struct VarMap {
    std::vector<int> var_of_node;  // -1 at terminal nodes
    std::vector<int> node_of_var;
};

VarMap map_consumption_vars(const EventTree& tree) {
    VarMap m;
    m.var_of_node.assign(tree.node_count(), -1);
    for (int i = 0; i < tree.node_count(); ++i) {
        if (tree.is_terminal(i)) continue;
        m.var_of_node[i] = static_cast<int>(m.node_of_var.size());
        m.node_of_var.push_back(i);
    }
    return m;
}

// Separable objective -sum P dt U(t, c~) on the consumption coordinates of a
// possibly larger variable vector.
struct SeparableObjective {
    const EventTree* tree;
    const UtilitySpec* utility;
    VarMap vars;
    int num_vars;

    double value(const Eigen::VectorXd& v) const {
        double s = 0.0;
        for (size_t k = 0; k < vars.node_of_var.size(); ++k) {
            const TreeNode& nd = tree->node(vars.node_of_var[k]);
            s -= nd.path_prob * tree->dt(nd.depth) *
                 utility->U(tree->time(nd.depth), v[static_cast<int>(k)]);
        }
        return s;
    }
    Eigen::VectorXd gradient(const Eigen::VectorXd& v) const {
        Eigen::VectorXd g = Eigen::VectorXd::Zero(num_vars);
        for (size_t k = 0; k < vars.node_of_var.size(); ++k) {
            const TreeNode& nd = tree->node(vars.node_of_var[k]);
            g[static_cast<int>(k)] = -nd.path_prob * tree->dt(nd.depth) *
                                     utility->U_prime(tree->time(nd.depth),
                                                      v[static_cast<int>(k)]);
        }
        return g;
    }
    Eigen::MatrixXd hessian(const Eigen::VectorXd& v) const {
        Eigen::MatrixXd H = Eigen::MatrixXd::Zero(num_vars, num_vars);
        for (size_t k = 0; k < vars.node_of_var.size(); ++k) {
            const TreeNode& nd = tree->node(vars.node_of_var[k]);
            const int j = static_cast<int>(k);
            H(j, j) = -nd.path_prob * tree->dt(nd.depth) *
                      u_second(*utility, tree->time(nd.depth), v[j]);
        }
        return H;
    }
};

Plan plan_from_vars(const EventTree& tree, const VarMap& vars, const Eigen::VectorXd& v,
                    plan_kind kind) {
    Plan p;
    p.kind = kind;
    p.values.assign(tree.node_count(), 0.0);
    for (size_t k = 0; k < vars.node_of_var.size(); ++k)
        p.values[vars.node_of_var[k]] = std::max(v[static_cast<int>(k)], 0.0);
    return p;
}

}  // namespace

PrimalSolution solve_primal_auxiliary(const EventTree& tree, const HabitSpec& habit,
                                      const UtilitySpec& utility, double x, double z,
                                      const PrimalOptions& options) {
    WeightPair wp = weights(tree, habit);
    auto polys = node_polytopes(tree);
    PriceBounds pb = price_bounds(tree, habit);
    if (!in_enlarged_domain(x, z, pb)) {
        const double bound = z >= 0 ? z * pb.p_bar : z * pb.p_low;
        throw infeasible_error(x, z, bound,
                               "initial pair outside the enlarged domain: x = " +
                                   std::to_string(x) + " <= " + std::to_string(bound));
    }

    VarMap vars = map_consumption_vars(tree);
    const int nv = static_cast<int>(vars.node_of_var.size());

    std::vector<GammaConstraint> constraints =
        enumerate_vertex_gammas(tree, habit, wp, polys, options.vertex_cap);
    const bool generating = constraints.empty();
    if (generating) {
        constraints.push_back(make_constraint(
            tree, habit, wp, density_from_conditionals(tree, pb.argmax_conditionals)));
        constraints.push_back(make_constraint(
            tree, habit, wp, density_from_conditionals(tree, pb.argmin_conditionals)));
    }

    SeparableObjective obj{&tree, &utility, vars, nv};
    PrimalSolution out;

    for (int round = 0;; ++round) {
        ConvexProgram cp;
        cp.num_vars = nv;
        cp.barrier = options.barrier;
        cp.value = [&obj](const Eigen::VectorXd& v) { return obj.value(v); };
        cp.gradient = [&obj](const Eigen::VectorXd& v) { return obj.gradient(v); };
        cp.hessian = [&obj](const Eigen::VectorXd& v) { return obj.hessian(v); };
        for (int k = 0; k < nv; ++k) {
            AffineRow r;  // -c~ <= 0
            r.add(k, -1.0);
            cp.ineq.push_back(r);
        }
        for (const auto& gc : constraints) {
            AffineRow r;
            for (int k = 0; k < nv; ++k) {
                const TreeNode& nd = tree.node(vars.node_of_var[k]);
                const double coef = nd.path_prob * tree.dt(nd.depth) * gc.gamma[nd.id];
                if (coef != 0.0) r.add(k, coef);
            }
            r.constant = -(x - z * gc.price_wtilde);
            cp.ineq.push_back(r);
        }

        // Strictly feasible start: a small multiple of w~ under every budget.
        double sigma = std::numeric_limits<double>::infinity();
        for (const auto& gc : constraints) {
            const double rhs = x - z * gc.price_wtilde;
            sigma = std::min(sigma, 0.5 * rhs / gc.price_wtilde);
        }
        Eigen::VectorXd start(nv);
        for (int k = 0; k < nv; ++k) start[k] = sigma * wp.w_tilde[vars.node_of_var[k]];

        out.status = solve_convex(cp, start);

        if (!generating) break;

        // Most violated budget: superhedge the implied consumption stream.
        Plan aux = plan_from_vars(tree, vars, out.status.solution, plan_kind::auxiliary);
        Plan cons = from_auxiliary(tree, habit, aux, z);
        SuperhedgeResult sh = superhedge(tree, cons.values, polys);
        if (sh.value[0] <= x + options.budget_tol * (1.0 + std::abs(x))) break;
        if (round >= options.max_generated)
            throw std::runtime_error("primal: constraint generation did not close");

        GammaConstraint gc = make_constraint(
            tree, habit, wp, density_from_conditionals(tree, sh.conditionals));
        bool duplicate = false;
        for (const auto& old : constraints) {
            double diff = 0.0;
            for (int i = 0; i < tree.node_count(); ++i)
                diff = std::max(diff, std::abs(old.gamma[i] - gc.gamma[i]));
            if (diff < 1e-12) { duplicate = true; break; }
        }
        if (duplicate) break;
        constraints.push_back(std::move(gc));
    }

    out.value = -out.status.objective;
    out.auxiliary = plan_from_vars(tree, vars, out.status.solution, plan_kind::auxiliary);
    out.abstract_extension = z < 0.0;
    if (!out.abstract_extension) {
        out.consumption = from_auxiliary(tree, habit, out.auxiliary, z);
        out.habit = habit_path(tree, habit, out.consumption, z);
    }
    out.budget_slacks.reserve(constraints.size());
    double tightest = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < constraints.size(); ++i) {
        const double lhs = pairing(tree, out.auxiliary.values, constraints[i].gamma);
        const double slack = (x - z * constraints[i].price_wtilde) - lhs;
        out.budget_slacks.push_back(slack);
        if (slack < tightest) {
            tightest = slack;
            out.binding_constraint = static_cast<int>(i);
        }
    }
    return out;
}

PrimalSolution solve_primal_wealth(const EventTree& tree, const HabitSpec& habit,
                                   const UtilitySpec& utility, double x, double z,
                                   const PrimalOptions& options) {
    WeightPair wp = weights(tree, habit);
    auto polys = node_polytopes(tree);
    PriceBounds pb = price_bounds(tree, habit);
    if (!in_effective_domain(x, z, pb))
        throw infeasible_error(x, z, z * pb.p_bar,
                               "initial pair outside the effective domain: need x > " +
                                   std::to_string(z * pb.p_bar) + " (z * sup <w,Y>)");

    const int n = tree.node_count();
    const int d = tree.asset_count();
    VarMap cvars = map_consumption_vars(tree);
    const int nc = static_cast<int>(cvars.node_of_var.size());

    // Portfolio variables only where the asset actually moves at the node.
    std::vector<std::vector<int>> hvar(n, std::vector<int>(d, -1));
    int nv = nc;
    for (int i = 0; i < n; ++i) {
        if (tree.is_terminal(i)) continue;
        for (int a = 0; a < d; ++a) {
            bool moves = false;
            for (int c : tree.node(i).children)
                moves |= std::abs(tree.node(c).prices[a] - tree.node(i).prices[a]) > 1e-14;
            if (moves) hvar[i][a] = nv++;
        }
    }

    // Affine wealth and habit rows over (c~, H). Consumption is c = c~ + Z~
    // with Z~ the auxiliary habit recursion, so c >= Z is just c~ >= 0.
    Eigen::MatrixXd zrow = Eigen::MatrixXd::Zero(n, nv);
    Eigen::VectorXd zconst = Eigen::VectorXd::Zero(n);
    Eigen::MatrixXd wrow = Eigen::MatrixXd::Zero(n, nv);
    Eigen::VectorXd wconst = Eigen::VectorXd::Zero(n);
    zconst[0] = z;
    wconst[0] = x;
    for (int i = 1; i < n; ++i) {
        const int p = tree.node(i).parent;
        const TreeNode& pn = tree.node(p);
        const double dt = tree.dt(pn.depth);
        const double grow = 1.0 + (habit.delta[p] - habit.alpha[p]) * dt;
        zrow.row(i) = grow * zrow.row(p);
        zconst[i] = grow * zconst[p];
        zrow(i, cvars.var_of_node[p]) += habit.delta[p] * dt;

        // W(child) = W(p) - (c~(p) + Z~(p)) dt + H(p) . dS(child)
        wrow.row(i) = wrow.row(p) - dt * zrow.row(p);
        wrow(i, cvars.var_of_node[p]) -= dt;
        wconst[i] = wconst[p] - dt * zconst[p];
        for (int a = 0; a < d; ++a)
            if (hvar[p][a] >= 0)
                wrow(i, hvar[p][a]) += tree.node(i).prices[a] - pn.prices[a];
    }

    SeparableObjective obj{&tree, &utility, cvars, nv};
    ConvexProgram cp;
    cp.num_vars = nv;
    cp.barrier = options.barrier;
    cp.value = [&obj](const Eigen::VectorXd& v) { return obj.value(v); };
    cp.gradient = [&obj](const Eigen::VectorXd& v) { return obj.gradient(v); };
    cp.hessian = [&obj](const Eigen::VectorXd& v) { return obj.hessian(v); };
    for (int k = 0; k < nc; ++k) {
        AffineRow r;  // -c~ <= 0
        r.add(k, -1.0);
        cp.ineq.push_back(r);
    }
    for (int i = 1; i < n; ++i) {
        AffineRow r;  // -W(i) <= 0
        for (int j = 0; j < nv; ++j)
            if (wrow(i, j) != 0.0) r.add(j, -wrow(i, j));
        r.constant = -wconst[i];
        cp.ineq.push_back(r);
    }

    // Strictly feasible start: subsistence plus a surplus multiple of w~,
    // financed by the superhedging strategy of that stream.
    const double wt_price = superhedge(tree, wp.w_tilde, polys).value[0];
    const double eps = (x - z * pb.p_bar) / (2.0 * wt_price);
    Plan c0;
    c0.kind = plan_kind::consumption;
    c0.values.assign(n, 0.0);
    for (int i = 0; i < n; ++i)
        if (!tree.is_terminal(i)) c0.values[i] = z * wp.w[i] + eps * wp.w_tilde[i];
    SuperhedgeResult sh = superhedge(tree, c0.values, polys);

    Eigen::VectorXd start = Eigen::VectorXd::Zero(nv);
    for (int k = 0; k < nc; ++k) start[k] = eps * wp.w_tilde[cvars.node_of_var[k]];
    for (int i = 0; i < n; ++i)
        if (!tree.is_terminal(i))
            for (int a = 0; a < d; ++a)
                if (hvar[i][a] >= 0) start[hvar[i][a]] = sh.strategy[i][a];

    PrimalSolution out;
    out.status = solve_convex(cp, start);
    out.value = -out.status.objective;
    out.auxiliary = plan_from_vars(tree, cvars, out.status.solution, plan_kind::auxiliary);
    out.consumption.kind = plan_kind::consumption;
    out.consumption.values.assign(n, 0.0);
    for (int k = 0; k < nc; ++k) {
        const int id = cvars.node_of_var[k];
        out.consumption.values[id] =
            out.status.solution[k] + zrow.row(id).dot(out.status.solution) + zconst[id];
    }
    out.habit = habit_path(tree, habit, out.consumption, z);
    out.wealth.assign(n, 0.0);
    out.wealth[0] = x;
    for (int i = 1; i < n; ++i)
        out.wealth[i] = wrow.row(i).dot(out.status.solution) + wconst[i];
    out.strategy.assign(n, Eigen::VectorXd());
    for (int i = 0; i < n; ++i) {
        if (tree.is_terminal(i)) continue;
        Eigen::VectorXd hi = Eigen::VectorXd::Zero(d);
        for (int a = 0; a < d; ++a)
            if (hvar[i][a] >= 0) hi[a] = out.status.solution[hvar[i][a]];
        out.strategy[i] = hi;
    }
    return out;
}

BruteForceResult brute_force_primal(const EventTree& tree, const HabitSpec& habit,
                                    const UtilitySpec& utility, double x, double z,
                                    double resolution) {
    WeightPair wp = weights(tree, habit);
    VarMap vars = map_consumption_vars(tree);
    const int K = static_cast<int>(vars.node_of_var.size());
    if (K > 12)
        throw std::invalid_argument("brute force: instance has " + std::to_string(K) +
                                    " consumption nodes, cap is 12");

    auto polys = node_polytopes(tree);
    auto constraints = enumerate_vertex_gammas(tree, habit, wp, polys, 20000);
    if (constraints.empty())
        throw std::invalid_argument("brute force: vertex enumeration too large");

    std::vector<std::vector<double>> coef(constraints.size(), std::vector<double>(K));
    std::vector<double> rhs(constraints.size());
    for (size_t i = 0; i < constraints.size(); ++i) {
        for (int k = 0; k < K; ++k) {
            const TreeNode& nd = tree.node(vars.node_of_var[k]);
            coef[i][k] = nd.path_prob * tree.dt(nd.depth) * constraints[i].gamma[nd.id];
        }
        rhs[i] = x - z * constraints[i].price_wtilde;
    }

    BruteForceResult out;
    std::vector<double> ub(K, std::numeric_limits<double>::infinity());
    for (int k = 0; k < K; ++k)
        for (size_t i = 0; i < constraints.size(); ++i)
            if (coef[i][k] > 0.0) ub[k] = std::min(ub[k], rhs[i] / coef[i][k]);
    for (int k = 0; k < K; ++k)
        if (!(ub[k] > 0.0) || !std::isfinite(ub[k])) return out;  // empty feasible grid

    const int g = std::clamp(static_cast<int>(std::round(std::pow(2e6, 1.0 / K))), 5, 41);
    std::vector<double> lo(K, 0.0), hi = ub, best(K, 0.0);
    auto feasible = [&](const std::vector<double>& c) {
        for (size_t i = 0; i < constraints.size(); ++i) {
            double s = 0.0;
            for (int k = 0; k < K; ++k) s += coef[i][k] * c[k];
            if (s > rhs[i] + 1e-12 * (1.0 + std::abs(rhs[i]))) return false;
        }
        return true;
    };
    auto objective = [&](const std::vector<double>& c) {
        double s = 0.0;
        for (int k = 0; k < K; ++k) {
            const TreeNode& nd = tree.node(vars.node_of_var[k]);
            s += nd.path_prob * tree.dt(nd.depth) * utility.U(tree.time(nd.depth), c[k]);
        }
        return s;
    };

    for (int stage = 0; stage < 3; ++stage) {
        std::vector<double> step(K);
        for (int k = 0; k < K; ++k) step[k] = (hi[k] - lo[k]) / (g - 1);
        std::vector<int> idx(K, 0);
        std::vector<double> point(K);
        long total = 1;
        for (int k = 0; k < K; ++k) total *= g;
        for (long it = 0; it < total; ++it) {
            for (int k = 0; k < K; ++k) point[k] = lo[k] + step[k] * idx[k];
            if (feasible(point)) {
                const double val = objective(point);
                if (std::isfinite(val) && (!out.feasible || val > out.value)) {
                    out.feasible = true;
                    out.value = val;
                    best = point;
                }
            }
            for (int k = 0; k < K; ++k) {
                if (++idx[k] < g) break;
                idx[k] = 0;
            }
        }
        if (!out.feasible) return out;
        for (int k = 0; k < K; ++k) {  // refine around the incumbent
            lo[k] = std::max(0.0, best[k] - 2 * step[k]);
            hi[k] = std::min(ub[k], best[k] + 2 * step[k]);
        }
    }
    (void)resolution;

    out.auxiliary.kind = plan_kind::auxiliary;
    out.auxiliary.values.assign(tree.node_count(), 0.0);
    for (int k = 0; k < K; ++k) out.auxiliary.values[vars.node_of_var[k]] = best[k];
    return out;
}

}  // namespace habitat
