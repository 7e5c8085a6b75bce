#include "habitat/dual.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "habitat/primal.hpp"

namespace habitat {

namespace {

// Leaf-coordinate description of the measure-generated dual objective.
// Internal path masses are range sums of leaf masses; the auxiliary dual is
// affine in them: Gamma(n) = Q(n)/P(n) + theta(n) (U(n) - s(n) Q(n)) with
// U(n) = sum over the subtree's leaves of sbar(leaf) Q(leaf).
struct SliceSetup {
    const EventTree* tree;
    const HabitSpec* habit;
    const UtilitySpec* utility;
    double y = 1.0;
    bool k_mode = false;

    WeightPair wp;
    std::vector<double> s;          // prefix sums of w dt over non-terminal ancestors
    std::vector<double> sbar;       // per leaf position
    std::vector<double> theta;      // per node
    std::vector<double> kcoef;      // per node, K-mode only
    std::vector<int> nt_nodes;      // non-terminal ids
    int L = 0;

    void init(const EventTree& t, const HabitSpec& h, const UtilitySpec& u, double y_,
              bool k_mode_, const std::vector<double>* epoch_K) {
        tree = &t;
        habit = &h;
        utility = &u;
        y = y_;
        k_mode = k_mode_;
        wp = weights(t, h);
        L = t.leaf_count();
        const int n = t.node_count();
        s.assign(n, 0.0);
        theta.assign(n, 0.0);
        kcoef.assign(n, 0.0);
        for (int i = 0; i < n; ++i) {
            const TreeNode& nd = t.node(i);
            const double own = t.is_terminal(i) ? 0.0 : wp.w[i] * t.dt(nd.depth);
            s[i] = (i == 0 ? 0.0 : s[nd.parent]) + own;
            if (!t.is_terminal(i)) {
                nt_nodes.push_back(i);
                const double dt = t.dt(nd.depth);
                theta[i] = h.delta[i] /
                           (nd.path_prob * wp.w[i] *
                            (1.0 + (h.delta[i] - h.alpha[i]) * dt));
                if (k_mode_) kcoef[i] = (*epoch_K)[nd.depth] / nd.path_prob;
            }
        }
        sbar.assign(L, 0.0);
        for (int j = 0; j < L; ++j) sbar[j] = s[t.node(t.leaves()[j]).parent];
    }

    double range_sum(const Eigen::VectorXd& Q, int node) const {
        const TreeNode& nd = tree->node(node);
        double q = 0.0;
        for (int j = nd.leaf_begin; j < nd.leaf_end; ++j) q += Q[j];
        return q;
    }

    // Gamma(n) of the normalized density (y = 1 scaling).
    double gamma_at(const Eigen::VectorXd& Q, int node) const {
        const TreeNode& nd = tree->node(node);
        if (k_mode) return kcoef[node] * range_sum(Q, node);
        double q = 0.0, u = 0.0;
        for (int j = nd.leaf_begin; j < nd.leaf_end; ++j) {
            q += Q[j];
            u += sbar[j] * Q[j];
        }
        return q / nd.path_prob + theta[node] * (u - s[node] * q);
    }

    double jacobian(int node, int leaf_pos) const {
        const TreeNode& nd = tree->node(node);
        if (k_mode) return kcoef[node];
        return 1.0 / nd.path_prob + theta[node] * (sbar[leaf_pos] - s[node]);
    }

    double value(const Eigen::VectorXd& Q) const {
        double v = 0.0;
        for (int i : nt_nodes) {
            const TreeNode& nd = tree->node(i);
            v += nd.path_prob * tree->dt(nd.depth) *
                 utility->V(tree->time(nd.depth), y * gamma_at(Q, i));
        }
        return v;
    }

    Eigen::VectorXd gradient(const Eigen::VectorXd& Q) const {
        const int n = tree->node_count();
        std::vector<double> a1(n, 0.0), a2(n, 0.0), a3(n, 0.0);
        for (int i = 0; i < n; ++i) {
            const TreeNode& nd = tree->node(i);
            const double up1 = i == 0 ? 0.0 : a1[nd.parent];
            const double up2 = i == 0 ? 0.0 : a2[nd.parent];
            const double up3 = i == 0 ? 0.0 : a3[nd.parent];
            if (!tree->is_terminal(i)) {
                const double D = nd.path_prob * tree->dt(nd.depth) * y *
                                 utility->V_prime(tree->time(nd.depth),
                                                  y * gamma_at(Q, i));
                if (k_mode) {
                    a1[i] = up1 + D * kcoef[i];
                    a2[i] = up2;
                    a3[i] = up3;
                } else {
                    a1[i] = up1 + D / nd.path_prob;
                    a2[i] = up2 + D * theta[i];
                    a3[i] = up3 + D * theta[i] * s[i];
                }
            } else {
                a1[i] = up1;
                a2[i] = up2;
                a3[i] = up3;
            }
        }
        Eigen::VectorXd g(L);
        for (int j = 0; j < L; ++j) {
            const int leaf = tree->leaves()[j];
            const int p = tree->node(leaf).parent;
            g[j] = a1[p] + (k_mode ? 0.0 : sbar[j] * a2[p] - a3[p]);
        }
        return g;
    }

    Eigen::MatrixXd hessian(const Eigen::VectorXd& Q) const {
        Eigen::MatrixXd H = Eigen::MatrixXd::Zero(L, L);
        for (int i : nt_nodes) {
            const TreeNode& nd = tree->node(i);
            const double D2 = nd.path_prob * tree->dt(nd.depth) * y * y *
                              v_second(*utility, tree->time(nd.depth),
                                       y * gamma_at(Q, i));
            for (int a = nd.leaf_begin; a < nd.leaf_end; ++a) {
                const double ja = jacobian(i, a);
                for (int b = nd.leaf_begin; b < nd.leaf_end; ++b)
                    H(a, b) += D2 * ja * jacobian(i, b);
            }
        }
        return H;
    }
};

// Leaf masses of the product measure built from per-node conditionals.
Eigen::VectorXd leaf_masses(const EventTree& tree,
                            const std::vector<Eigen::VectorXd>& q) {
    std::vector<double> mass(tree.node_count(), 0.0);
    mass[0] = 1.0;
    for (int i = 0; i < tree.node_count(); ++i) {
        if (tree.is_terminal(i)) continue;
        const auto& ch = tree.node(i).children;
        for (size_t j = 0; j < ch.size(); ++j) mass[ch[j]] = mass[i] * q[i][j];
    }
    Eigen::VectorXd Q(tree.leaf_count());
    for (int j = 0; j < tree.leaf_count(); ++j) Q[j] = mass[tree.leaves()[j]];
    return Q;
}

struct SliceProblem {
    SliceSetup setup;
    Eigen::MatrixXd eq;
    Eigen::VectorXd rhs;
    Eigen::VectorXd start;
};

SliceProblem build_slice(const EventTree& tree, const HabitSpec& habit,
                         const UtilitySpec& utility, double y, double p,
                         bool enforce_pricing, bool k_mode,
                         const std::vector<double>* epoch_K, double start_bias) {
    SliceProblem sp;
    sp.setup.init(tree, habit, utility, y, k_mode, epoch_K);
    const int L = tree.leaf_count();

    auto polys = node_polytopes(tree);
    int mart_rows = 0;
    for (int i = 0; i < tree.node_count(); ++i)
        if (!tree.is_terminal(i)) mart_rows += tree.asset_count();
    const int rows = 1 + mart_rows + (enforce_pricing ? 1 : 0);
    sp.eq.setZero(rows, L);
    sp.rhs.setZero(rows);
    sp.eq.row(0).setOnes();
    sp.rhs[0] = 1.0;
    int r = 1;
    for (int i = 0; i < tree.node_count(); ++i) {
        if (tree.is_terminal(i)) continue;
        const TreeNode& nd = tree.node(i);
        for (int a = 0; a < tree.asset_count(); ++a) {
            for (int c : nd.children) {
                const TreeNode& cn = tree.node(c);
                const double ds = cn.prices[a] - nd.prices[a];
                for (int j = cn.leaf_begin; j < cn.leaf_end; ++j) sp.eq(r, j) += ds;
            }
            ++r;
        }
    }
    if (enforce_pricing) {
        for (int j = 0; j < L; ++j) sp.eq(r, j) = sp.setup.sbar[j];
        sp.rhs[r] = p;
    }

    // Interior start: per-node vertex mixture, then a price correction by
    // mixing with the extreme measures (linear in leaf masses).
    std::vector<Eigen::VectorXd> q0(tree.node_count());
    for (int i = 0; i < tree.node_count(); ++i) {
        if (tree.is_terminal(i)) continue;
        const auto& verts = polys[i].vertices;
        Eigen::VectorXd qi = Eigen::VectorXd::Zero(polys[i].eq_matrix.cols());
        for (const auto& v : verts) qi += v;
        qi /= static_cast<double>(verts.size());
        if (start_bias > 0.0)
            qi = (1.0 - start_bias) * qi + start_bias * verts.front();
        q0[i] = qi;
    }
    sp.start = leaf_masses(tree, q0);
    if (enforce_pricing) {
        const Eigen::Map<const Eigen::VectorXd> sb(sp.setup.sbar.data(), L);
        const double p0 = sb.dot(sp.start);
        if (std::abs(p - p0) > 1e-14 * (1.0 + std::abs(p))) {
            PriceBounds pb = price_bounds(tree, habit);
            const auto& target_cond =
                p > p0 ? pb.argmax_conditionals : pb.argmin_conditionals;
            Eigen::VectorXd Qx = leaf_masses(tree, target_cond);
            const double px = sb.dot(Qx);
            const double t = (p - p0) / (px - p0);
            if (!(t >= 0.0 && t < 1.0))
                throw std::invalid_argument(
                    "dual: pricing target outside the attainable interval");
            sp.start = (1.0 - t) * sp.start + t * Qx;
        }
    }
    return sp;
}

DualSolution run_slice(const EventTree& tree, const HabitSpec& habit,
                       const UtilitySpec& utility, double y, double p,
                       bool enforce_pricing, bool k_mode,
                       const std::vector<double>* epoch_K, const DualOptions& options) {
    SliceProblem sp = build_slice(tree, habit, utility, y, p, enforce_pricing, k_mode,
                                  epoch_K, options.start_bias);
    const int L = tree.leaf_count();

    ConvexProgram cp;
    cp.num_vars = L;
    cp.barrier = options.barrier;
    cp.value = [&sp](const Eigen::VectorXd& Q) { return sp.setup.value(Q); };
    cp.gradient = [&sp](const Eigen::VectorXd& Q) { return sp.setup.gradient(Q); };
    cp.hessian = [&sp](const Eigen::VectorXd& Q) { return sp.setup.hessian(Q); };
    cp.eq_matrix = sp.eq;
    cp.eq_rhs = sp.rhs;
    for (int j = 0; j < L; ++j) {
        AffineRow r;  // -Q_j <= 0
        r.add(j, -1.0);
        cp.ineq.push_back(r);
    }

    DualSolution out;
    out.status = solve_convex(cp, sp.start);
    out.value = out.status.objective;
    out.y = y;
    const Eigen::VectorXd& Q = out.status.solution;

    out.gamma_star.assign(tree.node_count(), 0.0);
    out.density.values.assign(tree.node_count(), 0.0);
    out.density.conditionals.assign(tree.node_count(), Eigen::VectorXd());
    out.generating.assign(tree.node_count(), Eigen::VectorXd());
    out.density.interior = true;
    for (int i = 0; i < tree.node_count(); ++i) {
        const TreeNode& nd = tree.node(i);
        const double qn = sp.setup.range_sum(Q, i);
        out.density.values[i] = qn / nd.path_prob;
        if (tree.is_terminal(i)) continue;
        out.gamma_star[i] = y * sp.setup.gamma_at(Q, i);
        Eigen::VectorXd cond(nd.children.size());
        for (size_t j = 0; j < nd.children.size(); ++j) {
            cond[j] = qn > 0.0 ? sp.setup.range_sum(Q, nd.children[j]) / qn : 0.0;
            if (!(cond[j] > 1e-12)) out.density.interior = false;
        }
        out.generating[i] = cond;
        out.density.conditionals[i] = cond;
    }
    return out;
}

bool deterministic_per_epoch(const EventTree& tree, const std::vector<double>& v,
                             std::vector<double>* epoch_values) {
    epoch_values->assign(tree.steps(), 0.0);
    for (int k = 0; k < tree.steps(); ++k) {
        const auto& ids = tree.nodes_at(k);
        const double ref = v[ids[0]];
        for (int id : ids)
            if (std::abs(v[id] - ref) > 1e-12 * (1.0 + std::abs(ref))) return false;
        (*epoch_values)[k] = ref;
    }
    return true;
}

double golden_min(const std::function<double(double)>& f, double lo, double hi,
                  int steps, double* arg) {
    const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo, b = hi;
    double x1 = b - ratio * (b - a), x2 = a + ratio * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < steps; ++it) {
        if (f1 <= f2) {
            b = x2; x2 = x1; f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = f(x1);
        } else {
            a = x1; x1 = x2; f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = f(x2);
        }
    }
    if (f1 <= f2) { *arg = x1; return f1; }
    *arg = x2;
    return f2;
}

// sum P dt e^{-beta t} over consumption epochs: the y-slope of the log dual.
double discount_mass(const EventTree& tree, double beta) {
    double s = 0.0;
    for (int k = 0; k < tree.steps(); ++k) {
        double pk = 0.0;
        for (int id : tree.nodes_at(k)) pk += tree.node(id).path_prob;
        s += pk * tree.dt(k) * std::exp(-beta * tree.time(k));
    }
    return s;
}

struct YReduce {
    double value;
    double y_star;
};

// Minimal value over y > 0 of v~(y) + a y given the y = 1 slice value, exact
// for the built-in families (the minimizing measure does not depend on y),
// golden section on log y otherwise.
YReduce reduce_over_y(const UtilitySpec& u, const EventTree& tree, double base_value,
                      double a, const std::function<double(double)>& full_eval) {
    YReduce out{};
    if (u.family == utility_family::log_utility) {
        const double C = discount_mass(tree, u.beta);
        out.y_star = C / a;
        out.value = base_value - C * std::log(out.y_star) + C;
        return out;
    }
    if (u.family == utility_family::power_utility) {
        const double q = u.exponent / (u.exponent - 1.0);
        out.y_star = std::pow(-a / (q * base_value), 1.0 / (q - 1.0));
        out.value = base_value * std::pow(out.y_star, q) + a * out.y_star;
        return out;
    }
    double best_ly = 0.0;
    out.value = golden_min([&](double ly) { return full_eval(std::exp(ly)); },
                           std::log(1e-4), std::log(1e4), 120, &best_ly);
    out.y_star = std::exp(best_ly);
    return out;
}

}  // namespace

KFactor k_factor(const EventTree& tree, const HabitSpec& habit) {
    check_habit(tree, habit);
    std::vector<double> delta_k, diff_k;
    if (!deterministic_per_epoch(tree, habit.delta, &delta_k))
        throw std::invalid_argument("k_factor: delta must be deterministic per epoch");
    std::vector<double> diff(tree.node_count(), 0.0);
    for (int i = 0; i < tree.node_count(); ++i) diff[i] = habit.delta[i] - habit.alpha[i];
    if (!deterministic_per_epoch(tree, diff, &diff_k))
        throw std::invalid_argument(
            "k_factor: delta - alpha must be deterministic per epoch");

    const int N = tree.steps();
    std::vector<double> w(N + 1, 1.0);
    for (int k = 0; k < N; ++k) w[k + 1] = w[k] * (1.0 + diff_k[k] * tree.dt(k));

    KFactor out;
    out.values.assign(N, 1.0);
    for (int k = 0; k < N; ++k) {
        double tail = 0.0;
        for (int sidx = k + 1; sidx < N; ++sidx)
            tail += (w[sidx] / w[k + 1]) * tree.dt(sidx);
        out.values[k] = 1.0 + delta_k[k] * tail;
    }
    return out;
}

DualSolution solve_dual(const EventTree& tree, const HabitSpec& habit,
                        const UtilitySpec& utility, double y, double r,
                        const DualOptions& options) {
    PriceBounds pb = price_bounds(tree, habit);
    if (!in_dual_cone(y, r, pb))  // throws routing_error when replicable
        throw std::invalid_argument("dual: (y, r) outside the open dual cone");
    DualSolution out =
        run_slice(tree, habit, utility, y, r / y, true, false, nullptr, options);
    out.r = r;
    return out;
}

DualSolution solve_dual_at_price(const EventTree& tree, const HabitSpec& habit,
                                 const UtilitySpec& utility, double y, double p,
                                 bool enforce_pricing, const DualOptions& options) {
    DualSolution out =
        run_slice(tree, habit, utility, y, p, enforce_pricing, false, nullptr, options);
    out.r = enforce_pricing ? p * y : std::numeric_limits<double>::quiet_NaN();
    return out;
}

DualSolution solve_dual_1d(const EventTree& tree, const HabitSpec& habit,
                           const UtilitySpec& utility, double y,
                           const DualOptions& options) {
    PriceBounds pb = price_bounds(tree, habit);
    if (!pb.replicable)
        throw routing_error("one-dimensional dual applies to replicable markets only");
    std::vector<double> dk, fk;
    std::vector<double> diff(tree.node_count(), 0.0);
    for (int i = 0; i < tree.node_count(); ++i) diff[i] = habit.delta[i] - habit.alpha[i];
    if (deterministic_per_epoch(tree, habit.delta, &dk) &&
        deterministic_per_epoch(tree, diff, &fk)) {
        KFactor K = k_factor(tree, habit);
        return run_slice(tree, habit, utility, y, 0.0, false, true, &K.values, options);
    }
    // Replicable but without the deterministic factorization: optimize over
    // the full measure family with the (redundant) pricing constraint dropped.
    return run_slice(tree, habit, utility, y, 0.0, false, false, nullptr, options);
}

ConjugacyResult conjugacy_check(const EventTree& tree, const HabitSpec& habit,
                                const UtilitySpec& utility, double x, double z,
                                const DualOptions& options) {
    PriceBounds pb = price_bounds(tree, habit);
    ConjugacyResult out;
    out.primal_value = solve_primal_auxiliary(tree, habit, utility, x, z).value;

    if (pb.replicable) {
        const double rbar = 0.5 * (pb.p_bar + pb.p_low);
        const double a = x - z * rbar;
        DualSolution base = solve_dual_1d(tree, habit, utility, 1.0, options);
        YReduce yr = reduce_over_y(utility, tree, base.value, a, [&](double yy) {
            return solve_dual_1d(tree, habit, utility, yy, options).value + a * yy;
        });
        out.y_star = yr.y_star;
        out.r_star = rbar * yr.y_star;
        out.dual_value = yr.value;
        out.dual = solve_dual_1d(tree, habit, utility, yr.y_star, options);
        out.dual.r = out.r_star;
        out.gap = std::abs(out.primal_value - out.dual_value);
        return out;
    }

    // Slice value at normalized price p, reduced over y.
    auto G = [&](double p) -> YReduce {
        DualSolution base =
            solve_dual_at_price(tree, habit, utility, 1.0, p, true, options);
        const double a = x - z * p;
        return reduce_over_y(utility, tree, base.value, a, [&](double yy) {
            return solve_dual_at_price(tree, habit, utility, yy, p, true, options)
                       .value +
                   a * yy;
        });
    };

    const double width = pb.p_bar - pb.p_low;
    const int npts = std::max(2, options.r_grid);
    double best_p = 0.0, best_val = std::numeric_limits<double>::infinity();
    for (int i = 0; i < npts; ++i) {
        const double p = pb.p_low + width * (i + 1) / (npts + 1);
        const double v = G(p).value;
        if (v < best_val) {
            best_val = v;
            best_p = p;
        }
    }
    const double h = width / (npts + 1);
    const double lo = std::max(pb.p_low + 1e-9 * width, best_p - h);
    const double hi = std::min(pb.p_bar - 1e-9 * width, best_p + h);
    double p_star = best_p;
    golden_min([&](double p) { return G(p).value; }, lo, hi, options.polish_steps,
               &p_star);

    YReduce yr = G(p_star);
    out.y_star = yr.y_star;
    out.r_star = p_star * yr.y_star;
    out.dual_value = yr.value;
    out.dual = solve_dual(tree, habit, utility, out.y_star, out.r_star, options);
    out.gap = std::abs(out.primal_value - out.dual_value);
    return out;
}

Plan recover_primal_from_dual(const EventTree& tree, const UtilitySpec& utility,
                              const DualSolution& dual) {
    Plan p;
    p.kind = plan_kind::auxiliary;
    p.values.assign(tree.node_count(), 0.0);
    for (int i = 0; i < tree.node_count(); ++i) {
        if (tree.is_terminal(i)) continue;
        const double g = dual.gamma_star[i];
        if (!(g > 0.0))
            throw std::runtime_error(
                "recover: dual optimizer vanishes at node " + std::to_string(i) +
                "; marginal utility blows up");
        p.values[i] = utility.I(tree.time(tree.node(i).depth), g);
    }
    return p;
}

}  // namespace habitat
