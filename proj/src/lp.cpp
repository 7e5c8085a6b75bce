#include "habitat/lp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace habitat {

namespace {

constexpr double kPivotTol = 1e-10;
constexpr double kCostTol = 1e-10;
constexpr int kRefactorPeriod = 64;

// Standard-form problem: minimize cᵀu s.t. Au = b, u >= 0, plus the affine
// bookkeeping needed to map a solution back to the caller's variables.
struct StandardForm {
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    Eigen::VectorXd c;
    double shift = 0.0;                       // objective offset from bound shifts
    std::vector<std::pair<int, int>> cols;    // orig var -> (pos col, neg col or -1)
    Eigen::VectorXd row_sign;                 // +-1 applied to make b >= 0
    double sense = 1.0;                       // +1 minimize, -1 original was maximize
};

StandardForm to_standard_form(const LinearProgram& lp) {
    const int n = static_cast<int>(lp.objective.size());
    const int m = static_cast<int>(lp.eq_matrix.rows());
    if (lp.eq_matrix.cols() != n)
        throw std::invalid_argument("lp: constraint matrix has " +
                                    std::to_string(lp.eq_matrix.cols()) +
                                    " columns for " + std::to_string(n) + " variables");
    if (lp.eq_rhs.size() != m)
        throw std::invalid_argument("lp: rhs length does not match row count");
    if (!lp.lower_bounds.empty() && static_cast<int>(lp.lower_bounds.size()) != n)
        throw std::invalid_argument("lp: lower_bounds length does not match variable count");

    StandardForm sf;
    sf.sense = lp.maximize ? -1.0 : 1.0;

    int ncols = 0;
    sf.cols.resize(n);
    Eigen::VectorXd shift_x = Eigen::VectorXd::Zero(n);
    for (int j = 0; j < n; ++j) {
        std::optional<double> lb =
            lp.lower_bounds.empty() ? std::optional<double>(0.0) : lp.lower_bounds[j];
        if (lb) {
            shift_x[j] = *lb;
            sf.cols[j] = {ncols++, -1};
        } else {
            sf.cols[j] = {ncols, ncols + 1};
            ncols += 2;
        }
    }

    sf.A.setZero(m, ncols);
    sf.c.setZero(ncols);
    for (int j = 0; j < n; ++j) {
        const double cj = sf.sense * lp.objective[j];
        sf.c[sf.cols[j].first] = cj;
        if (m > 0) sf.A.col(sf.cols[j].first) = lp.eq_matrix.col(j);
        if (sf.cols[j].second >= 0) {
            sf.c[sf.cols[j].second] = -cj;
            if (m > 0) sf.A.col(sf.cols[j].second) = -lp.eq_matrix.col(j);
        }
    }
    sf.shift = sf.sense * lp.objective.dot(shift_x);
    sf.b = lp.eq_rhs - lp.eq_matrix * shift_x;

    sf.row_sign = Eigen::VectorXd::Ones(m);
    for (int i = 0; i < m; ++i) {
        if (sf.b[i] < 0) {
            sf.row_sign[i] = -1.0;
            sf.b[i] = -sf.b[i];
            sf.A.row(i) = -sf.A.row(i);
        }
    }
    return sf;
}

// Dense revised simplex over one phase. Basis inverse kept explicitly and
// periodically refactorized. Bland's rule throughout.
struct SimplexCore {
    const Eigen::MatrixXd& A;  // m x n, includes artificial columns
    const Eigen::VectorXd& b;
    int m, n;

    std::vector<int> basis;
    Eigen::MatrixXd Binv;
    Eigen::VectorXd xB;
    int pivots_since_refactor = 0;

    SimplexCore(const Eigen::MatrixXd& A_, const Eigen::VectorXd& b_, std::vector<int> basis0)
        : A(A_), b(b_), m(static_cast<int>(A_.rows())), n(static_cast<int>(A_.cols())),
          basis(std::move(basis0)) {
        refactor();
    }

    void refactor() {
        Eigen::MatrixXd B(m, m);
        for (int i = 0; i < m; ++i) B.col(i) = A.col(basis[i]);
        Binv = B.partialPivLu().inverse();
        xB = Binv * b;
        pivots_since_refactor = 0;
    }

    // Returns optimal / unbounded / max_iterations for min cᵀx over this phase.
    solve_state iterate(const Eigen::VectorXd& c, int max_iter, int* iter_count) {
        for (int it = 0; it < max_iter; ++it) {
            ++*iter_count;
            Eigen::VectorXd cB(m);
            for (int i = 0; i < m; ++i) cB[i] = c[basis[i]];
            Eigen::VectorXd y = Binv.transpose() * cB;

            // Bland: entering = lowest-index column with negative reduced cost.
            int enter = -1;
            std::vector<char> in_basis(n, 0);
            for (int i = 0; i < m; ++i) in_basis[basis[i]] = 1;
            for (int j = 0; j < n; ++j) {
                if (in_basis[j]) continue;
                const double rc = c[j] - y.dot(A.col(j));
                if (rc < -kCostTol) { enter = j; break; }
            }
            if (enter < 0) return solve_state::optimal;

            Eigen::VectorXd d = Binv * A.col(enter);
            int leave = -1;
            double best_ratio = std::numeric_limits<double>::infinity();
            for (int i = 0; i < m; ++i) {
                if (d[i] > kPivotTol) {
                    const double ratio = xB[i] / d[i];
                    if (ratio < best_ratio - 1e-12 ||
                        (ratio < best_ratio + 1e-12 &&
                         (leave < 0 || basis[i] < basis[leave]))) {
                        best_ratio = ratio;
                        leave = i;
                    }
                }
            }
            if (leave < 0) return solve_state::unbounded;

            pivot(enter, leave, d);
        }
        return solve_state::max_iterations;
    }

    void pivot(int enter, int leave, const Eigen::VectorXd& d) {
        basis[leave] = enter;
        if (++pivots_since_refactor >= kRefactorPeriod) {
            refactor();
            return;
        }
        // Product-form update of Binv and xB.
        const double dr = d[leave];
        Eigen::RowVectorXd pivot_row = Binv.row(leave) / dr;
        const double xr = xB[leave] / dr;
        for (int i = 0; i < m; ++i) {
            if (i == leave) continue;
            Binv.row(i) -= d[i] * pivot_row;
            xB[i] -= d[i] * xr;
        }
        Binv.row(leave) = pivot_row;
        xB[leave] = xr;
    }
};

}  // namespace

const char* to_string(solve_state s) {
    switch (s) {
        case solve_state::optimal: return "optimal";
        case solve_state::infeasible: return "infeasible";
        case solve_state::unbounded: return "unbounded";
        case solve_state::max_iterations: return "max-iterations";
    }
    return "unknown";
}

SolveStatus solve_lp(const LinearProgram& lp, int max_iterations) {
    StandardForm sf = to_standard_form(lp);
    const int m = static_cast<int>(sf.A.rows());
    const int n = static_cast<int>(sf.A.cols());
    const int norig = static_cast<int>(lp.objective.size());

    SolveStatus out;

    if (m == 0) {
        // Only sign constraints: optimum is at the bounds iff no improving ray.
        out.iterations = 0;
        for (int j = 0; j < n; ++j) {
            if (sf.c[j] < -kCostTol) {
                out.status = solve_state::unbounded;
                return out;
            }
        }
        out.status = solve_state::optimal;
        out.solution = Eigen::VectorXd::Zero(norig);
        for (int j = 0; j < norig; ++j)
            if (!lp.lower_bounds.empty() && lp.lower_bounds[j])
                out.solution[j] = *lp.lower_bounds[j];
            else if (lp.lower_bounds.empty())
                out.solution[j] = 0.0;
        out.objective = lp.objective.dot(out.solution);
        out.dual_objective = out.objective;
        return out;
    }

    // Phase I: artificial columns with identity structure, costs 1.
    Eigen::MatrixXd A1(m, n + m);
    A1.leftCols(n) = sf.A;
    A1.rightCols(m) = Eigen::MatrixXd::Identity(m, m);
    Eigen::VectorXd c1 = Eigen::VectorXd::Zero(n + m);
    c1.tail(m).setOnes();

    std::vector<int> basis0(m);
    for (int i = 0; i < m; ++i) basis0[i] = n + i;
    SimplexCore core(A1, sf.b, basis0);

    int iters = 0;
    solve_state st = core.iterate(c1, max_iterations, &iters);
    out.iterations = iters;
    if (st == solve_state::max_iterations) { out.status = st; return out; }

    double phase1_obj = 0.0;
    for (int i = 0; i < m; ++i)
        if (core.basis[i] >= n) phase1_obj += core.xB[i];

    const double feas_scale = 1.0 + sf.b.lpNorm<Eigen::Infinity>();
    if (phase1_obj > 1e-8 * feas_scale) {
        out.status = solve_state::infeasible;
        // Farkas: y = B⁻ᵀ c_B from phase I satisfies yᵀA ≤ 0, yᵀb > 0.
        Eigen::VectorXd cB(m);
        for (int i = 0; i < m; ++i) cB[i] = c1[core.basis[i]];
        Eigen::VectorXd y = core.Binv.transpose() * cB;
        out.row_duals = sf.row_sign.asDiagonal() * y;
        out.objective = phase1_obj;
        return out;
    }

    // Drive leftover artificials out of the basis where possible; a row whose
    // structural part is zero is redundant and its artificial stays at zero.
    for (int i = 0; i < m; ++i) {
        if (core.basis[i] < n) continue;
        Eigen::RowVectorXd row = core.Binv.row(i) * sf.A;
        int enter = -1;
        for (int j = 0; j < n; ++j) {
            bool in_basis = false;
            for (int k = 0; k < m; ++k)
                if (core.basis[k] == j) { in_basis = true; break; }
            if (!in_basis && std::abs(row[j]) > 1e-8) { enter = j; break; }
        }
        if (enter >= 0) {
            Eigen::VectorXd d = core.Binv * A1.col(enter);
            core.pivot(enter, i, d);
        }
    }
    core.refactor();

    // Phase II on the structural columns only. Artificial columns are priced
    // prohibitively so they never re-enter.
    Eigen::VectorXd c2 = Eigen::VectorXd::Zero(n + m);
    c2.head(n) = sf.c;
    const double big = 1.0 + 1e8 * (1.0 + sf.c.cwiseAbs().maxCoeff());
    c2.tail(m).setConstant(big);

    st = core.iterate(c2, max_iterations - iters, &iters);
    out.iterations = iters;
    if (st != solve_state::optimal) { out.status = st; return out; }

    // Recover the solution and certificates in the caller's coordinates.
    Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < m; ++i)
        if (core.basis[i] < n) u[core.basis[i]] = core.xB[i];

    Eigen::VectorXd cB(m);
    for (int i = 0; i < m; ++i) cB[i] = c2[core.basis[i]];
    Eigen::VectorXd y = core.Binv.transpose() * cB;

    Eigen::VectorXd x(norig);
    for (int j = 0; j < norig; ++j) {
        const auto& [pos, neg] = sf.cols[j];
        double v = u[pos] - (neg >= 0 ? u[neg] : 0.0);
        if (neg < 0)
            v += lp.lower_bounds.empty() ? 0.0 : lp.lower_bounds[j].value();
        x[j] = v;
    }

    out.status = solve_state::optimal;
    out.solution = x;
    out.objective = lp.objective.dot(x);
    out.row_duals = sf.sense * (sf.row_sign.asDiagonal() * y);
    out.dual_objective = sf.sense * (y.dot(sf.b) + sf.shift);

    out.reduced_costs.resize(norig);
    double comp = 0.0;
    for (int j = 0; j < norig; ++j) {
        const double rc = sf.c[sf.cols[j].first] - y.dot(sf.A.col(sf.cols[j].first));
        out.reduced_costs[j] = sf.sense * rc;
        comp = std::max(comp, std::abs(u[sf.cols[j].first] * rc));
        if (sf.cols[j].second >= 0) {
            const double rc2 = sf.c[sf.cols[j].second] - y.dot(sf.A.col(sf.cols[j].second));
            comp = std::max(comp, std::abs(u[sf.cols[j].second] * rc2));
        }
    }
    out.complementarity_residual = comp;
    out.feasibility_residual =
        m > 0 ? (lp.eq_matrix * x - lp.eq_rhs).lpNorm<Eigen::Infinity>() : 0.0;
    return out;
}

}  // namespace habitat
