#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace habitat {

enum class solve_state { optimal, infeasible, unbounded, max_iterations };

const char* to_string(solve_state s);

// Outcome of a linear or convex solve. `solution` is populated only when
// status == optimal. For an infeasible LP, `row_duals` carries a Farkas
// certificate y with yᵀb > 0 and yᵀA ≤ 0 on the nonnegative columns.
struct SolveStatus {
    solve_state status = solve_state::max_iterations;
    double objective = std::numeric_limits<double>::quiet_NaN();
    Eigen::VectorXd solution;
    int iterations = 0;

    Eigen::VectorXd row_duals;       // equality-row multipliers / Farkas certificate
    Eigen::VectorXd reduced_costs;   // per original variable, minimization sense
    double dual_objective = std::numeric_limits<double>::quiet_NaN();
    double feasibility_residual = 0.0;
    double complementarity_residual = 0.0;
    double kkt_residual = 0.0;                 // convex solves only
    Eigen::VectorXd ineq_duals;                // convex solves: barrier multipliers
    std::vector<double> outer_objectives;      // convex solves: objective per barrier stage
};

// minimize (or maximize) objectiveᵀx  subject to  eq_matrix·x = eq_rhs and
// x_j >= lower_bounds[j] where given; variables without a bound are free.
struct LinearProgram {
    Eigen::VectorXd objective;
    Eigen::MatrixXd eq_matrix;
    Eigen::VectorXd eq_rhs;
    std::vector<std::optional<double>> lower_bounds;  // empty = all zero
    bool maximize = false;
};

// Primal simplex, two phases, Bland's rule. Deterministic: identical inputs
// give bit-identical outputs.
SolveStatus solve_lp(const LinearProgram& lp, int max_iterations = 20000);

}  // namespace habitat
