#pragma once

#include <stdexcept>
#include <vector>

#include "habitat/convex.hpp"
#include "habitat/domain.hpp"
#include "habitat/habit.hpp"
#include "habitat/utility.hpp"

namespace habitat {

// (x,z) outside the feasible domain; carries the violated budget bound.
struct infeasible_error : std::runtime_error {
    infeasible_error(double x_, double z_, double bound_, const std::string& what_)
        : std::runtime_error(what_), x(x_), z(z_), bound(bound_) {}
    double x, z, bound;  // feasibility requires x > bound
};

struct PrimalOptions {
    BarrierParams barrier;
    int vertex_cap = 10000;       // enumerate vertex constraints up to this count
    int max_generated = 500;      // constraint-generation rounds
    double budget_tol = 1e-9;     // superhedge slack accepted as feasible
};

struct PrimalSolution {
    double value = 0.0;
    Plan consumption;                       // consumption kind
    Plan auxiliary;                         // auxiliary kind, c - Z
    std::vector<double> habit;              // Z per node
    std::vector<double> wealth;             // W per node (wealth form)
    std::vector<Eigen::VectorXd> strategy;  // H per non-terminal node (wealth form)
    SolveStatus status;
    std::vector<double> budget_slacks;      // auxiliary form, per generated constraint
    int binding_constraint = -1;            // index of the tightest constraint
    bool abstract_extension = false;        // z < 0 solve with no consumption meaning
};

// Original formulation over (portfolio, consumption) with pathwise wealth
// nonnegativity and the addictive constraint c >= Z.
PrimalSolution solve_primal_wealth(const EventTree& tree, const HabitSpec& habit,
                                   const UtilitySpec& utility, double x, double z,
                                   const PrimalOptions& options = {});

// Time-separable formulation over the auxiliary plan c~ >= 0 subject to the
// measure-generated budget constraints <c~, Gamma> <= x - z <w~, Gamma>.
PrimalSolution solve_primal_auxiliary(const EventTree& tree, const HabitSpec& habit,
                                      const UtilitySpec& utility, double x, double z,
                                      const PrimalOptions& options = {});

struct BruteForceResult {
    double value = -std::numeric_limits<double>::infinity();
    bool feasible = false;
    Plan auxiliary;
};

// Adaptive grid search over the auxiliary plan on tiny instances (at most 12
// consumption nodes); independent oracle for the barrier solvers.
BruteForceResult brute_force_primal(const EventTree& tree, const HabitSpec& habit,
                                    const UtilitySpec& utility, double x, double z,
                                    double resolution);

}  // namespace habitat
