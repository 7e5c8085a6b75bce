#pragma once

#include <stdexcept>
#include <vector>

#include "habitat/habit.hpp"
#include "habitat/polytope.hpp"
#include "habitat/tree.hpp"

namespace habitat {

// Signals that a two-dimensional-dual query was made in a replicable market,
// where the dual cone degenerates and the one-dimensional machinery applies.
struct routing_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Superhedging/subhedging prices of the shadow endowment: p_bar = sup <w,Y>,
// p_low = inf <w,Y> over martingale-measure densities (attained on the
// closure of the polytope). The attaining conditional measures are reported
// per node together with their interior flags.
struct PriceBounds {
    double p_bar = 0.0;
    double p_low = 0.0;
    bool replicable = false;  // p_bar - p_low <= 1e-9 (1 + p_bar)
    std::vector<Eigen::VectorXd> argmax_conditionals;  // node-indexed
    std::vector<Eigen::VectorXd> argmin_conditionals;
    bool argmax_interior = false;
    bool argmin_interior = false;
};

// Backward dynamic programming with the per-node maximum taken over the
// measure polytope (attained at its vertices).
PriceBounds price_bounds(const EventTree& tree, const HabitSpec& habit);

// Independent oracle: the same sup/inf as one global linear program over
// path-measure variables.
double shadow_price_lp(const EventTree& tree, const HabitSpec& habit, bool maximize);

// (x,z) with z >= 0 admitting a financeable habit-respecting plan:
// x > z p_bar, or z = 0 with x > 0. `closure` switches to non-strict tests.
bool in_effective_domain(double x, double z, const PriceBounds& bounds,
                         bool closure = false);

// The enlarged cone: {x > p_bar z, z >= 0} union {x > p_low z, z < 0}.
bool in_enlarged_domain(double x, double z, const PriceBounds& bounds,
                        bool closure = false);

// The open dual cone {y > 0, p_low y < r < p_bar y}; throws routing_error in
// the replicable case.
bool in_dual_cone(double y, double r, const PriceBounds& bounds);

// Minimal superhedging of a payment stream: value process, per-node hedge
// from the node LP duals, and the attaining conditionals. Payments are rates
// paid at consumption epochs (node-indexed, leaves ignored).
struct SuperhedgeResult {
    std::vector<double> value;                  // V(n) over all nodes
    std::vector<Eigen::VectorXd> strategy;      // H(n) at non-terminal nodes
    std::vector<Eigen::VectorXd> conditionals;  // argmax q at non-terminal nodes
};

SuperhedgeResult superhedge(const EventTree& tree, const std::vector<double>& payments,
                            const std::vector<MeasurePolytope>& polytopes);

}  // namespace habitat
