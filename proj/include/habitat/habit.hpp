#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "habitat/polytope.hpp"
#include "habitat/tree.hpp"

namespace habitat {

// Discount processes driving the standard-of-living recursion. Values live at
// non-terminal nodes (the consumption epochs k = 0..N-1).
struct HabitSpec {
    std::vector<double> alpha;  // node-indexed habit decay
    std::vector<double> delta;  // node-indexed consumption intensity
};

HabitSpec constant_habit(const EventTree& tree, double alpha, double delta);

// Throws naming the first node where alpha*dt >= 1 or a sign constraint fails.
void check_habit(const EventTree& tree, const HabitSpec& habit);

enum class plan_kind { consumption, auxiliary };

// Node-indexed rate process at consumption epochs; leaves carry no value.
struct Plan {
    std::vector<double> values;
    plan_kind kind = plan_kind::consumption;
};

// Path products w = prod(1 + (delta-alpha) dt), w~ = prod(1 - alpha dt).
// These multiplicative forms make the pairing identities exact in discrete
// time; both equal 1 at the root.
struct WeightPair {
    std::vector<double> w;
    std::vector<double> w_tilde;
};

WeightPair weights(const EventTree& tree, const HabitSpec& habit);

// Standard of living along every path: Z(root) = z,
// Z(child) = (1 - alpha dt) Z(node) + delta dt c(node).
std::vector<double> habit_path(const EventTree& tree, const HabitSpec& habit, const Plan& c,
                               double z);

// c~ = c - Z; throws naming the first node where the addictive constraint
// c >= Z is violated beyond 1e-12 (smaller negative dust is clamped).
Plan to_auxiliary(const EventTree& tree, const HabitSpec& habit, const Plan& c, double z);

// Inverse transform via Z~(child) = (1 + (delta-alpha) dt) Z~(node) + delta dt c~(node).
Plan from_auxiliary(const EventTree& tree, const HabitSpec& habit, const Plan& aux, double z);

// The plan equal to its own standard of living: c = z w.
Plan subsistence_plan(const EventTree& tree, const HabitSpec& habit, double z);

// <a, b> = sum over consumption epochs of P(n) a(n) b(n) dt_k.
double pairing(const EventTree& tree, const std::vector<double>& a,
               const std::vector<double>& b);

struct AuxiliaryDual {
    std::vector<double> gamma;  // node-indexed, consumption epochs
    std::optional<DensityProcess> source;
};

// Gamma(n) = Y(n) + delta(n) E[ sum_{k > e(n)} (w_k / w_{e(n)+1}) Y_k dt_k | n ],
// computed by one backward sweep.
AuxiliaryDual auxiliary_dual(const EventTree& tree, const HabitSpec& habit,
                             const DensityProcess& density);

// (r1, r2) with r1 = <c,Y> - <c~,Gamma> - z <w~,Gamma> and
// r2 = <w~,Gamma> - <w,Y>. Both vanish to rounding for every valid input.
std::pair<double, double> budget_identity_residuals(const EventTree& tree,
                                                    const HabitSpec& habit, const Plan& c,
                                                    double z, const DensityProcess& density);

}  // namespace habitat
