#pragma once

#include <optional>
#include <vector>

#include "habitat/convex.hpp"
#include "habitat/domain.hpp"
#include "habitat/habit.hpp"
#include "habitat/utility.hpp"

namespace habitat {

struct DualOptions {
    BarrierParams barrier;
    int y_grid = 64;         // log-spaced y points for the conjugate search
    int r_grid = 32;         // interior r/y points in (p_low, p_bar)
    int polish_steps = 50;   // golden-section polish iterations
    double start_bias = 0.0; // in [0,1): shifts the interior starting measure
};

struct DualSolution {
    double value = 0.0;
    std::vector<double> gamma_star;             // node-indexed, scaled by y
    DensityProcess density;                     // generating Y (normalized)
    std::vector<Eigen::VectorXd> generating;    // conditional q per node
    double y = 0.0;
    double r = std::numeric_limits<double>::quiet_NaN();  // absent in 1-d mode
    SolveStatus status;
};

// Deterministic multiplier with Gamma = Y K when delta and delta - alpha are
// deterministic: K_k = 1 + delta_k sum_{s>k} (w_s / w_{k+1}) dt_s, K_{N-1} = 1.
struct KFactor {
    std::vector<double> values;  // epoch-indexed, size N
};

KFactor k_factor(const EventTree& tree, const HabitSpec& habit);

// Two-dimensional dual at (y, r) in the open cone: minimize E[sum V(t, Gamma)]
// over Gamma = y * auxiliary_dual(Y^Q) with the pricing slice <w, Y^Q> = r/y.
DualSolution solve_dual(const EventTree& tree, const HabitSpec& habit,
                        const UtilitySpec& utility, double y, double r,
                        const DualOptions& options = {});

// One-dimensional dual for the replicable case; uses the K-factorization when
// delta and delta - alpha are deterministic and the unsliced measure family
// otherwise.
DualSolution solve_dual_1d(const EventTree& tree, const HabitSpec& habit,
                           const UtilitySpec& utility, double y,
                           const DualOptions& options = {});

// Slice solve at normalized price p = r/y; `enforce_pricing` pins <w,Y> = p.
// Exposed for the replicable-case consistency checks.
DualSolution solve_dual_at_price(const EventTree& tree, const HabitSpec& habit,
                                 const UtilitySpec& utility, double y, double p,
                                 bool enforce_pricing, const DualOptions& options = {});

struct ConjugacyResult {
    double primal_value = 0.0;   // u~(x, z)
    double dual_value = 0.0;     // attained min of v~(y,r) + xy - zr
    double gap = 0.0;            // |primal - dual|
    double y_star = 0.0;
    double r_star = 0.0;
    DualSolution dual;           // solution at (y*, r*)
};

// Grid-plus-polish search of inf over the cone of v~(y,r) + xy - zr; routes
// to the one-dimensional conjugate in the replicable case.
ConjugacyResult conjugacy_check(const EventTree& tree, const HabitSpec& habit,
                                const UtilitySpec& utility, double x, double z,
                                const DualOptions& options = {});

// c~* = I(t, Gamma*) nodewise; throws if Gamma* vanishes somewhere.
Plan recover_primal_from_dual(const EventTree& tree, const UtilitySpec& utility,
                              const DualSolution& dual);

}  // namespace habitat
