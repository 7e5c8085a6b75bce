#pragma once

#include <functional>
#include <string>
#include <vector>

#include "habitat/habit.hpp"
#include "habitat/tree.hpp"

namespace habitat {

enum class utility_family { log_utility, power_utility, custom };

// Time-dependent utility with its exact conjugate bundle. The five
// evaluations are wired together: I inverts U', V is the Legendre transform,
// V' = -I. Custom families must supply all five; nothing is inverted
// numerically.
struct UtilitySpec {
    utility_family family = utility_family::log_utility;
    double beta = 0.0;      // time discount, applied as e^{-beta t}
    double exponent = 0.0;  // power family only, p in (-inf,1) \ {0}
    std::string label;

    std::function<double(double, double)> U;        // U(t, x)
    std::function<double(double, double)> U_prime;  // dU/dx
    std::function<double(double, double)> I;        // inverse of U' in x
    std::function<double(double, double)> V;        // conjugate sup_x {U - xy}
    std::function<double(double, double)> V_prime;  // dV/dy = -I
};

UtilitySpec make_log_utility(double beta = 0.0);
UtilitySpec make_power_utility(double exponent, double beta = 0.0);
UtilitySpec make_custom_utility(std::string label,
                                std::function<double(double, double)> U,
                                std::function<double(double, double)> U_prime,
                                std::function<double(double, double)> I,
                                std::function<double(double, double)> V,
                                std::function<double(double, double)> V_prime);

struct ElasticityGrid {
    int max_exponent = 40;      // x ranges over 2^0 .. 2^±max_exponent
    std::vector<double> t_samples = {0.0, 0.25, 0.5, 0.75, 1.0};
    double margin = 1e-3;       // pass gate: estimate < 1 - margin
    double finite_cap = 1e6;    // AE0 estimates above this count as divergent
};

// Asymptotic-elasticity diagnostics: growth ratios x U'/U at large x and
// x U'/|U| at small x, plus the dual-side ratio y V'/V at large y. Grid
// maxima are combined with a harmonic-tail limit fit so slowly increasing
// ratios (e.g. 1 - 1/log x) are extrapolated rather than read off the grid.
struct ElasticityReport {
    double ae_inf_estimate = 0.0;
    double ae_zero_estimate = 0.0;
    double ae_inf_dual_estimate = 0.0;  // y V'/V as y -> infinity
    bool pass_ae_inf = false;
    bool pass_ae_zero = false;
    bool dual_side_disagrees = false;   // AE0[U] finite vs AE_inf[V] < 1 mismatch
    bool sign_up = false;               // lim_{x->inf} inf_t U > 0
    bool sign_down = false;             // lim_{x->0} sup_t U < 0
    bool overflow_truncated = false;
};

ElasticityReport elasticity_report(const UtilitySpec& u, const ElasticityGrid& grid = {});

// E[ sum_k U(t_k, xbar * w~_k) dt_k ]; always finite on a finite tree.
double assumption_4_1_value(const UtilitySpec& u, const EventTree& tree,
                            const HabitSpec& habit, double xbar);

// Second derivatives: analytic for the built-in families, central finite
// differences of the supplied first derivatives for custom ones.
double u_second(const UtilitySpec& u, double t, double x);
double v_second(const UtilitySpec& u, double t, double y);

}  // namespace habitat
