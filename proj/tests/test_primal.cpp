#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "habitat/primal.hpp"
#include "support.hpp"

using namespace habitat;

namespace {

EventTree binomial_n2() {
    return build_binomial({.steps = 2, .up = 2.0, .down = 0.5, .p_up = 0.5,
                           .s0 = 1.0, .maturity = 2.0});  // dt = 1
}

HabitSpec stochastic_delta(const EventTree& tree) {
    HabitSpec h = constant_habit(tree, 0.0, 0.0);
    for (int i = 0; i < tree.node_count(); ++i)
        if (!tree.is_terminal(i)) h.delta[i] = 0.1 + 0.8 * static_cast<double>(i % 3);
    return h;
}

}  // namespace

TEST_CASE("complete binomial log solution in closed form") {
    auto tree = binomial_n2();
    auto habit = constant_habit(tree, 0.0, 0.0);
    auto log_u = make_log_utility();
    const double expected =
        std::log(0.5) + 0.5 * std::log(0.75) + 0.5 * std::log(0.375);

    for (bool wealth_form : {true, false}) {
        PrimalSolution sol = wealth_form
                                 ? solve_primal_wealth(tree, habit, log_u, 1.0, 0.0)
                                 : solve_primal_auxiliary(tree, habit, log_u, 1.0, 0.0);
        REQUIRE(sol.status.status == solve_state::optimal);
        CHECK(sol.value == doctest::Approx(expected).epsilon(1e-7));
        CHECK(sol.consumption.values[0] == doctest::Approx(0.5).epsilon(1e-5));
        // Children in build order: up then down.
        CHECK(sol.consumption.values[1] == doctest::Approx(0.75).epsilon(1e-5));
        CHECK(sol.consumption.values[2] == doctest::Approx(0.375).epsilon(1e-5));
    }
}

TEST_CASE("wealth solution satisfies the self-financing recursion") {
    Rng rng(101);
    for (int trial = 0; trial < 8; ++trial) {
        auto tree = testing::random_tree(rng, 3, 3);
        auto habit = testing::random_habit(rng, tree);
        auto pb = price_bounds(tree, habit);
        const double z = rng.uniform(0.0, 0.8);
        const double x = z * pb.p_bar + rng.uniform(0.3, 1.5);
        auto sol = solve_primal_wealth(tree, habit, make_log_utility(), x, z);
        REQUIRE(sol.status.status == solve_state::optimal);

        CHECK(sol.wealth[0] == doctest::Approx(x));
        for (int i = 1; i < tree.node_count(); ++i) {
            const auto& nd = tree.node(i);
            const auto& pn = tree.node(nd.parent);
            const double gains = sol.strategy[nd.parent].dot(nd.prices - pn.prices);
            const double expect = sol.wealth[nd.parent] + gains -
                                  sol.consumption.values[nd.parent] * tree.dt(pn.depth);
            CHECK(std::abs(sol.wealth[i] - expect) <= 1e-9 * (1.0 + std::abs(expect)));
            CHECK(sol.wealth[i] >= -1e-9);
        }
        // c - Z = c~ and positivity of the optimal auxiliary plan.
        for (int i = 0; i < tree.node_count(); ++i) {
            if (tree.is_terminal(i)) continue;
            CHECK(std::abs(sol.consumption.values[i] - sol.habit[i] -
                           sol.auxiliary.values[i]) <= 1e-9);
            CHECK(sol.auxiliary.values[i] > 0.0);
        }
    }
}

TEST_CASE("feasibility flips across the superhedging boundary") {
    auto tree = build_trinomial({.steps = 3, .maturity = 1.0});
    auto habit = stochastic_delta(tree);
    auto pb = price_bounds(tree, habit);
    const double z = 1.0;

    CHECK_THROWS_AS(
        solve_primal_wealth(tree, habit, make_log_utility(), z * pb.p_bar * (1 - 1e-3), z),
        infeasible_error);
    auto sol = solve_primal_wealth(tree, habit, make_log_utility(),
                                   z * pb.p_bar * (1 + 1e-3), z);
    CHECK(sol.status.status == solve_state::optimal);
    CHECK(std::isfinite(sol.value));

    // The subsistence plan certifies feasibility on the inside.
    auto cbar = subsistence_plan(tree, habit, z);
    auto sh = superhedge(tree, cbar.values, node_polytopes(tree));
    CHECK(sh.value[0] == doctest::Approx(z * pb.p_bar).epsilon(1e-10));
    CHECK(sh.value[0] < z * pb.p_bar * (1 + 1e-3));
}

TEST_CASE("value embedding: both formulations agree") {
    Rng rng(103);
    for (int trial = 0; trial < 10; ++trial) {
        auto tree = testing::random_tree(rng, 3, 3);
        auto habit = testing::random_habit(rng, tree);
        auto pb = price_bounds(tree, habit);
        const double z = rng.uniform(0.0, 0.7);
        const double x = z * pb.p_bar + rng.uniform(0.4, 1.5);
        const auto u = trial % 2 ? make_power_utility(0.5) : make_log_utility();
        auto a = solve_primal_wealth(tree, habit, u, x, z);
        auto b = solve_primal_auxiliary(tree, habit, u, x, z);
        REQUIRE(a.status.status == solve_state::optimal);
        REQUIRE(b.status.status == solve_state::optimal);
        CHECK(std::abs(a.value - b.value) <= 1e-6 * (1.0 + std::abs(a.value)));
    }
}

TEST_CASE("budget saturation at the optimum") {
    auto tree = build_trinomial({.steps = 2, .maturity = 1.0});
    auto habit = constant_habit(tree, 0.2, 0.5);
    auto sol = solve_primal_auxiliary(tree, habit, make_log_utility(), 1.0, 0.4);
    REQUIRE(sol.binding_constraint >= 0);
    CHECK(sol.budget_slacks[sol.binding_constraint] <= 1e-6);
    CHECK(sol.budget_slacks[sol.binding_constraint] >= -1e-8);
}

TEST_CASE("zero habit reduces to the plain consumption problem") {
    auto tree = build_trinomial({.steps = 2, .maturity = 1.0});
    auto habit = constant_habit(tree, 0.0, 0.0);
    auto sol = solve_primal_auxiliary(tree, habit, make_log_utility(), 1.0, 0.0);
    for (int i = 0; i < tree.node_count(); ++i)
        CHECK(sol.consumption.values[i] ==
              doctest::Approx(sol.auxiliary.values[i]).epsilon(1e-12));
}

TEST_CASE("negative habit level solves as an abstract extension") {
    auto tree = build_trinomial({.steps = 3, .maturity = 1.0});
    auto habit = stochastic_delta(tree);
    auto pb = price_bounds(tree, habit);
    const double z = -1.0;
    const double x = z * pb.p_low + 0.5;
    auto sol = solve_primal_auxiliary(tree, habit, make_log_utility(), x, z);
    CHECK(sol.status.status == solve_state::optimal);
    CHECK(sol.abstract_extension);
    CHECK(std::isfinite(sol.value));
}

TEST_CASE("brute force agrees with the solver on tiny instances") {
    // N = 2 binomial, log utility.
    {
        auto tree = binomial_n2();
        auto habit = constant_habit(tree, 0.0, 0.0);
        auto sol = solve_primal_wealth(tree, habit, make_log_utility(), 1.0, 0.0);
        auto bf = brute_force_primal(tree, habit, make_log_utility(), 1.0, 0.0, 1e-3);
        REQUIRE(bf.feasible);
        CHECK(std::abs(sol.value - bf.value) <= 2e-3);
    }
    // N = 1 trinomial, power utility.
    {
        auto tree = build_trinomial({.steps = 1, .maturity = 1.0});
        auto habit = constant_habit(tree, 0.3, 0.6);
        auto sol = solve_primal_wealth(tree, habit, make_power_utility(0.5), 1.0, 0.2);
        auto bf =
            brute_force_primal(tree, habit, make_power_utility(0.5), 1.0, 0.2, 1e-3);
        REQUIRE(bf.feasible);
        CHECK(std::abs(sol.value - bf.value) <= 2e-3);
    }
    // Degenerate zero-habit case.
    {
        auto tree = build_binomial({.steps = 2, .maturity = 1.0});
        auto habit = constant_habit(tree, 0.0, 0.0);
        auto sol = solve_primal_wealth(tree, habit, make_log_utility(), 1.0, 0.0);
        auto bf = brute_force_primal(tree, habit, make_log_utility(), 1.0, 0.0, 1e-3);
        REQUIRE(bf.feasible);
        CHECK(std::abs(sol.value - bf.value) <= 2e-3);
    }
    // Infeasible pair: empty feasible grid.
    {
        auto tree = binomial_n2();
        auto habit = constant_habit(tree, 0.0, 0.5);
        auto pb = price_bounds(tree, habit);
        auto bf = brute_force_primal(tree, habit, make_log_utility(),
                                     0.9 * pb.p_bar, 1.0, 1e-3);
        CHECK(!bf.feasible);
    }
}

TEST_CASE("value monotone in x, non-increasing in z, concave along segments") {
    auto tree = build_trinomial({.steps = 2, .maturity = 1.0});
    auto habit = constant_habit(tree, 0.1, 0.4);
    auto u = make_log_utility();
    auto value = [&](double x, double z) {
        return solve_primal_auxiliary(tree, habit, u, x, z).value;
    };
    const double v1 = value(1.0, 0.3), v2 = value(1.3, 0.3), v3 = value(1.6, 0.3);
    CHECK(v2 > v1);
    CHECK(v3 > v2);
    CHECK(0.5 * (v1 + v3) <= v2 + 1e-8);  // concavity in x

    const double w1 = value(1.2, 0.1), w2 = value(1.2, 0.45), w3 = value(1.2, 0.8);
    CHECK(w2 <= w1 + 1e-9);
    CHECK(w3 <= w2 + 1e-9);
    CHECK(0.5 * (w1 + w3) <= w2 + 1e-8);  // concavity in z
}
