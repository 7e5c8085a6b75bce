#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "habitat/habit.hpp"
#include "support.hpp"

using namespace habitat;

namespace {

// Deterministic chain market (binomial with symmetric factors) used where the
// habit examples only need the time grid.
EventTree grid_tree(int steps, double maturity) {
    BinomialParams p;
    p.steps = steps;
    p.maturity = maturity;
    return build_binomial(p);
}

Plan constant_plan(const EventTree& tree, double v, plan_kind kind) {
    Plan p;
    p.kind = kind;
    p.values.assign(tree.node_count(), 0.0);
    for (int i = 0; i < tree.node_count(); ++i)
        if (!tree.is_terminal(i)) p.values[i] = v;
    return p;
}

}  // namespace

TEST_CASE("weights: zero discounts give unit weights") {
    auto tree = grid_tree(3, 1.0);
    auto wp = weights(tree, constant_habit(tree, 0.0, 0.0));
    for (int i = 0; i < tree.node_count(); ++i) {
        CHECK(wp.w[i] == 1.0);
        CHECK(wp.w_tilde[i] == 1.0);
    }
}

TEST_CASE("weights: matched discounts leave w flat and decay w_tilde") {
    auto tree = grid_tree(2, 1.0);  // dt = 0.5
    auto wp = weights(tree, constant_habit(tree, 0.2, 0.2));
    for (int id : tree.nodes_at(2)) {
        CHECK(wp.w[id] == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(wp.w_tilde[id] == doctest::Approx(0.81).epsilon(1e-15));
    }
}

TEST_CASE("weights: pure intensity compounds w") {
    auto tree = grid_tree(2, 2.0);  // dt = 1
    auto wp = weights(tree, constant_habit(tree, 0.0, 1.0));
    for (int id : tree.nodes_at(2)) {
        CHECK(wp.w[id] == doctest::Approx(4.0));
        CHECK(wp.w_tilde[id] == 1.0);
    }
}

TEST_CASE("weights: coarse grid rejected when alpha*dt >= 1") {
    auto tree = grid_tree(2, 2.0);  // dt = 1
    CHECK_THROWS_WITH_AS(weights(tree, constant_habit(tree, 1.0, 0.0)),
                         doctest::Contains("node"), std::invalid_argument);
}

TEST_CASE("habit path: decay only") {
    auto tree = grid_tree(3, 1.0);
    HabitSpec h = constant_habit(tree, 0.5, 0.0);
    auto wp = weights(tree, h);
    auto Z = habit_path(tree, h, constant_plan(tree, 5.0, plan_kind::consumption), 2.0);
    for (int i = 0; i < tree.node_count(); ++i)
        CHECK(Z[i] == doctest::Approx(2.0 * wp.w_tilde[i]).epsilon(1e-15));
}

TEST_CASE("habit path: hand recursion") {
    auto tree = grid_tree(2, 1.0);  // dt = 0.5
    HabitSpec h = constant_habit(tree, 0.0, 1.0);
    auto Z = habit_path(tree, h, constant_plan(tree, 1.0, plan_kind::consumption), 1.0);
    CHECK(Z[0] == 1.0);
    for (int id : tree.nodes_at(1)) CHECK(Z[id] == doctest::Approx(1.5));
    for (int id : tree.nodes_at(2)) CHECK(Z[id] == doctest::Approx(2.0));
}

TEST_CASE("habit path: zero start and zero consumption stay zero") {
    auto tree = grid_tree(3, 1.0);
    HabitSpec h = constant_habit(tree, 0.3, 0.7);
    auto Z = habit_path(tree, h, constant_plan(tree, 0.0, plan_kind::consumption), 0.0);
    for (double z : Z) CHECK(z == 0.0);
}

TEST_CASE("to_auxiliary: first epoch with zero initial habit") {
    auto tree = grid_tree(2, 1.0);
    HabitSpec h = constant_habit(tree, 0.1, 0.4);
    auto c = constant_plan(tree, 0.7, plan_kind::consumption);
    auto aux = to_auxiliary(tree, h, c, 0.0);
    CHECK(aux.kind == plan_kind::auxiliary);
    CHECK(aux.values[0] == doctest::Approx(0.7));
}

TEST_CASE("to_auxiliary: addictive violation is reported with the node") {
    auto tree = grid_tree(2, 1.0);
    HabitSpec h = constant_habit(tree, 0.0, 1.0);
    auto c = constant_plan(tree, 1.0, plan_kind::consumption);
    // Z_1 = 1.5 > c_1 = 1.
    CHECK_THROWS_WITH_AS(to_auxiliary(tree, h, c, 1.0), doctest::Contains("node"),
                         std::invalid_argument);
}

TEST_CASE("subsistence plan equals its own habit") {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        auto tree = testing::random_tree(rng);
        auto h = testing::random_habit(rng, tree);
        const double z = rng.uniform(0.0, 2.0);
        auto cbar = subsistence_plan(tree, h, z);
        auto aux = to_auxiliary(tree, h, cbar, z);
        for (int i = 0; i < tree.node_count(); ++i)
            CHECK(std::abs(aux.values[i]) <= 1e-12);
    }
}

TEST_CASE("from_auxiliary: zero auxiliary gives the subsistence plan") {
    auto tree = grid_tree(3, 3.0);  // dt = 1
    HabitSpec h = constant_habit(tree, 0.0, 1.0);
    auto c = from_auxiliary(tree, h, constant_plan(tree, 0.0, plan_kind::auxiliary), 1.0);
    // c = z * w = (1, 2, 4, ...).
    CHECK(c.values[0] == doctest::Approx(1.0));
    for (int id : tree.nodes_at(1)) CHECK(c.values[id] == doctest::Approx(2.0));
    for (int id : tree.nodes_at(2)) CHECK(c.values[id] == doctest::Approx(4.0));
}

TEST_CASE("transform round-trip is exact") {
    Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        auto tree = testing::random_tree(rng);
        auto h = testing::random_habit(rng, tree);
        const double z = rng.uniform(0.0, 1.5);
        auto aux = testing::random_auxiliary_plan(rng, tree);
        auto c = from_auxiliary(tree, h, aux, z);
        auto back = to_auxiliary(tree, h, c, z);
        for (int i = 0; i < tree.node_count(); ++i)
            CHECK(back.values[i] == doctest::Approx(aux.values[i]).epsilon(1e-14));
        auto c2 = from_auxiliary(tree, h, back, z);
        for (int i = 0; i < tree.node_count(); ++i)
            CHECK(c2.values[i] == doctest::Approx(c.values[i]).epsilon(1e-14));
    }
}

TEST_CASE("habit monotonicity: more consumption raises later habit") {
    Rng rng(9);
    auto tree = testing::random_tree(rng, 3, 3);
    auto h = testing::random_habit(rng, tree);
    auto c = constant_plan(tree, 1.0, plan_kind::consumption);
    auto Z0 = habit_path(tree, h, c, 0.5);
    c.values[0] += 0.25;
    auto Z1 = habit_path(tree, h, c, 0.5);
    for (int i = 0; i < tree.node_count(); ++i) CHECK(Z1[i] >= Z0[i] - 1e-15);
}

TEST_CASE("pairing basics") {
    auto tree = grid_tree(4, 1.0);
    std::vector<double> ones(tree.node_count(), 1.0);
    CHECK(pairing(tree, ones, ones) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("pairing against a density uses the martingale telescoping") {
    Rng rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        auto tree = testing::random_tree(rng);
        auto h = testing::random_habit(rng, tree, /*deterministic=*/true);
        auto den = testing::random_interior_density(rng, tree);
        auto wp = weights(tree, h);
        // Deterministic w: <w, Y> = sum_k w_k dt_k.
        double expected = 0.0;
        for (int k = 0; k < tree.steps(); ++k)
            expected += wp.w[tree.nodes_at(k)[0]] * tree.dt(k);
        CHECK(pairing(tree, wp.w, den.values) ==
              doctest::Approx(expected).epsilon(1e-11));
    }
}

TEST_CASE("auxiliary dual: single epoch collapses to the density") {
    auto tree = grid_tree(1, 1.0);
    HabitSpec h = constant_habit(tree, 0.0, 0.9);
    auto den = density_from_conditionals(
        tree, [&] {
            std::vector<Eigen::VectorXd> q(tree.node_count());
            q[0] = node_polytope(tree, 0).vertices[0];
            return q;
        }());
    auto gam = auxiliary_dual(tree, h, den);
    CHECK(gam.gamma[0] == doctest::Approx(1.0));
}

TEST_CASE("auxiliary dual: two epochs with matched discounts") {
    auto tree = grid_tree(2, 1.0);  // dt = 0.5
    const double dbar = 0.4;
    HabitSpec h = constant_habit(tree, dbar, dbar);
    Rng rng(2);
    auto den = testing::random_interior_density(rng, tree);
    auto gam = auxiliary_dual(tree, h, den);
    // Gamma_0 = 1 + dbar * dt * E[Y_1] = 1 + dbar * dt.
    CHECK(gam.gamma[0] == doctest::Approx(1.0 + dbar * 0.5).epsilon(1e-12));
}

TEST_CASE("auxiliary dual: zero intensity collapses to the density") {
    Rng rng(31);
    auto tree = testing::random_tree(rng);
    HabitSpec h = constant_habit(tree, 0.4, 0.0);
    auto den = testing::random_interior_density(rng, tree);
    auto gam = auxiliary_dual(tree, h, den);
    for (int i = 0; i < tree.node_count(); ++i)
        if (!tree.is_terminal(i))
            CHECK(gam.gamma[i] == doctest::Approx(den.values[i]).epsilon(1e-14));
}

TEST_CASE("gamma dominates the density when delta >= 0") {
    Rng rng(33);
    for (int trial = 0; trial < 30; ++trial) {
        auto tree = testing::random_tree(rng);
        auto h = testing::random_habit(rng, tree);
        auto den = testing::random_interior_density(rng, tree);
        auto gam = auxiliary_dual(tree, h, den);
        for (int i = 0; i < tree.node_count(); ++i)
            if (!tree.is_terminal(i)) CHECK(gam.gamma[i] >= den.values[i] - 1e-14);
    }
}

TEST_CASE("budget identities vanish to rounding") {
    Rng rng(41);
    double worst1 = 0.0, worst2 = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        auto tree = testing::random_tree(rng);
        auto h = testing::random_habit(rng, tree);
        const double z = rng.uniform(0.0, 1.5);
        auto aux = testing::random_auxiliary_plan(rng, tree);
        auto c = from_auxiliary(tree, h, aux, z);
        auto den = testing::random_interior_density(rng, tree);
        auto [r1, r2] = budget_identity_residuals(tree, h, c, z, den);
        const double scale = 1.0 + std::abs(pairing(tree, c.values, den.values));
        worst1 = std::max(worst1, std::abs(r1) / scale);
        worst2 = std::max(worst2, std::abs(r2) / scale);
    }
    CHECK(worst1 <= 1e-10);
    CHECK(worst2 <= 1e-10);
}

TEST_CASE("budget identity r2 with zero intensity is exact") {
    Rng rng(43);
    auto tree = testing::random_tree(rng);
    HabitSpec h = constant_habit(tree, 0.25, 0.0);
    auto den = testing::random_interior_density(rng, tree);
    auto aux = testing::random_auxiliary_plan(rng, tree);
    auto c = from_auxiliary(tree, h, aux, 0.7);
    auto [r1, r2] = budget_identity_residuals(tree, h, c, 0.7, den);
    CHECK(std::abs(r1) <= 1e-12);
    CHECK(std::abs(r2) <= 1e-12);
}
