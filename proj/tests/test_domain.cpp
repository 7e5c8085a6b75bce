#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "habitat/domain.hpp"
#include "support.hpp"

using namespace habitat;

TEST_CASE("deterministic shadow endowment prices to the weight integral") {
    auto tree = build_trinomial({.steps = 3, .maturity = 1.0});
    HabitSpec h = constant_habit(tree, 0.3, 0.3);  // delta - alpha = 0, w flat
    auto pb = price_bounds(tree, h);
    CHECK(pb.p_bar == doctest::Approx(1.0).epsilon(1e-12));  // sum w_k dt = T
    CHECK(pb.p_low == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(pb.replicable);
}

TEST_CASE("complete binomial market is replicable for any habit") {
    Rng rng(17);
    auto tree = build_binomial({.steps = 3});
    auto h = testing::random_habit(rng, tree);
    auto pb = price_bounds(tree, h);
    CHECK(pb.replicable);
    CHECK(pb.p_bar == doctest::Approx(pb.p_low).epsilon(1e-12));
    CHECK(pb.p_bar > 0.0);
}

namespace {

// Per-node delta table that makes w stochastic on a trinomial tree.
HabitSpec stochastic_delta_habit(const EventTree& tree) {
    HabitSpec h = constant_habit(tree, 0.0, 0.0);
    for (int i = 0; i < tree.node_count(); ++i) {
        if (tree.is_terminal(i)) continue;
        h.delta[i] = 0.2 + 0.9 * static_cast<double>(i % 3);
    }
    return h;
}

}  // namespace

TEST_CASE("stochastic intensity opens a strict superhedging gap") {
    auto tree = build_trinomial({.steps = 3, .maturity = 1.0});
    auto h = stochastic_delta_habit(tree);
    auto pb = price_bounds(tree, h);
    CHECK(pb.p_bar > pb.p_low + 1e-6);
    CHECK(!pb.replicable);

    // The attaining measures certify the bounds.
    auto den_hi = density_from_conditionals(tree, pb.argmax_conditionals);
    auto den_lo = density_from_conditionals(tree, pb.argmin_conditionals);
    auto wp = weights(tree, h);
    CHECK(pairing(tree, wp.w, den_hi.values) == doctest::Approx(pb.p_bar).epsilon(1e-10));
    CHECK(pairing(tree, wp.w, den_lo.values) == doctest::Approx(pb.p_low).epsilon(1e-10));
}

TEST_CASE("dynamic programming agrees with the global linear program") {
    Rng rng(23);
    for (int trial = 0; trial < 25; ++trial) {
        auto tree = testing::random_tree(rng, 3, 3);
        auto h = testing::random_habit(rng, tree);
        auto pb = price_bounds(tree, h);
        CHECK(std::abs(pb.p_bar - shadow_price_lp(tree, h, true)) <=
              1e-9 * (1.0 + pb.p_bar));
        CHECK(std::abs(pb.p_low - shadow_price_lp(tree, h, false)) <=
              1e-9 * (1.0 + std::abs(pb.p_low)));
        CHECK(pb.p_low <= pb.p_bar + 1e-12);
        CHECK(pb.p_low > 0.0);
    }
}

TEST_CASE("effective domain boundary semantics") {
    auto tree = build_trinomial({.steps = 3});
    auto h = stochastic_delta_habit(tree);
    auto pb = price_bounds(tree, h);

    CHECK(in_effective_domain(1.0, 0.0, pb));
    CHECK(!in_effective_domain(0.0, 0.0, pb));
    CHECK(!in_effective_domain(1.0 * pb.p_bar, 1.0, pb));          // boundary excluded
    CHECK(in_effective_domain(1.01 * pb.p_bar, 1.0, pb));
    CHECK(in_effective_domain(pb.p_bar, 1.0, pb, /*closure=*/true));
    CHECK(!in_effective_domain(1.0, -0.5, pb));
}

TEST_CASE("enlarged domain admits negative habit levels") {
    auto tree = build_trinomial({.steps = 3});
    auto h = stochastic_delta_habit(tree);
    auto pb = price_bounds(tree, h);

    CHECK(in_enlarged_domain(1.0, 0.0, pb));
    CHECK(in_enlarged_domain(-pb.p_low / 2, -1.0, pb));  // x > p_low z with z < 0
    const double mid = 0.5 * (pb.p_low + pb.p_bar);
    CHECK(!in_enlarged_domain(mid, 1.0, pb));  // between the prices fails for z >= 0
    CHECK(in_enlarged_domain(mid, -1.0, pb) == (mid > -pb.p_low));
}

TEST_CASE("dual cone basics and replicable routing") {
    auto tree = build_trinomial({.steps = 3});
    auto h = stochastic_delta_habit(tree);
    auto pb = price_bounds(tree, h);

    const double mid = 0.5 * (pb.p_low + pb.p_bar);
    CHECK(in_dual_cone(1.0, mid, pb));
    CHECK(!in_dual_cone(1.0, pb.p_bar, pb));  // open cone
    CHECK(!in_dual_cone(0.0, mid, pb));

    auto flat = constant_habit(tree, 0.2, 0.2);
    auto pb_flat = price_bounds(tree, flat);
    CHECK_THROWS_AS(in_dual_cone(1.0, pb_flat.p_bar, pb_flat), routing_error);
}

TEST_CASE("polarity and homogeneity on random samples") {
    auto tree = build_trinomial({.steps = 3});
    auto h = stochastic_delta_habit(tree);
    auto pb = price_bounds(tree, h);

    Rng rng(29);
    int checked = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const double x = rng.uniform(-2, 4);
        const double z = rng.uniform(-2, 2);
        const double y = rng.uniform(0.01, 3);
        const double r = rng.uniform(pb.p_low * y, pb.p_bar * y);
        if (!in_enlarged_domain(x, z, pb) || !in_dual_cone(y, r, pb)) continue;
        ++checked;
        CHECK(x * y - z * r > 0.0);
        const double s = rng.uniform(0.1, 5.0);
        CHECK(in_enlarged_domain(s * x, s * z, pb));
        CHECK(in_dual_cone(s * y, s * r, pb));
    }
    CHECK(checked > 200);
}

TEST_CASE("superhedge value matches the price bound and hedges dominate") {
    Rng rng(31);
    for (int trial = 0; trial < 10; ++trial) {
        auto tree = testing::random_tree(rng, 3, 3);
        auto h = testing::random_habit(rng, tree);
        auto wp = weights(tree, h);
        auto polys = node_polytopes(tree);
        std::vector<double> pay(tree.node_count(), 0.0);
        for (int i = 0; i < tree.node_count(); ++i)
            if (!tree.is_terminal(i)) pay[i] = wp.w[i];
        auto sh = superhedge(tree, pay, polys);
        auto pb = price_bounds(tree, h);
        CHECK(sh.value[0] == doctest::Approx(pb.p_bar).epsilon(1e-10));

        // lambda + H dS_j >= V(child_j) with lambda = V(n) - pay dt.
        for (int i = 0; i < tree.node_count(); ++i) {
            if (tree.is_terminal(i)) continue;
            const TreeNode& nd = tree.node(i);
            const double lambda = sh.value[i] - pay[i] * tree.dt(nd.depth);
            for (int c : nd.children) {
                const double hs =
                    sh.strategy[i].dot(tree.node(c).prices - nd.prices);
                CHECK(lambda + hs >= sh.value[c] - 1e-8);
            }
        }
    }
}
