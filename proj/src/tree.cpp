#include "habitat/tree.hpp"

#include <cmath>
#include <stdexcept>

#include "habitat/lp.hpp"
#include "habitat/polytope.hpp"

namespace habitat {

EventTree::EventTree(std::vector<double> times, std::vector<TreeNode> nodes)
    : times_(std::move(times)), nodes_(std::move(nodes)) {
    if (nodes_.empty()) throw std::invalid_argument("tree: no nodes");
    if (times_.size() < 2) throw std::invalid_argument("tree: need at least two grid times");
    for (size_t k = 0; k + 1 < times_.size(); ++k)
        if (!(times_[k + 1] > times_[k]))
            throw std::invalid_argument("tree: time grid must be strictly increasing");

    const int n = static_cast<int>(nodes_.size());
    const int N = static_cast<int>(times_.size()) - 1;
    const int d = static_cast<int>(nodes_[0].prices.size());

    for (int i = 0; i < n; ++i) {
        TreeNode& nd = nodes_[i];
        nd.id = i;
        nd.children.clear();
        if (i == 0) {
            if (nd.parent != -1) throw std::invalid_argument("tree: node 0 must be the root");
            nd.depth = 0;
            nd.prob = 1.0;
            nd.path_prob = 1.0;
        } else {
            if (nd.parent < 0 || nd.parent >= i)
                throw std::invalid_argument("tree: nodes must be in breadth-first order");
            nd.depth = nodes_[nd.parent].depth + 1;
            if (nd.depth > N) throw std::invalid_argument("tree: node beyond the time grid");
            nd.path_prob = nodes_[nd.parent].path_prob * nd.prob;
            nodes_[nd.parent].children.push_back(i);
        }
        if (static_cast<int>(nd.prices.size()) != d)
            throw std::invalid_argument("tree: inconsistent asset count at node " +
                                        std::to_string(i));
    }

    by_depth_.assign(N + 1, {});
    for (int i = 0; i < n; ++i) by_depth_[nodes_[i].depth].push_back(i);

    for (int i = 0; i < n; ++i) {
        if (nodes_[i].children.empty() && nodes_[i].depth != N)
            throw std::invalid_argument("tree: terminal node " + std::to_string(i) +
                                        " not at the final time index");
    }

    for (int id : by_depth_[N]) leaves_.push_back(id);
    for (size_t j = 0; j < leaves_.size(); ++j) {
        nodes_[leaves_[j]].leaf_begin = static_cast<int>(j);
        nodes_[leaves_[j]].leaf_end = static_cast<int>(j) + 1;
    }
    // Parents precede children, so a reverse sweep fills subtree leaf ranges.
    for (int i = n - 1; i >= 1; --i) {
        TreeNode& p = nodes_[nodes_[i].parent];
        if (p.leaf_end == 0) {
            p.leaf_begin = nodes_[i].leaf_begin;
            p.leaf_end = nodes_[i].leaf_end;
        } else {
            p.leaf_begin = std::min(p.leaf_begin, nodes_[i].leaf_begin);
            p.leaf_end = std::max(p.leaf_end, nodes_[i].leaf_end);
        }
    }
}

EventTree build_binomial(const BinomialParams& p) {
    if (p.steps < 1) throw std::invalid_argument("binomial: steps must be >= 1");
    if (!(p.down < 1.0 && 1.0 < p.up))
        throw std::invalid_argument("binomial: need down < 1 < up");
    if (!(p.p_up > 0.0 && p.p_up < 1.0))
        throw std::invalid_argument("binomial: p_up must lie in (0,1)");
    if (!(p.s0 > 0.0) || !(p.maturity > 0.0))
        throw std::invalid_argument("binomial: s0 and maturity must be positive");

    std::vector<double> times(p.steps + 1);
    for (int k = 0; k <= p.steps; ++k) times[k] = p.maturity * k / p.steps;

    std::vector<TreeNode> nodes;
    TreeNode root;
    root.parent = -1;
    root.prices = Eigen::VectorXd::Constant(1, p.s0);
    nodes.push_back(root);

    int level_begin = 0, level_end = 1;
    for (int k = 0; k < p.steps; ++k) {
        const int next_begin = static_cast<int>(nodes.size());
        for (int i = level_begin; i < level_end; ++i) {
            const double s = nodes[i].prices[0];
            for (int branch = 0; branch < 2; ++branch) {
                TreeNode nd;
                nd.parent = i;
                nd.prob = branch == 0 ? p.p_up : 1.0 - p.p_up;
                nd.prices = Eigen::VectorXd::Constant(1, s * (branch == 0 ? p.up : p.down));
                nodes.push_back(nd);
            }
        }
        level_begin = next_begin;
        level_end = static_cast<int>(nodes.size());
    }
    return EventTree(std::move(times), std::move(nodes));
}

EventTree build_trinomial(const TrinomialParams& p) {
    if (p.steps < 1) throw std::invalid_argument("trinomial: steps must be >= 1");
    if (p.moves.size() < 2) throw std::invalid_argument("trinomial: need at least two moves");
    std::vector<double> probs = p.probs;
    if (probs.empty())
        probs.assign(p.moves.size(), 1.0 / static_cast<double>(p.moves.size()));
    if (probs.size() != p.moves.size())
        throw std::invalid_argument("trinomial: probs/moves size mismatch");
    double psum = 0.0;
    for (double q : probs) {
        if (!(q > 0.0 && q < 1.0))
            throw std::invalid_argument("trinomial: probabilities must lie in (0,1)");
        psum += q;
    }
    if (std::abs(psum - 1.0) > 1e-12)
        throw std::invalid_argument("trinomial: probabilities must sum to 1");
    for (double mv : p.moves)
        if (!(mv > 0.0)) throw std::invalid_argument("trinomial: moves must be positive");
    if (!(p.s0 > 0.0) || !(p.maturity > 0.0))
        throw std::invalid_argument("trinomial: s0 and maturity must be positive");

    std::vector<double> times(p.steps + 1);
    for (int k = 0; k <= p.steps; ++k) times[k] = p.maturity * k / p.steps;

    std::vector<TreeNode> nodes;
    TreeNode root;
    root.parent = -1;
    root.prices = Eigen::VectorXd::Constant(1, p.s0);
    nodes.push_back(root);

    int level_begin = 0, level_end = 1;
    for (int k = 0; k < p.steps; ++k) {
        const int next_begin = static_cast<int>(nodes.size());
        for (int i = level_begin; i < level_end; ++i) {
            const double s = nodes[i].prices[0];
            for (size_t branch = 0; branch < p.moves.size(); ++branch) {
                TreeNode nd;
                nd.parent = i;
                nd.prob = probs[branch];
                nd.prices = Eigen::VectorXd::Constant(1, s * p.moves[branch]);
                nodes.push_back(nd);
            }
        }
        level_begin = next_begin;
        level_end = static_cast<int>(nodes.size());
    }
    return EventTree(std::move(times), std::move(nodes));
}

std::vector<std::string> validate_tree(const EventTree& tree) {
    std::vector<std::string> out;
    const int n = tree.node_count();

    for (int i = 0; i < n; ++i) {
        const TreeNode& nd = tree.node(i);
        if (!tree.is_terminal(i)) {
            if (nd.children.size() < 2)
                out.push_back("node " + std::to_string(i) + ": fewer than two children");
            double s = 0.0;
            for (int c : nd.children) s += tree.node(c).prob;
            if (std::abs(s - 1.0) > 1e-12)
                out.push_back("node " + std::to_string(i) +
                              ": child probabilities sum to " + std::to_string(s));
        }
        if (i > 0 && !(nd.prob > 0.0 && nd.prob < 1.0))
            out.push_back("node " + std::to_string(i) + ": transition probability " +
                          std::to_string(nd.prob) + " outside (0,1)");
        for (int a = 0; a < nd.prices.size(); ++a)
            if (!(nd.prices[a] > 0.0))
                out.push_back("node " + std::to_string(i) + ": nonpositive price for asset " +
                              std::to_string(a));
    }

    double leaf_sum = 0.0;
    for (int id : tree.leaves()) leaf_sum += tree.node(id).path_prob;
    if (std::abs(leaf_sum - 1.0) > 1e-12)
        out.push_back("leaf path probabilities sum to " + std::to_string(leaf_sum));

    for (int i = 0; i < n; ++i) {
        if (tree.is_terminal(i)) continue;
        try {
            node_polytope(tree, i);
        } catch (const arbitrage_error& e) {
            out.push_back("node " + std::to_string(i) + ": arbitrage (" +
                          std::string(e.what()) + ")");
        }
    }
    return out;
}

}  // namespace habitat
