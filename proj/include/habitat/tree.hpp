#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace habitat {

struct TreeNode {
    int id = 0;
    int parent = -1;
    int depth = 0;            // time index k
    double prob = 1.0;        // conditional transition probability from the parent
    double path_prob = 1.0;   // product of edge probabilities from the root
    Eigen::VectorXd prices;   // risky asset prices; the bond is the numeraire
    std::vector<int> children;
    int leaf_begin = 0, leaf_end = 0;  // contiguous range in leaf ordering
};

// Finite filtered market on a tree. Nodes are stored in breadth-first order
// (parents precede children), all terminal nodes sit at the final time index,
// and the leaf ordering makes every subtree's leaves contiguous.
class EventTree {
public:
    // `times` is the grid t_0 < ... < t_N; `nodes` need parent, prob, prices.
    EventTree(std::vector<double> times, std::vector<TreeNode> nodes);

    int node_count() const { return static_cast<int>(nodes_.size()); }
    int leaf_count() const { return static_cast<int>(leaves_.size()); }
    int steps() const { return static_cast<int>(times_.size()) - 1; }  // N
    int asset_count() const { return static_cast<int>(nodes_[0].prices.size()); }

    const TreeNode& node(int id) const { return nodes_[id]; }
    const std::vector<TreeNode>& nodes() const { return nodes_; }
    const std::vector<int>& leaves() const { return leaves_; }
    const std::vector<int>& nodes_at(int depth) const { return by_depth_[depth]; }

    bool is_terminal(int id) const { return nodes_[id].children.empty(); }
    double time(int k) const { return times_[k]; }
    double dt(int k) const { return times_[k + 1] - times_[k]; }
    double horizon() const { return times_.back(); }
    const std::vector<double>& times() const { return times_; }

private:
    std::vector<double> times_;
    std::vector<TreeNode> nodes_;
    std::vector<int> leaves_;
    std::vector<std::vector<int>> by_depth_;
};

struct BinomialParams {
    int steps = 1;
    double up = 2.0, down = 0.5, p_up = 0.5;
    double s0 = 1.0;
    double maturity = 1.0;
};

struct TrinomialParams {
    int steps = 1;
    std::vector<double> moves = {2.0, 1.0, 0.5};
    std::vector<double> probs = {};  // defaults to uniform
    double s0 = 1.0;
    double maturity = 1.0;
};

EventTree build_binomial(const BinomialParams& p);
EventTree build_trinomial(const TrinomialParams& p);

// Full list of invariant violations; empty iff the tree is well formed and
// arbitrage-free at every node.
std::vector<std::string> validate_tree(const EventTree& tree);

}  // namespace habitat
