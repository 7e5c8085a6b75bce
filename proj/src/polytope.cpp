#include "habitat/polytope.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "habitat/lp.hpp"

namespace habitat {

namespace {

constexpr double kInteriorTol = 1e-10;

// Equality system [1ᵀ; ΔSᵀ] q = (1, 0, ..., 0) for the children of `node`.
void node_system(const EventTree& tree, int node, Eigen::MatrixXd* A, Eigen::VectorXd* b) {
    const TreeNode& nd = tree.node(node);
    const int m = static_cast<int>(nd.children.size());
    const int d = tree.asset_count();
    A->setZero(1 + d, m);
    A->row(0).setOnes();
    for (int j = 0; j < m; ++j)
        A->col(j).tail(d) += tree.node(nd.children[j]).prices - nd.prices;
    b->setZero(1 + d);
    (*b)[0] = 1.0;
}

// max eps s.t. A q = b, q - eps >= 0. Free variables: q, eps.
SolveStatus interior_lp(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
    const int m = static_cast<int>(A.cols());
    const int r = static_cast<int>(A.rows());
    LinearProgram lp;
    const int nv = m + 1 + m;  // q, eps, slacks
    lp.objective = Eigen::VectorXd::Zero(nv);
    lp.objective[m] = 1.0;
    lp.maximize = true;
    lp.eq_matrix.setZero(r + m, nv);
    lp.eq_rhs.setZero(r + m);
    lp.eq_matrix.topLeftCorner(r, m) = A;
    lp.eq_rhs.head(r) = b;
    for (int j = 0; j < m; ++j) {
        lp.eq_matrix(r + j, j) = 1.0;
        lp.eq_matrix(r + j, m) = -1.0;
        lp.eq_matrix(r + j, m + 1 + j) = -1.0;
    }
    lp.lower_bounds.assign(nv, std::nullopt);
    for (int j = 0; j < m; ++j) lp.lower_bounds[m + 1 + j] = 0.0;
    return solve_lp(lp);
}

std::vector<Eigen::VectorXd> enumerate_vertices(const Eigen::MatrixXd& A,
                                                const Eigen::VectorXd& b) {
    const int m = static_cast<int>(A.cols());

    // Row basis of A.
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A.transpose());
    qr.setThreshold(1e-11);
    const int rank = static_cast<int>(qr.rank());
    std::vector<int> rows(qr.colsPermutation().indices().data(),
                          qr.colsPermutation().indices().data() + A.rows());
    rows.resize(rank);
    std::sort(rows.begin(), rows.end());
    Eigen::MatrixXd Ar(rank, m);
    Eigen::VectorXd br(rank);
    for (int i = 0; i < rank; ++i) {
        Ar.row(i) = A.row(rows[i]);
        br[i] = b[rows[i]];
    }

    std::vector<Eigen::VectorXd> verts;
    std::vector<int> pick(rank);
    std::function<void(int, int)> rec = [&](int next, int depth) {
        if (depth == rank) {
            Eigen::MatrixXd B(rank, rank);
            for (int i = 0; i < rank; ++i) B.col(i) = Ar.col(pick[i]);
            Eigen::FullPivLU<Eigen::MatrixXd> lu(B);
            lu.setThreshold(1e-11);
            if (!lu.isInvertible()) return;
            Eigen::VectorXd qb = lu.solve(br);
            Eigen::VectorXd q = Eigen::VectorXd::Zero(m);
            for (int i = 0; i < rank; ++i) q[pick[i]] = qb[i];
            if ((q.array() < -1e-10).any()) return;
            if ((A * q - b).lpNorm<Eigen::Infinity>() > 1e-9) return;
            q = q.cwiseMax(0.0);
            for (const auto& v : verts)
                if ((v - q).lpNorm<Eigen::Infinity>() < 1e-9) return;
            verts.push_back(q);
            return;
        }
        for (int j = next; j < m; ++j) {
            pick[depth] = j;
            rec(j + 1, depth + 1);
        }
    };
    rec(0, 0);
    return verts;
}

}  // namespace

MeasurePolytope node_polytope(const EventTree& tree, int node) {
    if (tree.is_terminal(node))
        throw std::invalid_argument("node_polytope: node " + std::to_string(node) +
                                    " is terminal");
    MeasurePolytope poly;
    poly.node = node;
    node_system(tree, node, &poly.eq_matrix, &poly.eq_rhs);

    SolveStatus st = interior_lp(poly.eq_matrix, poly.eq_rhs);
    const int r = static_cast<int>(poly.eq_matrix.rows());
    if (st.status == solve_state::infeasible) {
        Eigen::VectorXd cert =
            st.row_duals.size() >= r ? st.row_duals.head(r).eval() : st.row_duals;
        throw arbitrage_error(node, cert, "no conditional martingale measure exists");
    }
    if (st.status != solve_state::optimal)
        throw std::runtime_error("node_polytope: interior LP did not solve");
    poly.interior_radius = st.objective;
    if (st.objective <= kInteriorTol) {
        Eigen::VectorXd cert =
            st.row_duals.size() >= r ? st.row_duals.head(r).eval() : st.row_duals;
        throw arbitrage_error(node, cert, "no strictly positive conditional measure");
    }

    poly.vertices = enumerate_vertices(poly.eq_matrix, poly.eq_rhs);
    return poly;
}

std::vector<MeasurePolytope> node_polytopes(const EventTree& tree) {
    std::vector<MeasurePolytope> out(tree.node_count());
    for (int i = 0; i < tree.node_count(); ++i)
        if (!tree.is_terminal(i)) out[i] = node_polytope(tree, i);
    return out;
}

bool is_complete(const EventTree& tree) {
    for (int i = 0; i < tree.node_count(); ++i) {
        if (tree.is_terminal(i)) continue;
        if (!node_polytope(tree, i).singleton()) return false;
    }
    return true;
}

DensityProcess density_from_conditionals(const EventTree& tree,
                                         const std::vector<Eigen::VectorXd>& q) {
    if (static_cast<int>(q.size()) != tree.node_count())
        throw std::invalid_argument("density: conditionals must be indexed by node id");

    DensityProcess out;
    out.values.assign(tree.node_count(), 0.0);
    out.values[0] = 1.0;
    out.conditionals.assign(tree.node_count(), Eigen::VectorXd());

    for (int i = 0; i < tree.node_count(); ++i) {
        if (tree.is_terminal(i)) continue;
        const TreeNode& nd = tree.node(i);
        const int m = static_cast<int>(nd.children.size());
        if (static_cast<int>(q[i].size()) != m)
            throw std::invalid_argument("density: conditional at node " + std::to_string(i) +
                                        " has wrong size");
        Eigen::MatrixXd A;
        Eigen::VectorXd b;
        node_system(tree, i, &A, &b);
        if ((A * q[i] - b).lpNorm<Eigen::Infinity>() > 1e-9 || (q[i].array() < -1e-9).any())
            throw std::invalid_argument("density: conditional at node " + std::to_string(i) +
                                        " lies outside the measure polytope");
        out.conditionals[i] = q[i].cwiseMax(0.0);
        for (int j = 0; j < m; ++j) {
            const TreeNode& ch = tree.node(nd.children[j]);
            out.values[ch.id] = out.values[i] * out.conditionals[i][j] / ch.prob;
            if (!(out.conditionals[i][j] > 1e-12)) out.interior = false;
        }
    }
    return out;
}

}  // namespace habitat
