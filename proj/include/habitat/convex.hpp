#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "habitat/lp.hpp"

namespace habitat {

// Sparse affine functional a·v + constant.
struct AffineRow {
    std::vector<int> index;
    std::vector<double> coeff;
    double constant = 0.0;

    double eval(const Eigen::VectorXd& v) const {
        double s = constant;
        for (size_t k = 0; k < index.size(); ++k) s += coeff[k] * v[index[k]];
        return s;
    }
    void add(int i, double c) {
        index.push_back(i);
        coeff.push_back(c);
    }
};

struct BarrierParams {
    double mu_start = 1e-1;
    double mu_end = 1e-9;
    double mu_factor = 0.1;
    int max_newton_per_stage = 60;
    double kkt_tolerance = 1e-7;
};

// minimize value(v) subject to eq_matrix·v = eq_rhs and ineq[i](v) <= 0.
// The objective must be smooth and convex on the strictly feasible set.
struct ConvexProgram {
    int num_vars = 0;
    std::function<double(const Eigen::VectorXd&)> value;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> hessian;
    std::vector<AffineRow> ineq;
    Eigen::MatrixXd eq_matrix;  // 0 x num_vars when absent
    Eigen::VectorXd eq_rhs;
    BarrierParams barrier;
};

// Log-barrier interior point with Newton inner steps. `start` must satisfy
// the equalities and be strictly feasible for the inequalities; throws
// std::invalid_argument otherwise. On success, SolveStatus carries the
// objective trace across barrier stages (outer_objectives), the inequality
// multipliers (ineq_duals) and equality multipliers (row_duals).
SolveStatus solve_convex(const ConvexProgram& cp, const Eigen::VectorXd& start);

}  // namespace habitat
