#include "habitat/convex.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace habitat {

namespace {

Eigen::VectorXd slacks(const ConvexProgram& cp, const Eigen::VectorXd& v) {
    Eigen::VectorXd s(cp.ineq.size());
    for (size_t i = 0; i < cp.ineq.size(); ++i) s[i] = -cp.ineq[i].eval(v);
    return s;
}

// phi = f + barrier. Returns +inf outside the strictly feasible region so the
// line search can reject steps cheaply.
double barrier_value(const ConvexProgram& cp, const Eigen::VectorXd& v, double mu) {
    double phi = cp.value(v);
    for (const auto& row : cp.ineq) {
        const double s = -row.eval(v);
        if (s <= 0.0) return std::numeric_limits<double>::infinity();
        phi -= mu * std::log(s);
    }
    return phi;
}

}  // namespace

SolveStatus solve_convex(const ConvexProgram& cp, const Eigen::VectorXd& start) {
    const int n = cp.num_vars;
    if (start.size() != n)
        throw std::invalid_argument("convex: start has wrong dimension");
    const int me = static_cast<int>(cp.eq_matrix.rows());
    if (me > 0 && cp.eq_matrix.cols() != n)
        throw std::invalid_argument("convex: equality matrix has wrong column count");

    if (me > 0) {
        const double res = (cp.eq_matrix * start - cp.eq_rhs).lpNorm<Eigen::Infinity>();
        if (res > 1e-8 * (1.0 + cp.eq_rhs.lpNorm<Eigen::Infinity>()))
            throw std::invalid_argument("convex: start violates equality constraints");
    }
    {
        Eigen::VectorXd s0 = slacks(cp, start);
        for (int i = 0; i < s0.size(); ++i)
            if (s0[i] <= 0.0)
                throw std::invalid_argument(
                    "convex: start not strictly feasible for inequality " + std::to_string(i));
    }

    SolveStatus out;
    Eigen::VectorXd v = start;
    const double grad_scale = std::max(1.0, cp.gradient(start).norm());

    std::vector<double> mus;
    if (cp.ineq.empty()) {
        mus.push_back(0.0);  // single pure-Newton stage
    } else {
        for (double mu = cp.barrier.mu_start; mu >= cp.barrier.mu_end * (1.0 - 1e-12);
             mu *= cp.barrier.mu_factor)
            mus.push_back(mu);
    }

    Eigen::VectorXd eq_duals = Eigen::VectorXd::Zero(me);
    int total_newton = 0;
    bool converged_all = true;

    for (double mu : mus) {
        bool stage_converged = false;
        for (int it = 0; it < cp.barrier.max_newton_per_stage; ++it) {
            ++total_newton;
            Eigen::VectorXd g = cp.gradient(v);
            Eigen::MatrixXd H = cp.hessian(v);
            for (const auto& row : cp.ineq) {
                const double s = -row.eval(v);
                const double gfac = mu / s;
                const double hfac = mu / (s * s);
                for (size_t a = 0; a < row.index.size(); ++a) {
                    g[row.index[a]] += gfac * row.coeff[a];
                    for (size_t b = 0; b < row.index.size(); ++b)
                        H(row.index[a], row.index[b]) += hfac * row.coeff[a] * row.coeff[b];
                }
            }

            Eigen::VectorXd dx(n);
            if (me == 0) {
                Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
                dx = -ldlt.solve(g);
                if (ldlt.info() != Eigen::Success || !dx.allFinite()) {
                    H.diagonal().array() += 1e-10 * (1.0 + H.diagonal().cwiseAbs().maxCoeff());
                    dx = -H.ldlt().solve(g);
                }
            } else {
                Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + me, n + me);
                K.topLeftCorner(n, n) = H;
                K.topRightCorner(n, me) = cp.eq_matrix.transpose();
                K.bottomLeftCorner(me, n) = cp.eq_matrix;
                Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + me);
                rhs.head(n) = -g;
                Eigen::VectorXd sol = K.partialPivLu().solve(rhs);
                if (!sol.allFinite()) {
                    K.topLeftCorner(n, n).diagonal().array() +=
                        1e-10 * (1.0 + H.diagonal().cwiseAbs().maxCoeff());
                    sol = K.fullPivLu().solve(rhs);
                }
                dx = sol.head(n);
                eq_duals = sol.tail(me);
            }

            const double decrement = -g.dot(dx);
            if (!(decrement > 0)) { stage_converged = true; break; }
            if (decrement * 0.5 < 1e-14 * grad_scale * (1.0 + std::abs(cp.value(v)))) {
                stage_converged = true;
                break;
            }

            // Step to a fraction of the distance to the inequality boundary,
            // then backtrack on the barrier objective.
            double alpha = 1.0;
            for (const auto& row : cp.ineq) {
                double dg = 0.0;
                for (size_t a = 0; a < row.index.size(); ++a)
                    dg += row.coeff[a] * dx[row.index[a]];
                if (dg > 0.0) {
                    const double s = -row.eval(v);
                    alpha = std::min(alpha, 0.99 * s / dg);
                }
            }
            const double phi0 = barrier_value(cp, v, mu);
            int bt = 0;
            while (bt < 60) {
                const double phi1 = barrier_value(cp, v + alpha * dx, mu);
                if (phi1 <= phi0 - 1e-4 * alpha * decrement) break;
                alpha *= 0.5;
                ++bt;
            }
            if (bt >= 60) { stage_converged = true; break; }
            v += alpha * dx;

            if (decrement * 0.5 < 1e-12 * grad_scale) { stage_converged = true; break; }
        }
        if (!stage_converged) converged_all = false;
        out.outer_objectives.push_back(cp.value(v));
    }

    out.iterations = total_newton;
    out.solution = v;
    out.objective = cp.value(v);
    out.row_duals = eq_duals;

    const double mu_last = cp.ineq.empty() ? 0.0 : cp.barrier.mu_end;
    Eigen::VectorXd lam(cp.ineq.size());
    Eigen::VectorXd kkt = cp.gradient(v);
    for (size_t i = 0; i < cp.ineq.size(); ++i) {
        const double s = -cp.ineq[i].eval(v);
        lam[i] = mu_last / s;
        for (size_t a = 0; a < cp.ineq[i].index.size(); ++a)
            kkt[cp.ineq[i].index[a]] += lam[i] * cp.ineq[i].coeff[a];
    }
    if (me > 0) kkt += cp.eq_matrix.transpose() * eq_duals;
    out.ineq_duals = lam;
    out.kkt_residual = kkt.norm();
    out.status = (converged_all || out.kkt_residual <= cp.barrier.kkt_tolerance * grad_scale)
                     ? solve_state::optimal
                     : solve_state::max_iterations;
    return out;
}

}  // namespace habitat
