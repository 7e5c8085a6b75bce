#include "habitat/utility.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace habitat {

UtilitySpec make_log_utility(double beta) {
    if (beta < 0.0) throw std::invalid_argument("utility: beta must be >= 0");
    UtilitySpec u;
    u.family = utility_family::log_utility;
    u.beta = beta;
    u.label = "log";
    u.U = [beta](double t, double x) { return std::exp(-beta * t) * std::log(x); };
    u.U_prime = [beta](double t, double x) { return std::exp(-beta * t) / x; };
    u.I = [beta](double t, double y) { return std::exp(-beta * t) / y; };
    u.V = [beta](double t, double y) {
        return std::exp(-beta * t) * (-std::log(y * std::exp(beta * t)) - 1.0);
    };
    u.V_prime = [beta](double t, double y) { return -std::exp(-beta * t) / y; };
    return u;
}

UtilitySpec make_power_utility(double p, double beta) {
    if (!(p < 1.0) || p == 0.0)
        throw std::invalid_argument("utility: power exponent must lie in (-inf,1) \\ {0}");
    if (beta < 0.0) throw std::invalid_argument("utility: beta must be >= 0");
    UtilitySpec u;
    u.family = utility_family::power_utility;
    u.beta = beta;
    u.exponent = p;
    u.label = "power(" + std::to_string(p) + ")";
    const double q = p / (p - 1.0);  // conjugate exponent
    u.U = [beta, p](double t, double x) { return std::exp(-beta * t) * std::pow(x, p) / p; };
    u.U_prime = [beta, p](double t, double x) {
        return std::exp(-beta * t) * std::pow(x, p - 1.0);
    };
    u.I = [beta, p](double t, double y) {
        return std::pow(y * std::exp(beta * t), 1.0 / (p - 1.0));
    };
    u.V = [beta, p, q](double t, double y) {
        return std::exp(-beta * t) * ((1.0 - p) / p) * std::pow(y * std::exp(beta * t), q);
    };
    u.V_prime = [beta, p](double t, double y) {
        return -std::pow(y * std::exp(beta * t), 1.0 / (p - 1.0));
    };
    return u;
}

UtilitySpec make_custom_utility(std::string label, std::function<double(double, double)> U,
                                std::function<double(double, double)> U_prime,
                                std::function<double(double, double)> I,
                                std::function<double(double, double)> V,
                                std::function<double(double, double)> V_prime) {
    if (!U || !U_prime || !I || !V || !V_prime)
        throw std::invalid_argument("utility: custom families must supply U, U', I, V, V'");
    UtilitySpec u;
    u.family = utility_family::custom;
    u.label = std::move(label);
    u.U = std::move(U);
    u.U_prime = std::move(U_prime);
    u.I = std::move(I);
    u.V = std::move(V);
    u.V_prime = std::move(V_prime);
    return u;
}

namespace {

struct RatioScan {
    std::vector<int> exps;       // grid exponent j of each finite sample
    std::vector<double> values;  // sup over t of the growth ratio at 2^(+-j)
    bool truncated = false;      // non-finite value inside the outer half
};

RatioScan scan_ratios(const std::function<double(double)>& ratio_sup_t, int max_exp,
                      bool increasing_x) {
    RatioScan out;
    for (int j = 0; j <= max_exp; ++j) {
        const double x = increasing_x ? std::ldexp(1.0, j) : std::ldexp(1.0, -j);
        const double r = ratio_sup_t(x);
        if (!std::isfinite(r)) {
            // Singularities near the inner edge (log at x = 1) are skipped;
            // overflow in the asymptotic range truncates the scan.
            if (j >= max_exp / 2) {
                out.truncated = true;
                break;
            }
            continue;
        }
        out.exps.push_back(j);
        out.values.push_back(r);
    }
    return out;
}

// Least-squares fit of a_j = L - C/j over the outer half; extrapolates slowly
// converging growth ratios (like 1 - 1/log x) past the grid edge.
double harmonic_tail_limit(const RatioScan& scan, bool* ok) {
    *ok = false;
    const size_t n = scan.values.size();
    if (n < 4) return 0.0;
    const size_t lo = n / 2;
    double s1 = 0, sx = 0, sxx = 0, sy = 0, sxy = 0;
    for (size_t i = lo; i < n; ++i) {
        const double x = 1.0 / static_cast<double>(scan.exps[i] + 1);
        const double y = scan.values[i];
        s1 += 1; sx += x; sxx += x * x; sy += y; sxy += x * y;
    }
    const double det = s1 * sxx - sx * sx;
    if (std::abs(det) < 1e-14) return 0.0;
    const double L = (sxx * sy - sx * sxy) / det;
    *ok = std::isfinite(L);
    return L;
}

// Grid estimate of a limsup: max over the outer half, bumped up by the
// harmonic-tail fit when the sequence is still increasing there.
double limsup_estimate(const RatioScan& scan) {
    if (scan.values.empty()) return std::numeric_limits<double>::infinity();
    const size_t n = scan.values.size();
    double raw = -std::numeric_limits<double>::infinity();
    for (size_t j = n / 2; j < n; ++j) raw = std::max(raw, scan.values[j]);
    bool ok = false;
    const double fit = harmonic_tail_limit(scan, &ok);
    return ok ? std::max(raw, fit) : raw;
}

bool tail_diverging(const RatioScan& scan) {
    const size_t n = scan.values.size();
    if (scan.truncated) return true;
    if (n < 4) return false;
    const double first = scan.values[n / 2];
    const double last = scan.values[n - 1];
    return std::isfinite(last) && last > 2.0 * std::max(first, 1.0);
}

}  // namespace

ElasticityReport elasticity_report(const UtilitySpec& u, const ElasticityGrid& grid) {
    ElasticityReport rep;

    auto sup_t = [&](auto&& f) {
        return [&grid, f](double x) {
            double best = -std::numeric_limits<double>::infinity();
            for (double t : grid.t_samples) {
                const double v = f(t, x);
                if (std::isnan(v)) return std::numeric_limits<double>::quiet_NaN();
                best = std::max(best, v);
            }
            return best;
        };
    };

    // AE_inf[U]: limsup_x sup_t x U'/U, signed denominator.
    RatioScan inf_scan = scan_ratios(
        sup_t([&u](double t, double x) { return x * u.U_prime(t, x) / u.U(t, x); }),
        grid.max_exponent, /*increasing_x=*/true);
    rep.ae_inf_estimate = limsup_estimate(inf_scan);
    rep.overflow_truncated |= inf_scan.truncated;
    rep.pass_ae_inf = std::isfinite(rep.ae_inf_estimate) &&
                      rep.ae_inf_estimate < 1.0 - grid.margin && !tail_diverging(inf_scan);

    // AE_0[U]: limsup_{x->0} sup_t x U'/|U|; finite means pass.
    RatioScan zero_scan = scan_ratios(
        sup_t([&u](double t, double x) {
            return x * u.U_prime(t, x) / std::abs(u.U(t, x));
        }),
        grid.max_exponent, /*increasing_x=*/false);
    rep.ae_zero_estimate = limsup_estimate(zero_scan);
    rep.overflow_truncated |= zero_scan.truncated;
    rep.pass_ae_zero = std::isfinite(rep.ae_zero_estimate) &&
                       rep.ae_zero_estimate < grid.finite_cap && !tail_diverging(zero_scan);

    // Dual side: AE_inf[V] < 1 should agree with AE_0[U] < inf.
    RatioScan dual_scan = scan_ratios(
        sup_t([&u](double t, double y) { return y * u.V_prime(t, y) / u.V(t, y); }),
        grid.max_exponent, /*increasing_x=*/true);
    rep.ae_inf_dual_estimate = limsup_estimate(dual_scan);
    const bool dual_pass = std::isfinite(rep.ae_inf_dual_estimate) &&
                           rep.ae_inf_dual_estimate < 1.0 - grid.margin &&
                           !tail_diverging(dual_scan);
    rep.dual_side_disagrees = dual_pass != rep.pass_ae_zero;

    const double x_hi = std::ldexp(1.0, grid.max_exponent);
    const double x_lo = std::ldexp(1.0, -grid.max_exponent);
    double inf_u = std::numeric_limits<double>::infinity();
    double sup_u = -std::numeric_limits<double>::infinity();
    for (double t : grid.t_samples) {
        inf_u = std::min(inf_u, u.U(t, x_hi));
        sup_u = std::max(sup_u, u.U(t, x_lo));
    }
    rep.sign_up = inf_u > 0.0;
    rep.sign_down = sup_u < 0.0;
    return rep;
}

double u_second(const UtilitySpec& u, double t, double x) {
    switch (u.family) {
        case utility_family::log_utility:
            return -std::exp(-u.beta * t) / (x * x);
        case utility_family::power_utility:
            return std::exp(-u.beta * t) * (u.exponent - 1.0) *
                   std::pow(x, u.exponent - 2.0);
        case utility_family::custom: {
            const double h = 1e-5 * std::max(std::abs(x), 1e-8);
            return (u.U_prime(t, x + h) - u.U_prime(t, x - h)) / (2 * h);
        }
    }
    return 0.0;
}

double v_second(const UtilitySpec& u, double t, double y) {
    switch (u.family) {
        case utility_family::log_utility:
            return std::exp(-u.beta * t) / (y * y);
        case utility_family::power_utility: {
            const double p = u.exponent;
            const double ey = std::exp(u.beta * t);
            return (1.0 / (1.0 - p)) * std::pow(y * ey, (2.0 - p) / (p - 1.0)) * ey;
        }
        case utility_family::custom: {
            const double h = 1e-5 * std::max(std::abs(y), 1e-8);
            return (u.V_prime(t, y + h) - u.V_prime(t, y - h)) / (2 * h);
        }
    }
    return 0.0;
}

double assumption_4_1_value(const UtilitySpec& u, const EventTree& tree,
                            const HabitSpec& habit, double xbar) {
    if (!(xbar > 0.0)) throw std::invalid_argument("assumption check: xbar must be > 0");
    WeightPair wp = weights(tree, habit);
    double s = 0.0;
    for (int i = 0; i < tree.node_count(); ++i) {
        if (tree.is_terminal(i)) continue;
        const TreeNode& nd = tree.node(i);
        s += nd.path_prob * u.U(tree.time(nd.depth), xbar * wp.w_tilde[i]) * tree.dt(nd.depth);
    }
    return s;
}

}  // namespace habitat
