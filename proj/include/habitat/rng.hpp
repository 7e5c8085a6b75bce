#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace habitat {

// Seeded generator with hand-rolled uniforms so draws are identical across
// standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    int uniform_int(int lo, int hi) {  // inclusive range
        return lo + static_cast<int>(engine_() % static_cast<std::uint64_t>(hi - lo + 1));
    }

    // Flat Dirichlet via normalized exponentials; strictly positive weights.
    Eigen::VectorXd dirichlet(int n) {
        Eigen::VectorXd v(n);
        double s = 0.0;
        for (int i = 0; i < n; ++i) {
            v[i] = -std::log(1.0 - uniform() * (1.0 - 1e-16));
            s += v[i];
        }
        return v / s;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace habitat
