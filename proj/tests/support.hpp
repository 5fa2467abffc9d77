#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <random>
#include <vector>

#include "lpmkl/kernel.hpp"
#include "lpmkl/solver.hpp"

namespace lpmkl::testing {

inline Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    Eigen::MatrixXd A(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
        for (Eigen::Index i = 0; i < r; ++i) A(i, j) = nd(rng);
    return A;
}

inline Eigen::VectorXd random_vector(Eigen::Index n, std::mt19937_64& rng) { return random_matrix(n, 1, rng); }

/// PSD Gram of rank min(n, rank) with unit-ish scale.
inline GramMatrix random_gram(Eigen::Index n, Eigen::Index rank, std::mt19937_64& rng) {
    const Eigen::MatrixXd F = random_matrix(n, rank, rng) / std::sqrt(static_cast<double>(rank));
    GramMatrix G;
    G.values = F * F.transpose();
    G.values = 0.5 * (G.values + G.values.transpose()).eval();
    return G;
}

inline std::vector<double> uniform_points(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> x(n);
    for (auto& v : x) v = u(rng);
    return x;
}

/// Random problem of the kind used in the solver cross-checks: n in [5, 30], M in [1, 4],
/// Grams of mixed rank, responses from a random additive signal plus noise.
struct RandomProblem {
    std::vector<GramMatrix> grams;
    VectorXd y;
    double lambda1 = 0.1;
};

inline RandomProblem random_problem(std::mt19937_64& rng, int M = 0, Eigen::Index n = 0) {
    std::uniform_int_distribution<int> pick_m(1, 4);
    std::uniform_int_distribution<Eigen::Index> pick_n(5, 30);
    std::uniform_real_distribution<double> log_lambda(std::log(1e-3), std::log(1.0));
    if (M == 0) M = pick_m(rng);
    if (n == 0) n = pick_n(rng);
    RandomProblem rp;
    rp.y = VectorXd::Zero(n);
    for (int m = 0; m < M; ++m) {
        std::uniform_int_distribution<Eigen::Index> pick_r(1, n);
        rp.grams.push_back(random_gram(n, pick_r(rng), rng));
        // Signal in the column space of this Gram, with varying strength across blocks.
        rp.y += rp.grams.back().values * random_vector(n, rng) * (m == 0 ? 1.0 : 0.3 / m);
    }
    rp.y += 0.1 * random_vector(n, rng);
    rp.lambda1 = std::exp(log_lambda(rng));
    return rp;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::path(LPMKL_TEST_TMP) / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace lpmkl::testing
