#pragma once

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "lpmkl/errors.hpp"
#include "lpmkl/kernel.hpp"

namespace lpmkl::theory {

/// Sentinel for p = infinity. All rate formulas take their limits through IEEE arithmetic (1/p = 0).
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct TheoryParams {
    long n = 1;
    long M = 1;
    double p = 2.0;
    double s = 0.5;
    double R_p = 1.0;
    double kappa = 1.0;
    double L = 1.0;       ///< noise bound
    double c_free = 1.0;  ///< single stand-in for every unspecified universal constant

    void validate() const {
        if (n < 1) throw InputError("n must be a positive integer");
        if (M < 1) throw InputError("M must be a positive integer");
        if (!(p >= 1.0)) throw InputError("p must be >= 1");
        if (!(s > 0.0 && s < 1.0)) throw InputError("s must lie in (0,1)");
        if (!(R_p > 0.0) || !std::isfinite(R_p)) throw InputError("R_p must be positive");
        if (!(kappa > 0.0 && kappa <= 1.0)) throw InputError("kappa must lie in (0,1]");
        if (!(L > 0.0)) throw InputError("L must be positive");
        if (!(c_free > 0.0)) throw InputError("c_free must be positive");
    }
};

/// max(1, sqrt(t), t / sqrt(n)).
[[nodiscard]] inline double eta(double t, long n) {
    if (!(t >= 0.0)) throw InputError("eta: t must be nonnegative");
    if (n < 1) throw InputError("eta: n must be positive");
    return std::max({1.0, std::sqrt(t), t / std::sqrt(static_cast<double>(n))});
}

/// log M, with M = 1 mapped to 1 so the first complexity branch never vanishes.
[[nodiscard]] inline double log_M(long M) { return M == 1 ? 1.0 : std::log(static_cast<double>(M)); }

/// The three competing terms of the localized complexity at regularization `lambda`.
[[nodiscard]] inline std::array<double, 3> complexity_branches(const TheoryParams& tp, double lambda) {
    tp.validate();
    if (!(lambda > 0.0)) throw InputError("lambda must be positive");
    const double n = static_cast<double>(tp.n);
    const double M = static_cast<double>(tp.M);
    const double s = tp.s;
    const double inv_p = 1.0 / tp.p;
    const double b1 = std::sqrt(M * log_M(tp.M) / n);
    const double b2 = std::pow(lambda, -s / 2.0) * std::pow(M, (1.0 + s) / 2.0 - s * inv_p) / std::sqrt(n);
    const double b3 = std::pow(M, (1.0 + 4.0 * s - s * s) / (2.0 * (1.0 + s)) - s * (3.0 - s) * inv_p / (1.0 + s)) *
                      std::pow(lambda, -s * (3.0 - s) / (2.0 * (1.0 + s))) / std::pow(n, 1.0 / (1.0 + s));
    return {b1, b2, b3};
}

/// zeta_n = 2 * max of the three complexity branches.
[[nodiscard]] inline double zeta_n(const TheoryParams& tp, double lambda) {
    const auto b = complexity_branches(tp, lambda);
    return 2.0 * std::max({b[0], b[1], b[2]});
}

/// Per-block local complexity bound: (branch max) * (|f|_L2 / sqrt(M) + sqrt(lambda) |f|_H / M^(1-1/p)).
[[nodiscard]] inline double u_n_bound(double f_norm_L2, double f_norm_H, const TheoryParams& tp, double lambda) {
    if (!(f_norm_L2 >= 0.0) || !(f_norm_H >= 0.0)) throw InputError("u_n_bound: norms must be nonnegative");
    const auto b = complexity_branches(tp, lambda);
    const double M = static_cast<double>(tp.M);
    const double second = f_norm_L2 / std::sqrt(M) + std::sqrt(lambda) * f_norm_H / std::pow(M, 1.0 - 1.0 / tp.p);
    return std::max({b[0], b[1], b[2]}) * second;
}

/// (sum_m h_m^p)^(1/p); max for p = infinity.
[[nodiscard]] inline double r_p_norm(const std::vector<double>& h_norms, double p) {
    if (!(p >= 1.0)) throw InputError("r_p_norm: p must be >= 1");
    double top = 0.0;
    for (const double h : h_norms) {
        if (!(h >= 0.0)) throw InputError("r_p_norm: norms must be nonnegative");
        top = std::max(top, h);
    }
    if (std::isinf(p) || top == 0.0) return top;
    double acc = 0.0;
    for (const double h : h_norms) acc += std::pow(h / top, p);
    return top * std::pow(acc, 1.0 / p);
}

struct LambdaChoice {
    double lambda = 0.0;
    bool sample_size_ok = true;  ///< both sample-size provisos of the rate derivation hold
};

/// Sample-size provisos n >= M^(2/p) R^-2 (log M)^((1+s)/s) and n >= (R / M^(1/p))^(4s/(1-s)).
[[nodiscard]] inline bool sample_size_ok(const TheoryParams& tp) {
    const double n = static_cast<double>(tp.n);
    const double M = static_cast<double>(tp.M);
    const double s = tp.s;
    const double m_root = std::pow(M, 1.0 / tp.p);
    const double first = m_root * m_root / (tp.R_p * tp.R_p) * std::pow(std::log(M), (1.0 + s) / s);
    const double second = std::pow(tp.R_p / m_root, 4.0 * s / (1.0 - s));
    return n >= first && n >= second;
}

/// lambda1 = c_free * n^(-1/(1+s)) M^(1 - 2s/(p(1+s))) R_p^(-2/(1+s)).
[[nodiscard]] inline LambdaChoice optimal_lambda(const TheoryParams& tp) {
    tp.validate();
    const double s = tp.s;
    const double value = tp.c_free * std::pow(static_cast<double>(tp.n), -1.0 / (1.0 + s)) *
                         std::pow(static_cast<double>(tp.M), 1.0 - 2.0 * s / (tp.p * (1.0 + s))) *
                         std::pow(tp.R_p, -2.0 / (1.0 + s));
    return {value, sample_size_ok(tp)};
}

struct RatePrediction {
    double leading = 0.0;
    std::array<double, 3> full{};  ///< leading term, M log(M)/n, higher-order term
};

[[nodiscard]] inline RatePrediction predicted_rate(const TheoryParams& tp) {
    tp.validate();
    const double n = static_cast<double>(tp.n);
    const double M = static_cast<double>(tp.M);
    const double s = tp.s;
    const double R = tp.R_p;
    const double p = tp.p;
    RatePrediction r;
    const double t1 = std::pow(n, -1.0 / (1.0 + s)) * std::pow(M, 1.0 - 2.0 * s / (p * (1.0 + s))) *
                      std::pow(R, 2.0 * s / (1.0 + s));
    const double t2 = M * std::log(M) / n;
    const double sq = (1.0 + s) * (1.0 + s);
    const double t3 = std::pow(n, -1.0 / (1.0 + s) - (s - 1.0) * (s - 1.0) / sq) *
                      std::pow(M, 1.0 - 2.0 * s * (3.0 - s) / (p * sq)) * std::pow(R, 2.0 * s * (3.0 - s) / sq);
    r.full = {tp.c_free * t1, tp.c_free * t2, tp.c_free * t3};
    r.leading = r.full[0];
    return r;
}

/// c_free * n^(-1/(1+s)) M^(1 - 2s/(p(1+s))) R^(2s/(1+s)).
[[nodiscard]] inline double minimax_lower_bound(const TheoryParams& tp, double R) {
    tp.validate();
    if (!(R > 0.0)) throw InputError("minimax_lower_bound: R must be positive");
    const double s = tp.s;
    return tp.c_free * std::pow(static_cast<double>(tp.n), -1.0 / (1.0 + s)) *
           std::pow(static_cast<double>(tp.M), 1.0 - 2.0 * s / (tp.p * (1.0 + s))) * std::pow(R, 2.0 * s / (1.0 + s));
}

/// Global-complexity rate n^(-1/2) M^(1-1/p), against which the localized rate is compared.
[[nodiscard]] inline double global_rate_factor(long n, long M, double p) {
    return std::pow(static_cast<double>(n), -0.5) * std::pow(static_cast<double>(M), 1.0 - 1.0 / p);
}

/// Localized rate without the R factor: n^(-1/(1+s)) M^(1 - 2s/(p(1+s))).
[[nodiscard]] inline double localized_rate_factor(long n, long M, double p, double s) {
    return std::pow(static_cast<double>(n), -1.0 / (1.0 + s)) *
           std::pow(static_cast<double>(M), 1.0 - 2.0 * s / (p * (1.0 + s)));
}

/// Empirical incoherence: smallest eigenvalue of [Q_i^T Q_j] where Q_m is an orthonormal basis
/// of col(K_m), truncated at relative eigenvalue `rel_tol`. Clamped to [0, 1].
[[nodiscard]] inline double kappa_estimate(const std::vector<GramMatrix>& grams, double rel_tol = 1e-10) {
    if (grams.empty()) throw InputError("kappa_estimate: no Gram matrices");
    const auto n = grams.front().size();
    std::vector<MatrixXd> bases;
    Eigen::Index total = 0;
    for (const auto& g : grams) {
        if (g.size() != n) throw InputError("kappa_estimate: Gram matrices must share the point set");
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (g.values + g.values.transpose()));
        if (es.info() != Eigen::Success) throw NumericError("kappa_estimate: eigendecomposition failed");
        const VectorXd& ev = es.eigenvalues();
        const double top = ev[ev.size() - 1];
        if (!(top > 0.0)) throw DegenerateInputError("kappa_estimate: Gram matrix has no positive eigenvalue");
        Eigen::Index keep = 0;
        for (Eigen::Index i = ev.size() - 1; i >= 0 && ev[i] > rel_tol * top; --i) ++keep;
        bases.emplace_back(es.eigenvectors().rightCols(keep));
        total += keep;
    }
    MatrixXd Q(n, total);
    Eigen::Index off = 0;
    for (const auto& b : bases) {
        Q.middleCols(off, b.cols()) = b;
        off += b.cols();
    }
    const VectorXd ev = eigenvalues_desc(Q.transpose() * Q);
    return std::clamp(ev[ev.size() - 1], 0.0, 1.0);
}

/// c_free * C * min(i,n)^(1/(2s)) * i^(-1/s).
[[nodiscard]] inline double entropy_bound(long i, long n, double s, double C, double c_free = 1.0) {
    if (i < 1 || n < 1) throw InputError("entropy_bound: i and n must be positive");
    if (!(s > 0.0 && s < 1.0)) throw InputError("entropy_bound: s must lie in (0,1)");
    if (!(C >= 1.0)) throw InputError("entropy_bound: C must be >= 1");
    const double m = static_cast<double>(std::min(i, n));
    return c_free * C * std::pow(m, 1.0 / (2.0 * s)) * std::pow(static_cast<double>(i), -1.0 / s);
}

// ---------------------------------------------------------------------------
// Hamming packings
// ---------------------------------------------------------------------------

using Codeword = std::vector<int>;

[[nodiscard]] inline int hamming(const Codeword& a, const Codeword& b) {
    int d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
    return d;
}

inline constexpr double kMaxPackingSearch = 1e7;

/// Lexicographic greedy code over [N]^M: a word is kept when its Hamming distance to every
/// kept word exceeds `min_dist_exclusive` (default M/2).
[[nodiscard]] inline std::vector<Codeword> greedy_packing(int N, int M, int min_dist_exclusive = -1) {
    if (N < 2) throw InputError("greedy_packing: N must be >= 2");
    if (M < 2 || M % 2 != 0) throw InputError("greedy_packing: M must be an even integer >= 2");
    if (std::pow(static_cast<double>(N), M) > kMaxPackingSearch)
        throw SizeError("greedy_packing: search space N^M exceeds 1e7 words");
    if (min_dist_exclusive < 0) min_dist_exclusive = M / 2;
    std::vector<Codeword> code;
    Codeword w(static_cast<std::size_t>(M), 0);
    while (true) {
        bool ok = true;
        for (const auto& c : code)
            if (hamming(c, w) <= min_dist_exclusive) {
                ok = false;
                break;
            }
        if (ok) code.push_back(w);
        // Odometer increment, last coordinate fastest (lexicographic order).
        int pos = M - 1;
        while (pos >= 0 && ++w[static_cast<std::size_t>(pos)] == N) w[static_cast<std::size_t>(pos--)] = 0;
        if (pos < 0) break;
    }
    return code;
}

struct PackingBound {
    boost::multiprecision::cpp_rational q_star;  ///< N^M / (2 C(M, M/2) N^(M/2)), exact
    double q_star_value = 0.0;
    double log_bound = 0.0;     ///< (M/2) log(N/16)
    std::int64_t q_star_ceil = 0;
};

[[nodiscard]] inline PackingBound packing_lower_bound(int N, int M) {
    using boost::multiprecision::cpp_int;
    using boost::multiprecision::cpp_rational;
    if (N < 2) throw InputError("packing_lower_bound: N must be >= 2");
    if (M < 2 || M % 2 != 0) throw InputError("packing_lower_bound: M must be an even integer >= 2");
    cpp_int half_power = 1;
    for (int i = 0; i < M / 2; ++i) half_power *= N;
    cpp_int binom = 1;  // C(M, M/2)
    for (int i = 1; i <= M / 2; ++i) binom = binom * (M / 2 + i) / i;
    PackingBound b;
    // N^M / N^(M/2) = N^(M/2)
    b.q_star = cpp_rational(half_power, 2 * binom);
    b.q_star_value = static_cast<double>(b.q_star);
    b.log_bound = 0.5 * M * std::log(static_cast<double>(N) / 16.0);
    const cpp_int num = boost::multiprecision::numerator(b.q_star);
    const cpp_int den = boost::multiprecision::denominator(b.q_star);
    b.q_star_ceil = static_cast<std::int64_t>((num + den - 1) / den);
    return b;
}

}  // namespace lpmkl::theory
