#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <initializer_list>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "lpmkl/errors.hpp"
#include "lpmkl/kernel.hpp"

namespace lpmkl::synth {

// ---------------------------------------------------------------------------
// Seeding
// ---------------------------------------------------------------------------

[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Order-sensitive hash of a list of 64-bit words.
[[nodiscard]] constexpr std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts) {
    std::uint64_t h = 0x243f6a8885a308d3ULL;
    for (const auto v : parts) h = splitmix64(h ^ splitmix64(v));
    return h;
}

[[nodiscard]] inline std::uint64_t double_bits(double v) {
    std::uint64_t u = 0;
    static_assert(sizeof(u) == sizeof(v));
    std::memcpy(&u, &v, sizeof(u));
    return u;
}

// ---------------------------------------------------------------------------
// Truth specification
// ---------------------------------------------------------------------------

enum class Pattern { Sparse, Dense, Custom };

[[nodiscard]] inline std::string to_string(Pattern p) {
    switch (p) {
        case Pattern::Sparse: return "sparse";
        case Pattern::Dense: return "dense";
        case Pattern::Custom: return "custom";
    }
    return "custom";
}

[[nodiscard]] inline Pattern pattern_from_string(const std::string& s) {
    if (s == "sparse") return Pattern::Sparse;
    if (s == "dense") return Pattern::Dense;
    if (s == "custom") return Pattern::Custom;
    throw InputError("unknown truth pattern '" + s + "'");
}

struct TruthSpec {
    std::vector<double> norm_pattern;  ///< target RKHS norm of each block
    Pattern pattern = Pattern::Custom;
    int truth_truncation = 50;
    std::uint64_t seed = 0;
};

/// (1,0,...,0) for sparse, (1,...,1) for dense.
[[nodiscard]] inline TruthSpec make_truth_spec(Pattern pattern, int M, std::uint64_t seed, int truncation = 50) {
    if (M < 1) throw InputError("truth spec needs M >= 1");
    TruthSpec t;
    t.pattern = pattern;
    t.seed = seed;
    t.truth_truncation = truncation;
    t.norm_pattern.assign(static_cast<std::size_t>(M), pattern == Pattern::Dense ? 1.0 : 0.0);
    if (pattern == Pattern::Sparse) t.norm_pattern[0] = 1.0;
    if (pattern == Pattern::Custom) throw InputError("custom patterns need an explicit norm_pattern");
    return t;
}

// ---------------------------------------------------------------------------
// Additive models over the cosine basis
// ---------------------------------------------------------------------------

/// f(x) = sum_m sum_k coef[m][k] phi_k(x^(m)), phi_k(x) = sqrt(2) cos(pi k x).
/// Both the synthetic truth and fitted estimates take this form.
struct AdditiveModel {
    Spectral kernel;
    std::vector<VectorXd> coef;

    [[nodiscard]] int blocks() const { return static_cast<int>(coef.size()); }

    [[nodiscard]] double block(int m, double x) const {
        const VectorXd& c = coef[static_cast<std::size_t>(m)];
        std::vector<double> phi(static_cast<std::size_t>(c.size()));
        cosine_basis(x, phi);
        double v = 0.0;
        for (std::size_t k = 0; k < phi.size(); ++k) v += c[static_cast<Eigen::Index>(k)] * phi[k];
        return v;
    }

    [[nodiscard]] double operator()(std::span<const double> x) const {
        double v = 0.0;
        for (int m = 0; m < blocks(); ++m) v += block(m, x[static_cast<std::size_t>(m)]);
        return v;
    }

    /// Values at the rows of X (n x M).
    [[nodiscard]] VectorXd evaluate(const MatrixXd& X) const {
        if (X.cols() != blocks()) throw InputError("evaluate: design has wrong number of columns");
        VectorXd out = VectorXd::Zero(X.rows());
        std::vector<double> phi;
        for (int m = 0; m < blocks(); ++m) {
            const VectorXd& c = coef[static_cast<std::size_t>(m)];
            if (c.isZero(0.0)) continue;
            phi.resize(static_cast<std::size_t>(c.size()));
            for (Eigen::Index i = 0; i < X.rows(); ++i) {
                check_unit_interval(X(i, m));
                cosine_basis(X(i, m), phi);
                out[i] += Eigen::Map<const VectorXd>(phi.data(), c.size()).dot(c);
            }
        }
        return out;
    }

    /// |f_m|_H = (sum_k coef_k^2 / mu_k)^(1/2).
    [[nodiscard]] double rkhs_norm(int m) const {
        const VectorXd mu = spectral_eigenvalues(kernel);
        const VectorXd& c = coef[static_cast<std::size_t>(m)];
        return std::sqrt((c.array().square() / mu.head(c.size()).array()).sum());
    }

    /// |f_m|_L2 under the uniform law (orthonormal basis).
    [[nodiscard]] double l2_norm(int m) const { return coef[static_cast<std::size_t>(m)].norm(); }
};

/// Draws g_k ~ N(0,1), sets b_k = g_k mu_k for k <= truth_truncation, and rescales each active
/// block to hit its target RKHS norm. Block m uses its own stream derived from (seed, m).
[[nodiscard]] inline AdditiveModel build_truth(const TruthSpec& spec, const KernelSpec& kernel) {
    const auto* sk = std::get_if<Spectral>(&kernel);
    if (!sk) throw InputError("build_truth: kernel must be spectral");
    validate(kernel);
    if (spec.norm_pattern.empty()) throw InputError("build_truth: empty norm pattern");
    if (spec.truth_truncation < 1 || spec.truth_truncation > sk->truncation_K)
        throw InputError("build_truth: truth_truncation must lie in [1, truncation_K]");
    const VectorXd mu = spectral_eigenvalues(*sk);
    AdditiveModel f;
    f.kernel = *sk;
    for (std::size_t m = 0; m < spec.norm_pattern.size(); ++m) {
        const double target = spec.norm_pattern[m];
        if (!(target >= 0.0) || !std::isfinite(target)) throw InputError("build_truth: norms must be finite and nonnegative");
        VectorXd b = VectorXd::Zero(sk->truncation_K);
        if (target > 0.0) {
            std::mt19937_64 rng(mix_seed({spec.seed, m}));
            std::normal_distribution<double> normal;
            double norm2 = 0.0;
            for (int attempt = 0; attempt < 2 && !(norm2 > 0.0); ++attempt) {
                for (int k = 0; k < spec.truth_truncation; ++k) b[k] = normal(rng) * mu[k];
                norm2 = (b.head(spec.truth_truncation).array().square() / mu.head(spec.truth_truncation).array()).sum();
            }
            if (!(norm2 > 0.0)) throw NumericError("build_truth: degenerate coefficient draw");
            b *= target / std::sqrt(norm2);
        }
        f.coef.push_back(std::move(b));
    }
    return f;
}

// ---------------------------------------------------------------------------
// Datasets
// ---------------------------------------------------------------------------

struct Dataset {
    MatrixXd X;             ///< n x M, coordinates in [0,1]
    VectorXd y;
    VectorXd truth_values;  ///< f*(x_i)
    double noise_bound_L = 0.0;
};

/// X i.i.d. uniform on [0,1]^M, y = f*(x) + eps with eps uniform on [-L, L].
[[nodiscard]] inline Dataset sample_dataset(const AdditiveModel& truth, long n, double L, std::uint64_t seed) {
    if (n < 1) throw InputError("sample_dataset: n must be positive");
    if (!(L > 0.0)) throw InputError("sample_dataset: L must be positive");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> noise(-L, L);
    Dataset d;
    d.noise_bound_L = L;
    d.X.resize(n, truth.blocks());
    for (Eigen::Index i = 0; i < n; ++i)
        for (int m = 0; m < truth.blocks(); ++m) d.X(i, m) = unit(rng);
    d.truth_values = truth.evaluate(d.X);
    d.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) d.y[i] = d.truth_values[i] + noise(rng);
    return d;
}

/// Training subset by row indices.
[[nodiscard]] inline Dataset subset(const Dataset& d, const std::vector<Eigen::Index>& rows) {
    Dataset s;
    s.noise_bound_L = d.noise_bound_L;
    s.X = d.X(rows, Eigen::all);
    s.y = d.y(rows);
    s.truth_values = d.truth_values(rows);
    return s;
}

// ---------------------------------------------------------------------------
// Error measurement
// ---------------------------------------------------------------------------

struct L2Error {
    double mean = 0.0;
    double std_error = 0.0;
};

/// Monte Carlo estimate of E(f(X) - g(X))^2 over n_test fresh uniform points in [0,1]^M.
template <class F, class G>
[[nodiscard]] L2Error measure_l2_error(const F& estimate, const G& truth, int M, long n_test, std::uint64_t seed) {
    if (n_test < 1) throw InputError("measure_l2_error: n_test must be positive");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> x(static_cast<std::size_t>(M));
    double sum = 0.0;
    double sum2 = 0.0;
    for (long i = 0; i < n_test; ++i) {
        for (auto& v : x) v = unit(rng);
        const double d = estimate(std::span<const double>(x)) - truth(std::span<const double>(x));
        sum += d * d;
        sum2 += d * d * d * d;
    }
    const double nt = static_cast<double>(n_test);
    const double mean = sum / nt;
    const double var = n_test > 1 ? std::max(0.0, (sum2 - nt * mean * mean) / (nt - 1.0)) : 0.0;
    return {mean, std::sqrt(var / nt)};
}

/// Same estimator for two additive models, evaluated in batch on the same point stream.
[[nodiscard]] inline L2Error measure_l2_error(const AdditiveModel& estimate, const AdditiveModel& truth, long n_test,
                                              std::uint64_t seed) {
    if (n_test < 1) throw InputError("measure_l2_error: n_test must be positive");
    if (estimate.blocks() != truth.blocks()) throw InputError("measure_l2_error: block count mismatch");
    const int M = truth.blocks();
    AdditiveModel diff;
    diff.kernel = truth.kernel;
    for (int m = 0; m < M; ++m) {
        const VectorXd& a = estimate.coef[static_cast<std::size_t>(m)];
        const VectorXd& b = truth.coef[static_cast<std::size_t>(m)];
        VectorXd d = VectorXd::Zero(std::max(a.size(), b.size()));
        d.head(a.size()) += a;
        d.head(b.size()) -= b;
        diff.coef.push_back(std::move(d));
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    MatrixXd X(n_test, M);
    for (Eigen::Index i = 0; i < n_test; ++i)
        for (int m = 0; m < M; ++m) X(i, m) = unit(rng);
    const VectorXd sq = diff.evaluate(X).array().square();
    const double nt = static_cast<double>(n_test);
    const double mean = sq.mean();
    const double var = n_test > 1 ? (sq.array() - mean).square().sum() / (nt - 1.0) : 0.0;
    return {mean, std::sqrt(var / nt)};
}

/// Exact squared L2 distance between additive models under the uniform product law.
/// Blocks are zero-mean and act on independent coordinates, so cross terms vanish.
[[nodiscard]] inline double exact_l2_error(const AdditiveModel& a, const AdditiveModel& b) {
    double total = 0.0;
    for (int m = 0; m < a.blocks(); ++m) {
        const VectorXd& x = a.coef[static_cast<std::size_t>(m)];
        const VectorXd& y = b.coef[static_cast<std::size_t>(m)];
        const auto K = std::max(x.size(), y.size());
        VectorXd d = VectorXd::Zero(K);
        d.head(x.size()) += x;
        d.head(y.size()) -= y;
        total += d.squaredNorm();
    }
    return total;
}

// ---------------------------------------------------------------------------
// Dumps
// ---------------------------------------------------------------------------

inline void write_dataset_csv(std::ostream& out, const Dataset& d) {
    for (Eigen::Index m = 0; m < d.X.cols(); ++m) out << "x_" << (m + 1) << ',';
    out << "y\n";
    out.precision(17);
    for (Eigen::Index i = 0; i < d.X.rows(); ++i) {
        for (Eigen::Index m = 0; m < d.X.cols(); ++m) out << d.X(i, m) << ',';
        out << d.y[i] << '\n';
    }
}

}  // namespace lpmkl::synth
