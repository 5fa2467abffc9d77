#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "lpmkl/errors.hpp"

namespace lpmkl {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Kernel descriptions
// ---------------------------------------------------------------------------

/// Mercer kernel on [0,1] with eigenpairs (scale_c * k^(-1/decay_s), sqrt(2) cos(pi k x)),
/// truncated after truncation_K terms. The cosine basis is orthonormal and zero-mean
/// under the uniform distribution.
struct Spectral {
    double decay_s = 0.5;
    int truncation_K = 200;
    double scale_c = 1.0;
};

struct Gaussian {
    double bandwidth = 1.0;
};

/// Gram matrix loaded from a CSV file. Points passed to eval_kernel are row/column indices.
struct Precomputed {
    std::string gram_path;
};

using KernelSpec = std::variant<Spectral, Gaussian, Precomputed>;

struct GramMatrix {
    MatrixXd values;
    double jitter_applied = 0.0;

    [[nodiscard]] Eigen::Index size() const { return values.rows(); }
};

inline void validate(const KernelSpec& spec) {
    std::visit(
        [](const auto& k) {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, Spectral>) {
                if (!(k.decay_s > 0.0 && k.decay_s < 1.0))
                    throw InputError("spectral kernel: decay_s must lie in (0,1)");
                if (k.truncation_K < 1) throw InputError("spectral kernel: truncation_K must be >= 1");
                if (!(k.scale_c > 0.0)) throw InputError("spectral kernel: scale_c must be positive");
            } else if constexpr (std::is_same_v<T, Gaussian>) {
                if (!(k.bandwidth > 0.0)) throw InputError("gaussian kernel: bandwidth must be positive");
            } else {
                if (k.gram_path.empty()) throw InputError("precomputed kernel: empty gram_path");
            }
        },
        spec);
}

// ---------------------------------------------------------------------------
// Spectral kernels
// ---------------------------------------------------------------------------

/// mu_k = scale_c * k^(-1/s), k = 1..K.
[[nodiscard]] inline VectorXd spectral_eigenvalues(const Spectral& k) {
    validate(KernelSpec{k});
    VectorXd mu(k.truncation_K);
    for (int i = 0; i < k.truncation_K; ++i)
        mu[i] = k.scale_c * std::pow(static_cast<double>(i + 1), -1.0 / k.decay_s);
    return mu;
}

/// Spectral kernel scaled so that sup_x k(x,x) = 1/1.01 < 1.
[[nodiscard]] inline Spectral normalized_spectral(double decay_s, int truncation_K = 200) {
    Spectral k{decay_s, truncation_K, 1.0};
    const double mass = 2.0 * spectral_eigenvalues(k).sum();
    k.scale_c = 1.0 / (1.01 * mass);
    return k;
}

inline void check_unit_interval(double x) {
    if (!(x >= 0.0 && x <= 1.0))
        throw DomainError("spectral kernel: point " + std::to_string(x) + " outside [0,1]");
}

/// Writes phi_k(x) = sqrt(2) cos(pi k x) for k = 1..out.size(), via the Chebyshev recurrence.
inline void cosine_basis(double x, std::span<double> out) {
    const auto K = out.size();
    if (K == 0) return;
    const double c1 = std::cos(std::numbers::pi * x);
    double prev = 1.0;  // cos(0)
    double cur = c1;
    for (std::size_t k = 0; k < K; ++k) {
        out[k] = std::numbers::sqrt2 * cur;
        const double next = 2.0 * c1 * cur - prev;
        prev = cur;
        cur = next;
    }
}

/// n x K feature matrix with entries sqrt(mu_k) phi_k(x_i), so that gram = F F^T.
[[nodiscard]] inline MatrixXd spectral_features(const Spectral& k, std::span<const double> points) {
    const VectorXd root_mu = spectral_eigenvalues(k).cwiseSqrt();
    const auto K = static_cast<std::size_t>(k.truncation_K);
    MatrixXd F(static_cast<Eigen::Index>(points.size()), k.truncation_K);
    std::vector<double> phi(K);
    for (std::size_t i = 0; i < points.size(); ++i) {
        check_unit_interval(points[i]);
        cosine_basis(points[i], phi);
        for (std::size_t j = 0; j < K; ++j)
            F(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = root_mu[static_cast<Eigen::Index>(j)] * phi[j];
    }
    return F;
}

// ---------------------------------------------------------------------------
// Precomputed Gram CSV
// ---------------------------------------------------------------------------

/// Parses n rows of n comma-separated decimals and validates symmetry.
[[nodiscard]] inline GramMatrix parse_gram_csv(std::istream& in, const std::string& name) {
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string field;
        std::size_t col = 0;
        while (std::getline(ss, field, ',')) {
            ++col;
            try {
                std::size_t used = 0;
                const double v = std::stod(field, &used);
                if (field.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(field);
                row.push_back(v);
            } catch (const std::exception&) {
                throw DataError(name + ":" + std::to_string(lineno) + ":" + std::to_string(col),
                                "not a decimal value: '" + field + "'");
            }
        }
        rows.push_back(std::move(row));
    }
    const auto n = rows.size();
    if (n == 0) throw DataError(name, "empty Gram matrix");
    GramMatrix G;
    G.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        if (rows[i].size() != n)
            throw DataError(name + ":" + std::to_string(i + 1),
                            "expected " + std::to_string(n) + " fields, got " + std::to_string(rows[i].size()));
        for (std::size_t j = 0; j < n; ++j) G.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    const double scale = std::max(1.0, G.values.cwiseAbs().maxCoeff());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const auto a = G.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            const auto b = G.values(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i));
            if (std::abs(a - b) > 1e-12 * scale)
                throw DataError(name + ":" + std::to_string(i + 1) + ":" + std::to_string(j + 1),
                                "Gram matrix is not symmetric");
        }
    return G;
}

[[nodiscard]] inline GramMatrix load_gram_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError(path, "cannot open Gram file");
    return parse_gram_csv(in, path);
}

inline void write_gram_csv(std::ostream& out, const MatrixXd& G) {
    out.precision(17);
    for (Eigen::Index i = 0; i < G.rows(); ++i) {
        for (Eigen::Index j = 0; j < G.cols(); ++j) {
            if (j) out << ',';
            out << G(i, j);
        }
        out << '\n';
    }
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

[[nodiscard]] inline double eval_kernel(const KernelSpec& spec, double x, double xp) {
    validate(spec);
    return std::visit(
        [&](const auto& k) -> double {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, Spectral>) {
                check_unit_interval(x);
                check_unit_interval(xp);
                const VectorXd mu = spectral_eigenvalues(k);
                std::vector<double> a(static_cast<std::size_t>(k.truncation_K));
                std::vector<double> b(a.size());
                cosine_basis(x, a);
                cosine_basis(xp, b);
                double sum = 0.0;
                for (std::size_t i = 0; i < a.size(); ++i) sum += mu[static_cast<Eigen::Index>(i)] * (a[i] * b[i]);
                return sum;
            } else if constexpr (std::is_same_v<T, Gaussian>) {
                const double d = x - xp;
                return std::exp(-d * d / (2.0 * k.bandwidth * k.bandwidth));
            } else {
                const GramMatrix G = load_gram_csv(k.gram_path);
                const auto as_index = [&](double v) {
                    const auto i = static_cast<Eigen::Index>(v);
                    if (v != static_cast<double>(i) || i < 0 || i >= G.size())
                        throw DomainError("precomputed kernel: point must be a row index in [0, n)");
                    return i;
                };
                return G.values(as_index(x), as_index(xp));
            }
        },
        spec);
}

[[nodiscard]] inline GramMatrix gram(const KernelSpec& spec, std::span<const double> points) {
    if (points.empty()) throw InputError("gram: empty point list");
    validate(spec);
    const auto n = static_cast<Eigen::Index>(points.size());
    GramMatrix G;
    if (const auto* s = std::get_if<Spectral>(&spec)) {
        const MatrixXd F = spectral_features(*s, points);
        G.values = F * F.transpose();
    } else if (const auto* g = std::get_if<Gaussian>(&spec)) {
        G.values.resize(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = i; j < n; ++j) {
                const double d = points[static_cast<std::size_t>(i)] - points[static_cast<std::size_t>(j)];
                G.values(i, j) = G.values(j, i) = std::exp(-d * d / (2.0 * g->bandwidth * g->bandwidth));
            }
    } else {
        const GramMatrix full = load_gram_csv(std::get<Precomputed>(spec).gram_path);
        std::vector<Eigen::Index> idx;
        for (const double v : points) {
            const auto i = static_cast<Eigen::Index>(v);
            if (v != static_cast<double>(i) || i < 0 || i >= full.size())
                throw DomainError("precomputed kernel: point must be a row index in [0, n)");
            idx.push_back(i);
        }
        G.values.resize(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                G.values(i, j) = full.values(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    // Exact symmetry; F F^T can differ in the last bit across the diagonal.
    G.values = 0.5 * (G.values + G.values.transpose()).eval();
    if (!G.values.allFinite()) throw NumericError("gram: non-finite kernel value");
    return G;
}

/// Diagonal jitter of 1e-10 * trace / n, for factorizations that need strict definiteness.
[[nodiscard]] inline GramMatrix with_jitter(const GramMatrix& G) {
    GramMatrix J = G;
    const double eps = 1e-10 * G.values.trace() / static_cast<double>(G.size());
    J.values.diagonal().array() += eps;
    J.jitter_applied = G.jitter_applied + eps;
    return J;
}

/// Eigenvalues in descending order. Throws NumericError if the solver fails.
[[nodiscard]] inline VectorXd eigenvalues_desc(const MatrixXd& A) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(A, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericError("eigendecomposition failed");
    return es.eigenvalues().reverse();
}

/// Symmetry within 1e-12 relative and eigenvalues >= -1e-10 * largest.
[[nodiscard]] inline bool is_valid_gram(const GramMatrix& G) {
    const auto& A = G.values;
    if (A.rows() != A.cols() || A.rows() == 0 || !A.allFinite()) return false;
    const double scale = std::max(A.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
    if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) return false;
    const VectorXd ev = eigenvalues_desc(0.5 * (A + A.transpose()));
    return ev[ev.size() - 1] >= -1e-10 * std::max(ev[0], 0.0);
}

/// Symmetric PSD square root; negative eigenvalues are clamped to zero first.
[[nodiscard]] inline MatrixXd gram_sqrt(const GramMatrix& G) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (G.values + G.values.transpose()));
    if (es.info() != Eigen::Success) throw NumericError("gram_sqrt: eigendecomposition failed");
    const VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    const MatrixXd S = es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
    return 0.5 * (S + S.transpose());
}

// ---------------------------------------------------------------------------
// Decay estimation
// ---------------------------------------------------------------------------

struct IndexRange {
    int first = 2;  ///< 1-based, inclusive
    int last = 30;  ///< 1-based, inclusive
};

/// Default fit window [2, min(30, n/4)].
[[nodiscard]] inline IndexRange default_decay_window(Eigen::Index n) {
    return {2, static_cast<int>(std::min<Eigen::Index>(30, n / 4))};
}

/// Least-squares slope of log mu_k vs log k over k in range; returns -1/slope.
/// `eigenvalues` are in descending order, index 0 corresponding to k = 1.
[[nodiscard]] inline double estimate_decay_from_eigenvalues(std::span<const double> eigenvalues, IndexRange range) {
    std::vector<double> lx;
    std::vector<double> ly;
    for (int k = std::max(range.first, 1); k <= range.last && k <= static_cast<int>(eigenvalues.size()); ++k) {
        const double mu = eigenvalues[static_cast<std::size_t>(k - 1)];
        if (!(mu > 0.0) || !std::isfinite(mu)) continue;
        lx.push_back(std::log(static_cast<double>(k)));
        ly.push_back(std::log(mu));
    }
    if (lx.size() < 3) throw InsufficientDataError("estimate_decay: fewer than 3 usable eigenvalues");
    const auto m = static_cast<double>(lx.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= m;
    my /= m;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    const double slope = sxy / sxx;
    if (!(slope < 0.0)) throw NumericError("estimate_decay: spectrum is not decaying over the fit window");
    return -1.0 / slope;
}

/// Fits the decay exponent of the eigenvalues of G/n.
[[nodiscard]] inline double estimate_decay(const GramMatrix& G, IndexRange range) {
    const VectorXd ev = eigenvalues_desc(G.values / static_cast<double>(G.size()));
    return estimate_decay_from_eigenvalues(std::span<const double>(ev.data(), static_cast<std::size_t>(ev.size())), range);
}

[[nodiscard]] inline double estimate_decay(const GramMatrix& G) {
    return estimate_decay(G, default_decay_window(G.size()));
}

}  // namespace lpmkl
