#pragma once

#include <Eigen/Dense>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "lpmkl/errors.hpp"
#include "lpmkl/kernel.hpp"

namespace lpmkl {

// ---------------------------------------------------------------------------
// Kernel factors
// ---------------------------------------------------------------------------

/// Low-rank factorization K = A A^T with A = U diag(sigma), U orthonormal.
///
/// The solver works in the compact coordinates c (length rank()): the block function
/// takes values A c at the sample points, its RKHS norm is |c|, and the coefficient
/// block of the symmetric-square-root parameterization is beta = U c (so that
/// sqrt(K) beta = A c and |beta| = |c|).
struct KernelFactor {
    MatrixXd factor;    ///< A, n x r
    MatrixXd basis;     ///< U, n x r
    VectorXd sigma;     ///< singular values of A
    MatrixXd to_input;  ///< maps c to input-feature weights; empty when built from a Gram matrix

    [[nodiscard]] Eigen::Index rank() const { return factor.cols(); }
    [[nodiscard]] Eigen::Index samples() const { return factor.rows(); }
    [[nodiscard]] MatrixXd gram() const { return factor * factor.transpose(); }

    /// sqrt(K) * beta.
    [[nodiscard]] VectorXd apply_sqrt(const VectorXd& beta) const {
        return basis * (sigma.asDiagonal() * (basis.transpose() * beta));
    }

    /// Factor of a PSD Gram matrix via eigendecomposition. Eigenvalues below
    /// rel_tol * largest are dropped. Throws InputError for non-PSD input.
    static KernelFactor from_gram(const GramMatrix& G, double rel_tol = 1e-12) {
        const MatrixXd& K = G.values;
        if (K.rows() != K.cols() || K.rows() == 0) throw InputError("gram matrix must be square and nonempty");
        if (!K.allFinite()) throw InputError("gram matrix has non-finite entries");
        const double scale = std::max(K.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
        if ((K - K.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) throw InputError("gram matrix is not symmetric");
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (K + K.transpose()));
        if (es.info() != Eigen::Success) throw NumericError("eigendecomposition of gram matrix failed");
        const VectorXd& ev = es.eigenvalues();  // ascending
        const double top = ev[ev.size() - 1];
        if (ev[0] < -1e-10 * std::max(top, 0.0)) throw InputError("gram matrix is not positive semidefinite");
        Eigen::Index keep = 0;
        for (Eigen::Index i = ev.size() - 1; i >= 0 && top > 0.0 && ev[i] > rel_tol * top; --i) ++keep;
        KernelFactor f;
        f.basis = es.eigenvectors().rightCols(keep).rowwise().reverse();
        f.sigma = ev.tail(keep).reverse().cwiseSqrt();
        f.factor = f.basis * f.sigma.asDiagonal();
        return f;
    }

    /// Factor of K = Phi Phi^T from an explicit n x d feature matrix.
    static KernelFactor from_features(const MatrixXd& Phi, double rel_tol = 1e-12) {
        if (Phi.rows() == 0) throw InputError("feature matrix has no rows");
        if (!Phi.allFinite()) throw InputError("feature matrix has non-finite entries");
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(Phi.transpose() * Phi);
        if (es.info() != Eigen::Success) throw NumericError("eigendecomposition of feature covariance failed");
        const VectorXd& ev = es.eigenvalues();
        const double top = ev[ev.size() - 1];
        Eigen::Index keep = 0;
        for (Eigen::Index i = ev.size() - 1; i >= 0 && top > 0.0 && ev[i] > rel_tol * top; --i) ++keep;
        KernelFactor f;
        f.to_input = es.eigenvectors().rightCols(keep).rowwise().reverse();
        f.sigma = ev.tail(keep).reverse().cwiseSqrt();
        f.factor = Phi * f.to_input;
        f.basis = f.factor * f.sigma.cwiseInverse().asDiagonal();
        return f;
    }
};

// ---------------------------------------------------------------------------
// Problem / solution types
// ---------------------------------------------------------------------------

struct MklProblem {
    VectorXd y;
    std::vector<KernelFactor> kernels;
    double p = 2.0;
    double lambda1 = 1.0;

    [[nodiscard]] Eigen::Index samples() const { return y.size(); }
    [[nodiscard]] std::size_t blocks() const { return kernels.size(); }

    void validate() const {
        if (kernels.empty()) throw InputError("problem needs at least one kernel");
        if (y.size() == 0) throw InputError("problem needs at least one sample");
        if (!y.allFinite()) throw InputError("responses must be finite");
        for (const auto& k : kernels)
            if (k.samples() != y.size()) throw InputError("kernel size does not match number of responses");
        if (!(p >= 1.0) || !std::isfinite(p)) throw InputError("p must be a finite real >= 1");
        if (!(lambda1 > 0.0) || !std::isfinite(lambda1)) throw InputError("lambda1 must be positive");
    }
};

[[nodiscard]] inline MklProblem make_problem(VectorXd y, const std::vector<GramMatrix>& grams, double p, double lambda1) {
    MklProblem prob;
    prob.y = std::move(y);
    prob.p = p;
    prob.lambda1 = lambda1;
    for (const auto& g : grams) {
        if (g.size() != prob.y.size()) throw InputError("gram matrix size does not match number of responses");
        prob.kernels.push_back(KernelFactor::from_gram(g));
    }
    prob.validate();
    return prob;
}

enum class Method { Auto, Alternating, Proximal };

struct SolverOptions {
    Method method = Method::Auto;
    double tol = 1e-10;             ///< relative objective decrease that ends the iteration
    double step_tol = 1e-10;        ///< ... together with a relative coefficient change below this
    int max_sweeps = 10000;         ///< alternating scheme
    int max_steps = 50000;          ///< proximal scheme
    double theta_floor = 1e-12;
    bool compute_beta = true;
    std::optional<VectorXd> initial_theta;                ///< warm start (alternating)
    std::optional<std::vector<VectorXd>> initial_coef;    ///< warm start (proximal)
};

struct MklSolution {
    std::vector<VectorXd> coef;         ///< compact coordinates per block
    std::vector<VectorXd> beta_blocks;  ///< sqrt-Gram parameterization per block (n-vectors)
    VectorXd block_norms;
    std::optional<VectorXd> theta;
    double objective = 0.0;
    VectorXd fitted;
    int iterations = 0;
    bool converged = false;
    Method method = Method::Auto;
    std::vector<double> trace;  ///< objective after each sweep / step
};

// ---------------------------------------------------------------------------
// Objective
// ---------------------------------------------------------------------------

/// (sum_m x_m^p)^(2/p), computed without overflow.
[[nodiscard]] inline double mixed_norm_squared(const VectorXd& norms, double p) {
    const double top = norms.maxCoeff();
    if (!(top > 0.0)) return 0.0;
    double acc = 0.0;
    for (Eigen::Index m = 0; m < norms.size(); ++m) acc += std::pow(norms[m] / top, p);
    return top * top * std::pow(acc, 2.0 / p);
}

[[nodiscard]] inline VectorXd fitted_values(const MklProblem& prob, const std::vector<VectorXd>& coef) {
    VectorXd f = VectorXd::Zero(prob.samples());
    for (std::size_t m = 0; m < prob.blocks(); ++m) f.noalias() += prob.kernels[m].factor * coef[m];
    return f;
}

/// Objective at compact coordinates.
[[nodiscard]] inline double objective_compact(const MklProblem& prob, const std::vector<VectorXd>& coef) {
    if (coef.size() != prob.blocks()) throw InputError("objective: wrong number of blocks");
    VectorXd norms(static_cast<Eigen::Index>(coef.size()));
    for (std::size_t m = 0; m < coef.size(); ++m) {
        if (coef[m].size() != prob.kernels[m].rank()) throw InputError("objective: block dimension mismatch");
        norms[static_cast<Eigen::Index>(m)] = coef[m].norm();
    }
    const double n = static_cast<double>(prob.samples());
    return (prob.y - fitted_values(prob, coef)).squaredNorm() / n + prob.lambda1 * mixed_norm_squared(norms, prob.p);
}

/// (1/n)|y - sum_m S_m beta_m|^2 + lambda1 (sum_m |beta_m|^p)^(2/p), S_m = sqrt(K_m).
[[nodiscard]] inline double objective_value(const MklProblem& prob, const std::vector<VectorXd>& beta_blocks) {
    if (beta_blocks.size() != prob.blocks()) throw InputError("objective: wrong number of blocks");
    VectorXd resid = prob.y;
    VectorXd norms(static_cast<Eigen::Index>(beta_blocks.size()));
    for (std::size_t m = 0; m < beta_blocks.size(); ++m) {
        if (beta_blocks[m].size() != prob.samples()) throw InputError("objective: block dimension mismatch");
        resid -= prob.kernels[m].apply_sqrt(beta_blocks[m]);
        norms[static_cast<Eigen::Index>(m)] = beta_blocks[m].norm();
    }
    return resid.squaredNorm() / static_cast<double>(prob.samples()) + prob.lambda1 * mixed_norm_squared(norms, prob.p);
}

// ---------------------------------------------------------------------------
// Kernel weights
// ---------------------------------------------------------------------------

/// Minimizer of sum_m |f_m|^2 / theta_m subject to sum_m theta_m^q = 1, q = p/(2-p):
/// theta_m = |f_m|^(2-p) / (sum_l |f_l|^p)^((2-p)/p). Entries are floored at `floor`
/// and the vector is renormalized onto the constraint. p = 2 gives theta = 1.
[[nodiscard]] inline VectorXd theta_update(const VectorXd& norms, double p, double floor = 1e-12) {
    if (!(p >= 1.0 && p <= 2.0)) throw UnsupportedFormulationError("theta_update: p must lie in [1,2]");
    const auto M = norms.size();
    if (M == 0) throw InputError("theta_update: no blocks");
    if ((norms.array() < 0.0).any() || !norms.allFinite()) throw InputError("theta_update: norms must be finite and nonnegative");
    if (p == 2.0) return VectorXd::Ones(M);
    const double q = p / (2.0 - p);
    const double top = norms.maxCoeff();
    if (!(top > 0.0)) return VectorXd::Constant(M, std::pow(static_cast<double>(M), -1.0 / q));
    const VectorXd scaled = norms / top;
    double sum_p = 0.0;
    for (Eigen::Index m = 0; m < M; ++m) sum_p += std::pow(scaled[m], p);
    const double denom = std::pow(sum_p, (2.0 - p) / p);
    VectorXd theta(M);
    for (Eigen::Index m = 0; m < M; ++m) theta[m] = std::max(std::pow(scaled[m], 2.0 - p) / denom, floor);
    double constraint = 0.0;
    for (Eigen::Index m = 0; m < M; ++m) constraint += std::pow(theta[m], q);
    return theta / std::pow(constraint, 1.0 / q);
}

// ---------------------------------------------------------------------------
// Proximal operator of kappa * (sum_m t_m^p)^(2/p) on nonnegative vectors
// ---------------------------------------------------------------------------

namespace detail {

inline VectorXd prox_squared_l1(const VectorXd& a, double kappa) {
    std::vector<double> sorted(a.data(), a.data() + a.size());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double prefix = 0.0;
    double total = 0.0;  // sum of the solution
    for (std::size_t k = 0; k < sorted.size(); ++k) {
        const double cand_prefix = prefix + sorted[k];
        const double cand_total = cand_prefix / (1.0 + 2.0 * kappa * static_cast<double>(k + 1));
        if (sorted[k] - 2.0 * kappa * cand_total <= 0.0) break;
        prefix = cand_prefix;
        total = cand_total;
    }
    return (a.array() - 2.0 * kappa * total).cwiseMax(0.0).matrix();
}

/// Root t in [0, a] of t + tau t^(p-1) = a.
inline double shrink_scalar(double a, double tau, double p) {
    if (a <= 0.0) return 0.0;
    if (tau <= 0.0) return a;
    auto h = [&](double t) { return t + tau * std::pow(t, p - 1.0) - a; };
    std::uintmax_t iters = 200;
    const auto [lo, hi] = boost::math::tools::toms748_solve(h, 0.0, a, -a, tau * std::pow(a, p - 1.0),
                                                            boost::math::tools::eps_tolerance<double>(50), iters);
    return 0.5 * (lo + hi);
}

inline double lp_norm(const VectorXd& t, double p) {
    const double top = t.maxCoeff();
    if (!(top > 0.0)) return 0.0;
    double acc = 0.0;
    for (Eigen::Index i = 0; i < t.size(); ++i) acc += std::pow(t[i] / top, p);
    return top * std::pow(acc, 1.0 / p);
}

}  // namespace detail

/// argmin_t 1/2 |t - a|^2 + kappa (sum t_m^p)^(2/p) over t >= 0, for a >= 0.
[[nodiscard]] inline VectorXd prox_mixed_norm_squared(const VectorXd& a, double kappa, double p) {
    if (!(a.array() >= 0.0).all()) throw InputError("prox: input must be nonnegative");
    if (!(a.maxCoeff() > 0.0) || kappa <= 0.0) return a;
    if (p == 1.0) return detail::prox_squared_l1(a, kappa);
    if (p == 2.0) return a / (1.0 + 2.0 * kappa);
    // Stationarity: t_m + tau t_m^(p-1) = a_m with tau = 2 kappa |t|_p^(2-p).
    const auto shrink = [&](double tau) {
        VectorXd t(a.size());
        for (Eigen::Index m = 0; m < a.size(); ++m) t[m] = detail::shrink_scalar(a[m], tau, p);
        return t;
    };
    const auto gap = [&](double tau) { return tau - 2.0 * kappa * std::pow(detail::lp_norm(shrink(tau), p), 2.0 - p); };
    double hi = 2.0 * kappa * std::pow(detail::lp_norm(a, p), 2.0 - p);
    if (!(hi > 0.0)) hi = 1.0;
    double g_hi = gap(hi);
    for (int i = 0; i < 400 && g_hi <= 0.0; ++i) {
        hi *= 2.0;
        g_hi = gap(hi);
    }
    const double g_lo = gap(0.0);
    if (g_lo >= 0.0) return shrink(0.0);
    std::uintmax_t iters = 200;
    const auto [lo_t, hi_t] =
        boost::math::tools::toms748_solve(gap, 0.0, hi, g_lo, g_hi, boost::math::tools::eps_tolerance<double>(50), iters);
    return shrink(0.5 * (lo_t + hi_t));
}

// ---------------------------------------------------------------------------
// Solvers
// ---------------------------------------------------------------------------

namespace detail {

inline void finish(const MklProblem& prob, const SolverOptions& opts, MklSolution& sol) {
    const auto M = static_cast<Eigen::Index>(prob.blocks());
    sol.block_norms.resize(M);
    for (Eigen::Index m = 0; m < M; ++m) sol.block_norms[m] = sol.coef[static_cast<std::size_t>(m)].norm();
    sol.fitted = fitted_values(prob, sol.coef);
    sol.objective = objective_compact(prob, sol.coef);
    sol.beta_blocks.clear();
    if (opts.compute_beta)
        for (std::size_t m = 0; m < prob.blocks(); ++m) sol.beta_blocks.push_back(prob.kernels[m].basis * sol.coef[m]);
}

/// Stacked factor [A_1 ... A_M] and block offsets.
struct Stacked {
    MatrixXd A;
    std::vector<Eigen::Index> offset;
    Eigen::Index total = 0;

    explicit Stacked(const MklProblem& prob) {
        for (const auto& k : prob.kernels) {
            offset.push_back(total);
            total += k.rank();
        }
        A.resize(prob.samples(), total);
        for (std::size_t m = 0; m < prob.blocks(); ++m)
            A.middleCols(offset[m], prob.kernels[m].rank()) = prob.kernels[m].factor;
    }

    [[nodiscard]] std::vector<VectorXd> split(const VectorXd& c, const MklProblem& prob) const {
        std::vector<VectorXd> out;
        for (std::size_t m = 0; m < prob.blocks(); ++m) out.emplace_back(c.segment(offset[m], prob.kernels[m].rank()));
        return out;
    }

    [[nodiscard]] VectorXd join(const std::vector<VectorXd>& blocks) const {
        VectorXd c(total);
        for (std::size_t m = 0; m < blocks.size(); ++m) c.segment(offset[m], blocks[m].size()) = blocks[m];
        return c;
    }
};

/// Ridge solve at fixed kernel weights: minimizes (1/n)|y - sum A_m c_m|^2 + lambda sum |c_m|^2 / theta_m.
/// Works in the dual (n x n) or primal (R x R) space, whichever is smaller.
class WeightedRidge {
public:
    WeightedRidge(const MklProblem& prob, const Stacked& st) : prob_(prob), st_(st) {
        dual_ = prob.samples() <= st.total;
        if (dual_) {
            for (const auto& k : prob.kernels) grams_.push_back(k.gram());
        } else {
            H_ = st.A.transpose() * st.A;
            b_ = st.A.transpose() * prob.y;
        }
    }

    [[nodiscard]] std::vector<VectorXd> solve(const VectorXd& theta) const {
        const auto n = prob_.samples();
        const double shift = static_cast<double>(n) * prob_.lambda1;
        std::vector<VectorXd> coef;
        if (dual_) {
            MatrixXd K = MatrixXd::Identity(n, n) * shift;
            for (std::size_t m = 0; m < grams_.size(); ++m) K.noalias() += theta[static_cast<Eigen::Index>(m)] * grams_[m];
            Eigen::LLT<MatrixXd> llt(K);
            if (llt.info() != Eigen::Success) throw NumericError("ridge system is not positive definite");
            const VectorXd alpha = llt.solve(prob_.y);
            for (std::size_t m = 0; m < prob_.blocks(); ++m)
                coef.emplace_back(theta[static_cast<Eigen::Index>(m)] * (prob_.kernels[m].factor.transpose() * alpha));
        } else {
            VectorXd d(st_.total);
            for (std::size_t m = 0; m < prob_.blocks(); ++m)
                d.segment(st_.offset[m], prob_.kernels[m].rank()).setConstant(std::sqrt(theta[static_cast<Eigen::Index>(m)]));
            MatrixXd S = d.asDiagonal() * H_ * d.asDiagonal();
            S.diagonal().array() += shift;
            Eigen::LLT<MatrixXd> llt(S);
            if (llt.info() != Eigen::Success) throw NumericError("ridge system is not positive definite");
            const VectorXd v = llt.solve(d.asDiagonal() * b_);
            coef = st_.split(d.asDiagonal() * v, prob_);
        }
        return coef;
    }

private:
    const MklProblem& prob_;
    const Stacked& st_;
    bool dual_ = true;
    std::vector<MatrixXd> grams_;
    MatrixXd H_;
    VectorXd b_;
};

inline bool small_decrease(double prev, double cur, double tol) {
    return prev - cur <= tol * std::max(std::abs(cur), std::numeric_limits<double>::min());
}

}  // namespace detail

/// Alternating minimization over (f, theta) for the kernel-weight formulation, 1 <= p <= 2.
[[nodiscard]] inline MklSolution solve_theta_path(const MklProblem& prob, const SolverOptions& opts = {}) {
    prob.validate();
    if (prob.p > 2.0)
        throw UnsupportedFormulationError("kernel-weight formulation requires 1 <= p <= 2; use solve() for p > 2");
    const auto M = static_cast<Eigen::Index>(prob.blocks());
    const detail::Stacked st(prob);
    const detail::WeightedRidge ridge(prob, st);

    VectorXd theta;
    if (prob.p == 2.0) {
        theta = VectorXd::Ones(M);
    } else if (opts.initial_theta && opts.initial_theta->size() == M) {
        const double q = prob.p / (2.0 - prob.p);
        theta = opts.initial_theta->cwiseMax(opts.theta_floor);
        double c = 0.0;
        for (Eigen::Index m = 0; m < M; ++m) c += std::pow(theta[m], q);
        theta /= std::pow(c, 1.0 / q);
    } else {
        theta = theta_update(VectorXd::Zero(M), prob.p, opts.theta_floor);
    }

    MklSolution sol;
    sol.method = Method::Alternating;
    double prev = std::numeric_limits<double>::infinity();
    std::vector<VectorXd> last;
    for (int it = 1; it <= opts.max_sweeps; ++it) {
        std::vector<VectorXd> coef = ridge.solve(theta);
        const double obj = objective_compact(prob, coef);
        sol.iterations = it;
        sol.trace.push_back(obj);
        // Keep the best iterate; the objective is monotone up to rounding.
        if (obj <= prev || sol.coef.empty()) {
            sol.coef = coef;
            sol.theta = theta;
        }
        const double step = last.empty() ? std::numeric_limits<double>::infinity() : (st.join(coef) - st.join(last)).norm();
        const double size = 1.0 + st.join(coef).norm();
        last = coef;
        if (prob.p == 2.0 || (detail::small_decrease(prev, obj, opts.tol) && step <= opts.step_tol * size)) {
            sol.converged = true;
            break;
        }
        prev = std::min(prev, obj);
        VectorXd norms(M);
        for (Eigen::Index m = 0; m < M; ++m) norms[m] = sol.coef[static_cast<std::size_t>(m)].norm();
        theta = theta_update(norms, prob.p, opts.theta_floor);
    }
    detail::finish(prob, opts, sol);
    return sol;
}

/// Accelerated proximal gradient with function-value restart on the direct formulation.
[[nodiscard]] inline MklSolution solve_proximal(const MklProblem& prob, const SolverOptions& opts = {}) {
    prob.validate();
    const detail::Stacked st(prob);
    const auto n = static_cast<double>(prob.samples());
    const auto R = st.total;
    const bool use_hessian = R <= prob.samples();
    MatrixXd H;
    VectorXd b;
    double lip = 0.0;
    if (use_hessian) {
        H = st.A.transpose() * st.A;
        b = st.A.transpose() * prob.y;
        if (R > 0) lip = eigenvalues_desc(H)[0];
    } else {
        lip = eigenvalues_desc(st.A * st.A.transpose())[0];
    }
    lip = 2.0 * std::max(lip, 0.0) / n * (1.0 + 1e-9);
    const double yy = prob.y.squaredNorm();

    const auto smooth = [&](const VectorXd& c, VectorXd* grad) {
        if (use_hessian) {
            const VectorXd Hc = H * c;
            if (grad) *grad = (2.0 / n) * (Hc - b);
            return (c.dot(Hc) - 2.0 * b.dot(c) + yy) / n;
        }
        const VectorXd r = st.A * c - prob.y;
        if (grad) *grad = (2.0 / n) * (st.A.transpose() * r);
        return r.squaredNorm() / n;
    };
    const auto regularizer = [&](const VectorXd& c) {
        VectorXd norms(static_cast<Eigen::Index>(prob.blocks()));
        for (std::size_t m = 0; m < prob.blocks(); ++m)
            norms[static_cast<Eigen::Index>(m)] = c.segment(st.offset[m], prob.kernels[m].rank()).norm();
        return prob.lambda1 * mixed_norm_squared(norms, prob.p);
    };
    const auto prox = [&](const VectorXd& v, double step) {
        const auto M = static_cast<Eigen::Index>(prob.blocks());
        VectorXd norms(M);
        for (Eigen::Index m = 0; m < M; ++m)
            norms[m] = v.segment(st.offset[static_cast<std::size_t>(m)], prob.kernels[static_cast<std::size_t>(m)].rank()).norm();
        const VectorXd t = prox_mixed_norm_squared(norms, step * prob.lambda1, prob.p);
        VectorXd out(v.size());
        for (Eigen::Index m = 0; m < M; ++m) {
            const auto off = st.offset[static_cast<std::size_t>(m)];
            const auto len = prob.kernels[static_cast<std::size_t>(m)].rank();
            out.segment(off, len) = norms[m] > 0.0 ? (v.segment(off, len) * (t[m] / norms[m])).eval() : VectorXd::Zero(len);
        }
        return out;
    };

    MklSolution sol;
    sol.method = Method::Proximal;
    VectorXd x = (opts.initial_coef && opts.initial_coef->size() == prob.blocks()) ? st.join(*opts.initial_coef)
                                                                                    : VectorXd::Zero(R);
    if (R == 0 || !(lip > 0.0)) {
        sol.coef = st.split(VectorXd::Zero(R), prob);
        sol.converged = true;
        detail::finish(prob, opts, sol);
        return sol;
    }
    double fx = smooth(x, nullptr) + regularizer(x);
    VectorXd z = x;
    double t = 1.0;
    int quiet = 0;
    VectorXd grad;
    for (int it = 1; it <= opts.max_steps; ++it) {
        sol.iterations = it;
        smooth(z, &grad);
        VectorXd x_new = prox(z - grad / lip, 1.0 / lip);
        double f_new = smooth(x_new, nullptr) + regularizer(x_new);
        // Increases at rounding level are not evidence against the momentum step.
        const double slack = 1e-14 * std::abs(fx);
        if (f_new > fx + slack) {
            // Momentum made things worse: restart from x with a plain proximal step.
            t = 1.0;
            smooth(x, &grad);
            x_new = prox(x - grad / lip, 1.0 / lip);
            f_new = smooth(x_new, nullptr) + regularizer(x_new);
            if (f_new > fx + slack) {
                sol.trace.push_back(fx);
                sol.converged = true;
                break;
            }
        }
        const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        z = x_new + ((t - 1.0) / t_new) * (x_new - x);
        const double step = (x_new - x).norm();
        const bool small = detail::small_decrease(fx, f_new, opts.tol) && step <= opts.step_tol * (1.0 + x_new.norm());
        x = std::move(x_new);
        fx = f_new;
        t = t_new;
        sol.trace.push_back(fx);
        // Require several consecutive quiet steps so a momentum plateau is not mistaken for convergence.
        quiet = small ? quiet + 1 : 0;
        if (quiet >= 5) {
            sol.converged = true;
            break;
        }
    }
    sol.coef = st.split(x, prob);
    detail::finish(prob, opts, sol);
    return sol;
}

/// Solves the mixed-norm MKL problem. Auto dispatch: p <= 2 uses the kernel-weight
/// alternating scheme, p > 2 the accelerated proximal scheme.
[[nodiscard]] inline MklSolution solve(const MklProblem& prob, const SolverOptions& opts = {}) {
    prob.validate();
    Method method = opts.method;
    // With one block the penalty is |f|^2 for every p, so the single ridge solve is exact.
    if (method == Method::Auto) method = prob.p <= 2.0 || prob.blocks() == 1 ? Method::Alternating : Method::Proximal;
    if (method == Method::Alternating && prob.p > 2.0 && prob.blocks() == 1) {
        MklProblem ridge = prob;
        ridge.p = 2.0;
        MklSolution sol = solve_theta_path(ridge, opts);
        sol.objective = objective_compact(prob, sol.coef);
        return sol;
    }
    if (method == Method::Alternating) return solve_theta_path(prob, opts);
    return solve_proximal(prob, opts);
}

}  // namespace lpmkl
