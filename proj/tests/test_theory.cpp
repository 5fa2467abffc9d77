#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "lpmkl/theory.hpp"
#include "support.hpp"

using namespace lpmkl;
using namespace lpmkl::theory;

namespace {

TheoryParams params(long n, long M, double p, double s, double R = 1.0) {
    TheoryParams tp;
    tp.n = n;
    tp.M = M;
    tp.p = p;
    tp.s = s;
    tp.R_p = R;
    return tp;
}

// Independent transcription of the three localized-complexity terms.
std::array<double, 3> branches_oracle(double n, double M, double p, double s, double lam) {
    const double logm = M == 1.0 ? 1.0 : std::log(M);
    return {std::sqrt(M * logm / n), std::pow(lam, -s / 2) * std::pow(M, (1 + s) / 2 - s / p) / std::sqrt(n),
            std::pow(M, (1 + 4 * s - s * s) / (2 * (1 + s)) - s * (3 - s) / (p * (1 + s))) *
                std::pow(lam, -s * (3 - s) / (2 * (1 + s))) / std::pow(n, 1 / (1 + s))};
}

}  // namespace

TEST(Eta, Examples) {
    EXPECT_EQ(eta(1.0, 7), 1.0);
    EXPECT_EQ(eta(4.0, 4), 2.0);
    EXPECT_EQ(eta(100.0, 25), 20.0);
    EXPECT_THROW((void)eta(-1.0, 4), InputError);
}

TEST(ZetaN, EachBranchCanDominate) {
    struct Case {
        long n;
        long M;
        double p;
        double s;
        double lam;
        int dominant;
    };
    // Large lambda leaves the log branch; small lambda and moderate n the second; tiny lambda the third.
    const Case cases[] = {{1000, 50, 1.0, 0.5, 10.0, 0}, {100000, 4, 2.0, 0.5, 1e-3, 1}, {10, 4, 2.0, 0.9, 1e-8, 2}};
    for (const auto& c : cases) {
        const auto o = branches_oracle(c.n, c.M, c.p, c.s, c.lam);
        const auto b = complexity_branches(params(c.n, c.M, c.p, c.s), c.lam);
        const auto top = std::max_element(o.begin(), o.end()) - o.begin();
        EXPECT_EQ(top, c.dominant);
        for (int i = 0; i < 3; ++i) EXPECT_NEAR(b[static_cast<std::size_t>(i)], o[static_cast<std::size_t>(i)], 1e-12 * o[i]);
        EXPECT_NEAR(zeta_n(params(c.n, c.M, c.p, c.s), c.lam), 2.0 * o[static_cast<std::size_t>(top)], 1e-12 * o[top]);
    }
}

TEST(ZetaN, FirstBranchScalesWithRootN) {
    const auto a = complexity_branches(params(100, 5, 1.5, 0.4), 0.1);
    const auto b = complexity_branches(params(200, 5, 1.5, 0.4), 0.1);
    EXPECT_NEAR(b[0], a[0] / std::sqrt(2.0), 1e-15);
}

TEST(ZetaN, HandArithmeticAtTwoAndInfinity) {
    // s = 1/2, M = 4, n = 100, lambda = 0.1.
    // p = 2: branches sqrt(4 ln 4 / 100), 0.1^(-1/4) 4^(1/2) / 10, 4^(1/2) 0.1^(-5/12) / 100^(2/3).
    const double b1 = std::sqrt(0.04 * std::log(4.0));
    const double b2_two = std::pow(0.1, -0.25) * 2.0 / 10.0;
    const double b3_two = 2.0 * std::pow(0.1, -5.0 / 12.0) / std::pow(100.0, 2.0 / 3.0);
    EXPECT_NEAR(zeta_n(params(100, 4, 2.0, 0.5), 0.1), 2.0 * std::max({b1, b2_two, b3_two}), 1e-14);
    // p = inf: M exponents become 3/4 and 7/12.
    const double b2_inf = std::pow(0.1, -0.25) * std::pow(4.0, 0.75) / 10.0;
    const double b3_inf = std::pow(4.0, 7.0 / 12.0) * std::pow(0.1, -5.0 / 12.0) / std::pow(100.0, 2.0 / 3.0);
    EXPECT_NEAR(zeta_n(params(100, 4, kInfinity, 0.5), 0.1), 2.0 * std::max({b1, b2_inf, b3_inf}), 1e-14);
}

TEST(ZetaN, SingleKernelUsesUnitLog) {
    const auto b = complexity_branches(params(400, 1, 2.0, 0.5), 0.1);
    EXPECT_NEAR(b[0], std::sqrt(1.0 / 400.0), 1e-15);
}

TEST(UnBound, ZeroAndHomogeneity) {
    const auto tp = params(300, 6, 1.5, 0.4);
    EXPECT_EQ(u_n_bound(0.0, 0.0, tp, 0.05), 0.0);
    const double u = u_n_bound(0.3, 1.1, tp, 0.05);
    EXPECT_NEAR(u_n_bound(0.6, 2.2, tp, 0.05), 2.0 * u, 1e-14);
    EXPECT_THROW((void)u_n_bound(-1.0, 1.0, tp, 0.05), InputError);
}

TEST(UnBound, DominatesInterpolatedNorm) {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 20; ++k) {
        const long n = 10 + static_cast<long>(u(rng) * 5000);
        const long M = 1 + static_cast<long>(u(rng) * 30);
        const double p = 1.0 + 4.0 * u(rng);
        const double s = 0.05 + 0.9 * u(rng);
        const double lam = std::pow(10.0, -4.0 + 4.0 * u(rng));
        const double l2 = 0.01 + 2.0 * u(rng);
        const double h = l2 + 3.0 * u(rng);
        const auto tp = params(n, M, p, s);
        EXPECT_GE(u_n_bound(l2, h, tp, lam), std::pow(l2, 1.0 - s) * std::pow(h, s) / std::sqrt(static_cast<double>(n)));
    }
}

TEST(RpNorm, Examples) {
    for (const double p : {1.0, 1.5, 2.0, 4.0, kInfinity}) EXPECT_EQ(r_p_norm({1, 0, 0, 0}, p), 1.0);
    EXPECT_NEAR(r_p_norm(std::vector<double>(8, 1.0), 2.0), std::sqrt(8.0), 1e-15);
    EXPECT_NEAR(r_p_norm({2, 3}, 1.0), 5.0, 1e-15);
    EXPECT_EQ(r_p_norm({2, 3}, kInfinity), 3.0);
    EXPECT_NEAR(r_p_norm(std::vector<double>(5, 1.0), 3.0), std::pow(5.0, 1.0 / 3.0), 1e-15);
}

TEST(OptimalLambda, Examples) {
    EXPECT_NEAR(optimal_lambda(params(64, 1, 2.0, 0.5)).lambda, 0.0625, 1e-15);
    for (const double s : {0.2, 0.7})
        EXPECT_NEAR(optimal_lambda(params(500, 1, 3.0, s)).lambda, std::pow(500.0, -1.0 / (1.0 + s)), 1e-15);
    auto tp = params(64, 1, 2.0, 0.5);
    tp.c_free = 3.0;
    EXPECT_NEAR(optimal_lambda(tp).lambda, 3.0 * 0.0625, 1e-15);
}

TEST(OptimalLambda, DenseSubstitutionAgrees) {
    // R_p = M^(1/p) substituted symbolically: lambda = n^(-1/(1+s)) M^(1 - 2/p).
    for (const double p : {1.0, 1.5, 2.0, 4.0}) {
        const long n = 777;
        const long M = 6;
        const double s = 0.35;
        const double symbolic = std::pow(n, -1.0 / (1.0 + s)) * std::pow(static_cast<double>(M), 1.0 - 2.0 / p);
        const double R = r_p_norm(std::vector<double>(M, 1.0), p);
        EXPECT_NEAR(optimal_lambda(params(n, M, p, s, R)).lambda, symbolic, 1e-13 * symbolic) << "p=" << p;
    }
}

TEST(OptimalLambda, SampleSizeFlag) {
    EXPECT_TRUE(optimal_lambda(params(10000, 4, 2.0, 0.5, 2.0)).sample_size_ok);
    EXPECT_FALSE(optimal_lambda(params(2, 50, 1.0, 0.5, 1.0)).sample_size_ok);
}

TEST(PredictedRate, DenseIsFlatInP) {
    for (const double p : {1.0, 1.25, 1.5, 2.0, 4.0, 8.0, kInfinity}) {
        const long M = 8;
        const double R = r_p_norm(std::vector<double>(M, 1.0), p);
        const auto r = predicted_rate(params(1000, M, p, 0.5, R));
        EXPECT_NEAR(r.leading, 8.0 * std::pow(1000.0, -2.0 / 3.0), 1e-13) << "p=" << p;
    }
}

TEST(PredictedRate, SparseIncreasesWithP) {
    double prev = 0.0;
    for (const double p : {1.0, 1.25, 1.5, 2.0, 4.0, 8.0}) {
        const double v = predicted_rate(params(1000, 8, p, 0.5, 1.0)).leading;
        EXPECT_GT(v, prev) << "p=" << p;
        prev = v;
    }
}

TEST(PredictedRate, SingleKernelCollapse) {
    const auto r = predicted_rate(params(4096, 1, 2.0, 0.5));
    EXPECT_NEAR(r.leading, std::pow(4096.0, -2.0 / 3.0), 1e-16);
    EXPECT_EQ(r.full[1], 0.0);
}

TEST(PredictedRate, ThreeTerms) {
    const double n = 300, M = 5, p = 1.5, s = 0.3, R = 2.0;
    const auto r = predicted_rate(params(300, 5, p, s, R));
    const double sq = (1 + s) * (1 + s);
    EXPECT_NEAR(r.full[0], std::pow(n, -1 / (1 + s)) * std::pow(M, 1 - 2 * s / (p * (1 + s))) * std::pow(R, 2 * s / (1 + s)), 1e-14);
    EXPECT_NEAR(r.full[1], M * std::log(M) / n, 1e-15);
    EXPECT_NEAR(r.full[2],
                std::pow(n, -1 / (1 + s) - (s - 1) * (s - 1) / sq) * std::pow(M, 1 - 2 * s * (3 - s) / (p * sq)) *
                    std::pow(R, 2 * s * (3 - s) / sq),
                1e-14);
}

TEST(MinimaxLowerBound, MatchesLeadingTerm) {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 100; ++k) {
        auto tp = params(1 + static_cast<long>(u(rng) * 1e5), 1 + static_cast<long>(u(rng) * 100), 1.0 + 9.0 * u(rng),
                         0.01 + 0.98 * u(rng), 0.1 + 10.0 * u(rng));
        tp.c_free = 0.5 + u(rng);
        const double lead = predicted_rate(tp).leading;
        EXPECT_NEAR(minimax_lower_bound(tp, tp.R_p), lead, 1e-12 * lead);
    }
}

TEST(MinimaxLowerBound, InfiniteExponentAndMonotonicity) {
    const auto tp = params(1000, 6, kInfinity, 0.5);
    EXPECT_NEAR(minimax_lower_bound(tp, 2.0), std::pow(1000.0, -2.0 / 3.0) * 6.0 * std::pow(2.0, 2.0 / 3.0), 1e-14);
    double prev = 0.0;
    for (const double R : {0.5, 1.0, 2.0, 4.0}) {
        EXPECT_GE(minimax_lower_bound(tp, R), prev);
        prev = minimax_lower_bound(tp, R);
    }
    prev = 0.0;
    for (const long M : {1L, 2L, 4L, 8L}) {
        const double v = minimax_lower_bound(params(1000, M, 1.5, 0.5), 1.0);
        EXPECT_GE(v, prev);
        prev = v;
    }
}

TEST(RateComparison, LocalizedBelowGlobalWhenSampleIsLarge) {
    int checked = 0;
    for (const long n : {4L, 16L, 64L, 256L, 1024L, 4096L, 16384L, 65536L})
        for (const long M : {1L, 2L, 4L, 16L, 64L, 256L})
            for (const double p : {1.0, 1.25, 1.5, 1.75, 2.0})
                for (const double s : {0.1, 0.3, 0.5, 0.7, 0.9}) {
                    const double global = global_rate_factor(n, M, p);
                    if (global > 1.0 || static_cast<double>(n) < std::pow(static_cast<double>(M), 2.0 / p)) continue;
                    EXPECT_LE(localized_rate_factor(n, M, p, s), global * (1.0 + 1e-12));
                    ++checked;
                }
    EXPECT_GT(checked, 100);
}

TEST(Formulas, FiniteAndPositiveOnLattice) {
    for (const long n : {1L, 10L, 1000L, 100000L})
        for (const long M : {1L, 3L, 100L})
            for (const double p : {1.0, 2.0, 7.0, kInfinity})
                for (const double s : {0.01, 0.5, 0.99})
                    for (const double lam : {1e-6, 0.1, 10.0}) {
                        const auto tp = params(n, M, p, s, 1.7);
                        for (const double v : {zeta_n(tp, lam), u_n_bound(0.2, 0.9, tp, lam), optimal_lambda(tp).lambda,
                                               predicted_rate(tp).leading}) {
                            EXPECT_TRUE(std::isfinite(v));
                            EXPECT_GT(v, 0.0);
                        }
                    }
}

TEST(Formulas, ContinuousInRealParameters) {
    const auto tp = params(500, 7, 1.5, 0.4, 2.0);
    const double h = 1e-7;
    auto nudged = tp;
    nudged.p += h;
    nudged.s += h;
    nudged.R_p += h;
    EXPECT_NEAR(predicted_rate(nudged).leading, predicted_rate(tp).leading, 1e-5 * predicted_rate(tp).leading);
    EXPECT_NEAR(zeta_n(nudged, 0.1 + h), zeta_n(tp, 0.1), 1e-5 * zeta_n(tp, 0.1));
    EXPECT_NEAR(optimal_lambda(nudged).lambda, optimal_lambda(tp).lambda, 1e-5 * optimal_lambda(tp).lambda);
}

TEST(Params, Validation) {
    EXPECT_THROW((void)predicted_rate(params(0, 1, 2.0, 0.5)), InputError);
    EXPECT_THROW((void)predicted_rate(params(10, 1, 0.5, 0.5)), InputError);
    EXPECT_THROW((void)predicted_rate(params(10, 1, 2.0, 1.0)), InputError);
    EXPECT_THROW((void)predicted_rate(params(10, 1, 2.0, 0.5, 0.0)), InputError);
}

// ---------------------------------------------------------------------------

namespace {

GramMatrix projector(const MatrixXd& B) {
    GramMatrix G;
    G.values = B * B.transpose();
    return G;
}

}  // namespace

TEST(KappaEstimate, IdenticalGramsAreFullyCorrelated) {
    std::mt19937_64 rng(51);
    const GramMatrix G = lpmkl::testing::random_gram(12, 4, rng);
    EXPECT_NEAR(kappa_estimate({G, G}), 0.0, 1e-8);
}

TEST(KappaEstimate, BlockOrthogonalDesign) {
    std::mt19937_64 rng(52);
    const MatrixXd Q = lpmkl::testing::random_matrix(20, 20, rng).householderQr().householderQ();
    std::vector<GramMatrix> grams;
    for (int m = 0; m < 4; ++m) grams.push_back(projector(Q.middleCols(m * 4, 4) * (1.0 + m)));
    EXPECT_NEAR(kappa_estimate(grams), 1.0, 1e-8);
}

TEST(KappaEstimate, TwoLines) {
    for (const double phi : {0.1, 0.7, 1.2, 1.5707963267948966, 2.5}) {
        const Eigen::Vector3d a(1.0, 0.0, 0.0);
        const Eigen::Vector3d b(std::cos(phi), std::sin(phi), 0.0);
        EXPECT_NEAR(kappa_estimate({projector(a), projector(b)}), 1.0 - std::abs(std::cos(phi)), 1e-8) << phi;
    }
}

TEST(KappaEstimate, RangeAndOrthogonalityBothWays) {
    std::mt19937_64 rng(53);
    for (int k = 0; k < 10; ++k) {
        const double v = kappa_estimate({lpmkl::testing::random_gram(10, 3, rng), lpmkl::testing::random_gram(10, 3, rng),
                                         lpmkl::testing::random_gram(10, 2, rng)});
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
        // Generic subspaces of total dimension 8 in R^10 are not orthogonal.
        EXPECT_LT(v, 1.0 - 1e-6);
    }
    GramMatrix zero;
    zero.values = MatrixXd::Zero(4, 4);
    EXPECT_THROW((void)kappa_estimate({zero}), DegenerateInputError);
}

TEST(EntropyBound, Examples) {
    EXPECT_NEAR(entropy_bound(1, 10, 0.5, 2.0), 2.0, 1e-15);
    for (const long i : {1L, 3L, 9L}) EXPECT_NEAR(entropy_bound(i, 10, 0.4, 1.5, 2.0), 2.0 * 1.5 * std::pow(i, -1.0 / 0.8), 1e-14);
    double prev = entropy_bound(10, 10, 0.3, 1.0);
    for (long i = 11; i < 40; ++i) {
        EXPECT_LE(entropy_bound(i, 10, 0.3, 1.0), prev);
        prev = entropy_bound(i, 10, 0.3, 1.0);
    }
}

TEST(Packing, SmallExhaustive) {
    const auto code = greedy_packing(2, 2);
    ASSERT_EQ(code.size(), 2u);
    EXPECT_EQ(code[0], (Codeword{0, 0}));
    EXPECT_EQ(code[1], (Codeword{1, 1}));
}

TEST(Packing, QStarValues) {
    const auto b = packing_lower_bound(16, 2);
    EXPECT_EQ(b.q_star, 4);
    EXPECT_EQ(b.q_star_ceil, 4);
    for (const int M : {2, 4, 6}) EXPECT_EQ(packing_lower_bound(16, M).log_bound, 0.0);
    // N = 4, M = 6: 4^3 / (2 * 20) = 8/5.
    EXPECT_EQ(packing_lower_bound(4, 6).q_star, boost::multiprecision::cpp_rational(8, 5));
    EXPECT_EQ(packing_lower_bound(4, 6).q_star_ceil, 2);
}

TEST(Packing, GreedyCodeMeetsBound) {
    for (const int N : {2, 3, 4, 8, 16})
        for (int M = 2; std::pow(N, M) <= 1e5; M += 2) {
            const auto code = greedy_packing(N, M);
            const auto b = packing_lower_bound(N, M);
            EXPECT_GE(static_cast<std::int64_t>(code.size()), b.q_star_ceil) << N << "," << M;
            EXPECT_GE(static_cast<double>(code.size()), std::exp(b.log_bound)) << N << "," << M;
            std::set<Codeword> unique(code.begin(), code.end());
            EXPECT_EQ(unique.size(), code.size());
            for (std::size_t i = 0; i < code.size(); ++i)
                for (std::size_t j = i + 1; j < code.size(); ++j) ASSERT_GT(hamming(code[i], code[j]), M / 2);
        }
}

TEST(Packing, Guards) {
    EXPECT_THROW((void)greedy_packing(16, 7), InputError);
    EXPECT_THROW((void)greedy_packing(1, 2), InputError);
    EXPECT_THROW((void)greedy_packing(16, 8), SizeError);
}
