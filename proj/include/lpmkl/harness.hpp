#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "lpmkl/errors.hpp"
#include "lpmkl/kernel.hpp"
#include "lpmkl/solver.hpp"
#include "lpmkl/synth.hpp"
#include "lpmkl/theory.hpp"

namespace lpmkl::harness {

using synth::Pattern;

enum class LambdaRule { Theory, GridCv };

struct ExperimentPlan {
    std::vector<long> n_grid;
    std::vector<int> M_grid;
    std::vector<double> p_grid;
    std::vector<double> s_values;
    std::vector<Pattern> patterns;
    int replicates = 10;
    LambdaRule lambda_rule = LambdaRule::GridCv;
    long n_test = 10000;
    std::uint64_t master_seed = 1;

    double noise_L = 0.5;
    int truncation_K = 200;
    int truth_truncation = 50;
    double c_free = 1.0;
    /// CV candidates, as multiples of the theory-optimal lambda of each cell.
    std::vector<double> lambda_factors = default_lambda_factors();
    SolverOptions solver{};

    static std::vector<double> default_lambda_factors() {
        std::vector<double> f;
        for (int j = -12; j <= 4; ++j) f.push_back(std::pow(10.0, j / 4.0));
        return f;
    }

    void validate() const {
        for (std::size_t i = 1; i < n_grid.size(); ++i)
            if (n_grid[i] <= n_grid[i - 1]) throw InputError("plan: n_grid must be strictly increasing");
        for (const long n : n_grid)
            if (n < 2) throw InputError("plan: every n must be >= 2");
        for (const int M : M_grid)
            if (M < 1) throw InputError("plan: every M must be >= 1");
        for (const double p : p_grid)
            if (!(p >= 1.0) || !std::isfinite(p)) throw InputError("plan: every p must be a finite real >= 1");
        for (const double s : s_values)
            if (!(s > 0.0 && s < 1.0)) throw InputError("plan: every s must lie in (0,1)");
        if (replicates < 1) throw InputError("plan: replicates must be >= 1");
        if (n_test < 1) throw InputError("plan: n_test must be >= 1");
        if (!(noise_L > 0.0)) throw InputError("plan: noise_L must be positive");
        if (lambda_factors.empty()) throw InputError("plan: lambda grid is empty");
        for (const double f : lambda_factors)
            if (!(f > 0.0)) throw InputError("plan: lambda factors must be positive");
    }
};

struct Cell {
    long n = 0;
    int M = 0;
    double p = 0.0;
    double s = 0.0;
    Pattern pattern = Pattern::Dense;
    int replicate = 0;

    [[nodiscard]] auto key() const { return std::tuple(n, M, p, s, static_cast<int>(pattern), replicate); }
    friend bool operator<(const Cell& a, const Cell& b) { return a.key() < b.key(); }
    friend bool operator==(const Cell& a, const Cell& b) { return a.key() == b.key(); }
};

struct RateRecord {
    Cell cell;
    double measured_error = 0.0;
    double std_error = 0.0;
    double lambda_used = 0.0;
    double predicted_leading = 0.0;
    bool converged = false;
    std::string failure;  ///< non-empty when the cell could not be run
};

// ---------------------------------------------------------------------------
// Cell construction
// ---------------------------------------------------------------------------

[[nodiscard]] inline std::vector<double> norm_pattern(Pattern pattern, int M) {
    return synth::make_truth_spec(pattern, M, 0).norm_pattern;
}

/// Theory parameters of a cell; R_p is the mixed norm of the truth's norm pattern.
[[nodiscard]] inline theory::TheoryParams theory_params(const ExperimentPlan& plan, const Cell& c) {
    theory::TheoryParams tp;
    tp.n = c.n;
    tp.M = c.M;
    tp.p = c.p;
    tp.s = c.s;
    tp.R_p = theory::r_p_norm(norm_pattern(c.pattern, c.M), c.p);
    tp.L = plan.noise_L;
    tp.c_free = plan.c_free;
    return tp;
}

// Seeds. The data stream excludes p so cells that differ only in p see the same sample.
[[nodiscard]] inline std::uint64_t truth_seed(const ExperimentPlan& plan, const Cell& c) {
    return synth::mix_seed({plan.master_seed, 0x7275ULL, static_cast<std::uint64_t>(c.M), synth::double_bits(c.s),
                            static_cast<std::uint64_t>(c.pattern), static_cast<std::uint64_t>(c.replicate)});
}

[[nodiscard]] inline std::uint64_t data_seed(const ExperimentPlan& plan, const Cell& c) {
    return synth::mix_seed({plan.master_seed, 0x6461ULL, static_cast<std::uint64_t>(c.n), static_cast<std::uint64_t>(c.M),
                            synth::double_bits(c.s), static_cast<std::uint64_t>(c.pattern),
                            static_cast<std::uint64_t>(c.replicate)});
}

[[nodiscard]] inline std::uint64_t test_seed(const ExperimentPlan& plan, const Cell& c) {
    return synth::mix_seed({plan.master_seed, 0x7465ULL, static_cast<std::uint64_t>(c.n), static_cast<std::uint64_t>(c.M),
                            synth::double_bits(c.s), static_cast<std::uint64_t>(c.replicate)});
}

/// Per-block feature matrices sqrt(mu_k) phi_k(x_i^(m)).
[[nodiscard]] inline std::vector<MatrixXd> block_features(const Spectral& kernel, const MatrixXd& X) {
    std::vector<MatrixXd> out;
    for (Eigen::Index m = 0; m < X.cols(); ++m) {
        const VectorXd col = X.col(m);
        out.push_back(spectral_features(kernel, std::span<const double>(col.data(), static_cast<std::size_t>(col.size()))));
    }
    return out;
}

[[nodiscard]] inline MklProblem feature_problem(const std::vector<MatrixXd>& features, const VectorXd& y, double p,
                                                double lambda1) {
    MklProblem prob;
    prob.y = y;
    prob.p = p;
    prob.lambda1 = lambda1;
    for (const auto& F : features) prob.kernels.push_back(KernelFactor::from_features(F));
    prob.validate();
    return prob;
}

/// Input-feature weights of each block (w with f_m = Phi_m w).
[[nodiscard]] inline std::vector<VectorXd> input_weights(const MklProblem& prob, const MklSolution& sol) {
    std::vector<VectorXd> w;
    for (std::size_t m = 0; m < prob.blocks(); ++m) w.push_back(prob.kernels[m].to_input * sol.coef[m]);
    return w;
}

struct CvResult {
    double lambda = 0.0;
    std::vector<double> holdout_error;  ///< aligned with the input grid
};

/// 80/20 holdout over a lambda grid. Returns the lambda with the smallest holdout squared
/// error; ties go to the larger lambda.
[[nodiscard]] inline CvResult grid_cv_lambda_detailed(const std::vector<MatrixXd>& features, const VectorXd& y, double p,
                                                      const std::vector<double>& lambda_grid, std::uint64_t seed,
                                                      SolverOptions opts = {}) {
    if (lambda_grid.empty()) throw InputError("grid_cv_lambda: empty lambda grid");
    for (const double l : lambda_grid)
        if (!(l > 0.0)) throw InputError("grid_cv_lambda: lambdas must be positive");
    const auto n = y.size();
    if (n < 2) throw InputError("grid_cv_lambda: need at least 2 samples");
    CvResult res;
    res.holdout_error.assign(lambda_grid.size(), std::numeric_limits<double>::infinity());
    if (lambda_grid.size() == 1) {
        res.lambda = lambda_grid.front();
        return res;
    }
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n_train = std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::floor(0.8 * static_cast<double>(n))), 1, n - 1);
    std::vector<Eigen::Index> train(idx.begin(), idx.begin() + n_train);
    std::vector<Eigen::Index> hold(idx.begin() + n_train, idx.end());
    std::sort(train.begin(), train.end());
    std::sort(hold.begin(), hold.end());

    std::vector<MatrixXd> f_train;
    std::vector<MatrixXd> f_hold;
    for (const auto& F : features) {
        f_train.emplace_back(F(train, Eigen::all));
        f_hold.emplace_back(F(hold, Eigen::all));
    }
    const VectorXd y_train = y(train);
    const VectorXd y_hold = y(hold);
    MklProblem prob = feature_problem(f_train, y_train, p, lambda_grid.front());

    std::vector<std::size_t> order(lambda_grid.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return lambda_grid[a] > lambda_grid[b]; });

    opts.compute_beta = false;
    double best = std::numeric_limits<double>::infinity();
    for (const auto i : order) {
        prob.lambda1 = lambda_grid[i];
        const MklSolution sol = solve(prob, opts);
        if (sol.theta) opts.initial_theta = sol.theta;
        opts.initial_coef = sol.coef;
        const auto w = input_weights(prob, sol);
        VectorXd pred = VectorXd::Zero(y_hold.size());
        for (std::size_t m = 0; m < w.size(); ++m) pred += f_hold[m] * w[m];
        const double err = (pred - y_hold).squaredNorm() / static_cast<double>(y_hold.size());
        res.holdout_error[i] = std::isfinite(err) ? err : std::numeric_limits<double>::infinity();
        // Descending scan with strict improvement keeps the larger lambda on ties.
        if (res.holdout_error[i] < best) {
            best = res.holdout_error[i];
            res.lambda = lambda_grid[i];
        }
    }
    if (!std::isfinite(best)) throw NumericError("grid_cv_lambda: every candidate failed");
    return res;
}

[[nodiscard]] inline double grid_cv_lambda(const std::vector<MatrixXd>& features, const VectorXd& y, double p,
                                           const std::vector<double>& lambda_grid, std::uint64_t seed,
                                           const SolverOptions& opts = {}) {
    return grid_cv_lambda_detailed(features, y, p, lambda_grid, seed, opts).lambda;
}

/// Gram-matrix entry point: each Gram is converted to full-sample features G = F F^T.
[[nodiscard]] inline double grid_cv_lambda(const std::vector<GramMatrix>& grams, const VectorXd& y, double p,
                                           const std::vector<double>& lambda_grid, std::uint64_t seed,
                                           const SolverOptions& opts = {}) {
    std::vector<MatrixXd> features;
    for (const auto& g : grams) features.push_back(KernelFactor::from_gram(g).factor);
    return grid_cv_lambda(features, y, p, lambda_grid, seed, opts);
}

/// Everything run_cell computes, kept for callers that need more than the record.
struct CellOutcome {
    RateRecord record;
    synth::AdditiveModel truth;
    synth::AdditiveModel estimate;
    MklSolution solution;
};

[[nodiscard]] inline CellOutcome run_cell_detailed(const ExperimentPlan& plan, const Cell& cell,
                                                   std::optional<double> lambda_override = std::nullopt) {
    const Spectral kernel = normalized_spectral(cell.s, plan.truncation_K);
    synth::TruthSpec ts = synth::make_truth_spec(cell.pattern, cell.M, truth_seed(plan, cell), plan.truth_truncation);
    CellOutcome out;
    out.truth = synth::build_truth(ts, kernel);
    const synth::Dataset data = synth::sample_dataset(out.truth, cell.n, plan.noise_L, data_seed(plan, cell));
    const auto features = block_features(kernel, data.X);

    const theory::TheoryParams tp = theory_params(plan, cell);
    const double lambda_theory = theory::optimal_lambda(tp).lambda;
    double lambda = lambda_theory;
    if (lambda_override) {
        lambda = *lambda_override;
    } else if (plan.lambda_rule == LambdaRule::GridCv) {
        std::vector<double> grid;
        for (const double f : plan.lambda_factors) grid.push_back(f * lambda_theory);
        lambda = grid_cv_lambda(features, data.y, cell.p, grid, synth::mix_seed({data_seed(plan, cell), 0x6376ULL}),
                                plan.solver);
    }

    const MklProblem prob = feature_problem(features, data.y, cell.p, lambda);
    SolverOptions opts = plan.solver;
    opts.compute_beta = false;
    out.solution = solve(prob, opts);
    const VectorXd root_mu = spectral_eigenvalues(kernel).cwiseSqrt();
    out.estimate.kernel = kernel;
    for (const auto& w : input_weights(prob, out.solution)) out.estimate.coef.emplace_back(root_mu.cwiseProduct(w));

    const synth::L2Error err = synth::measure_l2_error(out.estimate, out.truth, plan.n_test, test_seed(plan, cell));
    RateRecord& r = out.record;
    r.cell = cell;
    r.measured_error = err.mean;
    r.std_error = err.std_error;
    r.lambda_used = lambda;
    r.predicted_leading = theory::predicted_rate(tp).leading;
    r.converged = out.solution.converged;
    return out;
}

[[nodiscard]] inline RateRecord run_cell(const ExperimentPlan& plan, const Cell& cell) {
    return run_cell_detailed(plan, cell).record;
}

// ---------------------------------------------------------------------------
// Slope fitting
// ---------------------------------------------------------------------------

struct SlopeFit {
    double slope = 0.0;
    double std_error = 0.0;
    double intercept = 0.0;
    int points = 0;
};

/// OLS of log(mean error) on log n, after averaging replicates per n. Nonpositive means are dropped.
[[nodiscard]] inline SlopeFit fit_slope(const std::vector<RateRecord>& records) {
    std::map<long, std::pair<double, int>> by_n;
    for (const auto& r : records) {
        if (!r.failure.empty() || !std::isfinite(r.measured_error)) continue;
        auto& [sum, count] = by_n[r.cell.n];
        sum += r.measured_error;
        ++count;
    }
    std::vector<double> lx;
    std::vector<double> ly;
    for (const auto& [n, acc] : by_n) {
        const double mean = acc.first / acc.second;
        if (!(mean > 0.0)) continue;
        lx.push_back(std::log(static_cast<double>(n)));
        ly.push_back(std::log(mean));
    }
    if (lx.size() < 4) throw InsufficientDataError("fit_slope: fewer than 4 usable n values");
    const auto k = static_cast<double>(lx.size());
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / k;
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / k;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    SlopeFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double sse = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        const double e = ly[i] - fit.intercept - fit.slope * lx[i];
        sse += e * e;
    }
    fit.std_error = std::sqrt(sse / (k - 2.0) / sxx);
    fit.points = static_cast<int>(lx.size());
    return fit;
}

/// Acceptance band for a fitted slope against theory exponent -1/(1+s):
/// slope / exponent in [0.75, 1.275], i.e. [-0.85, -0.50] at s = 1/2.
struct SlopeBand {
    double lower = 0.0;
    double upper = 0.0;
};

[[nodiscard]] inline SlopeBand slope_band(double theory_exponent) {
    return {1.275 * theory_exponent, 0.75 * theory_exponent};
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

[[nodiscard]] inline std::vector<Cell> enumerate_cells(const ExperimentPlan& plan) {
    std::vector<Cell> cells;
    for (const long n : plan.n_grid)
        for (const int M : plan.M_grid)
            for (const double p : plan.p_grid)
                for (const double s : plan.s_values)
                    for (const Pattern pat : plan.patterns)
                        for (int r = 0; r < plan.replicates; ++r) cells.push_back({n, M, p, s, pat, r});
    std::sort(cells.begin(), cells.end());
    cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
    return cells;
}

/// Runs every cell on up to `workers` threads. Each worker writes only its own slots, so
/// the result order is the canonical cell order regardless of scheduling.
[[nodiscard]] inline std::vector<RateRecord> run_cells(const ExperimentPlan& plan, const std::vector<Cell>& cells,
                                                       int workers = 1) {
    std::vector<RateRecord> out(cells.size());
    std::atomic<std::size_t> next{0};
    const auto work = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
            try {
                out[i] = run_cell(plan, cells[i]);
            } catch (const std::exception& e) {
                out[i].cell = cells[i];
                out[i].measured_error = std::numeric_limits<double>::quiet_NaN();
                out[i].std_error = std::numeric_limits<double>::quiet_NaN();
                out[i].failure = e.what();
            }
        }
    };
    const int w = std::max(1, std::min<int>(workers, static_cast<int>(cells.size())));
    if (w <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < w; ++t) pool.emplace_back(work);
    }
    return out;
}

struct ConfigSummary {
    int M = 0;
    double p = 0.0;
    double s = 0.0;
    Pattern pattern = Pattern::Dense;
    std::optional<SlopeFit> fit;
    double theory_exponent = 0.0;
    bool pass = false;
    std::string note;
};

[[nodiscard]] inline std::vector<ConfigSummary> summarize(const std::vector<RateRecord>& records) {
    std::map<std::tuple<int, double, double, int>, std::vector<RateRecord>> groups;
    for (const auto& r : records)
        groups[{r.cell.M, r.cell.p, r.cell.s, static_cast<int>(r.cell.pattern)}].push_back(r);
    std::vector<ConfigSummary> out;
    for (const auto& [key, recs] : groups) {
        ConfigSummary cs;
        cs.M = std::get<0>(key);
        cs.p = std::get<1>(key);
        cs.s = std::get<2>(key);
        cs.pattern = static_cast<Pattern>(std::get<3>(key));
        cs.theory_exponent = -1.0 / (1.0 + cs.s);
        try {
            cs.fit = fit_slope(recs);
            const SlopeBand band = slope_band(cs.theory_exponent);
            cs.pass = cs.fit->slope >= band.lower && cs.fit->slope <= band.upper;
        } catch (const InsufficientDataError& e) {
            cs.note = e.what();
        }
        out.push_back(std::move(cs));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

[[nodiscard]] inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline constexpr const char* kRecordsHeader =
    "n,M,p,s,pattern,replicate,measured_error,stderr,lambda_used,predicted_leading,converged";

inline void write_records_csv(std::ostream& out, const std::vector<RateRecord>& records) {
    out << kRecordsHeader << '\n';
    for (const auto& r : records) {
        out << r.cell.n << ',' << r.cell.M << ',' << format_double(r.cell.p) << ',' << format_double(r.cell.s) << ','
            << synth::to_string(r.cell.pattern) << ',' << r.cell.replicate << ',' << format_double(r.measured_error) << ','
            << format_double(r.std_error) << ',' << format_double(r.lambda_used) << ','
            << format_double(r.predicted_leading) << ',' << (r.converged ? "true" : "false") << '\n';
    }
}

[[nodiscard]] inline std::vector<RateRecord> read_records_csv(std::istream& in, const std::string& name) {
    std::string line;
    std::size_t lineno = 0;
    std::vector<RateRecord> out;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            if (line != kRecordsHeader) throw DataError(name + ":" + std::to_string(lineno), "unexpected header");
            header_seen = true;
            continue;
        }
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) f.push_back(tok);
        if (f.size() != 11)
            throw DataError(name + ":" + std::to_string(lineno), "expected 11 fields, got " + std::to_string(f.size()));
        const auto num = [&](std::size_t i) {
            try {
                std::size_t used = 0;
                const double v = std::stod(f[i], &used);
                if (used != f[i].size()) throw std::invalid_argument(f[i]);
                return v;
            } catch (const std::exception&) {
                throw DataError(name + ":" + std::to_string(lineno) + ":" + std::to_string(i + 1),
                                "not a number: '" + f[i] + "'");
            }
        };
        RateRecord r;
        r.cell.n = static_cast<long>(num(0));
        r.cell.M = static_cast<int>(num(1));
        r.cell.p = num(2);
        r.cell.s = num(3);
        try {
            r.cell.pattern = synth::pattern_from_string(f[4]);
        } catch (const InputError& e) {
            throw DataError(name + ":" + std::to_string(lineno) + ":5", e.what());
        }
        r.cell.replicate = static_cast<int>(num(5));
        r.measured_error = num(6);
        r.std_error = num(7);
        r.lambda_used = num(8);
        r.predicted_leading = num(9);
        if (f[10] != "true" && f[10] != "false")
            throw DataError(name + ":" + std::to_string(lineno) + ":11", "expected true/false");
        r.converged = f[10] == "true";
        out.push_back(r);
    }
    if (!header_seen) throw DataError(name, "missing header");
    return out;
}

[[nodiscard]] inline nlohmann::json summary_json(const std::vector<ConfigSummary>& configs) {
    using nlohmann::json;
    json cfgs = json::array();
    for (const auto& c : configs) {
        json j;
        j["M"] = c.M;
        j["p"] = c.p;
        j["s"] = c.s;
        j["pattern"] = synth::to_string(c.pattern);
        j["theory_exponent"] = c.theory_exponent;
        const SlopeBand band = slope_band(c.theory_exponent);
        j["band"] = {{"lower", band.lower}, {"upper", band.upper}};
        if (c.fit) {
            j["slope"] = c.fit->slope;
            j["slope_stderr"] = c.fit->std_error;
            j["intercept"] = c.fit->intercept;
            j["n_points"] = c.fit->points;
        } else {
            j["slope"] = nullptr;
            j["slope_stderr"] = nullptr;
            j["note"] = c.note;
        }
        j["pass"] = c.pass;
        cfgs.push_back(std::move(j));
    }
    json out;
    out["configurations"] = std::move(cfgs);
    out["tolerance"] =
        "slope / theory_exponent must lie in [0.75, 1.275]; theory exponent is -1/(1+s). Bands are engineering "
        "choices for desk-scale n, not derived constants.";
    out["truth_construction"] =
        "each active block has coefficients b_k = g_k mu_k (g_k standard normal, k <= truth_truncation) rescaled to "
        "the target RKHS norm; this is one choice among many for drawing f* inside the norm ball.";
    return out;
}

[[nodiscard]] inline LambdaRule lambda_rule_from_string(const std::string& s) {
    if (s == "theory") return LambdaRule::Theory;
    if (s == "grid_cv") return LambdaRule::GridCv;
    throw InputError("unknown lambda_rule '" + s + "'");
}

/// Plan file: JSON object mirroring ExperimentPlan. n_grid may be a list or
/// {"start": n0, "ratio": r, "count": k}.
[[nodiscard]] inline ExperimentPlan plan_from_json(const nlohmann::json& j, const std::string& name = "plan") {
    using nlohmann::json;
    if (!j.is_object()) throw DataError(name, "plan must be a JSON object");
    ExperimentPlan plan;
    plan.n_grid.clear();
    const auto field = [&](const std::string& key) { return name + ": field '" + key + "'"; };
    try {
        for (const auto& [key, val] : j.items()) {
            if (key == "n_grid") {
                if (val.is_object()) {
                    const long start = val.at("start").get<long>();
                    const double ratio = val.at("ratio").get<double>();
                    const int count = val.at("count").get<int>();
                    double v = static_cast<double>(start);
                    for (int i = 0; i < count; ++i, v *= ratio) plan.n_grid.push_back(std::lround(v));
                } else {
                    plan.n_grid = val.get<std::vector<long>>();
                }
            } else if (key == "M_grid") {
                plan.M_grid = val.get<std::vector<int>>();
            } else if (key == "p_grid") {
                plan.p_grid = val.get<std::vector<double>>();
            } else if (key == "s_values") {
                plan.s_values = val.get<std::vector<double>>();
            } else if (key == "patterns") {
                plan.patterns.clear();
                for (const auto& p : val) plan.patterns.push_back(synth::pattern_from_string(p.get<std::string>()));
            } else if (key == "replicates") {
                plan.replicates = val.get<int>();
            } else if (key == "lambda_rule") {
                plan.lambda_rule = lambda_rule_from_string(val.get<std::string>());
            } else if (key == "n_test") {
                plan.n_test = val.get<long>();
            } else if (key == "master_seed") {
                plan.master_seed = val.get<std::uint64_t>();
            } else if (key == "noise_L") {
                plan.noise_L = val.get<double>();
            } else if (key == "truncation_K") {
                plan.truncation_K = val.get<int>();
            } else if (key == "truth_truncation") {
                plan.truth_truncation = val.get<int>();
            } else if (key == "c_free") {
                plan.c_free = val.get<double>();
            } else if (key == "lambda_factors") {
                plan.lambda_factors = val.get<std::vector<double>>();
            } else {
                throw DataError(field(key), "unknown field");
            }
        }
        plan.validate();
    } catch (const json::exception& e) {
        throw DataError(name, e.what());
    } catch (const InputError& e) {
        throw DataError(name, e.what());
    }
    return plan;
}

}  // namespace lpmkl::harness
