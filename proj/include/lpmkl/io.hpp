#pragma once

// JSON (de)serialization for problems, solutions, theory parameters and truth specs.

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "lpmkl/errors.hpp"
#include "lpmkl/kernel.hpp"
#include "lpmkl/solver.hpp"
#include "lpmkl/synth.hpp"
#include "lpmkl/theory.hpp"

namespace lpmkl::io {

using nlohmann::json;

[[nodiscard]] inline json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError(path.string(), "cannot open file");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw DataError(path.string(), e.what());
    }
}

[[nodiscard]] inline json to_json(const VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

/// Reads a real that may also be the string "inf".
[[nodiscard]] inline double extended_real(const json& j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf" || s == "infinity") return theory::kInfinity;
        throw InputError("expected a number or \"inf\", got \"" + s + "\"");
    }
    return j.get<double>();
}

template <class T>
T required(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key)) throw DataError(where + ": field '" + key + "'", "missing");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw DataError(where + ": field '" + key + "'", e.what());
    }
}

// ---------------------------------------------------------------------------

/// {y: [...], gram_files: [...], p, lambda1}; gram paths are relative to the problem file.
[[nodiscard]] inline MklProblem load_problem(const std::filesystem::path& path) {
    const json j = read_json_file(path);
    const std::string where = path.string();
    if (!j.is_object()) throw DataError(where, "problem must be a JSON object");
    const auto y = required<std::vector<double>>(j, "y", where);
    const auto files = required<std::vector<std::string>>(j, "gram_files", where);
    const auto p = required<double>(j, "p", where);
    const auto lambda1 = required<double>(j, "lambda1", where);
    std::vector<GramMatrix> grams;
    for (const auto& f : files) {
        std::filesystem::path gp(f);
        if (gp.is_relative()) gp = path.parent_path() / gp;
        grams.push_back(load_gram_csv(gp.string()));
    }
    VectorXd yv = Eigen::Map<const VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
    return make_problem(std::move(yv), grams, p, lambda1);
}

[[nodiscard]] inline std::string to_string(Method m) {
    switch (m) {
        case Method::Alternating: return "alternating";
        case Method::Proximal: return "proximal";
        case Method::Auto: break;
    }
    return "auto";
}

[[nodiscard]] inline Method method_from_string(const std::string& s) {
    if (s == "auto") return Method::Auto;
    if (s == "alternating") return Method::Alternating;
    if (s == "proximal") return Method::Proximal;
    throw InputError("unknown method '" + s + "'");
}

[[nodiscard]] inline json solution_json(const MklSolution& sol, bool with_blocks = false) {
    json j;
    j["block_norms"] = to_json(sol.block_norms);
    j["theta"] = sol.theta ? to_json(*sol.theta) : json(nullptr);
    j["objective"] = sol.objective;
    j["iterations"] = sol.iterations;
    j["converged"] = sol.converged;
    j["method"] = to_string(sol.method);
    if (with_blocks) {
        json blocks = json::array();
        for (const auto& b : sol.beta_blocks) blocks.push_back(to_json(b));
        j["beta_blocks"] = std::move(blocks);
        j["fitted"] = to_json(sol.fitted);
    }
    return j;
}

// ---------------------------------------------------------------------------

[[nodiscard]] inline theory::TheoryParams theory_params_from_json(const json& j, const std::string& where) {
    if (!j.is_object()) throw DataError(where, "theory parameters must be a JSON object");
    theory::TheoryParams tp;
    for (const auto& [key, val] : j.items()) {
        try {
            if (key == "n") tp.n = val.get<long>();
            else if (key == "M") tp.M = val.get<long>();
            else if (key == "p") tp.p = extended_real(val);
            else if (key == "s") tp.s = val.get<double>();
            else if (key == "R_p") tp.R_p = val.get<double>();
            else if (key == "kappa") tp.kappa = val.get<double>();
            else if (key == "L") tp.L = val.get<double>();
            else if (key == "c_free") tp.c_free = val.get<double>();
            else if (key == "f_norm_L2" || key == "f_norm_H") continue;
            else throw DataError(where + ": field '" + key + "'", "unknown field");
        } catch (const json::exception& e) {
            throw DataError(where + ": field '" + key + "'", e.what());
        } catch (const InputError& e) {
            throw DataError(where + ": field '" + key + "'", e.what());
        }
    }
    for (const char* key : {"n", "M", "s"})
        if (!j.contains(key)) throw DataError(where + ": field '" + std::string(key) + "'", "missing");
    return tp;
}

[[nodiscard]] inline json json_real(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return nullptr;
    return v;
}

/// Every closed-form quantity at the given parameters, evaluated at the theory-optimal lambda.
[[nodiscard]] inline json theory_report(const theory::TheoryParams& tp, const json& extra = json::object()) {
    tp.validate();
    const theory::LambdaChoice lc = theory::optimal_lambda(tp);
    const theory::RatePrediction rate = theory::predicted_rate(tp);
    const auto branches = theory::complexity_branches(tp, lc.lambda);
    json j;
    j["params"] = {{"n", tp.n}, {"M", tp.M}, {"p", json_real(tp.p)}, {"s", tp.s}, {"R_p", tp.R_p},
                   {"kappa", tp.kappa}, {"L", tp.L}, {"c_free", tp.c_free}};
    j["optimal_lambda"] = lc.lambda;
    j["sample_size_ok"] = lc.sample_size_ok;
    j["zeta_n"] = theory::zeta_n(tp, lc.lambda);
    j["complexity_branches"] = {branches[0], branches[1], branches[2]};
    j["predicted_rate"] = {{"leading", rate.leading}, {"terms", {rate.full[0], rate.full[1], rate.full[2]}}};
    j["minimax_lower_bound"] = theory::minimax_lower_bound(tp, tp.R_p);
    j["localized_rate_factor"] = theory::localized_rate_factor(tp.n, tp.M, tp.p, tp.s);
    j["global_rate_factor"] = theory::global_rate_factor(tp.n, tp.M, tp.p);
    if (extra.contains("f_norm_L2") && extra.contains("f_norm_H"))
        j["u_n_bound"] = theory::u_n_bound(extra["f_norm_L2"].get<double>(), extra["f_norm_H"].get<double>(), tp, lc.lambda);
    return j;
}

// ---------------------------------------------------------------------------

/// Truth file for `gen`: pattern, M (or norm_pattern), truth_truncation, seed, and an optional
/// kernel {s, K}. The kernel scale is always normalized so that sup k(x,x) < 1.
struct TruthFile {
    synth::TruthSpec spec;
    Spectral kernel;
    double noise_L = 0.5;
};

[[nodiscard]] inline TruthFile truth_file_from_json(const json& j, const std::string& where) {
    if (!j.is_object()) throw DataError(where, "truth spec must be a JSON object");
    TruthFile tf;
    try {
        const auto pattern = synth::pattern_from_string(j.value("pattern", std::string("dense")));
        const int trunc = j.value("truth_truncation", 50);
        const auto seed = j.value("seed", std::uint64_t{1});
        if (pattern == synth::Pattern::Custom) {
            tf.spec.pattern = pattern;
            tf.spec.seed = seed;
            tf.spec.truth_truncation = trunc;
            tf.spec.norm_pattern = required<std::vector<double>>(j, "norm_pattern", where);
        } else {
            tf.spec = synth::make_truth_spec(pattern, required<int>(j, "M", where), seed, trunc);
        }
        double s = 0.5;
        int K = 200;
        if (j.contains("kernel")) {
            const auto& k = j.at("kernel");
            s = k.value("s", s);
            K = k.value("K", K);
        }
        tf.kernel = normalized_spectral(s, K);
        tf.noise_L = j.value("noise_L", tf.noise_L);
    } catch (const json::exception& e) {
        throw DataError(where, e.what());
    } catch (const InputError& e) {
        throw DataError(where, e.what());
    }
    return tf;
}

[[nodiscard]] inline json truth_json(const synth::AdditiveModel& f) {
    json blocks = json::array();
    for (std::size_t m = 0; m < f.coef.size(); ++m) {
        blocks.push_back({{"coefficients", to_json(f.coef[m])},
                          {"rkhs_norm", f.rkhs_norm(static_cast<int>(m))},
                          {"l2_norm", f.l2_norm(static_cast<int>(m))}});
    }
    return {{"kernel", {{"decay_s", f.kernel.decay_s}, {"truncation_K", f.kernel.truncation_K}, {"scale_c", f.kernel.scale_c}}},
            {"basis", "sqrt(2) cos(pi k x)"},
            {"blocks", std::move(blocks)}};
}

}  // namespace lpmkl::io
