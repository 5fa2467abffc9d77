#pragma once

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "lpmkl/errors.hpp"
#include "lpmkl/harness.hpp"
#include "lpmkl/io.hpp"
#include "lpmkl/theory.hpp"

namespace lpmkl::cli {

namespace fs = std::filesystem;
using nlohmann::json;

enum ExitCode : int { kOk = 0, kUsage = 1, kRuntime = 2 };

struct Globals {
    bool pretty = false;
    int verbosity = 0;
    int workers = 1;
};

namespace detail {

inline void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError(path.string(), "cannot open for writing");
    f << text;
    if (!f) throw DataError(path.string(), "write failed");
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline void print_summary_table(std::ostream& out, const std::vector<harness::ConfigSummary>& configs) {
    out << std::left << std::setw(5) << "M" << std::setw(8) << "p" << std::setw(7) << "s" << std::setw(9) << "pattern"
        << std::setw(12) << "slope" << std::setw(11) << "stderr" << std::setw(10) << "theory" << "pass\n";
    for (const auto& c : configs) {
        out << std::left << std::setw(5) << c.M << std::setw(8) << c.p << std::setw(7) << c.s << std::setw(9)
            << synth::to_string(c.pattern);
        if (c.fit) {
            out << std::setw(12) << std::setprecision(4) << c.fit->slope << std::setw(11) << c.fit->std_error;
        } else {
            out << std::setw(12) << "-" << std::setw(11) << "-";
        }
        out << std::setw(10) << std::setprecision(4) << c.theory_exponent << (c.pass ? "yes" : "no") << '\n';
    }
}

inline void print_flat(std::ostream& out, const json& j, const std::string& prefix = "") {
    for (const auto& [k, v] : j.items()) {
        const std::string key = prefix.empty() ? k : prefix + "." + k;
        if (v.is_object()) print_flat(out, v, key);
        else out << std::left << std::setw(28) << key << v.dump() << '\n';
    }
}

}  // namespace detail

/// Parses argv and runs one subcommand. Returns 0 on success, 1 on usage errors and 2 on
/// runtime or data errors.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"l_p-norm multiple kernel learning: solver, theory calculator and rate experiments", "lpmkl"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_flag("--pretty", g.pretty, "Human-readable tables instead of JSON");
    app.add_flag("-v,--verbose", g.verbosity, "Progress messages on stderr (repeatable)");
    app.add_option("--workers", g.workers, "Parallel cells for sweep")->check(CLI::PositiveNumber);

    // solve
    auto* solve_cmd = app.add_subcommand("solve", "Fit an l_p-MKL problem");
    std::string problem_path, solve_out, method = "auto";
    double tol = 1e-10;
    bool with_blocks = false;
    solve_cmd->add_option("--problem", problem_path, "Problem JSON {y, gram_files, p, lambda1}")
        ->required()
        ->check(CLI::ExistingFile);
    solve_cmd->add_option("--out", solve_out, "Solution JSON (stdout if omitted)");
    solve_cmd->add_option("--method", method, "auto | alternating | proximal")
        ->check(CLI::IsMember({"auto", "alternating", "proximal"}));
    solve_cmd->add_option("--tol", tol, "Relative objective-decrease tolerance")->check(CLI::PositiveNumber);
    solve_cmd->add_flag("--with-blocks", with_blocks, "Include beta blocks and fitted values");

    // theory
    auto* theory_cmd = app.add_subcommand("theory", "Evaluate rate, complexity and lower-bound formulas");
    std::string params_path;
    theory_cmd->add_option("--params", params_path, "TheoryParams JSON")->required()->check(CLI::ExistingFile);

    // packing
    auto* packing_cmd = app.add_subcommand("packing", "Greedy Hamming packing and the Q* bound");
    int pack_N = 0, pack_M = 0;
    packing_cmd->add_option("--N", pack_N, "Alphabet size")->required()->check(CLI::PositiveNumber);
    packing_cmd->add_option("--M", pack_M, "Word length (even)")->required()->check(CLI::PositiveNumber);

    // gen
    auto* gen_cmd = app.add_subcommand("gen", "Draw a synthetic dataset");
    std::string spec_path, gen_out, truth_out;
    long gen_n = 0;
    std::optional<double> gen_L;
    std::optional<std::uint64_t> gen_seed;
    gen_cmd->add_option("--spec", spec_path, "Truth spec JSON")->required()->check(CLI::ExistingFile);
    gen_cmd->add_option("--n", gen_n, "Sample size")->required()->check(CLI::PositiveNumber);
    gen_cmd->add_option("--out", gen_out, "Dataset CSV")->required();
    gen_cmd->add_option("--L", gen_L, "Noise bound (overrides the spec)")->check(CLI::PositiveNumber);
    gen_cmd->add_option("--seed", gen_seed, "Sampling seed (defaults to the spec seed)");
    gen_cmd->add_option("--truth-out", truth_out, "Also dump the truth coefficients as JSON");

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "Run a rate-scaling sweep");
    std::string plan_path, out_dir;
    sweep_cmd->add_option("--plan", plan_path, "Plan JSON")->required()->check(CLI::ExistingFile);
    sweep_cmd->add_option("--out-dir", out_dir, "Directory for records.csv and summary.json")->required();

    // report
    auto* report_cmd = app.add_subcommand("report", "Fit slopes from a records CSV");
    std::string records_path, report_out;
    report_cmd->add_option("--records", records_path, "records.csv from sweep")->required()->check(CLI::ExistingFile);
    report_cmd->add_option("--out", report_out, "Summary JSON (stdout if omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n";
        const auto subs = app.get_subcommands();
        err << (subs.empty() ? app.help() : subs.front()->help());
        return kUsage;
    }

    const auto log = [&](int level, const std::string& msg) {
        if (g.verbosity >= level) err << msg << '\n';
    };

    try {
        if (*solve_cmd) {
            const MklProblem prob = io::load_problem(problem_path);
            SolverOptions opts;
            opts.method = io::method_from_string(method);
            opts.tol = tol;
            log(1, "solving n=" + std::to_string(prob.samples()) + " M=" + std::to_string(prob.blocks()));
            const MklSolution sol = solve(prob, opts);
            const json j = io::solution_json(sol, with_blocks);
            if (g.pretty) {
                std::ostringstream os;
                os << "objective " << std::setprecision(12) << sol.objective << "  iterations " << sol.iterations
                   << "  converged " << (sol.converged ? "yes" : "no") << '\n';
                for (Eigen::Index m = 0; m < sol.block_norms.size(); ++m) {
                    os << "block " << m + 1 << "  norm " << sol.block_norms[m];
                    if (sol.theta) os << "  theta " << (*sol.theta)[m];
                    os << '\n';
                }
                if (solve_out.empty()) out << os.str();
                else detail::write_text(solve_out, os.str());
            } else if (solve_out.empty()) {
                out << detail::dump(j);
            } else {
                detail::write_text(solve_out, detail::dump(j));
            }
            return kOk;
        }
        if (*theory_cmd) {
            const json pj = io::read_json_file(params_path);
            const theory::TheoryParams tp = io::theory_params_from_json(pj, params_path);
            json j;
            try {
                j = io::theory_report(tp, pj);
            } catch (const InputError& e) {
                throw DataError(params_path, e.what());
            }
            if (g.pretty) detail::print_flat(out, j);
            else out << detail::dump(j);
            return kOk;
        }
        if (*packing_cmd) {
            const theory::PackingBound b = theory::packing_lower_bound(pack_N, pack_M);
            const auto code = theory::greedy_packing(pack_N, pack_M);
            int min_d = pack_M;
            for (std::size_t a = 0; a < code.size(); ++a)
                for (std::size_t c = a + 1; c < code.size(); ++c) min_d = std::min(min_d, theory::hamming(code[a], code[c]));
            if (g.pretty) {
                out << "Q* = " << b.q_star.str() << " (" << b.q_star_value << ")\n";
                out << "greedy code: " << code.size() << " words, min distance " << min_d << "\n";
                for (const auto& w : code) {
                    for (std::size_t i = 0; i < w.size(); ++i) out << (i ? " " : "") << w[i];
                    out << '\n';
                }
            } else {
                json j;
                j["N"] = pack_N;
                j["M"] = pack_M;
                j["q_star"] = b.q_star.str();
                j["q_star_value"] = b.q_star_value;
                j["q_star_ceil"] = b.q_star_ceil;
                j["log_bound"] = b.log_bound;
                j["code_size"] = code.size();
                j["min_distance"] = code.size() > 1 ? json(min_d) : json(nullptr);
                j["code"] = code;
                out << detail::dump(j);
            }
            return kOk;
        }
        if (*gen_cmd) {
            const io::TruthFile tf = io::truth_file_from_json(io::read_json_file(spec_path), spec_path);
            const synth::AdditiveModel truth = synth::build_truth(tf.spec, tf.kernel);
            const double L = gen_L.value_or(tf.noise_L);
            const std::uint64_t seed = gen_seed.value_or(synth::mix_seed({tf.spec.seed, 0x67656eULL}));
            const synth::Dataset d = synth::sample_dataset(truth, gen_n, L, seed);
            std::ostringstream os;
            synth::write_dataset_csv(os, d);
            detail::write_text(gen_out, os.str());
            if (!truth_out.empty()) detail::write_text(truth_out, detail::dump(io::truth_json(truth)));
            log(1, "wrote " + std::to_string(gen_n) + " rows to " + gen_out);
            return kOk;
        }
        if (*sweep_cmd) {
            const harness::ExperimentPlan plan = harness::plan_from_json(io::read_json_file(plan_path), plan_path);
            const auto cells = harness::enumerate_cells(plan);
            log(1, "sweep: " + std::to_string(cells.size()) + " cells on " + std::to_string(g.workers) + " workers");
            const auto t0 = std::chrono::steady_clock::now();
            const auto records = harness::run_cells(plan, cells, g.workers);
            for (const auto& r : records)
                if (!r.failure.empty())
                    log(1, "cell n=" + std::to_string(r.cell.n) + " M=" + std::to_string(r.cell.M) + " failed: " + r.failure);
            const auto summary = harness::summarize(records);
            std::ostringstream csv;
            harness::write_records_csv(csv, records);
            fs::create_directories(out_dir);
            detail::write_text(fs::path(out_dir) / "records.csv", csv.str());
            detail::write_text(fs::path(out_dir) / "summary.json", detail::dump(harness::summary_json(summary)));
            log(1, "sweep finished in " +
                       std::to_string(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()) + " s");
            if (g.pretty) detail::print_summary_table(out, summary);
            return kOk;
        }
        if (*report_cmd) {
            std::ifstream in(records_path);
            if (!in) throw DataError(records_path, "cannot open file");
            const auto records = harness::read_records_csv(in, records_path);
            const auto summary = harness::summarize(records);
            if (g.pretty) {
                detail::print_summary_table(out, summary);
            } else if (report_out.empty()) {
                out << detail::dump(harness::summary_json(summary));
            } else {
                detail::write_text(report_out, detail::dump(harness::summary_json(summary)));
            }
            return kOk;
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kRuntime;
    }
    err << app.help();
    return kUsage;
}

inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    std::vector<const char*> argv{"lpmkl"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace lpmkl::cli
