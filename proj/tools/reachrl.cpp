#include "reachrl/exact.hpp"
#include "reachrl/harness.hpp"
#include "reachrl/learner.hpp"
#include "reachrl/model_io.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>

namespace {

using namespace reachrl;

std::uint64_t seed_or_env(std::uint64_t seed, bool seed_given) {
    if (seed_given) return seed;
    if (const char* env = std::getenv("REACHRL_SEED")) {
        return std::strtoull(env, nullptr, 10);
    }
    return seed;
}

Mdp load_model(const std::string& path, const std::string& target_label) {
    Mdp m = parse_mdpx_file(path, target_label);
    if (m.target().empty()) {
        throw std::runtime_error(path + ": no state carries the target label '" + target_label +
                                 "'");
    }
    return m;
}

int cmd_solve(const std::string& path, const std::string& target_label, bool per_state) {
    Mdp m = load_model(path, target_label);
    OptimalValueResult result = optimal_value(m);

    // Exact value through policy enumeration when the model is small
    // enough; the numeric path is the fallback.
    bool printed = false;
    try {
        GapCertificate cert = min_gap(m);
        std::cout << format_rational_decimal(cert.optimal_value) << "\n";
        printed = true;
    } catch (const EnumerationCapExceeded&) {
        // fall through to the numeric value
    }
    if (!printed) std::cout << format_csv_double(result.value_at_initial) << "\n";

    if (per_state) {
        for (StateId s = 0; s < m.num_states(); ++s) {
            std::cout << s << " " << format_csv_double(result.values[s]) << "\n";
        }
    }
    return 0;
}

LearnerConfig make_config(const std::string& mode, const std::string& loop_mode, double mu,
                          std::uint64_t c0, int max_stages, int min_stages, double threshold,
                          std::uint64_t nk_cap, std::uint64_t unroll_depth) {
    LearnerConfig config;
    config.mode = mode == "theoretical" ? BudgetMode::theoretical : BudgetMode::practical;
    if (loop_mode == "exact-ec") config.loop_mode = LoopMode::exact_ec;
    if (loop_mode == "heuristic") config.loop_mode = LoopMode::heuristic;
    config.mu = mu;
    config.c0 = c0;
    config.max_stages = max_stages;
    config.min_stages = min_stages;
    config.convergence_threshold = threshold;
    config.nk_cap = nk_cap;
    if (unroll_depth > 0) config.unroll_depth = unroll_depth;
    return config;
}

int cmd_learn(const std::string& path, const std::string& target_label,
              const LearnerConfig& config, std::uint64_t seed, const std::string& out_path) {
    Mdp m = load_model(path, target_label);
    OracleInfo oracle = compute_oracle(m);

    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!out_path.empty()) {
        file.open(out_path, std::ios::binary);
        if (!file) {
            std::cerr << "error: cannot write to " << out_path << "\n";
            return 1;
        }
        out = &file;
    }

    *out << kLearnCsvHeader << "\n";
    try {
        TrialResult trial = run_trial(m, config, seed, oracle);
        for (const auto& row : trial.rows) {
            *out << format_learn_row(row) << "\n";
        }
    } catch (const BudgetInfeasibleError& e) {
        *out << "# error: " << e.what() << "\n";
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

int cmd_bench(const std::string& path, const std::string& target_label,
              const LearnerConfig& config, std::uint64_t seed, std::size_t trials,
              std::size_t jobs, const std::string& out_dir) {
    Mdp m = load_model(path, target_label);
    BenchOptions options;
    options.trials = trials;
    options.seed = seed;
    options.jobs = jobs;
    options.learner = config;
    BenchRun bench = run_bench(m, options);
    write_bench_artifacts(bench, out_dir);
    std::cout << "wrote " << out_dir << "/stages.csv, aggregate.csv and 3 SVG charts ("
              << trials << " trials, seeds " << seed << ".." << seed + trials - 1 << ")\n";
    std::cout << "optimal policy value: " << format_csv_double(bench.oracle.optimal) << "\n";
    if (auto stage = median_stabilization_stage(bench)) {
        std::cout << "observed stabilization stage (median over trials): "
                  << format_csv_double(*stage) << "\n";
    } else {
        std::cout << "observed stabilization stage: none within the stage budget\n";
    }
    return 0;
}

int cmd_epsdiff(const std::string& path, const std::string& target_label, std::uint64_t cap) {
    Mdp m = load_model(path, target_label);
    std::cout << "D = " << transition_complexity(m).get_str() << "\n";
    std::cout << "bound = " << format_rational(eps_diff_bound(m)) << "\n";
    try {
        GapCertificate cert = min_gap(m, cap);
        std::cout << "optimal = " << format_rational(cert.optimal_value) << "\n";
        if (cert.eps_diff) {
            std::cout << "runner_up = " << format_rational(*cert.runner_up_value) << "\n";
            std::cout << "eps_diff = " << format_rational(*cert.eps_diff) << "\n";
        } else {
            std::cout << "eps_diff = (absent: every policy attains the optimum)\n";
        }
    } catch (const EnumerationCapExceeded& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

int cmd_convert(const std::string& tra, const std::string& lab, const std::string& target_label,
                const std::string& out_path) {
    ImportResult imported = import_prism_explicit_files(tra, lab, target_label);
    for (const auto& warning : imported.warnings) {
        std::cerr << "warning: " << warning << "\n";
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) {
        std::cerr << "error: cannot write to " << out_path << "\n";
        return 1;
    }
    out << write_mdpx(imported.model);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"reachrl: reachability MDP learning and exact analysis"};
    app.require_subcommand(1);

    std::string model_path, target_label = "goal";
    std::string tra_path, lab_path, out_path, out_dir = "bench-out";
    std::string mode = "practical", loop_mode = "default";
    bool per_state = false;
    double mu = 0.1, threshold = 1e-3;
    std::uint64_t c0 = 400, nk_cap = 10000000, cap = 1000000, seed = 1, unroll_depth = 0;
    int max_stages = 30, min_stages = 3;
    std::size_t trials = 10, jobs = 0;
    bool seed_given = false;

    auto add_model = [&](CLI::App* cmd) {
        cmd->add_option("model", model_path, "MDPX model file")->required();
        cmd->add_option("--target", target_label, "target label (default: goal)");
    };
    auto add_learn_flags = [&](CLI::App* cmd) {
        cmd->add_option("--mode", mode, "budget mode: practical | theoretical")
            ->check(CLI::IsMember({"practical", "theoretical"}));
        cmd->add_option("--loop-mode", loop_mode, "loop detection: heuristic | exact-ec")
            ->check(CLI::IsMember({"default", "heuristic", "exact-ec"}));
        cmd->add_option("--mu", mu, "exploration factor in (0,1]");
        cmd->add_option("--c0", c0, "practical budget coefficient");
        cmd->add_option("--max-stages", max_stages, "stage cap");
        cmd->add_option("--min-stages", min_stages, "minimum stages before convergence check");
        cmd->add_option("--threshold", threshold, "convergence threshold");
        cmd->add_option("--nk-cap", nk_cap, "theoretical simulation cap");
        cmd->add_option("--unroll-depth", unroll_depth, "fixed unroll depth r (default |S|*k)");
        cmd->add_option("--seed", seed, "base random seed (env REACHRL_SEED as fallback)")
            ->each([&](const std::string&) { seed_given = true; });
    };

    CLI::App* solve = app.add_subcommand("solve", "optimal reachability value of a known model");
    add_model(solve);
    solve->add_flag("--per-state", per_state, "also print per-state values");

    CLI::App* learn = app.add_subcommand("learn", "run the staged learner, stream CSV telemetry");
    add_model(learn);
    add_learn_flags(learn);
    learn->add_option("--out", out_path, "CSV output file (default: stdout)");

    CLI::App* bench = app.add_subcommand("bench", "multi-trial experiment with CSV + SVG output");
    add_model(bench);
    add_learn_flags(bench);
    bench->add_option("--trials", trials, "number of trials");
    bench->add_option("--jobs", jobs, "concurrent trials (default: processors)");
    bench->add_option("--out", out_dir, "output directory");

    CLI::App* epsdiff = app.add_subcommand("epsdiff", "transition complexity, gap bound, eps_diff");
    add_model(epsdiff);
    epsdiff->add_option("--cap", cap, "policy enumeration cap");

    CLI::App* convert = app.add_subcommand("convert", "PRISM explicit -> MDPX");
    std::string from = "prism";
    convert->add_option("--from", from, "source format")->check(CLI::IsMember({"prism"}));
    convert->add_option("--tra", tra_path, "PRISM .tra file")->required();
    convert->add_option("--lab", lab_path, "PRISM .lab file")->required();
    convert->add_option("--target", target_label, "target label")->required();
    convert->add_option("--out", out_path, "output MDPX file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (solve->parsed()) return cmd_solve(model_path, target_label, per_state);
        if (learn->parsed() || bench->parsed()) {
            LearnerConfig config = make_config(mode, loop_mode, mu, c0, max_stages, min_stages,
                                               threshold, nk_cap, unroll_depth);
            std::uint64_t actual_seed = seed_or_env(seed, seed_given);
            if (learn->parsed()) {
                return cmd_learn(model_path, target_label, config, actual_seed, out_path);
            }
            return cmd_bench(model_path, target_label, config, actual_seed, trials, jobs, out_dir);
        }
        if (epsdiff->parsed()) return cmd_epsdiff(model_path, target_label, cap);
        if (convert->parsed()) return cmd_convert(tra_path, lab_path, target_label, out_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
