#pragma once

#include "reachrl/learner.hpp"
#include "reachrl/mdp.hpp"

#include <optional>
#include <string>
#include <vector>

namespace reachrl {

/// One telemetry row of the learn CSV stream.
struct LearnRow {
    int k = 0;
    double delta_k = 0, eps_k = 0, p_k = 0;
    std::uint64_t n_k = 0, cum_samples = 0;
    double l_s0 = 0, u_s0 = 1, error = 1;
    double policy_value = 0;
    bool is_optimal = false;
    double wall_ms = 0;
};

inline constexpr const char* kLearnCsvHeader =
    "k,delta_k,eps_k,p_k,N_k,cum_samples,L_s0,U_s0,error,policy_value,is_optimal,wall_ms";

std::string format_csv_double(double value);
std::string format_learn_row(const LearnRow& row, bool include_wall_ms = true);

/// Reads rows written by this harness (header-driven; wall_ms and a
/// leading trial column are optional).
std::vector<LearnRow> parse_learn_csv(const std::string& text);

/// Truth the harness computes once per model to grade learned policies.
struct OracleInfo {
    double optimal = 0;
    std::vector<double> values;
};

OracleInfo compute_oracle(const Mdp& m);

/// Exact value of the learned policy at the initial state, as a double.
double graded_policy_value(const Mdp& m, const MemorylessDetPolicy& policy);

struct TrialResult {
    std::uint64_t seed = 0;
    std::vector<StageReport> stages;
    std::vector<LearnRow> rows;
};

/// One learner run, graded against the oracle (policy_value, is_optimal).
TrialResult run_trial(const Mdp& model, const LearnerConfig& config, std::uint64_t seed,
                      const OracleInfo& oracle);

struct AggregateRow {
    int k = 0;
    double l_median = 0, l_stddev = 0;
    double u_median = 0, u_stddev = 0;
    double error_median = 0, error_stddev = 0;
    double policy_value_median = 0, policy_value_stddev = 0;
    double optimal_fraction = 0;
    std::size_t padded = 0; // trials that ended before this stage
};

struct BenchRun {
    std::vector<TrialResult> trials;
    std::vector<AggregateRow> aggregate;
    OracleInfo oracle;
};

struct BenchOptions {
    std::size_t trials = 10;
    std::uint64_t seed = 1; // trial seeds: seed, seed+1, ..., seed+T-1
    std::size_t jobs = 0;   // 0 = hardware concurrency
    LearnerConfig learner;
};

/// Runs `trials` independent trials (concurrently up to `jobs`) and
/// aggregates per-stage medians and standard deviations. Shorter trials
/// are padded by carrying their final stage forward, counted in `padded`.
BenchRun run_bench(const Mdp& model, const BenchOptions& options);

/// First stage from which every later policy of the trial is optimal;
/// nullopt when the trial never stabilizes.
std::optional<int> stabilization_stage(const TrialResult& trial);

/// Median observed stabilization stage across trials (nullopt when no
/// trial stabilizes).
std::optional<double> median_stabilization_stage(const BenchRun& bench);

/// Writes stages.csv, aggregate.csv and the three SVG charts
/// (bounds_vs_k.svg, error_vs_k.svg, policy_accuracy_vs_k.svg).
/// Output is byte-deterministic for a fixed seed list.
void write_bench_artifacts(const BenchRun& bench, const std::string& out_dir);

/// Minimal hand-rolled SVG line chart.
struct SvgSeries {
    std::string label;
    std::string color;
    std::vector<std::pair<double, double>> points;
};

struct SvgBand {
    std::string color;
    std::vector<std::pair<double, double>> upper; // x, y
    std::vector<std::pair<double, double>> lower;
};

std::string render_line_chart(const std::string& title, const std::string& x_label,
                              const std::string& y_label, const std::vector<SvgSeries>& series,
                              const std::optional<SvgBand>& band = std::nullopt);

} // namespace reachrl
