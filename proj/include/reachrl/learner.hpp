#pragma once

#include "reachrl/bvi.hpp"
#include "reachrl/estimation.hpp"
#include "reachrl/mdp.hpp"
#include "reachrl/simulator.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace reachrl {

enum class BudgetMode { theoretical, practical };

/// Stage schedule: delta_k = eps_k = p_k = 2^-k, exactly.
struct StageParams {
    int k = 1;
    double delta_k = 0.5;
    double eps_k = 0.5;
    double p_k = 0.5;
    double mu = 0.1;
    BudgetMode mode = BudgetMode::practical;
};

StageParams stage_parameters(int k, double mu, BudgetMode mode);

/// Lower bound on the per-simulation probability of the least likely
/// transition: (mu * p_k / |A|)^|S|.
double least_likely_transition_prob(double mu, double p_k, std::size_t num_actions,
                                    std::size_t num_states);

/// Per-pair sample requirement s_k = 32 ln(2/delta_p) r^2 / (eps_k^2 p_k^(2r)).
double required_pair_samples(double eps_k, double p_k, double delta_p, std::uint64_t unroll_depth);

class BudgetInfeasibleError : public std::runtime_error {
public:
    BudgetInfeasibleError(double s_k, double least_likely_prob, std::uint64_t cap)
        : std::runtime_error("theoretical budget infeasible at this scale: s_k = " +
                             std::to_string(s_k) + ", p = " + std::to_string(least_likely_prob) +
                             ", N_k cap = " + std::to_string(cap)),
          s_k(s_k),
          least_likely_prob(least_likely_prob),
          cap(cap) {}

    double s_k;
    double least_likely_prob;
    std::uint64_t cap;
};

/// Least N with Binomial(N, p) CDF at s_k - 1 below delta_n, by doubling
/// then bisection over a log-space CDF. Throws BudgetInfeasibleError when
/// no N within `cap` suffices.
std::uint64_t least_simulations(double s_k, double p, double delta_n, std::uint64_t cap);

struct TheoreticalBudget {
    double s_k = 0;
    double least_likely_prob = 0;
    std::uint64_t n_k = 0;
};

TheoreticalBudget theoretical_budget(const StageParams& params, std::size_t num_states,
                                     std::size_t num_actions, std::size_t sa_count,
                                     std::uint64_t unroll_depth, std::uint64_t cap);

/// Practical stage budget N_k = c0 * k^2 * max(1, partial model states).
std::uint64_t practical_budget(int k, std::size_t partial_model_state_count, std::uint64_t c0);

/// Per-stage telemetry.
struct StageReport {
    StageParams params;
    ConfidenceBudget budget;
    std::uint64_t simulations = 0;        // runs executed this stage (incl. top-ups)
    std::uint64_t cumulative_samples = 0; // total simulator steps so far
    double lower_s0 = 0;
    double upper_s0 = 1;
    double error() const { return upper_s0 - lower_s0; }
    MemorylessDetPolicy policy;
    std::vector<StateId> fallback_states;
    std::optional<double> exact_policy_value; // filled by the harness
    std::size_t mec_count = 0;
    std::uint64_t bvi_iterations = 0;
    double wall_seconds = 0;
};

struct LearnerConfig {
    BudgetMode mode = BudgetMode::practical;
    std::optional<LoopMode> loop_mode;  // defaults: practical -> heuristic, theoretical -> exact_ec
    double mu = 0.1;
    std::uint64_t c0 = 400;             // practical budget coefficient
    int max_stages = 30;
    int min_stages = 3;
    double convergence_threshold = 1e-3;
    std::optional<std::uint64_t> unroll_depth; // fixed r; default r = |S| * k
    std::uint64_t nk_cap = 10000000;
    std::uint64_t topup_batches = 10;   // exact_ec certification top-ups, in batches of N_k/10
};

/// The staged main loop: parameter schedule, per-stage budget, simulation,
/// estimation, collapse, BVI, policy extraction and guidance update.
class Learner {
public:
    Learner(SimulatorHandle& sim, LearnerConfig config);

    /// Runs the next stage and appends its report.
    const StageReport& run_stage();

    /// Runs stages until the convergence check fires or max_stages is hit.
    const std::vector<StageReport>& run();

    const std::vector<StageReport>& history() const { return history_; }
    const CountTable& counts() const { return counts_; }
    const GuidanceTable& guidance() const { return guidance_; }

    /// Bound error at the initial state when BVI is re-run on the current
    /// counters with a previous stage's budget and iteration count
    /// (the convergence check).
    double reevaluate_error(const ConfidenceBudget& budget, std::uint64_t iterations) const;

private:
    LoopMode loop_mode() const;
    std::uint64_t bvi_iteration_budget(int k) const;

    SimulatorHandle& sim_;
    LearnerConfig config_;
    CountTable counts_;
    GuidanceTable guidance_;
    std::vector<StageReport> history_;
    int next_k_ = 1;
};

} // namespace reachrl
