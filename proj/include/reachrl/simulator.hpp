#pragma once

#include "reachrl/mdp.hpp"

#include <cstdint>
#include <vector>

namespace reachrl {

/// Deterministic pseudo-random stream with an explicit 64-bit seed.
/// The uniform mappings are implemented here so that identical seeds give
/// identical traces on every build.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next();
    double uniform01(); // [0, 1)
    std::uint32_t uniform_below(std::uint32_t n); // [0, n), n >= 1

private:
    std::uint64_t state_[4];
};

enum class LoopMode { exact_ec, heuristic };
enum class TerminalReason { reached_target, looping };

struct RunTrace {
    std::vector<StateId> visited; // ordered, with multiplicity, incl. last state
    TerminalReason terminal_reason = TerminalReason::reached_target;
};

/// Per-state best-action sets guiding the next stage's simulations.
/// At stage 1 every state maps to its full action set.
struct GuidanceTable {
    std::vector<std::vector<ActionId>> best;

    static GuidanceTable all_actions(const std::vector<std::vector<ActionId>>& available);
};

/// Black-box sampling access to the true model. The learner-facing
/// surface exposes resets, steps and the known state/action structure;
/// transition probabilities are not readable through it.
class SimulatorHandle {
public:
    SimulatorHandle(const Mdp& model, std::uint64_t seed);

    StateId num_states() const { return static_cast<StateId>(available_.size()); }
    std::size_t num_actions() const { return num_actions_; }
    StateId initial_state() const { return initial_; }
    bool is_target(StateId s) const { return target_[s]; }
    const std::vector<ActionId>& available_actions(StateId s) const { return available_[s]; }
    const std::vector<std::vector<ActionId>>& available_actions() const { return available_; }

    void reset() { current_ = initial_; }
    StateId current() const { return current_; }
    /// Samples a successor of (current, a) and advances. a must be available.
    StateId step(ActionId a);

    Rng& rng() { return rng_; }

private:
    struct Row {
        std::vector<double> cumulative;
        std::vector<StateId> dst;
    };
    const Row& row(StateId s, ActionId a) const;

    StateId initial_;
    std::size_t num_actions_;
    std::vector<bool> target_;
    std::vector<std::vector<ActionId>> available_;
    std::vector<std::vector<Row>> rows_; // aligned with available_
    Rng rng_;
    StateId current_;
};

/// One simulation run: mu-greedy action choice against the guidance
/// table, counter updates per step, termination on reaching the target or
/// on the loop check. Counts are the aggregated cross-simulation counters.
RunTrace simulate_run(SimulatorHandle& sim, const GuidanceTable& guidance, double mu, double p_k,
                      double delta_c, CountTable& counts, LoopMode mode);

/// The loop-termination predicate over a visited prefix and the current
/// state. exact_ec: s revisited and the partial-model MEC containing s
/// lies within the visited set and is delta_c-surely an EC. heuristic:
/// the distinct-state set of the trace (visited + s) has not grown within
/// the last num_states^2 steps.
bool looping(const std::vector<StateId>& visited, StateId s, const CountTable& counts,
             StateId num_states, double p_k, double delta_c, LoopMode mode);

/// Alg.-4 style certification: every pair of C has strictly more than
/// ln(delta_c)/ln(1 - p_k) samples.
bool delta_sure_ec(const std::vector<std::pair<StateId, ActionId>>& pairs,
                   const CountTable& counts, double p_k, double delta_c);

/// Number of samples required per staying pair before certification.
double ec_sample_threshold(double p_k, double delta_c);

} // namespace reachrl
