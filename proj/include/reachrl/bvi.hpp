#pragma once

#include "reachrl/ec_collapse.hpp"
#include "reachrl/estimation.hpp"
#include "reachrl/mdp.hpp"

#include <cstdint>
#include <vector>

namespace reachrl {

/// Lower/upper value bounds per quotient state and per quotient
/// state-action pair. Pinned entries (targets, super-state staying
/// actions, explicitly pinned zero-value states) are never updated.
struct IntervalValues {
    std::vector<double> lower, upper;
    std::vector<std::vector<double>> lower_pair, upper_pair;
    std::vector<bool> state_pinned;
    std::vector<std::vector<bool>> pair_pinned;

    bool ordered() const; // lower <= upper everywhere
};

/// Fresh per-stage bounds: U = 1 everywhere, L = 1 on targets and 0
/// elsewhere; staying actions of super states pinned to 0/0 (or 1/1 when
/// the MEC contains a target). `pin_zero` additionally pins known
/// zero-value quotient states to 0/0 (used by the known-model oracle).
IntervalValues reset_bounds(const CollapsedMdp& cm,
                            const std::vector<StateId>& pin_zero = {});

/// One synchronous sweep of the bound update equations:
///   L(s,a) = sum phat * L(s'),  U(s,a) = sum phat * U(s') + (1 - sum phat),
///   state bounds = max over available actions.
/// Returns the largest absolute bound change.
double bvi_sweep(const CollapsedMdp& cm, const EstimatedModel& est, IntervalValues& v);

/// Applies `iterations` sweeps from the given bounds (iterations >= 1).
/// A positive early_exit stops once the largest per-sweep change drops
/// below it. Returns the number of sweeps executed.
std::uint64_t run_bvi_from(const CollapsedMdp& cm, const EstimatedModel& est, IntervalValues& v,
                           std::uint64_t iterations, double early_exit = 0);

/// reset_bounds + run_bvi_from.
IntervalValues run_bvi(const CollapsedMdp& cm, const EstimatedModel& est,
                       std::uint64_t iterations, double early_exit = 0);

struct ExtractionResult {
    MemorylessDetPolicy policy;             // on original states
    std::vector<StateId> fallback_states;   // no observed action; chose from Av(s)
};

/// Memoryless deterministic policy extraction: argmax-U outside MECs
/// (lowest action index on ties); inside a MEC the owners of a best exit
/// action take it and the rest walk toward them along staying actions
/// (recursive reachability, BFS). `available_actions` supplies the true
/// action sets for states absent from the partial model.
ExtractionResult extract_policy(const CollapsedMdp& cm, const IntervalValues& v,
                                const std::vector<std::vector<ActionId>>& available_actions);

/// Per original state, the set of actions attaining max U (used as the
/// next stage's exploration guidance). MEC members get the extracted
/// action as a singleton.
std::vector<std::vector<ActionId>> best_action_sets(const CollapsedMdp& cm,
                                                    const IntervalValues& v,
                                                    const ExtractionResult& extraction,
                                                    const std::vector<std::vector<ActionId>>& available_actions);

} // namespace reachrl
