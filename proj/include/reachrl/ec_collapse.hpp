#pragma once

#include "reachrl/mdp.hpp"

#include <set>
#include <vector>

namespace reachrl {

/// A set of state-action pairs closed under transitions whose induced
/// graph is strongly connected.
struct EcCandidate {
    std::vector<std::pair<StateId, ActionId>> pairs; // sorted

    std::set<StateId> states() const;
    bool contains_pair(StateId s, ActionId a) const;
    bool contains_state(StateId s) const;
};

/// The unique maximal-EC partition of a support graph: SCC computation
/// with exit-action removal, iterated until stable. Singleton states
/// qualify only with a self-loop action.
std::vector<EcCandidate> mec_decomposition(const SupportModel& model);

/// One transition bundle of a quotient action: all original successors
/// merged into the same quotient state. `prob` is the exact merged
/// probability when the collapse source carried probabilities.
struct QuotientArc {
    StateId qdst;
    std::vector<StateId> original_dsts;
    Rational prob;
    double prob_d = 0;
};

/// An action of the quotient model. For super states these are the
/// (member state, action) pairs of the collapsed MEC; plain states keep
/// their own actions (owner_state == the original state).
struct QuotientAction {
    StateId owner_state;
    ActionId owner_action;
    bool staying = false;
    std::vector<QuotientArc> arcs;
};

/// Quotient of a model where each MEC becomes one super state.
struct CollapsedMdp {
    StateId num_states = 0;
    StateId initial = 0;
    std::vector<std::vector<QuotientAction>> actions; // per quotient state
    std::vector<int> super_index;                     // quotient -> MEC index, -1 if plain
    std::vector<EcCandidate> mecs;
    std::vector<StateId> membership;                  // original -> quotient
    std::vector<bool> is_target;  // plain target, or super state with G overlap
    std::set<StateId> original_target;
    bool has_probs = false;
    std::vector<std::string> action_names;            // original table (full collapse only)

    std::size_t mec_count() const { return mecs.size(); }
    bool is_super(StateId q) const { return super_index[q] >= 0; }

    /// Exports the quotient as a plain model (requires has_probs). Super
    /// state actions get synthesized names "<state>:<action>"; quotient
    /// targets carry the label "goal".
    Mdp to_mdp() const;
};

/// Collapses the true model (probabilities preserved and merged).
CollapsedMdp collapse(const Mdp& m, const std::vector<EcCandidate>& mecs);

/// Collapses a support-only (partial) model; no probabilities attached.
CollapsedMdp collapse(const SupportModel& pm, const std::vector<EcCandidate>& mecs,
                      const std::set<StateId>& target, StateId initial);

} // namespace reachrl
