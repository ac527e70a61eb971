#pragma once

#include "reachrl/rational.hpp"

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace reachrl {

using StateId = std::uint32_t;
using ActionId = std::uint32_t;

/// One entry of a transition distribution. Probabilities are exact
/// rationals; a double is cached for the numeric loops (simulation, BVI).
struct Transition {
    StateId dst;
    Rational prob;
    double prob_d;
};

/// The transitions of one available action in one state.
struct Choice {
    ActionId action;
    std::vector<Transition> successors;
};

struct Violation {
    std::string where;
    std::string message;
};

/// Explicit finite MDP with exact rational transition probabilities.
/// Immutable after construction; shareable across concurrent trials.
class Mdp {
public:
    StateId num_states() const { return num_states_; }
    StateId initial() const { return initial_; }

    const std::vector<std::string>& action_names() const { return action_names_; }
    std::size_t num_actions() const { return action_names_.size(); }
    const std::string& action_name(ActionId a) const { return action_names_[a]; }

    /// Choices available in s, sorted by action id. Nonempty for valid models.
    std::span<const Choice> choices(StateId s) const { return rows_[s]; }
    const Choice* find_choice(StateId s, ActionId a) const;
    bool action_available(StateId s, ActionId a) const { return find_choice(s, a) != nullptr; }

    const std::set<StateId>& target() const { return target_; }
    bool is_target(StateId s) const { return target_.count(s) > 0; }

    const std::map<std::string, std::set<StateId>>& labels() const { return labels_; }

private:
    friend class MdpBuilder;

    StateId num_states_ = 0;
    StateId initial_ = 0;
    std::vector<std::string> action_names_;
    std::vector<std::vector<Choice>> rows_;
    std::set<StateId> target_;
    std::map<std::string, std::set<StateId>> labels_;
};

/// Incremental construction. Zero or negative probabilities are rejected
/// immediately so that the stored support is exactly the positive support.
class MdpBuilder {
public:
    explicit MdpBuilder(StateId num_states);

    MdpBuilder& set_initial(StateId s);
    ActionId action_id(const std::string& name);
    /// Throws std::invalid_argument on prob <= 0 or a duplicate (s, a, dst) triple.
    MdpBuilder& add_transition(StateId src, const std::string& action, StateId dst,
                               const Rational& prob);
    MdpBuilder& add_label(const std::string& name, StateId s);
    /// Designates the states carrying `label` as the target set (may be empty
    /// if the label is absent).
    MdpBuilder& set_target_label(const std::string& label);
    MdpBuilder& set_target(std::set<StateId> target);

    /// Assembles the model without validity checks (for tests probing validate).
    Mdp build_unchecked();
    /// Assembles and validates; throws std::invalid_argument listing violations.
    Mdp build();

private:
    Mdp m_;
    std::unordered_map<std::string, ActionId> action_ids_;
    std::string target_label_;
    bool explicit_target_ = false;
};

/// Every invariant violation in the model: probability sums != 1, states
/// with no available action, out-of-range ids. Empty iff well formed.
std::vector<Violation> validate(const Mdp& m);

/// The listed successor set of (s, a). Throws if a is unavailable in s.
std::set<StateId> support(const Mdp& m, StateId s, ActionId a);

/// States from which no policy reaches the target with positive
/// probability. Pure graph computation on the support structure.
std::set<StateId> zero_value_states(const Mdp& m);

/// A total map from states to available actions.
struct MemorylessDetPolicy {
    std::vector<ActionId> choice; // indexed by state

    ActionId at(StateId s) const { return choice[s]; }
};

/// True iff pi is total and picks an available action everywhere.
bool policy_valid(const Mdp& m, const MemorylessDetPolicy& pi);

/// Policy-induced Markov chain: per state the single successor distribution
/// P(s, pi(s), .).
struct MarkovChain {
    StateId initial = 0;
    std::vector<std::vector<Transition>> rows;
    std::set<StateId> target;
};

MarkovChain induced_chain(const Mdp& m, const MemorylessDetPolicy& pi);

/// Occurrence counters #(s,a) and #(s,a,s') accumulated across all
/// simulations of one learner run. Owned by a single learner; no locking.
class CountTable {
public:
    void record(StateId s, ActionId a, StateId dst);

    std::uint64_t pair_count(StateId s, ActionId a) const;
    std::uint64_t triple_count(StateId s, ActionId a, StateId dst) const;
    std::uint64_t total_samples() const { return total_; }

    /// Distinct states seen as a source or successor of any recorded step.
    std::size_t observed_state_count() const { return states_.size(); }
    std::size_t observed_pair_count() const { return pairs_.size(); }

    /// Observed (s, a) keys in deterministic (s, then a) order.
    std::vector<std::pair<StateId, ActionId>> observed_pairs() const;
    /// Observed successors of (s, a) with counts, sorted by state id.
    std::vector<std::pair<StateId, std::uint64_t>> successors(StateId s, ActionId a) const;

    /// Checks sum_{s'} #(s,a,s') == #(s,a) for every pair.
    bool marginals_consistent() const;

private:
    struct PairCounts {
        std::uint64_t total = 0;
        std::unordered_map<StateId, std::uint64_t> succ;
    };
    static std::uint64_t key(StateId s, ActionId a) {
        return (static_cast<std::uint64_t>(s) << 32) | a;
    }
    std::unordered_map<std::uint64_t, PairCounts> pairs_;
    std::set<StateId> states_;
    std::uint64_t total_ = 0;
};

/// Support-only view shared by MEC decomposition and collapsing: for each
/// state the (action, successor set) pairs, either the true support of an
/// Mdp or the observed support of a CountTable.
struct SupportModel {
    StateId num_states = 0;
    // pairs[s]: sorted by action id; successor lists sorted by state id.
    std::vector<std::vector<std::pair<ActionId, std::vector<StateId>>>> pairs;

    static SupportModel from_mdp(const Mdp& m);
    static SupportModel from_counts(const CountTable& counts, StateId num_states);
};

} // namespace reachrl
