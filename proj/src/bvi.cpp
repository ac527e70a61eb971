#include "reachrl/bvi.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

namespace reachrl {

bool IntervalValues::ordered() const {
    for (std::size_t s = 0; s < lower.size(); ++s) {
        if (lower[s] > upper[s]) return false;
        for (std::size_t p = 0; p < lower_pair[s].size(); ++p) {
            if (lower_pair[s][p] > upper_pair[s][p]) return false;
        }
    }
    return true;
}

IntervalValues reset_bounds(const CollapsedMdp& cm, const std::vector<StateId>& pin_zero) {
    IntervalValues v;
    v.lower.assign(cm.num_states, 0.0);
    v.upper.assign(cm.num_states, 1.0);
    v.state_pinned.assign(cm.num_states, false);
    v.lower_pair.resize(cm.num_states);
    v.upper_pair.resize(cm.num_states);
    v.pair_pinned.resize(cm.num_states);

    for (StateId q = 0; q < cm.num_states; ++q) {
        if (cm.is_target[q]) {
            v.lower[q] = v.upper[q] = 1.0;
            v.state_pinned[q] = true;
        }
        v.lower_pair[q].assign(cm.actions[q].size(), 0.0);
        v.upper_pair[q].assign(cm.actions[q].size(), 1.0);
        v.pair_pinned[q].assign(cm.actions[q].size(), false);
        for (std::size_t p = 0; p < cm.actions[q].size(); ++p) {
            if (cm.actions[q][p].staying) {
                double pin = cm.is_target[q] ? 1.0 : 0.0;
                v.lower_pair[q][p] = v.upper_pair[q][p] = pin;
                v.pair_pinned[q][p] = true;
            }
        }
    }
    for (StateId q : pin_zero) {
        if (cm.is_target[q]) continue;
        v.lower[q] = v.upper[q] = 0.0;
        v.state_pinned[q] = true;
        for (std::size_t p = 0; p < cm.actions[q].size(); ++p) {
            v.lower_pair[q][p] = v.upper_pair[q][p] = 0.0;
            v.pair_pinned[q][p] = true;
        }
    }
    return v;
}

namespace {

// Per-action flattened transition list with looked-up estimates, so that
// repeated sweeps skip the hash lookups.
struct CompiledAction {
    std::vector<std::pair<StateId, double>> entries; // (quotient dst, phat)
    double slack = 0;                                // 1 - assigned mass
};

struct CompiledBvi {
    std::vector<std::vector<CompiledAction>> actions;
};

CompiledBvi compile(const CollapsedMdp& cm, const EstimatedModel& est) {
    CompiledBvi out;
    out.actions.resize(cm.num_states);
    for (StateId q = 0; q < cm.num_states; ++q) {
        out.actions[q].reserve(cm.actions[q].size());
        for (const auto& qa : cm.actions[q]) {
            CompiledAction ca;
            double mass = 0;
            for (const auto& arc : qa.arcs) {
                double p = 0;
                for (StateId dst : arc.original_dsts) {
                    p += est.phat(qa.owner_state, qa.owner_action, dst);
                }
                mass += p;
                if (p > 0) ca.entries.emplace_back(arc.qdst, p);
            }
            ca.slack = std::max(0.0, 1.0 - mass);
            out.actions[q].push_back(std::move(ca));
        }
    }
    return out;
}

double sweep_compiled(const CollapsedMdp& cm, const CompiledBvi& compiled, IntervalValues& v) {
    std::vector<double> new_lower(v.lower);
    std::vector<double> new_upper(v.upper);
    double max_change = 0;

    for (StateId q = 0; q < cm.num_states; ++q) {
        if (v.state_pinned[q]) continue;
        if (cm.actions[q].empty()) continue;
        double best_lower = 0;
        double best_upper = 0;
        for (std::size_t p = 0; p < cm.actions[q].size(); ++p) {
            double lo;
            double up;
            if (v.pair_pinned[q][p]) {
                lo = v.lower_pair[q][p];
                up = v.upper_pair[q][p];
            } else {
                const CompiledAction& ca = compiled.actions[q][p];
                lo = 0;
                up = 0;
                for (const auto& [dst, prob] : ca.entries) {
                    lo += prob * v.lower[dst];
                    up += prob * v.upper[dst];
                }
                up += ca.slack;
                up = std::min(up, 1.0);
                max_change = std::max({max_change, std::abs(lo - v.lower_pair[q][p]),
                                       std::abs(up - v.upper_pair[q][p])});
                v.lower_pair[q][p] = lo;
                v.upper_pair[q][p] = up;
            }
            best_lower = std::max(best_lower, lo);
            best_upper = std::max(best_upper, up);
        }
        new_lower[q] = best_lower;
        new_upper[q] = best_upper;
        max_change = std::max({max_change, std::abs(best_lower - v.lower[q]),
                               std::abs(best_upper - v.upper[q])});
    }
    v.lower = std::move(new_lower);
    v.upper = std::move(new_upper);
    return max_change;
}

} // namespace

double bvi_sweep(const CollapsedMdp& cm, const EstimatedModel& est, IntervalValues& v) {
    CompiledBvi compiled = compile(cm, est);
    return sweep_compiled(cm, compiled, v);
}

std::uint64_t run_bvi_from(const CollapsedMdp& cm, const EstimatedModel& est, IntervalValues& v,
                           std::uint64_t iterations, double early_exit) {
    if (iterations < 1) {
        throw std::invalid_argument("run_bvi: iterations must be >= 1");
    }
    CompiledBvi compiled = compile(cm, est);
    std::uint64_t executed = 0;
    for (std::uint64_t i = 0; i < iterations; ++i) {
        double change = sweep_compiled(cm, compiled, v);
        ++executed;
        if (early_exit > 0 && change < early_exit) break;
    }
    return executed;
}

IntervalValues run_bvi(const CollapsedMdp& cm, const EstimatedModel& est,
                       std::uint64_t iterations, double early_exit) {
    IntervalValues v = reset_bounds(cm);
    run_bvi_from(cm, est, v, iterations, early_exit);
    return v;
}

ExtractionResult extract_policy(const CollapsedMdp& cm, const IntervalValues& v,
                                const std::vector<std::vector<ActionId>>& available_actions) {
    ExtractionResult result;
    StateId n = static_cast<StateId>(cm.membership.size());
    result.policy.choice.assign(n, 0);
    std::vector<bool> assigned(n, false);

    auto fallback = [&](StateId s) {
        if (!available_actions[s].empty()) {
            result.policy.choice[s] = available_actions[s].front();
        }
        // the choice at a target is immaterial, not worth flagging
        if (cm.original_target.count(s) == 0) result.fallback_states.push_back(s);
        assigned[s] = true;
    };

    // Plain states: argmax U over the state's own actions, lowest action
    // index on ties.
    for (StateId s = 0; s < n; ++s) {
        StateId q = cm.membership[s];
        if (cm.is_super(q)) continue;
        if (cm.actions[q].empty()) {
            fallback(s);
            continue;
        }
        std::size_t best = 0;
        for (std::size_t p = 1; p < cm.actions[q].size(); ++p) {
            if (v.upper_pair[q][p] > v.upper_pair[q][best]) best = p;
        }
        result.policy.choice[s] = cm.actions[q][best].owner_action;
        assigned[s] = true;
    }

    // MECs, solved as a recursive reachability problem: the owners of a
    // best exit action (or the internal target states, when the MEC
    // contains one) become the walk targets; everyone else takes a staying
    // action on a shortest support path toward them.
    for (StateId q = 0; q < cm.num_states; ++q) {
        if (!cm.is_super(q)) continue;
        const EcCandidate& mec = cm.mecs[cm.super_index[q]];
        std::set<StateId> members = mec.states();

        std::map<StateId, std::vector<std::pair<ActionId, std::vector<StateId>>>> staying;
        std::vector<std::size_t> exit_indices;
        for (std::size_t p = 0; p < cm.actions[q].size(); ++p) {
            const QuotientAction& qa = cm.actions[q][p];
            if (qa.staying) {
                std::vector<StateId> succ;
                for (const auto& arc : qa.arcs) {
                    succ.insert(succ.end(), arc.original_dsts.begin(), arc.original_dsts.end());
                }
                staying[qa.owner_state].emplace_back(qa.owner_action, std::move(succ));
            } else {
                exit_indices.push_back(p);
            }
        }

        auto lowest_staying = [&](StateId s) -> bool {
            auto it = staying.find(s);
            if (it == staying.end()) return false;
            result.policy.choice[s] = it->second.front().first;
            assigned[s] = true;
            return true;
        };

        std::set<StateId> walk_targets;
        if (cm.is_target[q]) {
            // Target inside the MEC: staying there reaches it almost surely,
            // so walk toward the internal target states.
            for (StateId s : members) {
                if (cm.original_target.count(s) > 0) {
                    walk_targets.insert(s);
                    if (!lowest_staying(s)) fallback(s);
                }
            }
        } else if (!exit_indices.empty()) {
            double best_value = -1;
            for (std::size_t p : exit_indices) {
                best_value = std::max(best_value, v.upper_pair[q][p]);
            }
            for (std::size_t p : exit_indices) {
                if (v.upper_pair[q][p] != best_value) continue;
                const QuotientAction& qa = cm.actions[q][p];
                StateId s = qa.owner_state;
                if (!assigned[s] || qa.owner_action < result.policy.choice[s]) {
                    result.policy.choice[s] = qa.owner_action;
                    assigned[s] = true;
                }
                walk_targets.insert(s);
            }
        }
        // With no exits and no internal target the MEC has value 0 and any
        // staying action is optimal; the walk below degenerates to that.

        std::map<StateId, int> dist;
        std::deque<StateId> queue;
        for (StateId t : walk_targets) {
            dist[t] = 0;
            queue.push_back(t);
        }
        std::map<StateId, std::vector<StateId>> reverse;
        for (const auto& [s, actions] : staying) {
            for (const auto& [a, succ] : actions) {
                (void)a;
                for (StateId t : succ) reverse[t].push_back(s);
            }
        }
        while (!queue.empty()) {
            StateId t = queue.front();
            queue.pop_front();
            for (StateId pred : reverse[t]) {
                if (dist.find(pred) == dist.end()) {
                    dist[pred] = dist[t] + 1;
                    queue.push_back(pred);
                }
            }
        }
        for (StateId s : members) {
            if (assigned[s]) continue;
            auto it = staying.find(s);
            if (it == staying.end()) {
                fallback(s);
                continue;
            }
            ActionId best_action = it->second.front().first;
            int best_dist = std::numeric_limits<int>::max();
            for (const auto& [a, succ] : it->second) {
                int d = std::numeric_limits<int>::max();
                for (StateId t : succ) {
                    auto dt = dist.find(t);
                    if (dt != dist.end() && dt->second + 1 < d) d = dt->second + 1;
                }
                if (d < best_dist) {
                    best_dist = d;
                    best_action = a;
                }
            }
            result.policy.choice[s] = best_action;
            assigned[s] = true;
        }
    }

    // States entirely absent from the partial model.
    for (StateId s = 0; s < n; ++s) {
        if (!assigned[s]) fallback(s);
    }
    std::sort(result.fallback_states.begin(), result.fallback_states.end());
    result.fallback_states.erase(
        std::unique(result.fallback_states.begin(), result.fallback_states.end()),
        result.fallback_states.end());
    return result;
}

std::vector<std::vector<ActionId>> best_action_sets(
    const CollapsedMdp& cm, const IntervalValues& v, const ExtractionResult& extraction,
    const std::vector<std::vector<ActionId>>& available_actions) {
    StateId n = static_cast<StateId>(cm.membership.size());
    std::vector<std::vector<ActionId>> best(n);
    for (StateId s = 0; s < n; ++s) {
        StateId q = cm.membership[s];
        if (cm.is_super(q)) {
            best[s] = {extraction.policy.choice[s]};
            continue;
        }
        if (cm.actions[q].empty()) {
            best[s] = available_actions[s];
            continue;
        }
        double top = -1;
        for (std::size_t p = 0; p < cm.actions[q].size(); ++p) {
            top = std::max(top, v.upper_pair[q][p]);
        }
        for (std::size_t p = 0; p < cm.actions[q].size(); ++p) {
            if (v.upper_pair[q][p] == top) best[s].push_back(cm.actions[q][p].owner_action);
        }
        std::sort(best[s].begin(), best[s].end());
        best[s].erase(std::unique(best[s].begin(), best[s].end()), best[s].end());
    }
    return best;
}

} // namespace reachrl
