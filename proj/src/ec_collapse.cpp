#include "reachrl/ec_collapse.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <stdexcept>

namespace reachrl {

std::set<StateId> EcCandidate::states() const {
    std::set<StateId> out;
    for (const auto& [s, a] : pairs) {
        (void)a;
        out.insert(s);
    }
    return out;
}

bool EcCandidate::contains_pair(StateId s, ActionId a) const {
    return std::binary_search(pairs.begin(), pairs.end(), std::make_pair(s, a));
}

bool EcCandidate::contains_state(StateId s) const {
    auto it = std::lower_bound(pairs.begin(), pairs.end(), std::make_pair(s, ActionId{0}));
    return it != pairs.end() && it->first == s;
}

namespace {

// Tarjan over the support edges of the currently active pairs.
// Returns the SCC index per state (components in reverse topological order;
// only membership matters here).
std::vector<int> scc_of(const SupportModel& model,
                        const std::vector<std::vector<bool>>& active) {
    StateId n = model.num_states;
    std::vector<int> dfs_number(n, -1);
    std::vector<int> dfs_minimum(n, -1);
    std::vector<int> stack_index(n, -1);
    std::vector<StateId> stack;
    std::vector<int> component(n, -1);
    int next_dfs = 0;
    int next_component = 0;

    std::function<void(StateId)> dfs = [&](StateId v) {
        int number = next_dfs++;
        dfs_number[v] = dfs_minimum[v] = number;
        stack_index[v] = static_cast<int>(stack.size());
        stack.push_back(v);

        for (std::size_t pi = 0; pi < model.pairs[v].size(); ++pi) {
            if (!active[v][pi]) continue;
            for (StateId succ : model.pairs[v][pi].second) {
                if (dfs_number[succ] == -1) {
                    dfs(succ);
                    dfs_minimum[v] = std::min(dfs_minimum[v], dfs_minimum[succ]);
                } else if (dfs_number[succ] < number && stack_index[succ] != -1) {
                    dfs_minimum[v] = std::min(dfs_minimum[v], dfs_number[succ]);
                }
            }
        }

        if (dfs_minimum[v] == dfs_number[v]) {
            int here = stack_index[v];
            for (std::size_t i = here; i < stack.size(); ++i) {
                component[stack[i]] = next_component;
                stack_index[stack[i]] = -1;
            }
            stack.resize(here);
            ++next_component;
        }
    };

    for (StateId v = 0; v < n; ++v) {
        if (dfs_number[v] == -1) dfs(v);
    }
    return component;
}

} // namespace

std::vector<EcCandidate> mec_decomposition(const SupportModel& model) {
    StateId n = model.num_states;
    std::vector<std::vector<bool>> active(n);
    for (StateId s = 0; s < n; ++s) active[s].assign(model.pairs[s].size(), true);

    std::vector<int> component;
    bool changed = true;
    while (changed) {
        changed = false;
        component = scc_of(model, active);
        // Remove every action whose support leaves its component.
        for (StateId s = 0; s < n; ++s) {
            for (std::size_t pi = 0; pi < model.pairs[s].size(); ++pi) {
                if (!active[s][pi]) continue;
                for (StateId succ : model.pairs[s][pi].second) {
                    if (component[succ] != component[s]) {
                        active[s][pi] = false;
                        changed = true;
                        break;
                    }
                }
            }
        }
    }

    std::map<int, EcCandidate> by_component;
    for (StateId s = 0; s < n; ++s) {
        for (std::size_t pi = 0; pi < model.pairs[s].size(); ++pi) {
            if (active[s][pi]) {
                by_component[component[s]].pairs.emplace_back(s, model.pairs[s][pi].first);
            }
        }
    }
    std::vector<EcCandidate> out;
    for (auto& [comp, ec] : by_component) {
        (void)comp;
        std::sort(ec.pairs.begin(), ec.pairs.end());
        out.push_back(std::move(ec));
    }
    // Deterministic order: by smallest member state.
    std::sort(out.begin(), out.end(), [](const EcCandidate& lhs, const EcCandidate& rhs) {
        return lhs.pairs.front() < rhs.pairs.front();
    });
    return out;
}

namespace {

// Shared collapse core. `prob_of` returns the exact probability of an
// original triple, or nullptr when the source model carries no
// probabilities (partial models).
CollapsedMdp collapse_impl(const SupportModel& support, const std::vector<EcCandidate>& mecs,
                           const std::set<StateId>& target, StateId initial,
                           const Mdp* prob_source) {
    StateId n = support.num_states;

    std::vector<int> mec_of_state(n, -1);
    for (std::size_t i = 0; i < mecs.size(); ++i) {
        for (const auto& [s, a] : mecs[i].pairs) {
            (void)a;
            if (mec_of_state[s] != -1 && mec_of_state[s] != static_cast<int>(i)) {
                throw std::invalid_argument("overlapping MECs passed to collapse");
            }
            mec_of_state[s] = static_cast<int>(i);
        }
    }

    CollapsedMdp cm;
    cm.mecs = mecs;
    cm.has_probs = prob_source != nullptr;
    if (prob_source != nullptr) cm.action_names = prob_source->action_names();
    cm.membership.assign(n, 0);

    std::vector<StateId> mec_quotient(mecs.size(), UINT32_MAX);
    StateId next = 0;
    for (StateId s = 0; s < n; ++s) {
        int mi = mec_of_state[s];
        if (mi < 0) {
            cm.membership[s] = next;
            cm.super_index.push_back(-1);
            ++next;
        } else if (mec_quotient[mi] == UINT32_MAX) {
            mec_quotient[mi] = next;
            cm.membership[s] = next;
            cm.super_index.push_back(mi);
            ++next;
        } else {
            cm.membership[s] = mec_quotient[mi];
        }
    }
    cm.num_states = next;
    cm.initial = cm.membership[initial];
    cm.actions.resize(next);
    cm.is_target.assign(next, false);
    cm.original_target = target;
    for (StateId t : target) {
        if (t < n) cm.is_target[cm.membership[t]] = true;
    }

    for (StateId s = 0; s < n; ++s) {
        StateId q = cm.membership[s];
        int mi = mec_of_state[s];
        for (std::size_t pi = 0; pi < support.pairs[s].size(); ++pi) {
            ActionId a = support.pairs[s][pi].first;
            const auto& successors = support.pairs[s][pi].second;

            QuotientAction qa;
            qa.owner_state = s;
            qa.owner_action = a;
            qa.staying = mi >= 0 && mecs[mi].contains_pair(s, a);

            std::map<StateId, QuotientArc> merged;
            const Choice* choice = prob_source ? prob_source->find_choice(s, a) : nullptr;
            for (StateId dst : successors) {
                StateId qdst = cm.membership[dst];
                auto& arc = merged[qdst];
                arc.qdst = qdst;
                arc.original_dsts.push_back(dst);
                if (choice != nullptr) {
                    for (const auto& t : choice->successors) {
                        if (t.dst == dst) {
                            arc.prob += t.prob;
                            break;
                        }
                    }
                }
            }
            for (auto& [qdst, arc] : merged) {
                (void)qdst;
                arc.prob_d = to_double(arc.prob);
                qa.arcs.push_back(std::move(arc));
            }
            cm.actions[q].push_back(std::move(qa));
        }
    }
    return cm;
}

} // namespace

CollapsedMdp collapse(const Mdp& m, const std::vector<EcCandidate>& mecs) {
    return collapse_impl(SupportModel::from_mdp(m), mecs, m.target(), m.initial(), &m);
}

CollapsedMdp collapse(const SupportModel& pm, const std::vector<EcCandidate>& mecs,
                      const std::set<StateId>& target, StateId initial) {
    return collapse_impl(pm, mecs, target, initial, nullptr);
}

Mdp CollapsedMdp::to_mdp() const {
    if (!has_probs) {
        throw std::logic_error("to_mdp requires a collapse of a full model");
    }
    MdpBuilder builder(num_states);
    builder.set_initial(initial);
    for (StateId q = 0; q < num_states; ++q) {
        if (is_target[q]) builder.add_label("goal", q);
        for (const auto& qa : actions[q]) {
            std::string name = action_names[qa.owner_action];
            if (is_super(q)) {
                name = std::to_string(qa.owner_state) + ":" + name;
            }
            for (const auto& arc : qa.arcs) {
                builder.add_transition(q, name, arc.qdst, arc.prob);
            }
        }
    }
    builder.set_target_label("goal");
    return builder.build();
}

} // namespace reachrl
