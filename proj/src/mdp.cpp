#include "reachrl/mdp.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>

namespace reachrl {

const Choice* Mdp::find_choice(StateId s, ActionId a) const {
    if (s >= num_states_) return nullptr;
    for (const auto& choice : rows_[s]) {
        if (choice.action == a) return &choice;
    }
    return nullptr;
}

MdpBuilder::MdpBuilder(StateId num_states) {
    m_.num_states_ = num_states;
    m_.rows_.resize(num_states);
    target_label_ = "goal";
}

MdpBuilder& MdpBuilder::set_initial(StateId s) {
    m_.initial_ = s;
    return *this;
}

ActionId MdpBuilder::action_id(const std::string& name) {
    auto it = action_ids_.find(name);
    if (it != action_ids_.end()) return it->second;
    ActionId id = static_cast<ActionId>(m_.action_names_.size());
    m_.action_names_.push_back(name);
    action_ids_.emplace(name, id);
    return id;
}

MdpBuilder& MdpBuilder::add_transition(StateId src, const std::string& action, StateId dst,
                                       const Rational& raw_prob) {
    Rational prob = raw_prob;
    prob.canonicalize(); // lowest terms, positive denominator
    if (prob <= 0) {
        throw std::invalid_argument("transition (" + std::to_string(src) + ", " + action + ", " +
                                    std::to_string(dst) +
                                    "): probability must be positive, got " +
                                    format_rational(prob));
    }
    if (src >= m_.num_states_) {
        throw std::invalid_argument("transition source state " + std::to_string(src) +
                                    " out of range");
    }
    ActionId a = action_id(action);
    auto& row = m_.rows_[src];
    auto it = std::find_if(row.begin(), row.end(),
                           [a](const Choice& c) { return c.action == a; });
    if (it == row.end()) {
        row.push_back(Choice{a, {}});
        it = row.end() - 1;
    }
    for (const auto& t : it->successors) {
        if (t.dst == dst) {
            throw std::invalid_argument("duplicate transition (" + std::to_string(src) + ", " +
                                        action + ", " + std::to_string(dst) + ")");
        }
    }
    it->successors.push_back(Transition{dst, prob, to_double(prob)});
    return *this;
}

MdpBuilder& MdpBuilder::add_label(const std::string& name, StateId s) {
    m_.labels_[name].insert(s);
    return *this;
}

MdpBuilder& MdpBuilder::set_target_label(const std::string& label) {
    target_label_ = label;
    explicit_target_ = false;
    return *this;
}

MdpBuilder& MdpBuilder::set_target(std::set<StateId> target) {
    m_.target_ = std::move(target);
    explicit_target_ = true;
    return *this;
}

Mdp MdpBuilder::build_unchecked() {
    if (!explicit_target_) {
        auto it = m_.labels_.find(target_label_);
        m_.target_ = it == m_.labels_.end() ? std::set<StateId>{} : it->second;
    }
    for (auto& row : m_.rows_) {
        std::sort(row.begin(), row.end(),
                  [](const Choice& lhs, const Choice& rhs) { return lhs.action < rhs.action; });
        for (auto& choice : row) {
            std::sort(choice.successors.begin(), choice.successors.end(),
                      [](const Transition& lhs, const Transition& rhs) { return lhs.dst < rhs.dst; });
        }
    }
    return m_;
}

Mdp MdpBuilder::build() {
    Mdp m = build_unchecked();
    auto violations = validate(m);
    if (!violations.empty()) {
        std::string message = "invalid model:";
        for (const auto& v : violations) {
            message += "\n  " + v.where + ": " + v.message;
        }
        throw std::invalid_argument(message);
    }
    return m;
}

std::vector<Violation> validate(const Mdp& m) {
    std::vector<Violation> out;
    if (m.initial() >= m.num_states()) {
        out.push_back({"initial", "initial state " + std::to_string(m.initial()) +
                                      " out of range (num_states = " +
                                      std::to_string(m.num_states()) + ")"});
    }
    for (StateId t : m.target()) {
        if (t >= m.num_states()) {
            out.push_back({"target", "target state " + std::to_string(t) + " out of range"});
        }
    }
    for (const auto& [name, states] : m.labels()) {
        for (StateId s : states) {
            if (s >= m.num_states()) {
                out.push_back({"label " + name, "state " + std::to_string(s) + " out of range"});
            }
        }
    }
    for (StateId s = 0; s < m.num_states(); ++s) {
        bool available = false;
        for (const auto& choice : m.choices(s)) {
            if (choice.successors.empty()) continue;
            available = true;
            std::string where = "(" + std::to_string(s) + ", " + m.action_name(choice.action) + ")";
            Rational sum(0);
            for (const auto& t : choice.successors) {
                if (t.dst >= m.num_states()) {
                    out.push_back({where, "successor state " + std::to_string(t.dst) +
                                              " out of range"});
                }
                if (t.prob <= 0) {
                    out.push_back({where, "non-positive probability " + format_rational(t.prob) +
                                              " to state " + std::to_string(t.dst)});
                }
                sum += t.prob;
            }
            if (sum != 1) {
                out.push_back({where, "probabilities sum to " + format_rational(sum) + ", not 1"});
            }
        }
        // Runs end on the target, so target states may omit transitions.
        if (!available && !m.is_target(s)) {
            out.push_back({"state " + std::to_string(s), "no available action (Av(s) empty)"});
        }
    }
    return out;
}

std::set<StateId> support(const Mdp& m, StateId s, ActionId a) {
    const Choice* choice = m.find_choice(s, a);
    if (choice == nullptr) {
        throw std::invalid_argument("action " + std::to_string(a) + " not available in state " +
                                    std::to_string(s));
    }
    std::set<StateId> out;
    for (const auto& t : choice->successors) out.insert(t.dst);
    return out;
}

std::set<StateId> zero_value_states(const Mdp& m) {
    // Positive-value set: least fixed point containing the target, closed
    // under "some action has a successor already in the set". Backward BFS
    // over reversed support edges.
    std::vector<std::vector<StateId>> reverse(m.num_states());
    for (StateId s = 0; s < m.num_states(); ++s) {
        for (const auto& choice : m.choices(s)) {
            for (const auto& t : choice.successors) {
                reverse[t.dst].push_back(s);
            }
        }
    }
    std::vector<bool> positive(m.num_states(), false);
    std::deque<StateId> queue;
    for (StateId t : m.target()) {
        if (t < m.num_states() && !positive[t]) {
            positive[t] = true;
            queue.push_back(t);
        }
    }
    while (!queue.empty()) {
        StateId s = queue.front();
        queue.pop_front();
        for (StateId pred : reverse[s]) {
            if (!positive[pred]) {
                positive[pred] = true;
                queue.push_back(pred);
            }
        }
    }
    std::set<StateId> zero;
    for (StateId s = 0; s < m.num_states(); ++s) {
        if (!positive[s]) zero.insert(s);
    }
    return zero;
}

bool policy_valid(const Mdp& m, const MemorylessDetPolicy& pi) {
    if (pi.choice.size() != m.num_states()) return false;
    for (StateId s = 0; s < m.num_states(); ++s) {
        bool any = false;
        for (const auto& choice : m.choices(s)) any |= !choice.successors.empty();
        if (!any) continue; // choice is immaterial where nothing is available
        if (!m.action_available(s, pi.choice[s])) return false;
    }
    return true;
}

MarkovChain induced_chain(const Mdp& m, const MemorylessDetPolicy& pi) {
    if (!policy_valid(m, pi)) {
        throw std::invalid_argument("policy is not total/available on this model");
    }
    MarkovChain chain;
    chain.initial = m.initial();
    chain.target = m.target();
    chain.rows.resize(m.num_states());
    for (StateId s = 0; s < m.num_states(); ++s) {
        const Choice* choice = m.find_choice(s, pi.choice[s]);
        if (choice != nullptr) chain.rows[s] = choice->successors; // else absorbing
    }
    return chain;
}

void CountTable::record(StateId s, ActionId a, StateId dst) {
    auto& pc = pairs_[key(s, a)];
    pc.total += 1;
    pc.succ[dst] += 1;
    states_.insert(s);
    states_.insert(dst);
    total_ += 1;
}

std::uint64_t CountTable::pair_count(StateId s, ActionId a) const {
    auto it = pairs_.find(key(s, a));
    return it == pairs_.end() ? 0 : it->second.total;
}

std::uint64_t CountTable::triple_count(StateId s, ActionId a, StateId dst) const {
    auto it = pairs_.find(key(s, a));
    if (it == pairs_.end()) return 0;
    auto jt = it->second.succ.find(dst);
    return jt == it->second.succ.end() ? 0 : jt->second;
}

std::vector<std::pair<StateId, ActionId>> CountTable::observed_pairs() const {
    std::vector<std::pair<StateId, ActionId>> out;
    out.reserve(pairs_.size());
    for (const auto& [k, pc] : pairs_) {
        (void)pc;
        out.emplace_back(static_cast<StateId>(k >> 32), static_cast<ActionId>(k & 0xffffffffu));
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::pair<StateId, std::uint64_t>> CountTable::successors(StateId s, ActionId a) const {
    std::vector<std::pair<StateId, std::uint64_t>> out;
    auto it = pairs_.find(key(s, a));
    if (it == pairs_.end()) return out;
    out.reserve(it->second.succ.size());
    for (const auto& [dst, n] : it->second.succ) out.emplace_back(dst, n);
    std::sort(out.begin(), out.end());
    return out;
}

bool CountTable::marginals_consistent() const {
    for (const auto& [k, pc] : pairs_) {
        (void)k;
        std::uint64_t sum = 0;
        for (const auto& [dst, n] : pc.succ) {
            (void)dst;
            sum += n;
        }
        if (sum != pc.total) return false;
    }
    return true;
}

SupportModel SupportModel::from_mdp(const Mdp& m) {
    SupportModel pm;
    pm.num_states = m.num_states();
    pm.pairs.resize(m.num_states());
    for (StateId s = 0; s < m.num_states(); ++s) {
        for (const auto& choice : m.choices(s)) {
            if (choice.successors.empty()) continue;
            std::vector<StateId> succ;
            succ.reserve(choice.successors.size());
            for (const auto& t : choice.successors) succ.push_back(t.dst);
            pm.pairs[s].emplace_back(choice.action, std::move(succ));
        }
    }
    return pm;
}

SupportModel SupportModel::from_counts(const CountTable& counts, StateId num_states) {
    SupportModel pm;
    pm.num_states = num_states;
    pm.pairs.resize(num_states);
    for (const auto& [s, a] : counts.observed_pairs()) {
        std::vector<StateId> succ;
        for (const auto& [dst, n] : counts.successors(s, a)) {
            (void)n;
            succ.push_back(dst);
        }
        pm.pairs[s].emplace_back(a, std::move(succ));
    }
    return pm;
}

} // namespace reachrl
