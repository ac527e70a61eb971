#include "reachrl/simulator.hpp"

#include "reachrl/ec_collapse.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace reachrl {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

} // namespace

// xoshiro256++ seeded through splitmix64.
Rng::Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64(sm);
}

std::uint64_t Rng::next() {
    std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
}

double Rng::uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

std::uint32_t Rng::uniform_below(std::uint32_t n) {
    // rejection sampling on the top 32 bits; unbiased
    std::uint64_t threshold = (0x100000000ull / n) * n;
    for (;;) {
        std::uint64_t draw = next() >> 32;
        if (draw < threshold) return static_cast<std::uint32_t>(draw % n);
    }
}

GuidanceTable GuidanceTable::all_actions(const std::vector<std::vector<ActionId>>& available) {
    GuidanceTable g;
    g.best = available;
    return g;
}

SimulatorHandle::SimulatorHandle(const Mdp& model, std::uint64_t seed)
    : initial_(model.initial()), num_actions_(model.num_actions()), rng_(seed) {
    StateId n = model.num_states();
    target_.assign(n, false);
    for (StateId t : model.target()) target_[t] = true;
    available_.resize(n);
    rows_.resize(n);
    for (StateId s = 0; s < n; ++s) {
        for (const auto& choice : model.choices(s)) {
            if (choice.successors.empty()) continue;
            available_[s].push_back(choice.action);
            Row row;
            double acc = 0;
            for (const auto& t : choice.successors) {
                acc += t.prob_d;
                row.cumulative.push_back(acc);
                row.dst.push_back(t.dst);
            }
            row.cumulative.back() = 1.0; // guard against rounding at the top
            rows_[s].push_back(std::move(row));
        }
    }
    current_ = initial_;
}

const SimulatorHandle::Row& SimulatorHandle::row(StateId s, ActionId a) const {
    const auto& actions = available_[s];
    for (std::size_t i = 0; i < actions.size(); ++i) {
        if (actions[i] == a) return rows_[s][i];
    }
    throw std::invalid_argument("action " + std::to_string(a) + " not available in state " +
                                std::to_string(s));
}

StateId SimulatorHandle::step(ActionId a) {
    const Row& r = row(current_, a);
    double u = rng_.uniform01();
    std::size_t idx =
        std::upper_bound(r.cumulative.begin(), r.cumulative.end(), u) - r.cumulative.begin();
    if (idx >= r.dst.size()) idx = r.dst.size() - 1;
    current_ = r.dst[idx];
    return current_;
}

double ec_sample_threshold(double p_k, double delta_c) {
    return std::log(delta_c) / std::log1p(-p_k);
}

bool delta_sure_ec(const std::vector<std::pair<StateId, ActionId>>& pairs,
                   const CountTable& counts, double p_k, double delta_c) {
    double threshold = ec_sample_threshold(p_k, delta_c);
    for (const auto& [s, a] : pairs) {
        if (static_cast<double>(counts.pair_count(s, a)) <= threshold) return false;
    }
    return !pairs.empty();
}

namespace {

// exact_ec looping: the partial-model MEC containing s, restricted to the
// visited set, certified at delta_c.
bool looping_exact(const std::set<StateId>& visited_set, StateId s, const CountTable& counts,
                   StateId num_states, double p_k, double delta_c) {
    SupportModel pm = SupportModel::from_counts(counts, num_states);
    for (const auto& mec : mec_decomposition(pm)) {
        if (!mec.contains_state(s)) continue;
        bool inside = true;
        for (StateId member : mec.states()) {
            if (visited_set.count(member) == 0 && member != s) {
                inside = false;
                break;
            }
        }
        if (inside && delta_sure_ec(mec.pairs, counts, p_k, delta_c)) return true;
        return false; // MECs are disjoint; s lies in at most one
    }
    return false;
}

} // namespace

bool looping(const std::vector<StateId>& visited, StateId s, const CountTable& counts,
             StateId num_states, double p_k, double delta_c, LoopMode mode) {
    if (mode == LoopMode::heuristic) {
        // Growth stall over the conceptual trace visited + [s]: no first
        // occurrence within the last num_states^2 entries.
        std::set<StateId> seen;
        std::size_t last_growth_len = 0;
        std::size_t len = 0;
        for (StateId v : visited) {
            ++len;
            if (seen.insert(v).second) last_growth_len = len;
        }
        ++len;
        if (seen.insert(s).second) last_growth_len = len;
        std::size_t window = static_cast<std::size_t>(num_states) * num_states;
        return len - last_growth_len >= window;
    }

    bool revisit = std::find(visited.begin(), visited.end(), s) != visited.end();
    if (!revisit) return false;
    std::set<StateId> visited_set(visited.begin(), visited.end());
    return looping_exact(visited_set, s, counts, num_states, p_k, delta_c);
}

RunTrace simulate_run(SimulatorHandle& sim, const GuidanceTable& guidance, double mu, double p_k,
                      double delta_c, CountTable& counts, LoopMode mode) {
    if (!(mu > 0 && mu <= 1)) throw std::invalid_argument("simulate_run: mu must be in (0, 1]");
    if (!(p_k > 0 && p_k < 1)) throw std::invalid_argument("simulate_run: p_k must be in (0, 1)");
    if (!(delta_c > 0 && delta_c < 1)) {
        throw std::invalid_argument("simulate_run: delta_c must be in (0, 1)");
    }

    RunTrace trace;
    sim.reset();
    StateId s = sim.current();
    if (sim.is_target(s)) {
        trace.visited.push_back(s);
        trace.terminal_reason = TerminalReason::reached_target;
        return trace;
    }

    // Incremental bookkeeping equivalent to looping(): distinct-set growth
    // for the heuristic, revisit detection for the exact check.
    std::set<StateId> seen;
    std::size_t last_growth_len = 0;
    const std::size_t window = static_cast<std::size_t>(sim.num_states()) * sim.num_states();

    for (;;) {
        // conceptual trace = visited + [s]
        std::size_t len = trace.visited.size() + 1;
        bool is_new = seen.insert(s).second;
        if (is_new) last_growth_len = len;

        if (mode == LoopMode::heuristic) {
            if (len - last_growth_len >= window) {
                trace.visited.push_back(s);
                trace.terminal_reason = TerminalReason::looping;
                return trace;
            }
        } else if (!is_new) {
            if (looping_exact(seen, s, counts, sim.num_states(), p_k, delta_c)) {
                trace.visited.push_back(s);
                trace.terminal_reason = TerminalReason::looping;
                return trace;
            }
        }

        trace.visited.push_back(s);

        const auto& pool = sim.rng().uniform01() < mu ? sim.available_actions(s)
                                                      : guidance.best[s];
        const auto& actions = pool.empty() ? sim.available_actions(s) : pool;
        ActionId a = actions[sim.rng().uniform_below(static_cast<std::uint32_t>(actions.size()))];

        StateId succ = sim.step(a);
        counts.record(s, a, succ);
        s = succ;

        if (sim.is_target(s)) {
            trace.visited.push_back(s);
            trace.terminal_reason = TerminalReason::reached_target;
            return trace;
        }
    }
}

} // namespace reachrl
