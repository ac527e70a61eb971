#pragma once

#include "reachrl/exact.hpp"
#include "reachrl/mdp.hpp"
#include "reachrl/simulator.hpp"

#include <cmath>
#include <cstdint>
#include <vector>

namespace testutil {

using namespace reachrl;

// The four-state branching model used across the suites: state 0 moves to
// the goal (state 3) or into the {1, 2} two-state loop, each with
// probability 1/2, under a single action.
inline Mdp fig1() {
    MdpBuilder b(4);
    b.set_initial(0);
    b.add_label("goal", 3);
    b.add_transition(0, "a", 1, Rational(1, 2));
    b.add_transition(0, "a", 3, Rational(1, 2));
    b.add_transition(1, "a", 2, Rational(1));
    b.add_transition(2, "a", 1, Rational(1));
    return b.build(); // T has no transitions: runs end there
}

// fig1 plus a strictly worse second action at the initial state
// (straight into the loop), so the optimal policy is unique.
inline Mdp fig1_two_actions() {
    MdpBuilder b(4);
    b.set_initial(0);
    b.add_label("goal", 3);
    b.add_transition(0, "a", 1, Rational(1, 2));
    b.add_transition(0, "a", 3, Rational(1, 2));
    b.add_transition(0, "b", 1, Rational(1));
    b.add_transition(1, "a", 2, Rational(1));
    b.add_transition(2, "a", 1, Rational(1));
    return b.build();
}

// 2-state trap: the initial state sits inside an absorbing non-target
// loop; the goal exists but is unreachable.
inline Mdp trap_model() {
    MdpBuilder b(3);
    b.set_initial(0);
    b.add_label("goal", 2);
    b.add_transition(0, "a", 1, Rational(1));
    b.add_transition(1, "a", 0, Rational(1));
    return b.build();
}

// Target inside a MEC: reaching the loop {1, 2} suffices (state 2 is the
// goal); a second action at 0 leads to a worthless sink.
inline Mdp target_in_mec_model() {
    MdpBuilder b(4);
    b.set_initial(0);
    b.add_label("goal", 2);
    b.add_transition(0, "a", 1, Rational(1));
    b.add_transition(0, "b", 3, Rational(1));
    b.add_transition(1, "a", 2, Rational(1, 2));
    b.add_transition(1, "a", 1, Rational(1, 2));
    b.add_transition(2, "a", 1, Rational(1));
    b.add_transition(3, "a", 3, Rational(1));
    return b.build();
}

// Six states in two layers with one meaningful decision at the root:
// action a (value 1/2) beats action b (value 1/4).
inline Mdp layered6() {
    MdpBuilder b(6);
    b.set_initial(0);
    b.add_label("goal", 4);
    // 0: a -> {1: 1/2, 2: 1/2}, b -> {2: 3/4, 3: 1/4}
    b.add_transition(0, "a", 1, Rational(1, 2));
    b.add_transition(0, "a", 2, Rational(1, 2));
    b.add_transition(0, "b", 2, Rational(3, 4));
    b.add_transition(0, "b", 3, Rational(1, 4));
    // 1: -> {goal: 3/4, sink: 1/4}; 2: -> {goal: 1/4, sink: 3/4}; 3: -> sink
    b.add_transition(1, "a", 4, Rational(3, 4));
    b.add_transition(1, "a", 5, Rational(1, 4));
    b.add_transition(2, "a", 4, Rational(1, 4));
    b.add_transition(2, "a", 5, Rational(3, 4));
    b.add_transition(3, "a", 5, Rational(1));
    b.add_transition(4, "a", 4, Rational(1));
    b.add_transition(5, "a", 5, Rational(1));
    return b.build();
}

// Token-ring self-stabilization on 3 positions (7 states, 21 transitions,
// optimal value 1 under every policy). State id = token bitmask - 1.
inline Mdp ij3() {
    auto move = [](unsigned mask, unsigned from, unsigned to) {
        return (mask & ~(1u << from)) | (1u << to);
    };
    MdpBuilder b(7);
    b.set_initial(6);
    for (unsigned mask = 1; mask <= 7; ++mask) {
        StateId s = mask - 1;
        unsigned bits = __builtin_popcount(mask);
        if (bits == 1) b.add_label("goal", s);
        for (unsigned i = 0; i < 3; ++i) {
            if (!(mask & (1u << i))) continue;
            unsigned right = move(mask, i, (i + 1) % 3);
            unsigned left = move(mask, i, (i + 2) % 3);
            std::string action = "p" + std::to_string(i);
            if (left == right) {
                b.add_transition(s, action, left - 1, Rational(1));
            } else {
                b.add_transition(s, action, right - 1, Rational(1, 2));
                b.add_transition(s, action, left - 1, Rational(1, 2));
            }
        }
    }
    return b.build();
}

struct RandomModelOptions {
    StateId max_states = 8;
    std::size_t max_actions = 3;
    unsigned max_denominator = 4;
    bool require_target_reachable = true;
};

// Seeded random rational model: per state 1..max_actions actions, each a
// distribution with denominator <= max_denominator over 1..3 successors.
inline Mdp random_model(std::uint64_t seed, const RandomModelOptions& options = {}) {
    for (std::uint64_t attempt = 0;; ++attempt) {
        Rng rng(seed * 7919 + attempt);
        StateId n = 2 + rng.uniform_below(options.max_states - 1); // 2..max_states
        MdpBuilder b(n);
        b.set_initial(0);
        StateId goal = n - 1;
        b.add_label("goal", goal);

        for (StateId s = 0; s < n; ++s) {
            std::size_t num_actions = 1 + rng.uniform_below(static_cast<std::uint32_t>(options.max_actions));
            for (std::size_t a = 0; a < num_actions; ++a) {
                unsigned den = 1 + rng.uniform_below(options.max_denominator);
                unsigned support_size =
                    1 + rng.uniform_below(std::min({std::uint32_t{3}, std::uint32_t{den},
                                                    std::uint32_t{n}}));
                // positive numerators summing to den
                std::vector<unsigned> numerators(support_size, 1);
                for (unsigned rest = den - support_size; rest > 0; --rest) {
                    numerators[rng.uniform_below(support_size)] += 1;
                }
                // distinct successors
                std::vector<StateId> succ;
                while (succ.size() < support_size) {
                    StateId t = rng.uniform_below(n);
                    bool seen = false;
                    for (StateId u : succ) seen |= (u == t);
                    if (!seen) succ.push_back(t);
                }
                std::string action = "a" + std::to_string(a);
                for (unsigned i = 0; i < support_size; ++i) {
                    b.add_transition(s, action, succ[i], Rational(numerators[i], den));
                }
            }
        }
        Mdp m = b.build();
        if (!options.require_target_reachable) return m;
        if (zero_value_states(m).count(m.initial()) == 0) return m;
    }
}

// Exact brute-force optimum at the initial state: enumerate every policy
// and evaluate it with the rational solver. The independent oracle for
// the value-iteration path.
inline Rational brute_force_optimal(const Mdp& m, std::uint64_t cap = 1000000) {
    PolicyEnumerator policies(m, cap);
    bool any = false;
    Rational best(0);
    while (auto pi = policies.next()) {
        Rational value = policy_value_exact(m, *pi)[m.initial()];
        if (!any || value > best) best = value;
        any = true;
    }
    return best;
}

// Smallest c with P[Binomial(n, p) > c] <= alpha: the one-sided rejection
// threshold for "true rate <= p" at confidence 1 - alpha.
inline std::uint64_t binomial_upper_critical(std::uint64_t n, double p, double alpha) {
    // walk the pmf in log space
    double log_p = std::log(p);
    double log_q = std::log1p(-p);
    double nd = static_cast<double>(n);
    double cdf = 0;
    for (std::uint64_t c = 0; c <= n; ++c) {
        double cd = static_cast<double>(c);
        double log_term = std::lgamma(nd + 1) - std::lgamma(cd + 1) - std::lgamma(nd - cd + 1) +
                          cd * log_p + (nd - cd) * log_q;
        cdf += std::exp(log_term);
        if (1.0 - cdf <= alpha) return c;
    }
    return n;
}

} // namespace testutil
