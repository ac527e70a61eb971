#pragma once

#include "reachrl/mdp.hpp"

#include <optional>
#include <stdexcept>
#include <vector>

namespace reachrl {

using RationalVector = std::vector<Rational>;

struct OptimalValueResult {
    double value_at_initial = 0;
    std::vector<double> values; // per original state
};

/// Optimal reachability values of a known model: collapse true MECs, pin
/// zero-value states to 0 and targets to 1, iterate interval bounds to a
/// fixed point (sup-norm change < 1e-12, U - L < 1e-10 confirmed).
OptimalValueResult optimal_value(const Mdp& m);

/// Exact reachability value of every state under pi: zero-value states of
/// the induced chain are pinned first (the linear system alone is
/// ambiguous for non-halting chains), then the remaining system is solved
/// over rationals by fraction-free Gaussian elimination.
RationalVector policy_value_exact(const Mdp& m, const MemorylessDetPolicy& pi);

class EnumerationCapExceeded : public std::runtime_error {
public:
    EnumerationCapExceeded(Integer policy_count, std::uint64_t cap)
        : std::runtime_error("policy enumeration refused: " + policy_count.get_str() +
                             " policies exceed the cap of " + std::to_string(cap)),
          policy_count(std::move(policy_count)),
          cap(cap) {}

    Integer policy_count;
    std::uint64_t cap;
};

/// Number of memoryless deterministic policies, prod_s |Av(s)|.
Integer policy_count(const Mdp& m);

/// Lexicographic enumeration of all memoryless deterministic policies.
/// Construction throws EnumerationCapExceeded when the count exceeds cap.
class PolicyEnumerator {
public:
    explicit PolicyEnumerator(const Mdp& m, std::uint64_t cap = 1000000);

    /// Next policy, or nullopt when exhausted.
    std::optional<MemorylessDetPolicy> next();

private:
    std::vector<std::vector<ActionId>> available_;
    std::vector<std::size_t> odometer_;
    bool done_ = false;
    bool first_ = true;
};

struct GapCertificate {
    Rational optimal_value;                 // exact optimum at the initial state
    std::optional<Rational> runner_up_value;
    std::optional<Rational> eps_diff;       // optimum minus best strictly-smaller value
    Rational bound;                         // closed-form lower bound on policy separation
    Integer transition_complexity;          // D
};

/// Evaluates every policy exactly at the initial state and reports the gap
/// between the optimum and the first runner-up (absent when all policies
/// share one value).
GapCertificate min_gap(const Mdp& m, std::uint64_t cap = 1000000);

/// D = max over (s,a) of the lcm of successor-probability denominators.
Integer transition_complexity(const Mdp& m);

/// (2D)^(-2|A||S|) * 2^(-2|S|), exact.
Rational eps_diff_bound(const Mdp& m);

} // namespace reachrl
