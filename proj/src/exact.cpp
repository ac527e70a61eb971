#include "reachrl/exact.hpp"

#include "reachrl/bvi.hpp"
#include "reachrl/ec_collapse.hpp"
#include "reachrl/estimation.hpp"

#include <algorithm>
#include <cassert>
#include <deque>
#include <map>

namespace reachrl {

namespace {

// Fraction-free (Bareiss) elimination on the integer-scaled augmented
// system, exact division at every step. Returns x with M x = b.
std::vector<Rational> solve_exact(std::vector<std::vector<Rational>> matrix,
                                  std::vector<Rational> rhs) {
    const std::size_t n = matrix.size();
    if (n == 0) return {};

    // Scale each row to integers.
    std::vector<std::vector<Integer>> m(n, std::vector<Integer>(n + 1));
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<Rational> row = matrix[i];
        row.push_back(rhs[i]);
        Integer scale = denominator_lcm(row);
        for (std::size_t j = 0; j <= n; ++j) {
            Rational scaled = row[j] * Rational(scale);
            scaled.canonicalize();
            assert(scaled.get_den() == 1);
            m[i][j] = scaled.get_num();
        }
    }

    Integer previous_pivot(1);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        // First nonzero pivot in column k (deterministic; exactness needs
        // no magnitude pivoting).
        std::size_t pivot_row = k;
        while (pivot_row < n && m[pivot_row][k] == 0) ++pivot_row;
        if (pivot_row == n) {
            throw std::logic_error("singular system in exact policy evaluation");
        }
        if (pivot_row != k) std::swap(m[pivot_row], m[k]);

        const Integer pivot = m[k][k];
        for (std::size_t i = k + 1; i < n; ++i) {
            for (std::size_t j = k + 1; j <= n; ++j) {
                Integer numerator = m[i][j] * pivot - m[i][k] * m[k][j];
                mpz_divexact(m[i][j].get_mpz_t(), numerator.get_mpz_t(),
                             previous_pivot.get_mpz_t());
            }
            m[i][k] = 0;
        }
        previous_pivot = pivot;
    }
    if (m[n - 1][n - 1] == 0) {
        throw std::logic_error("singular system in exact policy evaluation");
    }

    std::vector<Rational> x(n);
    for (std::size_t i = n; i-- > 0;) {
        Rational sum(m[i][n]);
        for (std::size_t j = i + 1; j < n; ++j) {
            sum -= Rational(m[i][j]) * x[j];
        }
        x[i] = sum / Rational(m[i][i]);
        x[i].canonicalize();
    }
    return x;
}

// States of a chain with positive probability of reaching the target:
// backward closure of the target under the chain's support edges.
std::vector<bool> chain_positive_states(const MarkovChain& chain) {
    std::size_t n = chain.rows.size();
    std::vector<std::vector<StateId>> reverse(n);
    for (StateId s = 0; s < n; ++s) {
        for (const auto& t : chain.rows[s]) reverse[t.dst].push_back(s);
    }
    std::vector<bool> positive(n, false);
    std::deque<StateId> queue;
    for (StateId t : chain.target) {
        if (t < n && !positive[t]) {
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
    return positive;
}

} // namespace

RationalVector policy_value_exact(const Mdp& m, const MemorylessDetPolicy& pi) {
    MarkovChain chain = induced_chain(m, pi);
    std::size_t n = m.num_states();
    std::vector<bool> positive = chain_positive_states(chain);

    RationalVector values(n, Rational(0));
    for (StateId t : m.target()) values[t] = 1;

    // Unknowns: positive non-target states.
    std::vector<StateId> unknowns;
    std::vector<std::size_t> index_of(n, SIZE_MAX);
    for (StateId s = 0; s < n; ++s) {
        if (positive[s] && !m.is_target(s)) {
            index_of[s] = unknowns.size();
            unknowns.push_back(s);
        }
    }
    if (unknowns.empty()) return values;

    // v_s - sum_{t unknown} P(s,t) v_t = sum_{t in G} P(s,t)
    std::vector<std::vector<Rational>> matrix(unknowns.size(),
                                              std::vector<Rational>(unknowns.size(), Rational(0)));
    std::vector<Rational> rhs(unknowns.size(), Rational(0));
    for (std::size_t i = 0; i < unknowns.size(); ++i) {
        StateId s = unknowns[i];
        matrix[i][i] = 1;
        for (const auto& t : chain.rows[s]) {
            if (m.is_target(t.dst)) {
                rhs[i] += t.prob;
            } else if (index_of[t.dst] != SIZE_MAX) {
                matrix[i][index_of[t.dst]] -= t.prob;
            }
            // zero-value successors contribute nothing
        }
    }

    std::vector<Rational> solution = solve_exact(std::move(matrix), std::move(rhs));
    for (std::size_t i = 0; i < unknowns.size(); ++i) {
        values[unknowns[i]] = solution[i];
    }
    return values;
}

OptimalValueResult optimal_value(const Mdp& m) {
    SupportModel support = SupportModel::from_mdp(m);
    std::vector<EcCandidate> mecs = mec_decomposition(support);
    CollapsedMdp cm = collapse(m, mecs);

    // Zero-value quotient states: no path to a quotient target.
    std::vector<std::vector<StateId>> reverse(cm.num_states);
    for (StateId q = 0; q < cm.num_states; ++q) {
        for (const auto& qa : cm.actions[q]) {
            for (const auto& arc : qa.arcs) reverse[arc.qdst].push_back(q);
        }
    }
    std::vector<bool> positive(cm.num_states, false);
    std::deque<StateId> queue;
    for (StateId q = 0; q < cm.num_states; ++q) {
        if (cm.is_target[q]) {
            positive[q] = true;
            queue.push_back(q);
        }
    }
    while (!queue.empty()) {
        StateId q = queue.front();
        queue.pop_front();
        for (StateId pred : reverse[q]) {
            if (!positive[pred]) {
                positive[pred] = true;
                queue.push_back(pred);
            }
        }
    }
    std::vector<StateId> pin_zero;
    for (StateId q = 0; q < cm.num_states; ++q) {
        if (!positive[q]) pin_zero.push_back(q);
    }

    EstimatedModel est = exact_estimate(m);
    IntervalValues v = reset_bounds(cm, pin_zero);

    constexpr std::uint64_t kMaxSweeps = 5000000;
    constexpr double kSweepTolerance = 1e-12;
    bool converged = false;
    std::uint64_t used = 0;
    while (used < kMaxSweeps) {
        std::uint64_t batch = std::min<std::uint64_t>(kMaxSweeps - used, 4096);
        // run until the per-sweep change drops below tolerance
        std::uint64_t executed = run_bvi_from(cm, est, v, batch, kSweepTolerance);
        used += executed;
        if (executed < batch) {
            converged = true;
            break;
        }
    }
    if (!converged && used >= kMaxSweeps) {
        throw std::logic_error("optimal_value: interval iteration did not stabilize");
    }
    if (v.upper[cm.initial] - v.lower[cm.initial] >= 1e-10) {
        throw std::logic_error("optimal_value: interval confirmation failed at initial state");
    }

    OptimalValueResult result;
    result.values.resize(m.num_states());
    for (StateId s = 0; s < m.num_states(); ++s) {
        StateId q = cm.membership[s];
        double mid = 0.5 * (v.lower[q] + v.upper[q]);
        result.values[s] = std::clamp(mid, 0.0, 1.0);
    }
    result.value_at_initial = result.values[m.initial()];
    return result;
}

Integer policy_count(const Mdp& m) {
    Integer count(1);
    for (StateId s = 0; s < m.num_states(); ++s) {
        std::size_t av = 0;
        for (const auto& choice : m.choices(s)) {
            if (!choice.successors.empty()) ++av;
        }
        count *= static_cast<unsigned long>(av == 0 ? 1 : av);
    }
    return count;
}

PolicyEnumerator::PolicyEnumerator(const Mdp& m, std::uint64_t cap) {
    Integer count = policy_count(m);
    if (count > Integer(static_cast<unsigned long>(cap))) {
        throw EnumerationCapExceeded(count, cap);
    }
    available_.resize(m.num_states());
    for (StateId s = 0; s < m.num_states(); ++s) {
        for (const auto& choice : m.choices(s)) {
            if (!choice.successors.empty()) available_[s].push_back(choice.action);
        }
        // action-less states (targets) get a placeholder; the choice there
        // is immaterial
        if (available_[s].empty()) available_[s].push_back(0);
    }
    odometer_.assign(m.num_states(), 0);
}

std::optional<MemorylessDetPolicy> PolicyEnumerator::next() {
    if (done_) return std::nullopt;
    if (!first_) {
        // advance the odometer, least significant digit = last state
        std::size_t i = odometer_.size();
        while (i > 0) {
            --i;
            if (odometer_[i] + 1 < available_[i].size()) {
                ++odometer_[i];
                std::fill(odometer_.begin() + i + 1, odometer_.end(), 0);
                break;
            }
            if (i == 0) {
                done_ = true;
                return std::nullopt;
            }
        }
    }
    first_ = false;
    MemorylessDetPolicy pi;
    pi.choice.resize(odometer_.size());
    for (std::size_t s = 0; s < odometer_.size(); ++s) {
        pi.choice[s] = available_[s][odometer_[s]];
    }
    return pi;
}

GapCertificate min_gap(const Mdp& m, std::uint64_t cap) {
    GapCertificate cert;
    cert.transition_complexity = transition_complexity(m);
    cert.bound = eps_diff_bound(m);

    PolicyEnumerator policies(m, cap);
    bool any = false;
    Rational best(0);
    std::optional<Rational> runner_up;
    while (auto pi = policies.next()) {
        Rational value = policy_value_exact(m, *pi)[m.initial()];
        if (!any) {
            best = value;
            any = true;
            continue;
        }
        if (value > best) {
            if (!runner_up || best > *runner_up) runner_up = best;
            best = value;
        } else if (value < best) {
            if (!runner_up || value > *runner_up) runner_up = value;
        }
    }
    if (!any) {
        throw std::logic_error("min_gap: model admits no policy");
    }
    cert.optimal_value = best;
    if (runner_up) {
        cert.runner_up_value = *runner_up;
        cert.eps_diff = best - *runner_up;
    }
    return cert;
}

Integer transition_complexity(const Mdp& m) {
    Integer d(1);
    for (StateId s = 0; s < m.num_states(); ++s) {
        for (const auto& choice : m.choices(s)) {
            if (choice.successors.empty()) continue;
            Integer row(1);
            for (const auto& t : choice.successors) {
                Integer den = t.prob.get_den();
                mpz_lcm(row.get_mpz_t(), row.get_mpz_t(), den.get_mpz_t());
            }
            if (row > d) d = row;
        }
    }
    return d;
}

Rational eps_diff_bound(const Mdp& m) {
    Integer two_d = 2 * transition_complexity(m);
    unsigned long exponent =
        2ul * static_cast<unsigned long>(m.num_actions()) * m.num_states();
    Integer denominator;
    mpz_pow_ui(denominator.get_mpz_t(), two_d.get_mpz_t(), exponent);
    Integer two_pow;
    mpz_ui_pow_ui(two_pow.get_mpz_t(), 2ul, 2ul * m.num_states());
    denominator *= two_pow;
    Rational bound(Integer(1), denominator);
    bound.canonicalize();
    return bound;
}

} // namespace reachrl
