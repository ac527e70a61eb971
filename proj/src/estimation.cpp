#include "reachrl/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace reachrl {

ConfidenceBudget split_budget(double delta_k, double p_k, std::size_t sa_count) {
    if (!(delta_k > 0 && delta_k < 1) || !(p_k > 0 && p_k < 1)) {
        throw std::invalid_argument("split_budget: delta_k and p_k must lie in (0,1)");
    }
    if (sa_count == 0) {
        throw std::invalid_argument("split_budget: sa_count must be >= 1");
    }
    ConfidenceBudget budget;
    budget.delta_k = delta_k;
    budget.delta_tp = delta_k / 3;
    budget.delta_ec = delta_k / 3;
    budget.delta_nk = delta_k / 3;
    double per_transition = p_k / static_cast<double>(sa_count);
    budget.delta_p = budget.delta_tp * per_transition;
    budget.delta_c = budget.delta_ec * per_transition;
    budget.delta_n = budget.delta_nk * per_transition;
    budget.sa_count = sa_count;
    return budget;
}

double hoeffding_width(std::uint64_t n, double delta_p) {
    if (n == 0) {
        throw std::invalid_argument("hoeffding_width: no samples (n = 0)");
    }
    if (!(delta_p > 0 && delta_p < 1)) {
        throw std::invalid_argument("hoeffding_width: delta_p must lie in (0,1)");
    }
    return std::sqrt(std::log(delta_p / 2) / (-2.0 * static_cast<double>(n)));
}

void EstimatedModel::set(StateId s, ActionId a, PairEstimate estimate) {
    pairs_[key(s, a)] = std::move(estimate);
}

const EstimatedModel::PairEstimate* EstimatedModel::find(StateId s, ActionId a) const {
    auto it = pairs_.find(key(s, a));
    return it == pairs_.end() ? nullptr : &it->second;
}

double EstimatedModel::phat(StateId s, ActionId a, StateId dst) const {
    const PairEstimate* pe = find(s, a);
    if (pe == nullptr) return 0;
    auto it = std::lower_bound(pe->phat.begin(), pe->phat.end(), dst,
                               [](const auto& entry, StateId key) { return entry.first < key; });
    if (it == pe->phat.end() || it->first != dst) return 0;
    return it->second;
}

EstimatedModel lower_estimate(const CountTable& counts, double delta_p) {
    EstimatedModel est;
    for (const auto& [s, a] : counts.observed_pairs()) {
        std::uint64_t n = counts.pair_count(s, a);
        EstimatedModel::PairEstimate pe;
        pe.width = hoeffding_width(n, delta_p);
        for (const auto& [dst, count] : counts.successors(s, a)) {
            double freq = static_cast<double>(count) / static_cast<double>(n);
            double clamped = std::max(0.0, freq - pe.width);
            pe.assigned_mass += clamped;
            pe.phat.emplace_back(dst, clamped);
        }
        est.set(s, a, std::move(pe));
    }
    return est;
}

EstimatedModel exact_estimate(const Mdp& m) {
    EstimatedModel est;
    for (StateId s = 0; s < m.num_states(); ++s) {
        for (const auto& choice : m.choices(s)) {
            if (choice.successors.empty()) continue;
            EstimatedModel::PairEstimate pe;
            pe.width = 0;
            for (const auto& t : choice.successors) {
                pe.assigned_mass += t.prob_d;
                pe.phat.emplace_back(t.dst, t.prob_d);
            }
            est.set(s, choice.action, std::move(pe));
        }
    }
    return est;
}

} // namespace reachrl
