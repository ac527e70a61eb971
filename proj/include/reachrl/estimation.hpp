#pragma once

#include "reachrl/mdp.hpp"

#include <cstdint>
#include <unordered_map>
#include <vector>

namespace reachrl {

/// Stage-level confidence budget: the stage error delta_k split into the
/// transition-probability, EC-detection and sampling components, plus the
/// per-transition budgets derived from them.
struct ConfidenceBudget {
    double delta_k = 0;
    double delta_tp = 0;
    double delta_ec = 0;
    double delta_nk = 0;
    double delta_p = 0;
    double delta_c = 0;
    double delta_n = 0;
    std::size_t sa_count = 0;
};

/// Splits delta_k into equal thirds and derives the per-transition budgets
/// delta_P = delta_TP * p_k / |SA| (and likewise delta_C, delta_n).
ConfidenceBudget split_budget(double delta_k, double p_k, std::size_t sa_count);

/// Hoeffding confidence radius c = sqrt(ln(delta_p / 2) / (-2 n)).
/// Throws std::invalid_argument when n == 0 (width undefined).
double hoeffding_width(std::uint64_t n, double delta_p);

/// Conservative transition probabilities derived from counters:
/// phat(s,a,s') = max{0, #(s,a,s')/#(s,a) - c(s,a)}. Unobserved triples
/// carry no estimate and are treated as zero downstream.
class EstimatedModel {
public:
    struct PairEstimate {
        double width = 0;
        double assigned_mass = 0; // sum of phat over observed successors
        std::vector<std::pair<StateId, double>> phat; // sorted by successor
    };

    void set(StateId s, ActionId a, PairEstimate estimate);
    const PairEstimate* find(StateId s, ActionId a) const;
    double phat(StateId s, ActionId a, StateId dst) const;
    std::size_t pair_count() const { return pairs_.size(); }

private:
    static std::uint64_t key(StateId s, ActionId a) {
        return (static_cast<std::uint64_t>(s) << 32) | a;
    }
    std::unordered_map<std::uint64_t, PairEstimate> pairs_;
};

EstimatedModel lower_estimate(const CountTable& counts, double delta_p);

/// The estimate a learner with perfect knowledge would hold: phat = P,
/// width 0. Used by the known-model oracle and tests.
EstimatedModel exact_estimate(const Mdp& m);

} // namespace reachrl
