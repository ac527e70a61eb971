#include "reachrl/learner.hpp"

#include "reachrl/ec_collapse.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace reachrl {

StageParams stage_parameters(int k, double mu, BudgetMode mode) {
    if (k < 1) throw std::invalid_argument("stage index must be >= 1");
    StageParams params;
    params.k = k;
    params.delta_k = params.eps_k = params.p_k = std::ldexp(1.0, -k);
    params.mu = mu;
    params.mode = mode;
    return params;
}

double least_likely_transition_prob(double mu, double p_k, std::size_t num_actions,
                                    std::size_t num_states) {
    double base = mu * p_k / static_cast<double>(num_actions);
    return std::pow(base, static_cast<double>(num_states));
}

double required_pair_samples(double eps_k, double p_k, double delta_p,
                             std::uint64_t unroll_depth) {
    double r = static_cast<double>(unroll_depth);
    double numerator = 32.0 * std::log(2.0 / delta_p) * r * r;
    double denominator = eps_k * eps_k * std::pow(p_k, 2.0 * r);
    return numerator / denominator;
}

namespace {

// log of sum_{i=0}^{upto} C(n,i) p^i (1-p)^(n-i), stable in log space.
double binomial_log_cdf(std::uint64_t upto, std::uint64_t n, double p) {
    if (p <= 0) return 0.0; // CDF = 1
    if (p >= 1) return upto >= n ? 0.0 : -std::numeric_limits<double>::infinity();
    double log_p = std::log(p);
    double log_q = std::log1p(-p);
    double nd = static_cast<double>(n);
    double acc = -std::numeric_limits<double>::infinity();
    for (std::uint64_t i = 0; i <= upto && i <= n; ++i) {
        double id = static_cast<double>(i);
        double term = std::lgamma(nd + 1) - std::lgamma(id + 1) - std::lgamma(nd - id + 1) +
                      id * log_p + (nd - id) * log_q;
        double hi = std::max(acc, term);
        acc = hi + std::log(std::exp(acc - hi) + std::exp(term - hi));
    }
    return std::min(acc, 0.0);
}

} // namespace

std::uint64_t least_simulations(double s_k, double p, double delta_n, std::uint64_t cap) {
    if (s_k <= 0) return 0;
    if (!(p > 0) || !(delta_n > 0)) {
        throw BudgetInfeasibleError(s_k, p, cap);
    }
    std::uint64_t required = static_cast<std::uint64_t>(std::ceil(s_k));
    if (static_cast<double>(required) > static_cast<double>(cap)) {
        throw BudgetInfeasibleError(s_k, p, cap);
    }
    double log_delta = std::log(delta_n);

    auto feasible = [&](std::uint64_t n) {
        return binomial_log_cdf(required - 1, n, p) <= log_delta;
    };

    std::uint64_t low = required;
    if (feasible(low)) return low;
    std::uint64_t high = low;
    for (;;) {
        if (high >= cap) throw BudgetInfeasibleError(s_k, p, cap);
        high = std::min(cap, high * 2);
        if (feasible(high)) break;
    }
    // invariant: !feasible(low), feasible(high)
    while (high - low > 1) {
        std::uint64_t mid = low + (high - low) / 2;
        if (feasible(mid)) {
            high = mid;
        } else {
            low = mid;
        }
    }
    return high;
}

TheoreticalBudget theoretical_budget(const StageParams& params, std::size_t num_states,
                                     std::size_t num_actions, std::size_t sa_count,
                                     std::uint64_t unroll_depth, std::uint64_t cap) {
    ConfidenceBudget budget = split_budget(params.delta_k, params.p_k, sa_count);
    TheoreticalBudget out;
    out.s_k = required_pair_samples(params.eps_k, params.p_k, budget.delta_p, unroll_depth);
    out.least_likely_prob =
        least_likely_transition_prob(params.mu, params.p_k, num_actions, num_states);
    out.n_k = least_simulations(out.s_k, out.least_likely_prob, budget.delta_n, cap);
    return out;
}

std::uint64_t practical_budget(int k, std::size_t partial_model_state_count, std::uint64_t c0) {
    if (k < 1) throw std::invalid_argument("stage index must be >= 1");
    std::uint64_t kk = static_cast<std::uint64_t>(k);
    return c0 * kk * kk * std::max<std::uint64_t>(1, partial_model_state_count);
}

Learner::Learner(SimulatorHandle& sim, LearnerConfig config)
    : sim_(sim), config_(std::move(config)),
      guidance_(GuidanceTable::all_actions(sim.available_actions())) {
    if (config_.max_stages < config_.min_stages || config_.min_stages < 1) {
        throw std::invalid_argument("require max_stages >= min_stages >= 1");
    }
}

LoopMode Learner::loop_mode() const {
    if (config_.loop_mode) return *config_.loop_mode;
    return config_.mode == BudgetMode::theoretical ? LoopMode::exact_ec : LoopMode::heuristic;
}

std::uint64_t Learner::bvi_iteration_budget(int k) const {
    std::uint64_t n = sim_.num_states();
    if (config_.mode == BudgetMode::theoretical) {
        if (k >= 48) throw BudgetInfeasibleError(0, 0, config_.nk_cap);
        return (std::uint64_t{1} << k) * n;
    }
    return 10ull * static_cast<std::uint64_t>(k) * n;
}

const StageReport& Learner::run_stage() {
    auto t0 = std::chrono::steady_clock::now();
    int k = next_k_++;

    StageReport report;
    report.params = stage_parameters(k, config_.mu, config_.mode);
    std::size_t sa_count = std::max<std::size_t>(1, counts_.observed_pair_count());
    report.budget = split_budget(report.params.delta_k, report.params.p_k, sa_count);

    std::uint64_t n_k;
    if (config_.mode == BudgetMode::theoretical) {
        std::uint64_t unroll = config_.unroll_depth
                                   ? *config_.unroll_depth
                                   : static_cast<std::uint64_t>(sim_.num_states()) * k;
        TheoreticalBudget budget =
            theoretical_budget(report.params, sim_.num_states(), sim_.num_actions(), sa_count,
                               unroll, config_.nk_cap);
        n_k = budget.n_k;
    } else {
        n_k = practical_budget(k, counts_.observed_state_count(), config_.c0);
    }

    LoopMode mode = loop_mode();
    for (std::uint64_t i = 0; i < n_k; ++i) {
        simulate_run(sim_, guidance_, report.params.mu, report.params.p_k, report.budget.delta_c,
                     counts_, mode);
    }
    report.simulations = n_k;

    if (mode == LoopMode::exact_ec) {
        // Certification top-ups: candidate ECs of the partial model must be
        // delta_c-sure before collapsing, so sample until they are (bounded).
        std::uint64_t batch = std::max<std::uint64_t>(1, n_k / 10);
        for (std::uint64_t round = 0; round < config_.topup_batches; ++round) {
            SupportModel pm = SupportModel::from_counts(counts_, sim_.num_states());
            bool all_sure = true;
            for (const auto& mec : mec_decomposition(pm)) {
                if (!delta_sure_ec(mec.pairs, counts_, report.params.p_k,
                                   report.budget.delta_c)) {
                    all_sure = false;
                    break;
                }
            }
            if (all_sure) break;
            for (std::uint64_t i = 0; i < batch; ++i) {
                simulate_run(sim_, guidance_, report.params.mu, report.params.p_k,
                             report.budget.delta_c, counts_, mode);
            }
            report.simulations += batch;
        }
    }

    EstimatedModel est = lower_estimate(counts_, report.budget.delta_p);
    SupportModel pm = SupportModel::from_counts(counts_, sim_.num_states());
    std::vector<EcCandidate> mecs = mec_decomposition(pm);

    std::set<StateId> target;
    for (StateId s = 0; s < sim_.num_states(); ++s) {
        if (sim_.is_target(s)) target.insert(s);
    }
    CollapsedMdp cm = collapse(pm, mecs, target, sim_.initial_state());
    report.mec_count = mecs.size();

    std::uint64_t iterations = bvi_iteration_budget(k);
    IntervalValues v = reset_bounds(cm);
    double early_exit = config_.mode == BudgetMode::practical ? 1e-12 : 0.0;
    report.bvi_iterations = run_bvi_from(cm, est, v, iterations, early_exit);

    report.lower_s0 = v.lower[cm.initial];
    report.upper_s0 = v.upper[cm.initial];

    ExtractionResult extraction = extract_policy(cm, v, sim_.available_actions());
    report.policy = extraction.policy;
    report.fallback_states = extraction.fallback_states;

    guidance_.best = best_action_sets(cm, v, extraction, sim_.available_actions());

    report.cumulative_samples = counts_.total_samples();
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    history_.push_back(std::move(report));
    return history_.back();
}

double Learner::reevaluate_error(const ConfidenceBudget& budget, std::uint64_t iterations) const {
    EstimatedModel est = lower_estimate(counts_, budget.delta_p);
    SupportModel pm = SupportModel::from_counts(counts_, sim_.num_states());
    std::vector<EcCandidate> mecs = mec_decomposition(pm);
    std::set<StateId> target;
    for (StateId s = 0; s < sim_.num_states(); ++s) {
        if (sim_.is_target(s)) target.insert(s);
    }
    CollapsedMdp cm = collapse(pm, mecs, target, sim_.initial_state());
    double early_exit = config_.mode == BudgetMode::practical ? 1e-12 : 0.0;
    IntervalValues v = run_bvi(cm, est, std::max<std::uint64_t>(1, iterations), early_exit);
    return v.upper[cm.initial] - v.lower[cm.initial];
}

const std::vector<StageReport>& Learner::run() {
    while (next_k_ <= config_.max_stages) {
        run_stage();
        // Convergence check: re-run BVI on the current counters with the
        // previous stage's budget and iteration count; stop once the error
        // no longer improves by more than the threshold.
        if (history_.size() >= 2 && static_cast<int>(history_.size()) >= config_.min_stages) {
            const StageReport& prev = history_[history_.size() - 2];
            double reevaluated = reevaluate_error(prev.budget, prev.bvi_iterations);
            if (prev.error() - reevaluated < config_.convergence_threshold) break;
        }
    }
    return history_;
}

} // namespace reachrl
