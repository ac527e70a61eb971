#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "testutil.hpp"

#include "reachrl/bvi.hpp"
#include "reachrl/exact.hpp"

using namespace reachrl;

namespace {

std::vector<std::vector<ActionId>> available_of(const Mdp& m) {
    std::vector<std::vector<ActionId>> out(m.num_states());
    for (StateId s = 0; s < m.num_states(); ++s) {
        for (const auto& choice : m.choices(s)) {
            if (!choice.successors.empty()) out[s].push_back(choice.action);
        }
    }
    return out;
}

CollapsedMdp collapsed_fig1() {
    Mdp m = testutil::fig1();
    auto mecs = mec_decomposition(SupportModel::from_mdp(m));
    return collapse(m, mecs);
}

} // namespace

TEST_CASE("reset_bounds pins targets and staying actions") {
    CollapsedMdp cm = collapsed_fig1();
    IntervalValues v = reset_bounds(cm);
    StateId q0 = cm.membership[0];
    StateId ss = cm.membership[1];
    StateId qt = cm.membership[3];
    CHECK(v.lower[qt] == 1.0);
    CHECK(v.upper[qt] == 1.0);
    CHECK(v.lower[q0] == 0.0);
    CHECK(v.upper[q0] == 1.0);
    for (std::size_t p = 0; p < cm.actions[ss].size(); ++p) {
        CHECK(v.lower_pair[ss][p] == 0.0);
        CHECK(v.upper_pair[ss][p] == 0.0);
        CHECK(v.pair_pinned[ss][p]);
    }
}

TEST_CASE("reset_bounds pins everything on an all-target model") {
    MdpBuilder b(2);
    b.add_label("goal", 0);
    b.add_label("goal", 1);
    b.add_transition(0, "a", 1, Rational(1));
    b.add_transition(1, "a", 0, Rational(1));
    Mdp m = b.build();
    CollapsedMdp cm = collapse(m, mec_decomposition(SupportModel::from_mdp(m)));
    IntervalValues v = reset_bounds(cm);
    for (StateId q = 0; q < cm.num_states; ++q) {
        CHECK(v.lower[q] == 1.0);
        CHECK(v.upper[q] == 1.0);
    }
}

TEST_CASE("target-containing super states pin staying pairs to one") {
    Mdp m = testutil::target_in_mec_model();
    auto mecs = mec_decomposition(SupportModel::from_mdp(m));
    CollapsedMdp cm = collapse(m, mecs);
    StateId ss = cm.membership[1];
    REQUIRE(cm.is_super(ss));
    REQUIRE(cm.is_target[ss]);
    IntervalValues v = reset_bounds(cm);
    for (std::size_t p = 0; p < cm.actions[ss].size(); ++p) {
        if (cm.actions[ss][p].staying) {
            CHECK(v.lower_pair[ss][p] == 1.0);
            CHECK(v.upper_pair[ss][p] == 1.0);
        }
    }
}

TEST_CASE("two sweeps close the fig1 bounds after collapsing") {
    Mdp m = testutil::fig1();
    CollapsedMdp cm = collapsed_fig1();
    EstimatedModel est = exact_estimate(m);
    IntervalValues v = reset_bounds(cm);
    bvi_sweep(cm, est, v);
    bvi_sweep(cm, est, v);
    StateId q0 = cm.membership[0];
    CHECK(v.lower[q0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(v.upper[q0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("without collapsing, U(s0) stays at one and L(s0) at a half") {
    Mdp m = testutil::fig1();
    CollapsedMdp cm = collapse(m, {}); // identity quotient
    EstimatedModel est = exact_estimate(m);
    IntervalValues v = run_bvi(cm, est, 200);
    CHECK(v.lower[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(v.upper[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("an empty estimate leaves initialization values") {
    Mdp m = testutil::fig1();
    CollapsedMdp cm = collapsed_fig1();
    EstimatedModel empty;
    IntervalValues v = run_bvi(cm, empty, 10);
    StateId q0 = cm.membership[0];
    StateId qt = cm.membership[3];
    CHECK(v.lower[q0] == 0.0);
    CHECK(v.upper[q0] == 1.0);
    CHECK(v.lower[qt] == 1.0);
}

TEST_CASE("run_bvi rejects a zero iteration budget") {
    CollapsedMdp cm = collapsed_fig1();
    EstimatedModel est;
    CHECK_THROWS_AS(run_bvi(cm, est, 0), std::invalid_argument);
}

TEST_CASE("bounds evolve monotonically and stay ordered") {
    for (std::uint64_t seed = 40; seed < 60; ++seed) {
        Mdp m = testutil::random_model(seed);
        auto mecs = mec_decomposition(SupportModel::from_mdp(m));
        CollapsedMdp cm = collapse(m, mecs);
        EstimatedModel est = exact_estimate(m);
        IntervalValues v = reset_bounds(cm);
        std::vector<double> prev_lower = v.lower;
        std::vector<double> prev_upper = v.upper;
        for (int sweep = 0; sweep < 40; ++sweep) {
            bvi_sweep(cm, est, v);
            CHECK(v.ordered());
            for (StateId q = 0; q < cm.num_states; ++q) {
                CHECK(v.lower[q] >= prev_lower[q]);
                CHECK(v.upper[q] <= prev_upper[q]);
            }
            prev_lower = v.lower;
            prev_upper = v.upper;
        }
    }
}

TEST_CASE("soundness on collapsed acyclic quotients after |S| sweeps") {
    int found = 0;
    for (std::uint64_t seed = 1000; found < 100 && seed < 4000; ++seed) {
        Mdp m = testutil::random_model(seed);
        auto mecs = mec_decomposition(SupportModel::from_mdp(m));
        CollapsedMdp cm = collapse(m, mecs);

        // keep only models whose quotient (minus staying self-loops) is a DAG
        std::vector<int> indegree(cm.num_states, 0);
        std::vector<std::vector<StateId>> edges(cm.num_states);
        for (StateId q = 0; q < cm.num_states; ++q) {
            for (const auto& qa : cm.actions[q]) {
                if (qa.staying) continue;
                for (const auto& arc : qa.arcs) {
                    if (arc.qdst == q) continue;
                    edges[q].push_back(arc.qdst);
                    ++indegree[arc.qdst];
                }
            }
        }
        // Kahn
        std::vector<StateId> order;
        for (StateId q = 0; q < cm.num_states; ++q) {
            if (indegree[q] == 0) order.push_back(q);
        }
        for (std::size_t i = 0; i < order.size(); ++i) {
            for (StateId t : edges[order[i]]) {
                if (--indegree[t] == 0) order.push_back(t);
            }
        }
        bool acyclic = order.size() == cm.num_states;
        // self-arcs on non-staying actions break acyclicity
        for (StateId q = 0; q < cm.num_states && acyclic; ++q) {
            for (const auto& qa : cm.actions[q]) {
                if (qa.staying) continue;
                for (const auto& arc : qa.arcs) {
                    if (arc.qdst == q) acyclic = false;
                }
            }
        }
        if (!acyclic) continue;
        ++found;

        EstimatedModel est = exact_estimate(m);
        IntervalValues v = run_bvi(cm, est, m.num_states());
        double truth = to_double(testutil::brute_force_optimal(m));
        CHECK(v.lower[cm.initial] == doctest::Approx(truth).epsilon(1e-9));
        CHECK(v.upper[cm.initial] == doctest::Approx(truth).epsilon(1e-9));
    }
    CHECK(found == 100);
}

TEST_CASE("policy extraction picks the argmax upper bound") {
    MdpBuilder b(4);
    b.add_label("goal", 2);
    b.add_transition(0, "a", 2, Rational(1));
    b.add_transition(0, "b", 2, Rational(1, 2));
    b.add_transition(0, "b", 3, Rational(1, 2));
    b.add_transition(1, "a", 0, Rational(1));
    b.add_transition(2, "a", 2, Rational(1));
    b.add_transition(3, "a", 3, Rational(1));
    Mdp m = b.build();
    auto mecs = mec_decomposition(SupportModel::from_mdp(m));
    CollapsedMdp cm = collapse(m, mecs);
    EstimatedModel est = exact_estimate(m);
    IntervalValues v = run_bvi(cm, est, 64);
    ExtractionResult extraction = extract_policy(cm, v, available_of(m));
    CHECK(extraction.policy.choice[0] == m.find_choice(0, 0)->action);
    CHECK(extraction.fallback_states.empty());
}

TEST_CASE("fig1 extraction returns the unique policy") {
    Mdp m = testutil::fig1();
    CollapsedMdp cm = collapsed_fig1();
    EstimatedModel est = exact_estimate(m);
    IntervalValues v = run_bvi(cm, est, 16);
    ExtractionResult extraction = extract_policy(cm, v, available_of(m));
    CHECK(policy_valid(m, extraction.policy));
}

TEST_CASE("MEC members walk to the owner of the best exit") {
    // MEC {1, 2}; only state 2 owns the exit to the goal
    MdpBuilder b(4);
    b.add_label("goal", 3);
    b.add_transition(0, "go", 1, Rational(1));
    b.add_transition(1, "stay", 2, Rational(1));
    b.add_transition(2, "stay", 1, Rational(1));
    b.add_transition(2, "exit", 3, Rational(1));
    b.add_transition(3, "a", 3, Rational(1));
    Mdp m = b.build();
    auto mecs = mec_decomposition(SupportModel::from_mdp(m));
    REQUIRE(mecs.size() == 2); // {1,2} and the absorbing goal
    CollapsedMdp cm = collapse(m, mecs);
    EstimatedModel est = exact_estimate(m);
    IntervalValues v = run_bvi(cm, est, 64);
    ExtractionResult extraction = extract_policy(cm, v, available_of(m));
    ActionId stay = m.find_choice(1, m.choices(1)[0].action)->action;
    ActionId exit_action = 2;
    CHECK(extraction.policy.choice[1] == stay);
    CHECK(extraction.policy.choice[2] == exit_action);
    CHECK(policy_valid(m, extraction.policy));

    RationalVector value = policy_value_exact(m, extraction.policy);
    CHECK(value[0] == Rational(1));
}

TEST_CASE("extraction walks to internal targets of a target MEC") {
    Mdp m = testutil::target_in_mec_model();
    auto mecs = mec_decomposition(SupportModel::from_mdp(m));
    CollapsedMdp cm = collapse(m, mecs);
    EstimatedModel est = exact_estimate(m);
    IntervalValues v = run_bvi(cm, est, 64);
    ExtractionResult extraction = extract_policy(cm, v, available_of(m));
    CHECK(policy_valid(m, extraction.policy));
    // best action at the root enters the MEC rather than the sink
    CHECK(extraction.policy.choice[0] == 0);
    RationalVector value = policy_value_exact(m, extraction.policy);
    CHECK(value[0] == Rational(1));
}

TEST_CASE("extraction with exact bounds recovers an optimal policy") {
    for (std::uint64_t seed = 700; seed < 800; ++seed) {
        Mdp m = testutil::random_model(seed);
        auto mecs = mec_decomposition(SupportModel::from_mdp(m));
        CollapsedMdp cm = collapse(m, mecs);
        EstimatedModel est = exact_estimate(m);
        IntervalValues v = reset_bounds(cm);
        run_bvi_from(cm, est, v, 100000, 1e-14);
        ExtractionResult extraction = extract_policy(cm, v, available_of(m));
        REQUIRE(policy_valid(m, extraction.policy));
        Rational achieved = policy_value_exact(m, extraction.policy)[m.initial()];
        Rational optimal = testutil::brute_force_optimal(m);
        CHECK(achieved == optimal);
    }
}
