// Copyright 2026 The tracesim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <random>

#include <gtest/gtest.h>

#include "oracles/matrix_chase.hpp"
#include "random_circuits.hpp"
#include "tracesim/exact_engine.hpp"
#include "tracesim/protocols.hpp"

using namespace tracesim;

namespace {

ErrorCode error_of(const std::function<void()> &f) {
    try {
        f();
    } catch (const Error &e) {
        return e.code();
    }
    ADD_FAILURE() << "no error raised";
    return ErrorCode::Io;
}

}  // namespace

TEST(PropagateExact, TunedInterferometerEndsAtD2) {
    const auto state = propagate_exact(mzi(0));
    const auto d2 = make_layout(mzi(0)).positions_of("D_2").front();
    EXPECT_NEAR(std::abs(state.amplitude(d2, 0)), 1.0, 1e-12);
}

TEST(PropagateExact, SingleSplitterAmplitudes) {
    const auto state = propagate_exact(single_splitter());
    const double r = 1 / std::sqrt(2.0);
    EXPECT_NEAR(std::abs(state.amplitude(0, 0) - Complex{r}), 0, 1e-15);
    EXPECT_NEAR(std::abs(state.amplitude(1, 0) - Complex{0, r}), 0, 1e-15);
}

TEST(PropagateExact, NormPreservedInNestedInterferometer) {
    const auto state = propagate_exact(nested_mzi(InnerTuning::Destructive, 1e-3));
    EXPECT_NEAR(state.norm_squared(), 1.0, 1e-12);
    for (double n : state.layer_norms()) {
        EXPECT_NEAR(n, 1.0, 1e-12);
    }
    EXPECT_EQ(state.dimension(), 3u << 5);
}

TEST(PropagateExact, DimensionCountsSinks) {
    const auto state = propagate_exact(ifm(true, 0.1));
    EXPECT_EQ(state.layout().n_positions, 3u);
    EXPECT_EQ(state.dimension(), 3u * 4u);
}

TEST(PropagateExact, TooManyTaps) {
    const auto c = zeno_chain({3, 7, false, 1e-3});  // 21 active taps
    EXPECT_EQ(error_of([&] { propagate_exact(c); }), ErrorCode::TooManyTaps);
    EXPECT_EQ(error_of([&] { propagate_exact(mzi(0, 0.1), {1}); }), ErrorCode::TooManyTaps);
    EXPECT_NO_THROW(propagate_exact(mzi(0, 0.1), {2}));
}

TEST(PropagateExact, MatchesJointOracle) {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 60; i++) {
        const auto c = testing_support::random_circuit(rng);
        const auto state = propagate_exact(c);
        const auto ref = oracle::joint(c);
        ASSERT_EQ(ref.env_dim(), state.env_dim());
        for (std::size_t p = 0; p < ref.coords.n; p++) {
            for (std::size_t env = 0; env < ref.env_dim(); env++) {
                EXPECT_NEAR(std::abs(state.amplitude(p, env) - ref.amp(p, env)), 0, 1e-12);
            }
        }
    }
}

TEST(OutcomeDistribution, InteractionFreeMeasurement) {
    const auto d = outcome_distribution(propagate_exact(ifm(true)));
    EXPECT_NEAR(d.at("D_1"), 0.25, 1e-12);
    EXPECT_NEAR(d.at("D_2"), 0.25, 1e-12);
    EXPECT_NEAR(d.at("absorbed"), 0.5, 1e-12);
    const auto ref = oracle::outcome_probabilities(ifm(true));
    for (const auto &[label, p] : ref) {
        EXPECT_NEAR(d.at(label), p, 1e-14);
    }
}

TEST(OutcomeDistribution, TunedAndDetuned) {
    auto d = outcome_distribution(propagate_exact(mzi(0)));
    EXPECT_LE(d.at("D_1"), 1e-12);
    EXPECT_NEAR(d.at("D_2"), 1, 1e-12);
    d = outcome_distribution(propagate_exact(mzi(kPi)));
    EXPECT_NEAR(d.at("D_1"), 1, 1e-12);
    EXPECT_LE(d.at("D_2"), 1e-12);
}

TEST(OutcomeDistribution, SumsToOne) {
    std::mt19937_64 rng(8);
    for (int i = 0; i < 100; i++) {
        const auto d = outcome_distribution(propagate_exact(testing_support::random_circuit(rng)));
        double total = 0;
        for (const auto &[label, p] : d) {
            total += p;
        }
        EXPECT_NEAR(total, 1, 1e-12);
    }
}

TEST(PostselectTrace, SingleSplitterClosedForm) {
    const double eps = 0.1;
    const auto c = single_splitter(eps);
    const auto post = postselect_trace(propagate_exact(c), "D_1");
    EXPECT_NEAR(post.profile.at("to_D1"), std::pow(std::sin(eps), 2), 1e-15);
    EXPECT_EQ(post.profile.at("to_D2"), 0.0);
    EXPECT_NEAR(post.probability, 0.5, 1e-15);
    // Eight-dimensional enumeration: 2 positions x 4 records.
    const auto joint = oracle::joint(c);
    ASSERT_EQ(joint.state.size(), 8);
    const auto ref = oracle::flip_probabilities(joint, "D_1");
    EXPECT_NEAR(post.profile.at("to_D1"), ref.at("to_D1"), 1e-15);
    EXPECT_NEAR(post.profile.at("to_D2"), ref.at("to_D2"), 1e-15);
}

TEST(PostselectTrace, NestedInterferometerShape) {
    const auto post = postselect_trace(propagate_exact(nested_mzi(InnerTuning::Destructive, 1e-3)), "D_1");
    const auto &s = post.profile.strengths;
    const double c = s.at("C");
    EXPECT_NEAR(s.at("A") / c, 1, 1e-2);
    EXPECT_NEAR(s.at("B") / c, 1, 1e-2);
    EXPECT_LE(s.at("E"), 1e-4 * c);
    EXPECT_LE(s.at("F"), 1e-4 * c);
}

TEST(PostselectTrace, ZeroCouplingGivesEmptyProfile) {
    const auto post = postselect_trace(propagate_exact(nested_mzi(InnerTuning::Destructive, 0)), "D_1");
    EXPECT_TRUE(post.profile.strengths.empty());
    const auto u = union_trace(propagate_exact(ifm(true, 0)));
    EXPECT_TRUE(u.strengths.empty());
}

TEST(PostselectTrace, Errors) {
    const auto state = propagate_exact(mzi(0, 0.1));
    EXPECT_EQ(error_of([&] { postselect_trace(state, "D_9"); }), ErrorCode::UnknownOutcome);
    const auto dark = propagate_exact(mzi(0));
    EXPECT_EQ(error_of([&] { postselect_trace(dark, "D_1"); }), ErrorCode::ZeroProbabilityOutcome);
}

TEST(PostselectTrace, MatchesOracleOnRandomCircuits) {
    std::mt19937_64 rng(21);
    for (int i = 0; i < 60; i++) {
        const auto c = testing_support::random_circuit(rng);
        const auto state = propagate_exact(c);
        const auto joint = oracle::joint(c);
        for (const auto &[label, p] : outcome_distribution(state)) {
            if (p < 1e-6) {
                continue;
            }
            const auto post = postselect_trace(state, label);
            const auto ref = oracle::flip_probabilities(joint, label);
            for (const auto &[seg, value] : ref) {
                EXPECT_NEAR(post.profile.at(seg), value, 1e-10);
            }
        }
    }
}

TEST(UnionTrace, NestedHasTraceEverywhere) {
    const auto u = union_trace(propagate_exact(nested_mzi(InnerTuning::Destructive, 1e-3)));
    for (const char *id : {"E", "A", "B", "C"}) {
        EXPECT_GT(u.at(id), 1e-8) << id;
    }
    // F sits behind a destructive splitter; its trace only appears at fourth order.
    EXPECT_GT(u.at("F"), 0);
    EXPECT_LT(u.at("F"), 1e-10);
}

TEST(UnionTrace, ChannelBeforeBlockKeepsTrace) {
    const auto u = union_trace(propagate_exact(ifm(true, 0.1)));
    EXPECT_NEAR(u.at("bob"), 0.5 * std::pow(std::sin(0.1), 2), 1e-15);
}

TEST(UnionTrace, EqualsOutcomeWeightedPostselection) {
    const auto state = propagate_exact(nested_mzi(InnerTuning::Destructive, 0.05));
    const auto u = union_trace(state);
    std::map<std::string, double> sum;
    for (const auto &[label, p] : outcome_distribution(state)) {
        for (const auto &[seg, v] : postselect_trace(state, label).profile.strengths) {
            sum[seg] += p * v;
        }
    }
    for (const auto &[seg, v] : u.strengths) {
        EXPECT_NEAR(sum.at(seg), v, 1e-12);
    }
}

TEST(EnumerateWorlds, InteractionFreeMeasurement) {
    const auto worlds = enumerate_worlds(propagate_exact(ifm(true)), 0);
    ASSERT_EQ(worlds.size(), 3u);
    EXPECT_EQ(worlds[0].outcome, "absorbed");
    EXPECT_NEAR(worlds[0].probability, 0.5, 1e-12);
    EXPECT_EQ(worlds[1].outcome, "D_1");
    EXPECT_EQ(worlds[2].outcome, "D_2");
    for (const auto &w : worlds) {
        EXPECT_EQ(w.env_record, "00");
    }
    EXPECT_NEAR(worlds[1].probability, 0.25, 1e-12);
    EXPECT_NEAR(worlds[2].probability, 0.25, 1e-12);
}

TEST(EnumerateWorlds, TunedInterferometerSingleWorld) {
    const auto worlds = enumerate_worlds(propagate_exact(mzi(0)), 0);
    ASSERT_EQ(worlds.size(), 1u);
    EXPECT_EQ(worlds[0].outcome, "D_2");
    EXPECT_NEAR(worlds[0].probability, 1, 1e-12);
}

TEST(EnumerateWorlds, NestedPerturbativeBranches) {
    const double eps = 1e-3;
    const auto worlds = enumerate_worlds(propagate_exact(nested_mzi(InnerTuning::Destructive, eps)), 0);
    double total = 0;
    bool found = false;
    for (const auto &w : worlds) {
        total += w.probability;
        if (w.outcome == "D_1" && w.env_record == "00000") {
            found = true;
            EXPECT_NEAR(w.probability, 0.1, 10 * eps * eps);
        } else if (w.env_record.find('1') != std::string::npos) {
            EXPECT_LE(w.probability, 2 * eps * eps);
        }
    }
    EXPECT_TRUE(found);
    EXPECT_NEAR(total, 1, 1e-12);
    // Sorted by probability, most likely first.
    for (std::size_t i = 1; i < worlds.size(); i++) {
        EXPECT_GE(worlds[i - 1].probability, worlds[i].probability);
    }
    // A single flipped record pairs with amplitude sin(eps) * (unperturbed amplitude on that segment).
    const auto flipped_c = std::find_if(worlds.begin(), worlds.end(), [&](const WorldBranch &w) {
        return w.outcome == "D_1" && w.env_record == "00010";
    });
    ASSERT_NE(flipped_c, worlds.end());
    EXPECT_NEAR(flipped_c->probability, std::pow(std::sin(eps), 2) * 0.1, 1e-12);
}

TEST(EnumerateWorlds, FloorFilters) {
    const auto all = enumerate_worlds(propagate_exact(ifm(true, 0.1)), 0);
    const auto big = enumerate_worlds(propagate_exact(ifm(true, 0.1)), 0.2);
    EXPECT_GT(all.size(), big.size());
    for (const auto &w : big) {
        EXPECT_GE(w.probability, 0.2);
    }
}

TEST(EnumerateWorlds, BranchesAreOrthogonalTerms) {
    const auto state = propagate_exact(dsm_bit0(true, 0.02));
    const auto worlds = enumerate_worlds(state, 0);
    std::set<std::pair<std::size_t, std::string>> keys;
    double total = 0;
    for (const auto &w : worlds) {
        EXPECT_TRUE(keys.insert({w.position, w.env_record}).second);
        total += w.probability;
    }
    EXPECT_NEAR(total, 1, 1e-12);
}

TEST(Invariance, GlobalPhaseAndIdentityLayers) {
    std::mt19937_64 rng(17);
    for (int i = 0; i < 50; i++) {
        const auto c = testing_support::random_circuit(rng);
        const auto base = outcome_distribution(propagate_exact(c));

        auto spec_phase = c;
        Layer phases;
        for (std::size_t m = 0; m < c.n_modes; m++) {
            phases.push_back(PhaseShift{ModeId{m}, 0.77, ""});
        }
        spec_phase.layers.insert(spec_phase.layers.begin(), phases);
        for (auto &s : spec_phase.segments) {
            s.slots.begin++;
            s.slots.end++;
        }
        auto padded = c;
        padded.layers.push_back({});
        padded.layers.push_back({Mirror{ModeId{0}}});

        for (const auto *variant : {&spec_phase, &padded}) {
            ASSERT_TRUE(validate(*variant).empty());
            const auto d = outcome_distribution(propagate_exact(*variant));
            for (const auto &[label, p] : base) {
                EXPECT_NEAR(d.at(label), p, 1e-12);
            }
        }
    }
}

TEST(Invariance, SingleZeroCouplingRemovesOnlyThatSegment) {
    const auto c = nested_mzi(InnerTuning::Destructive, 1e-3);
    const auto zero_c = with_epsilons(c, {{"B", 0.0}});
    const auto s1 = propagate_exact(zero_c);
    for (const auto &label : {"D_1", "D_2", "D_3"}) {
        const auto p = postselect_trace(s1, label).profile;
        EXPECT_EQ(p.strengths.count("B"), 0u);
        EXPECT_EQ(p.strengths.size(), 4u);
    }
    EXPECT_EQ(union_trace(s1).strengths.count("B"), 0u);
    // At eps = 0 everywhere the outcome law is untouched by which taps exist.
    const auto d0 = outcome_distribution(propagate_exact(with_uniform_epsilon(c, 0)));
    const auto d1 = outcome_distribution(propagate_exact(with_epsilons(with_uniform_epsilon(c, 0), {{"B", 0.0}})));
    for (const auto &[label, p] : d0) {
        EXPECT_NEAR(d1.at(label), p, 1e-12);
    }
}
