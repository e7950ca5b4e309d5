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

// Randomized invariants over 1000 generated circuits per property.

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles/matrix_chase.hpp"
#include "random_circuits.hpp"
#include "tracesim/circuit_json.hpp"
#include "tracesim/exact_engine.hpp"
#include "tracesim/trace_analysis.hpp"
#include "tracesim/tsv_engine.hpp"

using namespace tracesim;

namespace {

constexpr int kCircuits = 1000;

}  // namespace

TEST(Property, NormPreservedAfterEveryLayer) {
    std::mt19937_64 rng(1001);
    for (int i = 0; i < kCircuits; i++) {
        const auto c = testing_support::random_circuit(rng);
        const auto state = propagate_exact(c);
        ASSERT_EQ(state.layer_norms().size(), c.n_slots() + 1);
        for (double n : state.layer_norms()) {
            ASSERT_NEAR(n, 1, 1e-12) << "circuit " << i;
        }
    }
}

TEST(Property, ElementsAreUnitary) {
    std::mt19937_64 rng(1002);
    for (int i = 0; i < kCircuits; i++) {
        for (const auto &layer : testing_support::random_circuit(rng).layers) {
            for (const auto &e : layer) {
                const auto u = element_unitary(e);
                ASSERT_LE((u.adjoint() * u - Eigen::MatrixXcd::Identity(u.rows(), u.cols())).norm(), 1e-12);
            }
        }
    }
}

TEST(Property, CutNormalization) {
    std::mt19937_64 rng(1003);
    int checked = 0;
    for (int i = 0; i < kCircuits; i++) {
        const auto c = testing_support::random_circuit(rng);
        const auto layout = make_layout(c);
        const auto labels = layout.outcome_labels();
        const auto &label = labels[std::uniform_int_distribution<std::size_t>(0, labels.size() - 1)(rng)];
        if (layout.positions_of(label).size() != 1) {
            continue;
        }
        const auto tsv = detail::two_state_unchecked(c, label);
        if (std::norm(tsv.overlap) < 1e-6) {
            continue;
        }
        std::vector<CompleteCut> cuts;
        try {
            cuts = complete_cuts(c);
        } catch (const Error &e) {
            ASSERT_EQ(e.code(), ErrorCode::NoCompleteCut);
        }
        for (const auto &cut : cuts) {
            const Complex sum = cut_weak_value_sum(tsv, cut);
            ASSERT_NEAR(std::abs(sum - Complex{1}), 0, 1e-12) << "circuit " << i << " slot " << cut.slot;
            checked++;
        }
    }
    EXPECT_GT(checked, 500);
}

TEST(Property, UnionIsOutcomeWeightedPostselection) {
    std::mt19937_64 rng(1004);
    for (int i = 0; i < kCircuits; i++) {
        const auto c = testing_support::random_circuit(rng);
        const auto state = propagate_exact(c);
        std::map<std::string, double> sum;
        for (const auto &[label, p] : outcome_distribution(state)) {
            if (p <= kZeroProbability) {
                continue;
            }
            for (const auto &[seg, v] : postselect_trace(state, label).profile.strengths) {
                sum[seg] += p * v;
            }
        }
        for (const auto &[seg, v] : union_trace(state).strengths) {
            ASSERT_NEAR(sum[seg], v, 1e-12) << "circuit " << i << " segment " << seg;
        }
    }
}

TEST(Property, SerializationRoundTrip) {
    std::mt19937_64 rng(1005);
    for (int i = 0; i < kCircuits; i++) {
        const auto c = testing_support::random_circuit(rng);
        const auto text = serialize(c).dump();
        const auto back = parse_circuit(text);
        ASSERT_EQ(back, c) << text;
        ASSERT_EQ(serialize(back).dump(), text);
    }
}

TEST(Property, ExactEngineMatchesDenseOracle) {
    std::mt19937_64 rng(1006);
    for (int i = 0; i < kCircuits; i++) {
        const auto c = testing_support::random_circuit(rng);
        const auto state = propagate_exact(c);
        const auto ref = oracle::joint(c);
        for (std::size_t p = 0; p < ref.coords.n; p++) {
            for (std::size_t env = 0; env < ref.env_dim(); env++) {
                ASSERT_NEAR(std::abs(state.amplitude(p, env) - ref.amp(p, env)), 0, 1e-12) << "circuit " << i;
            }
        }
    }
}

TEST(Property, WeakValuesMatchMatrixChase) {
    std::mt19937_64 rng(1007);
    for (int i = 0; i < kCircuits; i++) {
        const auto c = testing_support::random_circuit(rng);
        const auto layout = make_layout(c);
        if (c.segments.empty()) {
            continue;
        }
        for (const auto &label : layout.outcome_labels()) {
            if (layout.positions_of(label).size() != 1) {
                continue;
            }
            const auto tsv = detail::two_state_unchecked(c, label);
            for (const auto &s : c.segments) {
                const auto ref = oracle::chase(c, s.id, label);
                ASSERT_NEAR(std::abs(tsv.forward.at(s.id) - ref.psi), 0, 1e-12);
                ASSERT_NEAR(std::abs(tsv.backward.at(s.id) - ref.phi), 0, 1e-12);
            }
            ASSERT_NEAR(std::abs(tsv.overlap - oracle::chase(c, c.segments.front().id, label).overlap), 0, 1e-12);
        }
    }
}

TEST(Property, WorldsPartitionProbability) {
    std::mt19937_64 rng(1008);
    for (int i = 0; i < kCircuits; i++) {
        const auto state = propagate_exact(testing_support::random_circuit(rng));
        double total = 0;
        for (const auto &w : enumerate_worlds(state, 0)) {
            total += w.probability;
        }
        ASSERT_NEAR(total, 1, 1e-12);
    }
}

TEST(Property, TraceGraphCoversActiveTaps) {
    std::mt19937_64 rng(1009);
    for (int i = 0; i < kCircuits; i++) {
        const auto c = testing_support::random_circuit(rng);
        const auto g = build_trace_graph(c);
        const auto u = union_trace(propagate_exact(c));
        ASSERT_EQ(g.nodes.size(), u.strengths.size());
        // Any profile with matching keys is accepted.
        EXPECT_NO_THROW(detect_islands(u, g, 0));
    }
}
