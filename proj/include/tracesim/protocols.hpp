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

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "tracesim/circuit.hpp"
#include "tracesim/tsv_engine.hpp"
#include "tracesim/tuner.hpp"

namespace tracesim {

namespace detail {

/// Small helper for hand-laid circuits: explicit segments, one tap per segment.
struct SpecWriter {
    CircuitSpec spec;
    double epsilon = 0;

    explicit SpecWriter(std::size_t n_modes, std::size_t source, double eps) : epsilon(eps) {
        spec.n_modes = n_modes;
        spec.source = ModeId{source};
        spec.segments.emplace();
    }

    Layer &layer() { return spec.layers.emplace_back(); }
    std::size_t next_layer() const { return spec.layers.size(); }

    /// Tapped segment on `mode` starting at slot `from`; its end follows from element placement.
    void segment(std::string id, std::size_t mode, std::size_t from, std::string group = "") {
        spec.segments->push_back({id, ModeId{mode}, from, std::nullopt, std::move(group)});
        spec.taps.push_back({std::move(id), epsilon});
    }

    void detector(std::string label, std::size_t mode) { spec.detectors[std::move(label)] = ModeId{mode}; }

    Circuit build() const { return build_circuit(spec); }
};

inline BeamSplitter splitter(std::size_t a, std::size_t b, double theta = kPi / 4) { return {ModeId{a}, ModeId{b}, theta, 0}; }

}  // namespace detail

/// Mach-Zehnder interferometer with arms "left" (mode 0) and "right" (mode 1). extra_phase is a
/// free phase on the left arm; 0 sends all light to D_2.
inline Circuit mzi(double extra_phase = 0, double epsilon = 0) {
    detail::SpecWriter w(2, 0, epsilon);
    w.layer() = {detail::splitter(0, 1)};
    w.segment("left", 0, 1);
    w.segment("right", 1, 1);
    w.layer() = {Mirror{ModeId{0}}, Mirror{ModeId{1}}};
    w.layer() = {PhaseShift{ModeId{0}, extra_phase, "extra_phase"}};
    w.layer() = {detail::splitter(0, 1)};
    w.detector("D_1", 0);
    w.detector("D_2", 1);
    return w.build();
}

/// One 50:50 splitter with taps on both output paths.
inline Circuit single_splitter(double epsilon = 0) {
    detail::SpecWriter w(2, 0, epsilon);
    w.layer() = {detail::splitter(0, 1)};
    w.segment("to_D1", 0, 1);
    w.segment("to_D2", 1, 1);
    w.detector("D_1", 0);
    w.detector("D_2", 1);
    return w.build();
}

/// Two tuned interferometers sharing the middle splitter. The top one sends everything into
/// bottom_right; the bottom splitter then divides it between D_1 and D_2.
inline Circuit double_mzi(double epsilon = 0) {
    detail::SpecWriter w(2, 0, epsilon);
    w.layer() = {detail::splitter(0, 1)};
    w.segment("top_left", 0, 1);
    w.segment("top_right", 1, 1);
    w.layer() = {Mirror{ModeId{0}}, Mirror{ModeId{1}}};
    w.layer() = {detail::splitter(0, 1)};
    w.segment("bottom_left", 0, 3);
    w.segment("bottom_right", 1, 3);
    w.layer() = {Mirror{ModeId{0}}, Mirror{ModeId{1}}};
    w.layer() = {detail::splitter(0, 1)};
    w.detector("D_1", 0);
    w.detector("D_2", 1);
    return w.build();
}

enum class InnerTuning { Constructive, Destructive };

namespace detail {

/// Outer interferometer on modes 0 (arm C) and 1 (arm E), inner interferometer on modes 1 (B) and
/// 2 (A). The element placed on arm A at layer 2 is `bob`.
inline Circuit nested_layout(double theta_outer, double outer_phase, double inner_phase, const Element &bob, double epsilon,
                             const std::string &a_group) {
    SpecWriter w(3, 0, epsilon);
    w.layer() = {splitter(0, 1, theta_outer)};
    w.segment("E", 1, 1);
    w.layer() = {splitter(1, 2), PhaseShift{ModeId{0}, outer_phase, "outer_phase"}};
    w.segment("A", 2, 2, a_group);
    w.segment("B", 1, 2);
    w.segment("C", 0, 2);
    w.layer() = {PhaseShift{ModeId{1}, inner_phase, "inner_phase"}, bob};
    w.layer() = {splitter(1, 2)};
    w.segment("F", 1, 4);
    w.layer() = {splitter(0, 1)};
    w.detector("D_1", 0);
    w.detector("D_2", 1);
    w.detector("D_3", 2);
    return w.build();
}

}  // namespace detail

/// Nested interferometer. Destructive: the outer splitter sends 4/5 of the light into the inner
/// interferometer, which cancels towards the final splitter (F dark); D_1 and D_2 see 1/10 each.
/// Constructive: 50:50 outer splitter, inner interferometer passes everything on, all light at D_2.
inline Circuit nested_mzi(InnerTuning inner, double epsilon = 0) {
    if (inner == InnerTuning::Destructive) {
        return detail::nested_layout(std::atan(2.0), 0, 0, Mirror{ModeId{2}}, epsilon, "");
    }
    return detail::nested_layout(kPi / 4, kPi, kPi, Mirror{ModeId{2}}, epsilon, "");
}

/// Interaction-free measurement: the tuned interferometer with Bob's arm (mode 1) optionally blocked.
inline Circuit ifm(bool block, double epsilon = 0) {
    detail::SpecWriter w(2, 0, epsilon);
    w.layer() = {detail::splitter(0, 1)};
    w.segment("alice", 0, 1);
    w.segment("bob", 1, 1, "channel");
    w.layer() = {Mirror{ModeId{0}}, block ? Element{Block{ModeId{1}, "absorbed"}} : Element{Mirror{ModeId{1}}}};
    w.layer() = {PhaseShift{ModeId{0}, 0, "extra_phase"}};
    w.layer() = {detail::splitter(0, 1)};
    w.detector("D_1", 0);
    w.detector("D_2", 1);
    return w.build();
}

/// Seed used by the builders that call the tuner.
inline constexpr std::uint64_t kBuilderSeed = 2019;

/// Bit-0 transmission through the nested interferometer, Bob's channel being arm A. Tuned so that
/// F is dark without the block and D_1 is dark with it.
inline Circuit naive_bit0(bool block, double epsilon = 0) {
    const auto tmpl = detail::nested_layout(std::atan(2.0), 0, 0, Block{ModeId{2}, "absorbed"}, epsilon, "channel");
    const std::vector<TuningConstraint> constraints{
        TuningConstraint::weak_value_null("F", "D_1", BlockVariant::Unblocked),
        TuningConstraint::outcome_null("D_1", BlockVariant::AsBuilt),
    };
    const auto tuned = apply_phases(tmpl, tune(tmpl, constraints, {kBuilderSeed, 16}));
    return block ? tuned : unblocked(tuned);
}

/// Free phases of the double-sided-mirror template.
inline Circuit dsm_bit0_template(double epsilon = 0) {
    // Modes: a = 0 (Alice's main arm, D_1), r = 1 (reference arm C, D_2), c = 2, d = 3 (channel legs;
    // c ends at D_3, d ends dark). Bob's site is a double-sided mirror swapping c and d, with a
    // block in front of each face.
    detail::SpecWriter w(4, 0, epsilon);
    w.layer() = {detail::splitter(0, 1, kPi / 3)};
    w.segment("a0", 0, 1);
    w.layer() = {detail::splitter(0, 2), PhaseShift{ModeId{1}, 0, "ref_phase"}};
    w.segment("a1", 0, 2);
    w.segment("ch1_in", 2, 2, "channel");
    w.segment("C", 1, 2);
    w.layer() = {Block{ModeId{2}, "absorbed"}, PhaseShift{ModeId{0}, 0, "arm_phase"}};
    w.layer() = {DoubleSidedMirror{ModeId{2}, ModeId{3}}};
    w.segment("ch1_out", 3, 4, "channel");
    w.layer() = {detail::splitter(0, 3)};
    w.segment("a2", 0, 5);
    w.segment("ch2_in", 3, 5, "channel");
    w.layer() = {Block{ModeId{3}, "absorbed"}, PhaseShift{ModeId{0}, 0, "arm_phase2"}};
    w.layer() = {DoubleSidedMirror{ModeId{2}, ModeId{3}}};
    w.segment("ch2_out", 2, 7, "channel");
    w.layer() = {detail::splitter(0, 2)};
    w.layer() = {detail::splitter(0, 1, std::atan(1 / std::sqrt(24.0)))};
    w.detector("D_1", 0);
    w.detector("D_2", 1);
    w.detector("D_3", 2);
    return w.build();
}

/// The constraints dsm_bit0 is tuned against: D_1 dark with the blocks in place, and zero
/// first-order trace on every channel pass for D_1 clicks without them.
inline std::vector<TuningConstraint> dsm_bit0_constraints() {
    std::vector<TuningConstraint> out{TuningConstraint::outcome_null("D_1", BlockVariant::AsBuilt)};
    for (const char *id : {"ch1_in", "ch1_out", "ch2_in", "ch2_out"}) {
        out.push_back(TuningConstraint::weak_value_null(id, "D_1", BlockVariant::Unblocked));
    }
    return out;
}

/// Counterfactual bit 0: two nested interferometers joined at Bob's double-sided mirror.
inline Circuit dsm_bit0(bool block, double epsilon = 0) {
    const auto tmpl = dsm_bit0_template(epsilon);
    const auto tuned = apply_phases(tmpl, tune(tmpl, dsm_bit0_constraints(), {kBuilderSeed, 16}));
    const auto open = unblocked(tuned);
    // A tuning that also darkens D_1 without the block would transmit nothing.
    if (forward_outcome_distribution(open).at("D_1") <= kZeroProbability) {
        throw Error(ErrorCode::TuningFailed, "tuned template never fires D_1");
    }
    return block ? tuned : open;
}

struct ZenoParams {
    std::size_t N = 10;
    std::size_t M = 200;
    bool block = false;
    double epsilon = 0;
};

/// Chained Zeno protocol. Modes: 0 = Alice's outer arm (D_1), 1 = the arm feeding the channel (D_2),
/// 2 = the channel. Each outer cycle runs an inner chain of M small-angle splitters between modes
/// 1 and 2, every pass crossing the channel to Bob (mirror, or block when `block`); whatever is
/// left in the channel afterwards is dumped ("lost"). The outer splitter then rotates by pi/(2N).
inline Circuit zeno_chain(const ZenoParams &params) {
    if (params.N < 1 || params.M < 1) {
        throw Error(ErrorCode::InvalidParameter, "zeno_chain needs N >= 1 and M >= 1");
    }
    detail::SpecWriter w(3, 0, params.epsilon);
    const double inner = kPi / (2.0 * static_cast<double>(params.M));
    const double outer = kPi / (2.0 * static_cast<double>(params.N));
    for (std::size_t k = 0; k < params.N; k++) {
        for (std::size_t j = 0; j < params.M; j++) {
            w.layer() = {detail::splitter(1, 2, inner)};
            w.segment("ch" + std::to_string(k) + "." + std::to_string(j), 2, w.next_layer(), "channel");
            w.layer() = {params.block ? Element{Block{ModeId{2}, "absorbed"}} : Element{Mirror{ModeId{2}}}};
        }
        w.layer() = {Block{ModeId{2}, "lost"}, detail::splitter(0, 1, outer)};
    }
    w.detector("D_1", 0);
    w.detector("D_2", 1);
    return w.build();
}

}  // namespace tracesim
