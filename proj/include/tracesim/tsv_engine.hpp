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

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "tracesim/circuit.hpp"

namespace tracesim {

/// Pre- and postselected description of the photon at epsilon = 0.
struct TwoStateVector {
    std::string postselect;
    /// Segment ids in circuit order.
    std::vector<std::string> segments;
    /// Segment id -> group tag (empty when ungrouped).
    std::map<std::string, std::string> groups;
    /// psi_s: source-evolved amplitude on the segment's mode at its first slot.
    std::map<std::string, Complex> forward;
    /// phi_s: postselection state evolved backwards to the same slot.
    std::map<std::string, Complex> backward;
    /// <phi|psi>, taken at the source slot.
    Complex overlap;
    /// <phi|psi> at checkpoint slots (slot, value); constant up to rounding.
    std::vector<std::pair<std::size_t, Complex>> overlap_trace;
    /// conj(phi) * psi of every sink coordinate, keyed by position.
    std::map<std::size_t, Complex> sink_numerators;
    /// Final source-evolved amplitudes on every position.
    std::vector<Complex> final_forward;
    Layout layout;
};

namespace detail {

inline void apply_adjoint_op(const LocalOp &op, Complex *amps) {
    Complex &x = amps[op.p];
    if (!op.two_mode) {
        x *= std::conj(op.m00);
        return;
    }
    Complex &y = amps[op.q];
    const Complex nx = std::conj(op.m00) * x + std::conj(op.m10) * y;
    const Complex ny = std::conj(op.m01) * x + std::conj(op.m11) * y;
    x = nx;
    y = ny;
}

inline Complex inner(const std::vector<Complex> &phi, const std::vector<Complex> &psi) {
    Complex total{0};
    for (std::size_t i = 0; i < phi.size(); i++) {
        total += std::conj(phi[i]) * psi[i];
    }
    return total;
}

/// Never throws on zero overlap; tuner residuals need the raw numerators.
inline TwoStateVector two_state_unchecked(const Circuit &circuit, const std::string &postselect) {
    TwoStateVector tsv;
    tsv.postselect = postselect;
    tsv.layout = make_layout(circuit);
    const auto &layout = tsv.layout;
    const auto positions = layout.positions_of(postselect);
    if (postselect.empty() || positions.empty()) {
        throw Error(ErrorCode::UnknownOutcome, "no terminal outcome named \"" + postselect + "\"");
    }
    if (positions.size() > 1) {
        throw Error(ErrorCode::MixedPostselection,
                    "outcome \"" + postselect + "\" spans " + std::to_string(positions.size()) + " coordinates; no single backward state");
    }
    const auto ops = compile_layers(circuit, layout);
    const std::size_t n_slots = circuit.n_slots();

    // Segments indexed by their firing slot.
    std::vector<std::vector<const Segment *>> at_slot(n_slots);
    for (const auto &s : circuit.segments) {
        tsv.segments.push_back(s.id);
        tsv.groups[s.id] = s.group;
        at_slot[s.slots.begin].push_back(&s);
    }

    // Keep a bounded number of full snapshots for the overlap check.
    const std::size_t stride = std::max<std::size_t>(1, n_slots / 64);
    auto is_checkpoint = [&](std::size_t slot) { return slot % stride == 0 || slot + 1 == n_slots; };
    std::map<std::size_t, std::vector<Complex>> snapshots;

    std::vector<Complex> psi(layout.n_positions, Complex{0});
    psi[circuit.source.index] = 1;
    for (std::size_t slot = 0; slot < n_slots; slot++) {
        for (const auto *s : at_slot[slot]) {
            tsv.forward[s->id] = psi[s->mode.index];
        }
        if (is_checkpoint(slot)) {
            snapshots[slot] = psi;
        }
        if (slot < circuit.n_layers()) {
            for (const auto &op : ops[slot]) {
                apply_local_op(op, psi.data(), 1, 0);
            }
        }
    }
    tsv.final_forward = psi;

    std::vector<Complex> phi(layout.n_positions, Complex{0});
    phi[positions.front()] = 1;
    for (std::size_t p = circuit.n_modes; p < layout.n_positions; p++) {
        tsv.sink_numerators[p] = std::conj(phi[p]) * psi[p];
    }
    for (std::size_t slot = n_slots; slot-- > 0;) {
        if (slot < circuit.n_layers()) {
            for (const auto &op : ops[slot]) {
                apply_adjoint_op(op, phi.data());
            }
        }
        for (const auto *s : at_slot[slot]) {
            tsv.backward[s->id] = phi[s->mode.index];
        }
        if (auto it = snapshots.find(slot); it != snapshots.end()) {
            tsv.overlap_trace.emplace_back(slot, inner(phi, it->second));
        }
    }
    std::reverse(tsv.overlap_trace.begin(), tsv.overlap_trace.end());
    tsv.overlap = std::conj(phi[circuit.source.index]);
    return tsv;
}

}  // namespace detail

/// Forward and backward amplitudes on every segment for postselection on a single terminal
/// coordinate. Taps play no role.
inline TwoStateVector forward_backward(const Circuit &circuit, const std::string &postselect) {
    auto tsv = detail::two_state_unchecked(circuit, postselect);
    if (std::norm(tsv.overlap) <= kZeroProbability) {
        throw Error(ErrorCode::UnreachableOutcome, "outcome \"" + postselect + "\" cannot be reached from the source");
    }
    return tsv;
}

/// w_s = conj(phi_s) psi_s / <phi|psi> for every segment.
inline std::map<std::string, Complex> weak_values(const TwoStateVector &tsv) {
    if (std::norm(tsv.overlap) <= kZeroProbability) {
        throw Error(ErrorCode::ZeroOverlap, "two-state vector has zero overlap");
    }
    std::map<std::string, Complex> out;
    for (const auto &id : tsv.segments) {
        out[id] = std::conj(tsv.backward.at(id)) * tsv.forward.at(id) / tsv.overlap;
    }
    return out;
}

/// Perturbative trace orders. first_order = eps |w|, second_order = eps^2 |psi|^2.
struct WeakTracePrediction {
    std::map<std::string, double> first_order;
    std::map<std::string, double> second_order;
    /// Sums over segments sharing a group tag (e.g. every pass through a channel).
    std::map<std::string, double> group_first_order;
    std::map<std::string, double> group_second_order;

    /// Leading-order estimate of the exact postselected flip probability, (eps |w|)^2.
    double predicted_flip(const std::string &segment) const {
        const double f = first_order.at(segment);
        return f * f;
    }
};

inline WeakTracePrediction weak_trace(const TwoStateVector &tsv, const std::map<std::string, double> &epsilons) {
    const auto w = weak_values(tsv);
    WeakTracePrediction out;
    for (const auto &[id, eps] : epsilons) {
        auto it = w.find(id);
        if (it == w.end()) {
            throw Error(ErrorCode::UnknownSegment, "no segment " + id);
        }
        const double first = eps * std::abs(it->second);
        const double second = eps * eps * std::norm(tsv.forward.at(id));
        out.first_order[id] = first;
        out.second_order[id] = second;
        const auto &group = tsv.groups.at(id);
        if (!group.empty()) {
            out.group_first_order[group] += first;
            out.group_second_order[group] += second;
        }
    }
    return out;
}

/// Tap couplings of a circuit keyed by segment.
inline std::map<std::string, double> tap_epsilons(const Circuit &circuit) {
    std::map<std::string, double> out;
    for (const auto &t : circuit.taps) {
        out[t.segment] = t.epsilon;
    }
    return out;
}

/// A set of segments, plus the sinks filled so far, that every amplitude path crosses exactly once.
struct CompleteCut {
    std::size_t slot = 0;
    std::vector<std::string> segments;
    /// Sinks occupy positions [n_modes, n_modes + filled_sinks) at this slot.
    std::size_t filled_sinks = 0;
};

/// Slot cuts: for each slot, every structurally live mode must lie inside a segment covering that
/// slot. Throws NoCompleteCut when no slot qualifies.
inline std::vector<CompleteCut> complete_cuts(const Circuit &circuit) {
    const auto live = structural_liveness(circuit);
    std::vector<std::vector<const Segment *>> by_mode(circuit.n_modes);
    for (const auto &s : circuit.segments) {
        by_mode[s.mode.index].push_back(&s);
    }
    for (auto &list : by_mode) {
        std::sort(list.begin(), list.end(), [](const Segment *x, const Segment *y) { return x->slots.begin < y->slots.begin; });
    }
    auto cover = [&](std::size_t mode, std::size_t slot) -> const Segment * {
        const auto &list = by_mode[mode];
        auto it = std::upper_bound(list.begin(), list.end(), slot, [](std::size_t v, const Segment *s) { return v < s->slots.begin; });
        if (it == list.begin()) {
            return nullptr;
        }
        --it;
        return (*it)->slots.contains(slot) ? *it : nullptr;
    };

    std::vector<CompleteCut> out;
    std::size_t filled = 0;
    for (std::size_t slot = 0; slot < circuit.n_slots(); slot++) {
        if (slot > 0) {
            for (const auto &element : circuit.layers[slot - 1]) {
                filled += is_terminal_element(element) ? 1 : 0;
            }
        }
        CompleteCut cut{slot, {}, filled};
        bool complete = true;
        for (std::size_t m = 0; m < circuit.n_modes && complete; m++) {
            if (!live[slot][m]) {
                continue;
            }
            const Segment *s = cover(m, slot);
            if (s == nullptr) {
                complete = false;
            } else {
                cut.segments.push_back(s->id);
            }
        }
        if (complete && !cut.segments.empty()) {
            out.push_back(std::move(cut));
        }
    }
    if (out.empty()) {
        throw Error(ErrorCode::NoCompleteCut, "no slot is fully covered by segments");
    }
    return out;
}

/// Sum of weak values over a cut, sinks included.
inline Complex cut_weak_value_sum(const TwoStateVector &tsv, const CompleteCut &cut) {
    const auto w = weak_values(tsv);
    Complex total{0};
    for (const auto &id : cut.segments) {
        total += w.at(id);
    }
    for (std::size_t k = 0; k < cut.filled_sinks; k++) {
        total += tsv.sink_numerators.at(tsv.layout.n_modes + k) / tsv.overlap;
    }
    return total;
}

/// Sum of weak values over a user-declared list of segments.
inline Complex cut_weak_value_sum(const TwoStateVector &tsv, const std::vector<std::string> &segments) {
    const auto w = weak_values(tsv);
    Complex total{0};
    for (const auto &id : segments) {
        auto it = w.find(id);
        if (it == w.end()) {
            throw Error(ErrorCode::UnknownSegment, "no segment " + id);
        }
        total += it->second;
    }
    return total;
}

/// Terminal outcome probabilities from source evolution alone (taps ignored). Scales to circuits far
/// beyond the exact engine's tap cap.
inline std::map<std::string, double> forward_outcome_distribution(const Circuit &circuit) {
    const auto layout = make_layout(circuit);
    const auto ops = compile_layers(circuit, layout);
    std::vector<Complex> psi(layout.n_positions, Complex{0});
    psi[circuit.source.index] = 1;
    for (const auto &layer : ops) {
        for (const auto &op : layer) {
            apply_local_op(op, psi.data(), 1, 0);
        }
    }
    std::map<std::string, double> out;
    for (std::size_t p = 0; p < layout.n_positions; p++) {
        if (!layout.labels[p].empty()) {
            out[layout.labels[p]] += std::norm(psi[p]);
        }
    }
    return out;
}

}  // namespace tracesim
