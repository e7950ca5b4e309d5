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
#include <array>
#include <cmath>
#include <complex>
#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "tracesim/error.hpp"

namespace tracesim {

using Complex = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

/// Branch probabilities below this are treated as numerical zero and never reported as worlds.
inline constexpr double kNumericalZero = 1e-28;

/// Postselection probabilities at or below this count as impossible outcomes.
inline constexpr double kZeroProbability = 1e-24;

/// A spatial path mode. Indices are dense, 0..n_modes-1, and keep their meaning across layers.
struct ModeId {
    std::size_t index = 0;
    auto operator<=>(const ModeId &) const = default;
};

// ---------------------------------------------------------------------------
// Elements
// ---------------------------------------------------------------------------

/// Two-mode mixer. Acting on the amplitude column (a, b):
///     [[cos t, i e^{i phi} sin t], [i e^{-i phi} sin t, cos t]]
/// theta = pi/4 is the 50:50 splitter.
struct BeamSplitter {
    ModeId a;
    ModeId b;
    double theta = kPi / 4;
    double phi = 0;
    bool operator==(const BeamSplitter &) const = default;
};

/// Phase delay e^{i delta} on one mode. A non-empty `param` marks the phase as a free tuning knob.
struct PhaseShift {
    ModeId mode;
    double delta = 0;
    std::string param;
    bool operator==(const PhaseShift &) const = default;
};

struct Mirror {
    ModeId mode;
    bool operator==(const Mirror &) const = default;
};

/// Mirror reflecting on both faces. The beam arriving on `a` leaves on `b` and vice versa; the two
/// faces never mix amplitude.
struct DoubleSidedMirror {
    ModeId a;
    ModeId b;
    bool operator==(const DoubleSidedMirror &) const = default;
};

/// Absorber. Amplitude on `mode` is moved into a fresh sink coordinate whose outcome is `label`.
struct Block {
    ModeId mode;
    std::string label = "absorbed";
    bool operator==(const Block &) const = default;
};

/// Mid-circuit detector; same mechanics as a block, but the label names a detector outcome.
struct Detector {
    ModeId mode;
    std::string label;
    bool operator==(const Detector &) const = default;
};

/// Arbitrary two-mode linear map, row-major. Not guaranteed unitary; `validate` checks it.
struct LinearMap {
    ModeId a;
    ModeId b;
    std::array<Complex, 4> matrix{Complex{1}, Complex{0}, Complex{0}, Complex{1}};
    bool operator==(const LinearMap &) const = default;
};

using Element = std::variant<BeamSplitter, PhaseShift, Mirror, DoubleSidedMirror, Block, Detector, LinearMap>;
using Layer = std::vector<Element>;

/// Modes an element reads and writes, in matrix order.
inline std::vector<ModeId> element_modes(const Element &element) {
    return std::visit(
        [](const auto &e) -> std::vector<ModeId> {
            if constexpr (requires { e.a; }) {
                return {e.a, e.b};
            } else {
                return {e.mode};
            }
        },
        element);
}

/// True for elements that terminate the photon on their mode (blocks and mid-circuit detectors).
inline bool is_terminal_element(const Element &element) {
    return std::holds_alternative<Block>(element) || std::holds_alternative<Detector>(element);
}

inline std::string element_kind_name(const Element &element) {
    static constexpr std::array<const char *, 7> names{
        "beamsplitter", "phase", "mirror", "double_sided_mirror", "block", "detector", "linear"};
    return names[element.index()];
}

/// Matrix of an element on its affected coordinates.
///
/// Beamsplitters, phases, mirrors and double-sided mirrors act on their own modes. Blocks and
/// detectors act on (mode, sink): the returned 2x2 matrix exchanges the two coordinates, so amplitude
/// is routed into the (initially empty) sink and nothing is deleted.
inline Eigen::MatrixXcd element_unitary(const Element &element) {
    const Complex i{0, 1};
    return std::visit(
        [&](const auto &e) -> Eigen::MatrixXcd {
            using T = std::decay_t<decltype(e)>;
            Eigen::MatrixXcd m;
            if constexpr (std::is_same_v<T, BeamSplitter>) {
                const double c = std::cos(e.theta);
                const double s = std::sin(e.theta);
                m.resize(2, 2);
                m << c, i * std::polar(1.0, e.phi) * s, i * std::polar(1.0, -e.phi) * s, c;
            } else if constexpr (std::is_same_v<T, PhaseShift>) {
                m.resize(1, 1);
                m << std::polar(1.0, e.delta);
            } else if constexpr (std::is_same_v<T, Mirror>) {
                m = Eigen::MatrixXcd::Identity(1, 1);
            } else if constexpr (std::is_same_v<T, LinearMap>) {
                m.resize(2, 2);
                m << e.matrix[0], e.matrix[1], e.matrix[2], e.matrix[3];
            } else {
                // DoubleSidedMirror, Block, Detector: coordinate exchange.
                m.resize(2, 2);
                m << 0, 1, 1, 0;
            }
            return m;
        },
        element);
}

// ---------------------------------------------------------------------------
// Segments, taps, circuit
// ---------------------------------------------------------------------------

/// Half-open range of slots. Slot k is the free flight just before layer k; slot L (L = number of
/// layers) is the flight after the last layer, towards the detectors.
struct SlotRange {
    std::size_t begin = 0;
    std::size_t end = 0;
    bool contains(std::size_t slot) const { return begin <= slot && slot < end; }
    bool overlaps(const SlotRange &o) const { return begin < o.end && o.begin < end; }
    bool operator==(const SlotRange &) const = default;
};

/// A region of one mode where a photon can leave a trace. The trace is laid down once, at slot
/// `slots.begin`. `group` tags segments that belong together (e.g. every pass through a channel).
struct Segment {
    std::string id;
    ModeId mode;
    SlotRange slots;
    std::string group;
    bool operator==(const Segment &) const = default;
};

/// Weak local coupling of a segment to one environment qubit: |0> -> cos(e)|0> + sin(e)|1>.
struct Tap {
    std::string segment;
    double epsilon = 0;
    bool operator==(const Tap &) const = default;
};

/// Immutable after `build_circuit`; plain value, safe to copy and share across threads.
struct Circuit {
    std::size_t n_modes = 0;
    ModeId source;
    std::vector<Layer> layers;
    std::vector<Segment> segments;
    std::vector<Tap> taps;
    /// Detectors reading a mode after the last layer.
    std::map<std::string, ModeId> detectors;

    std::size_t n_layers() const { return layers.size(); }
    std::size_t n_slots() const { return layers.size() + 1; }

    const Segment *find_segment(std::string_view id) const {
        for (const auto &s : segments) {
            if (s.id == id) {
                return &s;
            }
        }
        return nullptr;
    }

    const Tap *find_tap(std::string_view segment_id) const {
        for (const auto &t : taps) {
            if (t.segment == segment_id) {
                return &t;
            }
        }
        return nullptr;
    }

    bool operator==(const Circuit &) const = default;
};

/// Coordinate layout of the photon: modes first, then one sink per block/detector element in
/// (layer, element) order. Each coordinate that ends the photon's life carries an outcome label.
struct Layout {
    std::size_t n_modes = 0;
    std::size_t n_positions = 0;
    /// Outcome label of each position; empty for modes that are not read by a final detector.
    std::vector<std::string> labels;
    /// sink position of element (layer, index), for terminal elements only.
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> sink_of;

    /// Positions carrying `label`, ascending.
    std::vector<std::size_t> positions_of(std::string_view label) const {
        std::vector<std::size_t> out;
        for (std::size_t p = 0; p < labels.size(); p++) {
            if (labels[p] == label) {
                out.push_back(p);
            }
        }
        return out;
    }

    /// Distinct outcome labels in first-position order.
    std::vector<std::string> outcome_labels() const {
        std::vector<std::string> out;
        for (const auto &l : labels) {
            if (!l.empty() && std::find(out.begin(), out.end(), l) == out.end()) {
                out.push_back(l);
            }
        }
        return out;
    }
};

inline Layout make_layout(const Circuit &circuit) {
    Layout layout;
    layout.n_modes = circuit.n_modes;
    layout.labels.assign(circuit.n_modes, "");
    for (const auto &[label, mode] : circuit.detectors) {
        if (mode.index < circuit.n_modes) {
            layout.labels[mode.index] = label;
        }
    }
    for (std::size_t k = 0; k < circuit.layers.size(); k++) {
        for (std::size_t e = 0; e < circuit.layers[k].size(); e++) {
            const auto &element = circuit.layers[k][e];
            if (const auto *b = std::get_if<Block>(&element)) {
                layout.sink_of[{k, e}] = layout.labels.size();
                layout.labels.push_back(b->label);
            } else if (const auto *d = std::get_if<Detector>(&element)) {
                layout.sink_of[{k, e}] = layout.labels.size();
                layout.labels.push_back(d->label);
            }
        }
    }
    layout.n_positions = layout.labels.size();
    return layout;
}

/// Flat view of one layer: each op acts on one or two photon positions.
struct LocalOp {
    std::size_t p = 0;
    std::size_t q = 0;
    bool two_mode = false;
    Complex m00{1}, m01{0}, m10{0}, m11{1};
};

inline std::vector<std::vector<LocalOp>> compile_layers(const Circuit &circuit, const Layout &layout) {
    std::vector<std::vector<LocalOp>> out(circuit.layers.size());
    for (std::size_t k = 0; k < circuit.layers.size(); k++) {
        for (std::size_t e = 0; e < circuit.layers[k].size(); e++) {
            const auto &element = circuit.layers[k][e];
            const auto modes = element_modes(element);
            const auto m = element_unitary(element);
            LocalOp op;
            op.p = modes[0].index;
            if (is_terminal_element(element)) {
                op.q = layout.sink_of.at({k, e});
                op.two_mode = true;
            } else if (modes.size() == 2) {
                op.q = modes[1].index;
                op.two_mode = true;
            }
            op.m00 = m(0, 0);
            if (op.two_mode) {
                op.m01 = m(0, 1);
                op.m10 = m(1, 0);
                op.m11 = m(1, 1);
            }
            out[k].push_back(op);
        }
    }
    return out;
}

/// Applies `op` to one block of amplitudes laid out as amp[position * stride + offset].
inline void apply_local_op(const LocalOp &op, Complex *amps, std::size_t stride, std::size_t offset) {
    Complex &x = amps[op.p * stride + offset];
    if (!op.two_mode) {
        x *= op.m00;
        return;
    }
    Complex &y = amps[op.q * stride + offset];
    const Complex nx = op.m00 * x + op.m01 * y;
    const Complex ny = op.m10 * x + op.m11 * y;
    x = nx;
    y = ny;
}

// ---------------------------------------------------------------------------
// Structural analysis
// ---------------------------------------------------------------------------

/// Below this magnitude a matrix entry is treated as structurally zero.
inline constexpr double kStructuralZero = 1e-12;

/// Which modes can carry amplitude in each slot, propagated from the source. live[slot][mode].
inline std::vector<std::vector<bool>> structural_liveness(const Circuit &circuit) {
    std::vector<std::vector<bool>> live(circuit.n_slots(), std::vector<bool>(circuit.n_modes, false));
    if (circuit.source.index < circuit.n_modes) {
        live[0][circuit.source.index] = true;
    }
    for (std::size_t k = 0; k < circuit.layers.size(); k++) {
        auto next = live[k];
        for (const auto &element : circuit.layers[k]) {
            const auto modes = element_modes(element);
            bool in_range = true;
            for (auto m : modes) {
                in_range = in_range && m.index < circuit.n_modes;
            }
            if (!in_range) {
                continue;
            }
            if (is_terminal_element(element)) {
                next[modes[0].index] = false;
                continue;
            }
            if (modes.size() != 2) {
                continue;
            }
            const auto m = element_unitary(element);
            const bool a = live[k][modes[0].index];
            const bool b = live[k][modes[1].index];
            next[modes[0].index] = (std::abs(m(0, 0)) > kStructuralZero && a) || (std::abs(m(0, 1)) > kStructuralZero && b);
            next[modes[1].index] = (std::abs(m(1, 0)) > kStructuralZero && a) || (std::abs(m(1, 1)) > kStructuralZero && b);
        }
        live[k + 1] = std::move(next);
    }
    return live;
}

/// For each mode, the layers whose elements touch it, ascending.
inline std::vector<std::vector<std::size_t>> touching_layers(const Circuit &circuit) {
    std::vector<std::vector<std::size_t>> touch(circuit.n_modes);
    for (std::size_t k = 0; k < circuit.layers.size(); k++) {
        for (const auto &element : circuit.layers[k]) {
            for (auto m : element_modes(element)) {
                if (m.index < circuit.n_modes && (touch[m.index].empty() || touch[m.index].back() != k)) {
                    touch[m.index].push_back(k);
                }
            }
        }
    }
    return touch;
}

/// End slot of the free flight on `mode` that contains slot `begin`.
inline std::size_t free_flight_end(const std::vector<std::size_t> &touch, std::size_t begin, std::size_t n_layers) {
    auto it = std::lower_bound(touch.begin(), touch.end(), begin);
    return it == touch.end() ? n_layers + 1 : *it + 1;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

enum class DiagnosticKind {
    UnknownMode,
    ModeConflictInLayer,
    NonIsometricLayer,
    DuplicateSegmentId,
    SegmentOutOfRange,
    OverlappingSegments,
    SegmentSpansElement,
    UnknownSegment,
    DuplicateTap,
    InvalidEpsilon,
    DuplicateDetectorLabel,
    DetectorModeConflict,
    LabelCollision,
    DanglingMode,
};

inline std::string_view diagnostic_kind_name(DiagnosticKind kind) {
    switch (kind) {
        case DiagnosticKind::UnknownMode: return "UnknownMode";
        case DiagnosticKind::ModeConflictInLayer: return "ModeConflictInLayer";
        case DiagnosticKind::NonIsometricLayer: return "NonIsometricLayer";
        case DiagnosticKind::DuplicateSegmentId: return "DuplicateSegmentId";
        case DiagnosticKind::SegmentOutOfRange: return "SegmentOutOfRange";
        case DiagnosticKind::OverlappingSegments: return "OverlappingSegments";
        case DiagnosticKind::SegmentSpansElement: return "SegmentSpansElement";
        case DiagnosticKind::UnknownSegment: return "UnknownSegment";
        case DiagnosticKind::DuplicateTap: return "DuplicateTap";
        case DiagnosticKind::InvalidEpsilon: return "InvalidEpsilon";
        case DiagnosticKind::DuplicateDetectorLabel: return "DuplicateDetectorLabel";
        case DiagnosticKind::DetectorModeConflict: return "DetectorModeConflict";
        case DiagnosticKind::LabelCollision: return "LabelCollision";
        case DiagnosticKind::DanglingMode: return "DanglingMode";
    }
    return "Unknown";
}

struct Diagnostic {
    DiagnosticKind kind;
    /// Where: "layer=3", "segment=A", "mode=2", ...
    std::string location;
    std::string message;
    bool operator==(const Diagnostic &) const = default;
};

inline std::vector<Diagnostic> validate(const Circuit &circuit) {
    std::vector<Diagnostic> out;
    auto report = [&](DiagnosticKind kind, std::string location, std::string message) {
        out.push_back({kind, std::move(location), std::move(message)});
    };
    const std::size_t n = circuit.n_modes;

    if (circuit.source.index >= n) {
        report(DiagnosticKind::UnknownMode, "source", "source mode " + std::to_string(circuit.source.index) + " out of range");
    }

    bool modes_ok = true;
    for (std::size_t k = 0; k < circuit.layers.size(); k++) {
        std::set<std::size_t> used;
        for (const auto &element : circuit.layers[k]) {
            const auto modes = element_modes(element);
            for (auto m : modes) {
                if (m.index >= n) {
                    modes_ok = false;
                    report(DiagnosticKind::UnknownMode, "layer=" + std::to_string(k),
                           element_kind_name(element) + " references mode " + std::to_string(m.index));
                } else if (!used.insert(m.index).second) {
                    report(DiagnosticKind::ModeConflictInLayer, "layer=" + std::to_string(k),
                           "mode " + std::to_string(m.index) + " is acted on twice");
                }
            }
            if (modes.size() == 2 && modes[0] == modes[1]) {
                report(DiagnosticKind::ModeConflictInLayer, "layer=" + std::to_string(k),
                       element_kind_name(element) + " uses mode " + std::to_string(modes[0].index) + " twice");
            }
            const auto m = element_unitary(element);
            const auto gram = (m.adjoint() * m).eval();
            const auto dual = (m * m.adjoint()).eval();
            const auto id = Eigen::MatrixXcd::Identity(m.rows(), m.cols());
            if ((gram - id).cwiseAbs().maxCoeff() > 1e-12 || (dual - id).cwiseAbs().maxCoeff() > 1e-12) {
                report(DiagnosticKind::NonIsometricLayer, "layer=" + std::to_string(k),
                       element_kind_name(element) + " is not norm preserving");
            }
        }
    }

    for (const auto &[label, mode] : circuit.detectors) {
        if (mode.index >= n) {
            modes_ok = false;
            report(DiagnosticKind::UnknownMode, "detector=" + label, "detector reads mode " + std::to_string(mode.index));
        }
    }

    // Segments.
    std::set<std::string> seen_ids;
    const auto touch = modes_ok ? touching_layers(circuit) : std::vector<std::vector<std::size_t>>{};
    std::map<std::size_t, std::vector<const Segment *>> by_mode;
    for (const auto &s : circuit.segments) {
        if (!seen_ids.insert(s.id).second) {
            report(DiagnosticKind::DuplicateSegmentId, "segment=" + s.id, "segment id declared twice");
        }
        if (s.mode.index >= n) {
            modes_ok = false;
            report(DiagnosticKind::UnknownMode, "segment=" + s.id, "segment on mode " + std::to_string(s.mode.index));
            continue;
        }
        if (s.slots.begin >= s.slots.end || s.slots.end > circuit.n_slots()) {
            report(DiagnosticKind::SegmentOutOfRange, "segment=" + s.id, "slot range is empty or past the last slot");
            continue;
        }
        by_mode[s.mode.index].push_back(&s);
        if (!touch.empty()) {
            const auto &t = touch[s.mode.index];
            auto it = std::lower_bound(t.begin(), t.end(), s.slots.begin);
            if (it != t.end() && *it + 1 < s.slots.end) {
                report(DiagnosticKind::SegmentSpansElement, "segment=" + s.id,
                       "an element at layer " + std::to_string(*it) + " acts inside the segment");
            }
        }
    }
    for (auto &[mode, list] : by_mode) {
        std::stable_sort(list.begin(), list.end(), [](const Segment *x, const Segment *y) { return x->slots.begin < y->slots.begin; });
        const Segment *reach = nullptr;  // segment reaching furthest so far
        for (const auto *seg : list) {
            if (reach != nullptr && reach->slots.overlaps(seg->slots)) {
                report(DiagnosticKind::OverlappingSegments, "segment=" + reach->id, "overlaps segment " + seg->id);
            }
            if (reach == nullptr || seg->slots.end > reach->slots.end) {
                reach = seg;
            }
        }
    }

    // Taps.
    std::set<std::string> tapped;
    for (const auto &t : circuit.taps) {
        if (seen_ids.count(t.segment) == 0) {
            report(DiagnosticKind::UnknownSegment, "tap=" + t.segment, "tap references a missing segment");
        }
        if (!tapped.insert(t.segment).second) {
            report(DiagnosticKind::DuplicateTap, "segment=" + t.segment, "segment carries more than one tap");
        }
        if (!std::isfinite(t.epsilon) || t.epsilon < 0) {
            report(DiagnosticKind::InvalidEpsilon, "tap=" + t.segment, "coupling must be finite and non-negative");
        }
    }

    // Outcomes.
    std::map<std::size_t, std::string> mode_owner;
    for (const auto &[label, mode] : circuit.detectors) {
        auto [it, fresh] = mode_owner.emplace(mode.index, label);
        if (!fresh) {
            report(DiagnosticKind::DetectorModeConflict, "detector=" + label, "mode already read by " + it->second);
        }
    }
    std::set<std::string> detector_labels;
    for (const auto &[label, mode] : circuit.detectors) {
        detector_labels.insert(label);
    }
    std::set<std::string> block_labels;
    for (const auto &layer : circuit.layers) {
        for (const auto &element : layer) {
            if (const auto *d = std::get_if<Detector>(&element)) {
                if (!detector_labels.insert(d->label).second) {
                    report(DiagnosticKind::DuplicateDetectorLabel, "detector=" + d->label, "detector label used twice");
                }
            } else if (const auto *b = std::get_if<Block>(&element)) {
                block_labels.insert(b->label);
            }
        }
    }
    for (const auto &label : block_labels) {
        if (detector_labels.count(label) != 0) {
            report(DiagnosticKind::LabelCollision, "block=" + label, "block sink label equals a detector label");
        }
    }

    if (modes_ok && circuit.source.index < n) {
        const auto live = structural_liveness(circuit);
        for (std::size_t m = 0; m < n; m++) {
            if (live.back()[m] && mode_owner.count(m) == 0) {
                report(DiagnosticKind::DanglingMode, "mode=" + std::to_string(m), "mode can carry the photon but has no detector");
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

struct SegmentSpec {
    std::string id;
    ModeId mode;
    std::size_t begin = 0;
    /// Derived from element placement when empty: the segment runs to the next element on its mode.
    std::optional<std::size_t> end;
    std::string group;
};

/// Structural description, before derivation and validation.
struct CircuitSpec {
    std::size_t n_modes = 0;
    ModeId source;
    std::vector<Layer> layers;
    /// When empty, one segment is derived for every free flight that follows an element.
    std::optional<std::vector<SegmentSpec>> segments;
    std::vector<Tap> taps;
    std::map<std::string, ModeId> detectors;
};

inline ErrorCode error_code_for(DiagnosticKind kind) {
    switch (kind) {
        case DiagnosticKind::UnknownMode: return ErrorCode::UnknownMode;
        case DiagnosticKind::OverlappingSegments: return ErrorCode::OverlappingSegments;
        case DiagnosticKind::DanglingMode: return ErrorCode::DanglingMode;
        case DiagnosticKind::DuplicateDetectorLabel: return ErrorCode::DuplicateDetectorLabel;
        case DiagnosticKind::DuplicateTap: return ErrorCode::DuplicateTap;
        case DiagnosticKind::UnknownSegment: return ErrorCode::UnknownSegment;
        default: return ErrorCode::InvalidCircuit;
    }
}

/// Auto-derived segments: one per (mode, free flight) right after an element that leaves the mode
/// able to carry the photon. Ids are "m<mode>@<slot>".
inline std::vector<Segment> derive_segments(const Circuit &circuit) {
    std::vector<Segment> out;
    const auto touch = touching_layers(circuit);
    const auto live = structural_liveness(circuit);
    for (std::size_t m = 0; m < circuit.n_modes; m++) {
        for (auto k : touch[m]) {
            const std::size_t begin = k + 1;
            if (!live[begin][m]) {
                continue;
            }
            out.push_back({"m" + std::to_string(m) + "@" + std::to_string(begin), ModeId{m},
                           SlotRange{begin, free_flight_end(touch[m], begin, circuit.n_layers())}, ""});
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const Segment &x, const Segment &y) {
        return std::tie(x.slots.begin, x.mode) < std::tie(y.slots.begin, y.mode);
    });
    return out;
}

/// Builds and validates a circuit; throws tracesim::Error on the first violated invariant.
inline Circuit build_circuit(const CircuitSpec &spec) {
    Circuit circuit;
    circuit.n_modes = spec.n_modes;
    circuit.source = spec.source;
    circuit.layers = spec.layers;
    circuit.taps = spec.taps;
    circuit.detectors = spec.detectors;

    // Mode references must be sane before segment derivation can look at them.
    for (const auto &d : validate(circuit)) {
        if (d.kind == DiagnosticKind::UnknownMode) {
            throw Error(ErrorCode::UnknownMode, d.location + ": " + d.message);
        }
    }
    if (spec.segments) {
        const auto touch = touching_layers(circuit);
        for (const auto &s : *spec.segments) {
            if (s.mode.index >= circuit.n_modes) {
                throw Error(ErrorCode::UnknownMode, "segment " + s.id + " on mode " + std::to_string(s.mode.index));
            }
            const std::size_t end = s.end ? *s.end : free_flight_end(touch[s.mode.index], s.begin, circuit.n_layers());
            circuit.segments.push_back({s.id, s.mode, SlotRange{s.begin, end}, s.group});
        }
    } else {
        circuit.segments = derive_segments(circuit);
    }
    const auto diagnostics = validate(circuit);
    if (!diagnostics.empty()) {
        const auto &d = diagnostics.front();
        throw Error(error_code_for(d.kind), d.location + ": " + d.message);
    }
    return circuit;
}

/// Copy of `circuit` with every tap set to `epsilon`.
inline Circuit with_uniform_epsilon(Circuit circuit, double epsilon) {
    for (auto &t : circuit.taps) {
        t.epsilon = epsilon;
    }
    return circuit;
}

/// Copy of `circuit` with the listed taps overridden; unknown ids throw UnknownSegment.
inline Circuit with_epsilons(Circuit circuit, const std::map<std::string, double> &epsilons) {
    for (const auto &[id, eps] : epsilons) {
        auto it = std::find_if(circuit.taps.begin(), circuit.taps.end(), [&](const Tap &t) { return t.segment == id; });
        if (it == circuit.taps.end()) {
            throw Error(ErrorCode::UnknownSegment, "no tap on segment " + id);
        }
        it->epsilon = eps;
    }
    return circuit;
}

/// Copy of `circuit` with every block carrying `label` replaced by a plain mirror (the "no block"
/// configuration). Other sinks, e.g. loss dumps, stay.
inline Circuit unblocked(Circuit circuit, const std::string &label = "absorbed") {
    for (auto &layer : circuit.layers) {
        for (auto &element : layer) {
            if (const auto *b = std::get_if<Block>(&element); b != nullptr && b->label == label) {
                element = Mirror{b->mode};
            }
        }
    }
    return circuit;
}

}  // namespace tracesim
