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
#include <tuple>
#include <vector>

#include "tracesim/circuit.hpp"

namespace tracesim {

struct ExactOptions {
    /// Maximum number of active (epsilon != 0) taps. The state has (positions) * 2^taps entries.
    std::size_t max_taps = 20;
};

/// Final joint photon/environment state. Entry (position, env) lives at position * 2^T + env,
/// where bit t of env is the record of active tap t.
class JointState {
   public:
    JointState(Layout layout, std::vector<Tap> taps, std::vector<std::size_t> active, std::vector<Complex> amplitudes,
               std::vector<double> layer_norms)
        : layout_(std::move(layout)),
          taps_(std::move(taps)),
          active_(std::move(active)),
          amplitudes_(std::move(amplitudes)),
          layer_norms_(std::move(layer_norms)) {}

    const Layout &layout() const { return layout_; }
    /// Every tap of the circuit, in declaration order.
    const std::vector<Tap> &taps() const { return taps_; }
    /// Indices into taps() of the taps that carry an environment qubit (epsilon != 0).
    const std::vector<std::size_t> &active_taps() const { return active_; }
    std::size_t n_active() const { return active_.size(); }
    std::size_t env_dim() const { return std::size_t{1} << active_.size(); }
    std::size_t dimension() const { return amplitudes_.size(); }
    const std::vector<Complex> &amplitudes() const { return amplitudes_; }
    Complex amplitude(std::size_t position, std::size_t env) const { return amplitudes_[position * env_dim() + env]; }
    /// Squared norm after the initial state and after each slot's taps and layer.
    const std::vector<double> &layer_norms() const { return layer_norms_; }

    double norm_squared() const {
        double total = 0;
        for (const auto &a : amplitudes_) {
            total += std::norm(a);
        }
        return total;
    }

    /// Record over all circuit taps as a bitstring; inactive taps always read '0'.
    std::string env_record(std::size_t env) const {
        std::string out(taps_.size(), '0');
        for (std::size_t t = 0; t < active_.size(); t++) {
            if ((env >> t) & 1) {
                out[active_[t]] = '1';
            }
        }
        return out;
    }

   private:
    Layout layout_;
    std::vector<Tap> taps_;
    std::vector<std::size_t> active_;
    std::vector<Complex> amplitudes_;
    std::vector<double> layer_norms_;
};

inline JointState propagate_exact(const Circuit &circuit, const ExactOptions &options = {}) {
    auto layout = make_layout(circuit);
    const auto ops = compile_layers(circuit, layout);

    std::vector<std::size_t> active;
    for (std::size_t t = 0; t < circuit.taps.size(); t++) {
        if (circuit.taps[t].epsilon != 0) {
            active.push_back(t);
        }
    }
    if (active.size() > options.max_taps) {
        throw Error(ErrorCode::TooManyTaps, std::to_string(active.size()) + " active taps exceed the exact-engine cap of " +
                                                std::to_string(options.max_taps));
    }

    struct Firing {
        std::size_t mode;
        std::size_t bit;
        double c;
        double s;
    };
    std::vector<std::vector<Firing>> fires(circuit.n_slots());
    for (std::size_t t = 0; t < active.size(); t++) {
        const auto &tap = circuit.taps[active[t]];
        const auto *seg = circuit.find_segment(tap.segment);
        if (seg == nullptr) {
            throw Error(ErrorCode::UnknownSegment, "tap on missing segment " + tap.segment);
        }
        fires[seg->slots.begin].push_back({seg->mode.index, t, std::cos(tap.epsilon), std::sin(tap.epsilon)});
    }

    const std::size_t env_dim = std::size_t{1} << active.size();
    std::vector<Complex> amps(layout.n_positions * env_dim, Complex{0});
    amps[circuit.source.index * env_dim] = 1;

    std::vector<double> norms;
    auto record_norm = [&] {
        double total = 0;
        for (const auto &a : amps) {
            total += std::norm(a);
        }
        norms.push_back(total);
    };
    record_norm();

    for (std::size_t slot = 0; slot < circuit.n_slots(); slot++) {
        for (const auto &f : fires[slot]) {
            const std::size_t mask = std::size_t{1} << f.bit;
            Complex *row = amps.data() + f.mode * env_dim;
            for (std::size_t env = 0; env < env_dim; env++) {
                if (env & mask) {
                    continue;
                }
                const Complex x0 = row[env];
                const Complex x1 = row[env | mask];
                row[env] = f.c * x0 - f.s * x1;
                row[env | mask] = f.s * x0 + f.c * x1;
            }
        }
        if (slot < circuit.n_layers()) {
            for (const auto &op : ops[slot]) {
                for (std::size_t env = 0; env < env_dim; env++) {
                    apply_local_op(op, amps.data(), env_dim, env);
                }
            }
        }
        record_norm();
    }
    return JointState(std::move(layout), circuit.taps, std::move(active), std::move(amps), std::move(norms));
}

/// Probability of every terminal outcome label (detectors and sinks), including zero entries.
inline std::map<std::string, double> outcome_distribution(const JointState &state) {
    std::map<std::string, double> out;
    const auto &layout = state.layout();
    for (std::size_t p = 0; p < layout.n_positions; p++) {
        const auto &label = layout.labels[p];
        if (label.empty()) {
            continue;
        }
        double total = 0;
        for (std::size_t env = 0; env < state.env_dim(); env++) {
            total += std::norm(state.amplitude(p, env));
        }
        out[label] += total;
    }
    return out;
}

/// Per-segment trace strengths and the conditioning that produced them.
struct TraceProfile {
    /// "union" or "postselected:<label>".
    std::string context;
    /// Segment id -> strength. Only segments with an active tap appear.
    std::map<std::string, double> strengths;

    double at(const std::string &segment) const {
        auto it = strengths.find(segment);
        return it == strengths.end() ? 0.0 : it->second;
    }
};

struct PostselectedTrace {
    TraceProfile profile;
    double probability = 0;
};

namespace detail {

/// Flip probability of every active tap restricted to `positions` (unnormalized).
inline std::vector<double> flip_mass(const JointState &state, const std::vector<std::size_t> &positions) {
    std::vector<double> mass(state.n_active(), 0.0);
    for (auto p : positions) {
        for (std::size_t env = 0; env < state.env_dim(); env++) {
            const double w = std::norm(state.amplitude(p, env));
            if (w == 0) {
                continue;
            }
            for (std::size_t t = 0; t < state.n_active(); t++) {
                if ((env >> t) & 1) {
                    mass[t] += w;
                }
            }
        }
    }
    return mass;
}

inline std::vector<std::size_t> labelled_positions(const JointState &state, const std::string &label) {
    auto positions = state.layout().positions_of(label);
    if (label.empty() || positions.empty()) {
        throw Error(ErrorCode::UnknownOutcome, "no terminal outcome named \"" + label + "\"");
    }
    return positions;
}

}  // namespace detail

/// Conditions the state on `outcome` (every coordinate carrying that label) and reports, for each
/// active tap, the conditional probability that its qubit reads 1.
inline PostselectedTrace postselect_trace(const JointState &state, const std::string &outcome) {
    const auto positions = detail::labelled_positions(state, outcome);
    double probability = 0;
    for (auto p : positions) {
        for (std::size_t env = 0; env < state.env_dim(); env++) {
            probability += std::norm(state.amplitude(p, env));
        }
    }
    if (probability <= kZeroProbability) {
        throw Error(ErrorCode::ZeroProbabilityOutcome, "outcome \"" + outcome + "\" has probability " + std::to_string(probability));
    }
    const auto mass = detail::flip_mass(state, positions);
    PostselectedTrace out;
    out.probability = probability;
    out.profile.context = "postselected:" + outcome;
    for (std::size_t t = 0; t < state.n_active(); t++) {
        out.profile.strengths[state.taps()[state.active_taps()[t]].segment] = mass[t] / probability;
    }
    return out;
}

/// Unconditional flip probability of every active tap: the trace of all worlds together.
inline TraceProfile union_trace(const JointState &state) {
    std::vector<std::size_t> all(state.layout().n_positions);
    for (std::size_t p = 0; p < all.size(); p++) {
        all[p] = p;
    }
    const auto mass = detail::flip_mass(state, all);
    TraceProfile out;
    out.context = "union";
    for (std::size_t t = 0; t < state.n_active(); t++) {
        out.strengths[state.taps()[state.active_taps()[t]].segment] = mass[t];
    }
    return out;
}

/// One term of the final state: a terminal coordinate together with an environment record.
struct WorldBranch {
    std::string outcome;
    /// Photon coordinate; distinguishes sinks that share a label.
    std::size_t position = 0;
    std::string env_record;
    Complex amplitude;
    double probability = 0;
};

/// All branches with probability >= floor (and above numerical zero), most probable first.
inline std::vector<WorldBranch> enumerate_worlds(const JointState &state, double floor = 0) {
    std::vector<WorldBranch> out;
    const auto &layout = state.layout();
    for (std::size_t p = 0; p < layout.n_positions; p++) {
        for (std::size_t env = 0; env < state.env_dim(); env++) {
            const Complex a = state.amplitude(p, env);
            const double prob = std::norm(a);
            if (prob < floor || prob < kNumericalZero) {
                continue;
            }
            out.push_back({layout.labels[p], p, state.env_record(env), a, prob});
        }
    }
    std::sort(out.begin(), out.end(), [](const WorldBranch &x, const WorldBranch &y) {
        if (x.probability != y.probability) {
            return x.probability > y.probability;
        }
        return std::tie(x.outcome, x.position, x.env_record) < std::tie(y.outcome, y.position, y.env_record);
    });
    return out;
}

}  // namespace tracesim
