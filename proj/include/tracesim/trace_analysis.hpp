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
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "tracesim/circuit.hpp"
#include "tracesim/exact_engine.hpp"
#include "tracesim/tsv_engine.hpp"

namespace tracesim {

/// Adjacency of the tapped segments. Two segments meet when the photon can go from one to the
/// other through untapped flight and elements only.
///
/// Junctions: every mixing element is one junction joining all of its inputs and outputs;
/// untapped flight, phases and mirrors carry a junction along their mode; a double-sided mirror
/// carries each face's junction to the other mode without joining them; blocks and detectors end
/// the line. A tapped segment separates the junction before it from the one after it.
struct TraceGraph {
    /// Tapped segments (active taps only), in circuit order.
    std::vector<std::string> nodes;
    /// Junction id at each node's entry and exit.
    std::vector<std::size_t> entry;
    std::vector<std::size_t> exit;
    std::size_t source_junction = 0;
    /// Slot range of each node.
    std::vector<SlotRange> slots;
    /// successors[i]: nodes j with exit(i) == entry(j) that start once i has ended.
    std::vector<std::vector<std::size_t>> successors;
    /// Nodes entered straight from the source.
    std::vector<bool> from_source;

    std::size_t index_of(const std::string &id) const {
        auto it = std::find(nodes.begin(), nodes.end(), id);
        if (it == nodes.end()) {
            throw Error(ErrorCode::KeyMismatch, "segment " + id + " is not a node of the trace graph");
        }
        return static_cast<std::size_t>(it - nodes.begin());
    }
};

namespace detail {

struct UnionFind {
    std::vector<std::size_t> parent;

    std::size_t make() {
        parent.push_back(parent.size());
        return parent.size() - 1;
    }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) {
            parent[std::max(a, b)] = std::min(a, b);
        }
    }
};

}  // namespace detail

inline TraceGraph build_trace_graph(const Circuit &circuit) {
    std::set<std::string> active;
    for (const auto &t : circuit.taps) {
        if (t.epsilon != 0) {
            active.insert(t.segment);
        }
    }
    std::vector<std::vector<const Segment *>> starting(circuit.n_slots());
    for (const auto &s : circuit.segments) {
        if (active.count(s.id) != 0) {
            starting[s.slots.begin].push_back(&s);
        }
    }

    detail::UnionFind uf;
    std::vector<std::size_t> current(circuit.n_modes);
    for (auto &c : current) {
        c = uf.make();
    }
    const std::size_t source = current[circuit.source.index];
    std::map<std::string, std::pair<std::size_t, std::size_t>> ends;

    for (std::size_t slot = 0; slot < circuit.n_slots(); slot++) {
        for (const auto *s : starting[slot]) {
            const std::size_t in = current[s->mode.index];
            current[s->mode.index] = uf.make();
            ends[s->id] = {in, current[s->mode.index]};
        }
        if (slot == circuit.n_layers()) {
            break;
        }
        for (const auto &element : circuit.layers[slot]) {
            const auto modes = element_modes(element);
            if (is_terminal_element(element)) {
                current[modes[0].index] = uf.make();
                continue;
            }
            if (modes.size() == 1) {
                continue;
            }
            const auto m = element_unitary(element);
            const std::size_t a = modes[0].index;
            const std::size_t b = modes[1].index;
            const bool straight = std::abs(m(0, 1)) <= kStructuralZero && std::abs(m(1, 0)) <= kStructuralZero;
            const bool crossed = std::abs(m(0, 0)) <= kStructuralZero && std::abs(m(1, 1)) <= kStructuralZero;
            if (straight) {
                continue;
            }
            if (crossed) {
                std::swap(current[a], current[b]);
                continue;
            }
            const std::size_t junction = uf.make();
            uf.unite(junction, current[a]);
            uf.unite(junction, current[b]);
            current[a] = junction;
            current[b] = junction;
        }
    }

    TraceGraph g;
    for (const auto &s : circuit.segments) {
        if (auto it = ends.find(s.id); it != ends.end()) {
            g.nodes.push_back(s.id);
            g.entry.push_back(uf.find(it->second.first));
            g.exit.push_back(uf.find(it->second.second));
            g.slots.push_back(s.slots);
        }
    }
    g.source_junction = uf.find(source);
    g.successors.resize(g.nodes.size());
    g.from_source.resize(g.nodes.size());
    for (std::size_t i = 0; i < g.nodes.size(); i++) {
        g.from_source[i] = g.entry[i] == g.source_junction;
        for (std::size_t j = 0; j < g.nodes.size(); j++) {
            if (g.exit[i] == g.entry[j] && g.slots[j].begin >= g.slots[i].end) {
                g.successors[i].push_back(j);
            }
        }
    }
    return g;
}

struct Island {
    /// Members in circuit order.
    std::vector<std::string> segments;
    double min_strength = 0;
    double max_strength = 0;
    double total_strength = 0;
};

struct IslandReport {
    double tau = 0;
    std::vector<Island> islands;
};

/// Default island threshold for coupling eps.
inline double default_tau(double epsilon) { return epsilon * epsilon / 2; }

/// Components of above-threshold segments (strength > tau) that share a junction, keeping those
/// that do not touch the source junction. The profile must cover exactly the graph's nodes.
inline IslandReport detect_islands(const TraceProfile &profile, const TraceGraph &graph, double tau) {
    const std::set<std::string> graph_keys(graph.nodes.begin(), graph.nodes.end());
    for (const auto &[id, value] : profile.strengths) {
        if (graph_keys.count(id) == 0) {
            throw Error(ErrorCode::KeyMismatch, "profile segment " + id + " is not in the trace graph");
        }
    }
    for (const auto &id : graph.nodes) {
        if (profile.strengths.count(id) == 0) {
            throw Error(ErrorCode::KeyMismatch, "trace graph segment " + id + " is missing from the profile");
        }
    }

    const std::size_t n = graph.nodes.size();
    std::vector<bool> above(n);
    for (std::size_t i = 0; i < n; i++) {
        above[i] = profile.strengths.at(graph.nodes[i]) > tau;
    }
    detail::UnionFind uf;
    for (std::size_t i = 0; i < n; i++) {
        uf.make();
    }
    for (std::size_t i = 0; i < n; i++) {
        for (std::size_t j = i + 1; j < n; j++) {
            if (above[i] && above[j] &&
                (graph.entry[i] == graph.entry[j] || graph.entry[i] == graph.exit[j] || graph.exit[i] == graph.entry[j] ||
                 graph.exit[i] == graph.exit[j])) {
                uf.unite(i, j);
            }
        }
    }
    std::set<std::size_t> grounded;
    for (std::size_t i = 0; i < n; i++) {
        if (above[i] && (graph.entry[i] == graph.source_junction || graph.exit[i] == graph.source_junction)) {
            grounded.insert(uf.find(i));
        }
    }

    IslandReport report;
    report.tau = tau;
    std::map<std::size_t, std::size_t> island_of_root;
    for (std::size_t i = 0; i < n; i++) {
        if (!above[i] || grounded.count(uf.find(i)) != 0) {
            continue;
        }
        auto [it, fresh] = island_of_root.emplace(uf.find(i), report.islands.size());
        if (fresh) {
            report.islands.emplace_back();
        }
        auto &island = report.islands[it->second];
        const double s = profile.strengths.at(graph.nodes[i]);
        island.min_strength = island.segments.empty() ? s : std::min(island.min_strength, s);
        island.max_strength = std::max(island.max_strength, s);
        island.total_strength += s;
        island.segments.push_back(graph.nodes[i]);
    }
    return report;
}

struct EngineComparison {
    double max_relative_deviation = 0;
    /// Per compared segment (|w| >= 0.1): exact flip probability, (eps |w|)^2, relative deviation.
    std::map<std::string, double> exact;
    std::map<std::string, double> predicted;
    std::map<std::string, double> deviation;
};

/// Exact postselected trace against the first-order two-state-vector prediction, with every tap
/// set to `epsilon`.
inline EngineComparison compare_engines(const Circuit &circuit, const std::string &postselect, double epsilon,
                                        const ExactOptions &options = {}) {
    EngineComparison out;
    if (epsilon == 0) {
        return out;
    }
    const auto tuned = with_uniform_epsilon(circuit, epsilon);
    const auto exact = postselect_trace(propagate_exact(tuned, options), postselect);
    const auto w = weak_values(forward_backward(tuned, postselect));
    for (const auto &t : tuned.taps) {
        const double magnitude = std::abs(w.at(t.segment));
        if (magnitude < 0.1) {
            continue;
        }
        const double predicted = (epsilon * magnitude) * (epsilon * magnitude);
        const double p = exact.profile.at(t.segment);
        const double dev = std::abs(p / predicted - 1);
        out.exact[t.segment] = p;
        out.predicted[t.segment] = predicted;
        out.deviation[t.segment] = dev;
        out.max_relative_deviation = std::max(out.max_relative_deviation, dev);
    }
    return out;
}

/// Outcome labels that name exactly one coordinate and occur with probability above `min_probability`.
inline std::vector<std::string> single_coordinate_outcomes(const Circuit &circuit, double min_probability = 1e-12) {
    const auto layout = make_layout(circuit);
    const auto dist = forward_outcome_distribution(circuit);
    std::vector<std::string> out;
    for (const auto &[label, p] : dist) {
        if (p > min_probability && layout.positions_of(label).size() == 1) {
            out.push_back(label);
        }
    }
    return out;
}

}  // namespace tracesim
