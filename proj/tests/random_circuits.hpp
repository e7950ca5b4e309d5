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

#include <random>
#include <string>

#include "tracesim/circuit.hpp"

namespace testing_support {

using namespace tracesim;

struct RandomCircuitOptions {
    std::size_t max_modes = 4;
    std::size_t max_layers = 6;
    std::size_t max_taps = 4;
    double block_probability = 0.1;
    double max_epsilon = 0.3;
};

/// A valid random circuit: random splitters, phases, mirrors, double-sided mirrors and blocks,
/// auto-derived segments, a few random taps, a detector on every mode.
inline Circuit random_circuit(std::mt19937_64 &rng, const RandomCircuitOptions &opt = {}) {
    std::uniform_real_distribution<double> angle(0, 2 * kPi);
    std::uniform_real_distribution<double> unit(0, 1);
    auto pick = [&](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); };

    CircuitSpec spec;
    spec.n_modes = pick(2, opt.max_modes);
    spec.source = ModeId{pick(0, spec.n_modes - 1)};
    const std::size_t n_layers = pick(1, opt.max_layers);
    for (std::size_t k = 0; k < n_layers; k++) {
        std::vector<std::size_t> free(spec.n_modes);
        for (std::size_t m = 0; m < spec.n_modes; m++) {
            free[m] = m;
        }
        std::shuffle(free.begin(), free.end(), rng);
        Layer layer;
        while (!free.empty()) {
            const double r = unit(rng);
            const std::size_t a = free.back();
            if (free.size() >= 2 && r < 0.45) {
                free.pop_back();
                const std::size_t b = free.back();
                free.pop_back();
                if (unit(rng) < 0.8) {
                    layer.push_back(BeamSplitter{ModeId{a}, ModeId{b}, angle(rng), angle(rng)});
                } else {
                    layer.push_back(DoubleSidedMirror{ModeId{a}, ModeId{b}});
                }
                continue;
            }
            free.pop_back();
            if (r < 0.45 + opt.block_probability) {
                layer.push_back(Block{ModeId{a}, "absorbed"});
            } else if (r < 0.75) {
                layer.push_back(PhaseShift{ModeId{a}, angle(rng), ""});
            } else if (r < 0.85) {
                layer.push_back(Mirror{ModeId{a}});
            }
        }
        spec.layers.push_back(std::move(layer));
    }
    for (std::size_t m = 0; m < spec.n_modes; m++) {
        spec.detectors["D_" + std::to_string(m + 1)] = ModeId{m};
    }
    // Derive segments first, then tap a random subset.
    Circuit probe = build_circuit(spec);
    std::vector<std::string> ids;
    for (const auto &s : probe.segments) {
        ids.push_back(s.id);
    }
    std::shuffle(ids.begin(), ids.end(), rng);
    const std::size_t n_taps = std::min(ids.size(), pick(0, opt.max_taps));
    std::uniform_real_distribution<double> eps(0, opt.max_epsilon);
    for (std::size_t t = 0; t < n_taps; t++) {
        spec.taps.push_back({ids[t], eps(rng)});
    }
    return build_circuit(spec);
}

}  // namespace testing_support
