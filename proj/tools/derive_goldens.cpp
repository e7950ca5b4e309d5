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

// Prints the numbers that the test suites freeze as goldens. Re-run after changing a builder and
// update the constants in tests/goldens.hpp.

#include <cstdio>

#include "tracesim/exact_engine.hpp"
#include "tracesim/protocols.hpp"
#include "tracesim/tuner.hpp"

using namespace tracesim;

int main() {
    const auto naive = naive_bit0(false);
    std::printf("naive_bit0 P(D_1 | no block)      = %.17g\n", outcome_distribution(propagate_exact(naive)).at("D_1"));
    for (const auto &[name, value] : current_phases(naive_bit0(true))) {
        std::printf("naive_bit0 phase %-16s = %.17g\n", name.c_str(), value);
    }
    const auto dsm = dsm_bit0(false);
    std::printf("dsm_bit0 P(D_1 | no block)        = %.17g\n", outcome_distribution(propagate_exact(dsm)).at("D_1"));
    for (const auto &[name, value] : current_phases(dsm_bit0(true))) {
        std::printf("dsm_bit0 phase %-18s = %.17g\n", name.c_str(), value);
    }
    for (bool block : {false, true}) {
        const auto dist = outcome_distribution(propagate_exact(zeno_chain({10, 400, block, 0.0})));
        for (const auto &[label, p] : dist) {
            std::printf("zeno N=10 M=400 block=%d %-9s = %.17g\n", block, label.c_str(), p);
        }
    }
    return 0;
}
