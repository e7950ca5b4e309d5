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
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "tracesim/exact_engine.hpp"
#include "tracesim/protocols.hpp"
#include "tracesim/tsv_engine.hpp"

namespace tracesim {

enum class BitOutcome { Received0, Received1, Error, Loss };

inline std::string_view bit_outcome_name(BitOutcome o) {
    switch (o) {
        case BitOutcome::Received0: return "received-0";
        case BitOutcome::Received1: return "received-1";
        case BitOutcome::Error: return "error";
        case BitOutcome::Loss: return "loss";
    }
    return "?";
}

/// Bit 0 means no block and should end at D_1; bit 1 means block and should end at D_2. Any sink
/// is a loss.
inline BitOutcome classify(int bit, const std::string &outcome) {
    const std::string &right = bit == 0 ? "D_1" : "D_2";
    const std::string &wrong = bit == 0 ? "D_2" : "D_1";
    if (outcome == right) {
        return bit == 0 ? BitOutcome::Received0 : BitOutcome::Received1;
    }
    if (outcome == wrong) {
        return BitOutcome::Error;
    }
    return BitOutcome::Loss;
}

/// Terminal distribution used for sampling: exact engine within its tap cap, otherwise the
/// source-evolved amplitudes (taps ignored).
inline std::map<std::string, double> sampling_distribution(const Circuit &circuit, const ExactOptions &options = {}) {
    std::size_t active = 0;
    for (const auto &t : circuit.taps) {
        active += t.epsilon != 0 ? 1 : 0;
    }
    if (active <= options.max_taps) {
        return outcome_distribution(propagate_exact(circuit, options));
    }
    return forward_outcome_distribution(circuit);
}

struct BitStatistics {
    std::size_t runs = 0;
    std::map<BitOutcome, std::size_t> counts;
    /// Engine probability of each class.
    std::map<BitOutcome, double> expected;

    double rate(BitOutcome o) const {
        auto it = counts.find(o);
        return runs == 0 || it == counts.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(runs);
    }
    /// Standard deviation of the empirical rate under the engine probability.
    double sigma(BitOutcome o) const {
        auto it = expected.find(o);
        const double p = it == expected.end() ? 0.0 : it->second;
        return std::sqrt(p * (1 - p) / static_cast<double>(std::max<std::size_t>(runs, 1)));
    }
    bool within(BitOutcome o, double n_sigma) const {
        auto it = expected.find(o);
        const double p = it == expected.end() ? 0.0 : it->second;
        return std::abs(rate(o) - p) <= n_sigma * sigma(o) + 1e-15;
    }
};

struct TransmissionReport {
    std::vector<int> bits;
    std::vector<std::string> outcomes;
    std::vector<BitOutcome> classes;
    /// Keyed by bit value (0 or 1).
    std::map<int, BitStatistics> per_bit;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Uniform double in [0, 1) from the top 53 bits; identical on every platform.
inline double unit_double(std::mt19937_64 &rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace detail

/// Sends each bit through a fresh Zeno-chain run and samples one terminal outcome per run.
/// Results depend only on the inputs and the seed, not on the thread count.
inline TransmissionReport monte_carlo_transmit(const std::vector<int> &bits, ZenoParams params, std::uint64_t seed,
                                               std::size_t threads = 0, const ExactOptions &options = {}) {
    std::map<int, std::vector<std::pair<std::string, double>>> tables;
    TransmissionReport report;
    report.bits = bits;
    for (int bit : bits) {
        if (bit != 0 && bit != 1) {
            throw Error(ErrorCode::InvalidParameter, "bits must be 0 or 1");
        }
        if (tables.count(bit) != 0) {
            continue;
        }
        params.block = bit == 1;
        const auto dist = sampling_distribution(zeno_chain(params), options);
        auto &stats = report.per_bit[bit];
        for (auto o : {BitOutcome::Received0, BitOutcome::Received1, BitOutcome::Error, BitOutcome::Loss}) {
            stats.expected[o] = 0;
        }
        for (const auto &[label, p] : dist) {
            stats.expected[classify(bit, label)] += p;
        }
        tables[bit] = {dist.begin(), dist.end()};
    }

    constexpr std::size_t kChunk = 4096;
    const std::size_t n = bits.size();
    const std::size_t n_chunks = (n + kChunk - 1) / kChunk;
    report.outcomes.assign(n, "");
    auto run_chunk = [&](std::size_t chunk) {
        std::mt19937_64 rng(detail::splitmix64(seed ^ detail::splitmix64(chunk)));
        for (std::size_t i = chunk * kChunk; i < std::min(n, (chunk + 1) * kChunk); i++) {
            const auto &table = tables.at(bits[i]);
            const double u = detail::unit_double(rng);
            double acc = 0;
            std::string chosen = table.back().first;
            for (const auto &[label, p] : table) {
                acc += p;
                if (u < acc) {
                    chosen = label;
                    break;
                }
            }
            report.outcomes[i] = chosen;
        }
    };
    if (threads == 0) {
        threads = std::max(1u, std::thread::hardware_concurrency());
    }
    threads = std::min(threads, std::max<std::size_t>(n_chunks, 1));
    if (threads <= 1) {
        for (std::size_t c = 0; c < n_chunks; c++) {
            run_chunk(c);
        }
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; t++) {
            pool.emplace_back([&, t] {
                for (std::size_t c = t; c < n_chunks; c += threads) {
                    run_chunk(c);
                }
            });
        }
        for (auto &th : pool) {
            th.join();
        }
    }

    report.classes.reserve(n);
    for (std::size_t i = 0; i < n; i++) {
        const auto cls = classify(bits[i], report.outcomes[i]);
        report.classes.push_back(cls);
        auto &stats = report.per_bit[bits[i]];
        stats.runs++;
        stats.counts[cls]++;
    }
    return report;
}

}  // namespace tracesim
