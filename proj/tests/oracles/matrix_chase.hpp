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

// Brute-force reference computations for the tests. Everything here is built from dense matrices
// written directly from the element definitions, with its own coordinate ordering, so the engines'
// in-place kernels are never reused.

#pragma once

#include <cmath>
#include <complex>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tracesim/circuit.hpp"

namespace oracle {

using tracesim::Circuit;
using tracesim::Complex;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

/// Photon coordinates: modes first, then one sink per block/detector in (layer, element) order.
struct Coordinates {
    std::size_t n = 0;
    std::vector<std::string> labels;
};

inline Coordinates coordinates(const Circuit &c) {
    Coordinates out;
    out.labels.assign(c.n_modes, "");
    for (const auto &[label, mode] : c.detectors) {
        out.labels[mode.index] = label;
    }
    for (const auto &layer : c.layers) {
        for (const auto &e : layer) {
            if (auto *b = std::get_if<tracesim::Block>(&e)) {
                out.labels.push_back(b->label);
            } else if (auto *d = std::get_if<tracesim::Detector>(&e)) {
                out.labels.push_back(d->label);
            }
        }
    }
    out.n = out.labels.size();
    return out;
}

/// Full matrix of each layer on the photon coordinates.
inline std::vector<Mat> layer_matrices(const Circuit &c) {
    const auto coords = coordinates(c);
    const Complex i(0, 1);
    std::vector<Mat> out;
    std::size_t sink = c.n_modes;
    for (const auto &layer : c.layers) {
        Mat u = Mat::Identity(coords.n, coords.n);
        for (const auto &e : layer) {
            auto set2 = [&](std::size_t p, std::size_t q, Complex a, Complex b, Complex cc, Complex d) {
                u(p, p) = a;
                u(p, q) = b;
                u(q, p) = cc;
                u(q, q) = d;
            };
            if (auto *bs = std::get_if<tracesim::BeamSplitter>(&e)) {
                const double ct = std::cos(bs->theta), st = std::sin(bs->theta);
                set2(bs->a.index, bs->b.index, ct, i * std::exp(i * bs->phi) * st, i * std::exp(-i * bs->phi) * st, ct);
            } else if (auto *ph = std::get_if<tracesim::PhaseShift>(&e)) {
                u(ph->mode.index, ph->mode.index) = std::exp(i * ph->delta);
            } else if (auto *dsm = std::get_if<tracesim::DoubleSidedMirror>(&e)) {
                set2(dsm->a.index, dsm->b.index, 0, 1, 1, 0);
            } else if (auto *lm = std::get_if<tracesim::LinearMap>(&e)) {
                set2(lm->a.index, lm->b.index, lm->matrix[0], lm->matrix[1], lm->matrix[2], lm->matrix[3]);
            } else if (auto *b = std::get_if<tracesim::Block>(&e)) {
                set2(b->mode.index, sink++, 0, 1, 1, 0);
            } else if (auto *d = std::get_if<tracesim::Detector>(&e)) {
                set2(d->mode.index, sink++, 0, 1, 1, 0);
            }
            // Mirror: identity.
        }
        out.push_back(u);
    }
    return out;
}

/// Product of layers [from, to).
inline Mat evolution(const std::vector<Mat> &layers, std::size_t from, std::size_t to, std::size_t n) {
    Mat u = Mat::Identity(n, n);
    for (std::size_t k = from; k < to; k++) {
        u = layers[k] * u;
    }
    return u;
}

inline Vec unit(std::size_t n, std::size_t k) {
    Vec v = Vec::Zero(n);
    v[k] = 1;
    return v;
}

inline std::size_t position_of(const Coordinates &coords, const std::string &label) {
    for (std::size_t p = 0; p < coords.n; p++) {
        if (coords.labels[p] == label) {
            return p;
        }
    }
    throw std::runtime_error("oracle: no label " + label);
}

/// Outcome probabilities with taps ignored.
inline std::map<std::string, double> outcome_probabilities(const Circuit &c) {
    const auto coords = coordinates(c);
    const Vec psi = evolution(layer_matrices(c), 0, c.layers.size(), coords.n) * unit(coords.n, c.source.index);
    std::map<std::string, double> out;
    for (std::size_t p = 0; p < coords.n; p++) {
        if (!coords.labels[p].empty()) {
            out[coords.labels[p]] += std::norm(psi[p]);
        }
    }
    return out;
}

struct SegmentAmplitudes {
    Complex psi;
    Complex phi;
    Complex overlap;
    Complex weak_value() const { return std::conj(phi) * psi / overlap; }
};

/// psi_s, phi_s and <phi|psi> for `segment` and postselection on the single coordinate `label`.
inline SegmentAmplitudes chase(const Circuit &c, const std::string &segment, const std::string &label) {
    const auto coords = coordinates(c);
    const auto layers = layer_matrices(c);
    const auto *s = c.find_segment(segment);
    const std::size_t k = s->slots.begin;
    const std::size_t L = c.layers.size();
    const Vec psi = evolution(layers, 0, k, coords.n) * unit(coords.n, c.source.index);
    const Vec phi = evolution(layers, k, L, coords.n).adjoint() * unit(coords.n, position_of(coords, label));
    return {psi[s->mode.index], phi[s->mode.index], phi.dot(psi)};
}

/// Joint state over (environment record, photon coordinate), index env * n + position, built from
/// dense tap and layer operators on the whole space. Only practical for a handful of taps.
struct Joint {
    Coordinates coords;
    std::vector<std::string> tap_segments;
    Vec state;

    Complex amp(std::size_t position, std::size_t env) const { return state[env * coords.n + position]; }
    std::size_t env_dim() const { return std::size_t{1} << tap_segments.size(); }
};

inline Joint joint(const Circuit &c) {
    Joint j;
    j.coords = coordinates(c);
    const std::size_t n = j.coords.n;
    std::vector<std::pair<std::size_t, const tracesim::Tap *>> taps;  // (firing slot, tap)
    for (const auto &t : c.taps) {
        if (t.epsilon != 0) {
            j.tap_segments.push_back(t.segment);
            taps.push_back({c.find_segment(t.segment)->slots.begin, &t});
        }
    }
    const std::size_t T = taps.size();
    const std::size_t dim = n << T;
    const auto layers = layer_matrices(c);
    j.state = Vec::Zero(dim);
    j.state[c.source.index] = 1;
    for (std::size_t slot = 0; slot <= c.layers.size(); slot++) {
        for (std::size_t t = 0; t < T; t++) {
            if (taps[t].first != slot) {
                continue;
            }
            const auto *seg = c.find_segment(taps[t].second->segment);
            const double ce = std::cos(taps[t].second->epsilon), se = std::sin(taps[t].second->epsilon);
            Mat g = Mat::Identity(dim, dim);
            for (std::size_t env = 0; env < (std::size_t{1} << T); env++) {
                if ((env >> t) & 1) {
                    continue;
                }
                const std::size_t e1 = env | (std::size_t{1} << t);
                const std::size_t x0 = env * n + seg->mode.index, x1 = e1 * n + seg->mode.index;
                g(x0, x0) = ce;
                g(x1, x0) = se;
                g(x0, x1) = -se;
                g(x1, x1) = ce;
            }
            j.state = g * j.state;
        }
        if (slot < c.layers.size()) {
            Mat big = Mat::Zero(dim, dim);
            for (std::size_t env = 0; env < (std::size_t{1} << T); env++) {
                big.block(env * n, env * n, n, n) = layers[slot];
            }
            j.state = big * j.state;
        }
    }
    return j;
}

/// Conditional flip probability of each tap given the photon ends on any coordinate labelled `label`
/// (empty label: unconditional).
inline std::map<std::string, double> flip_probabilities(const Joint &j, const std::string &label) {
    double norm = 0;
    std::vector<double> flipped(j.tap_segments.size(), 0.0);
    for (std::size_t env = 0; env < j.env_dim(); env++) {
        for (std::size_t p = 0; p < j.coords.n; p++) {
            if (!label.empty() && j.coords.labels[p] != label) {
                continue;
            }
            const double w = std::norm(j.amp(p, env));
            norm += w;
            for (std::size_t t = 0; t < j.tap_segments.size(); t++) {
                if ((env >> t) & 1) {
                    flipped[t] += w;
                }
            }
        }
    }
    std::map<std::string, double> out;
    for (std::size_t t = 0; t < j.tap_segments.size(); t++) {
        out[j.tap_segments[t]] = label.empty() ? flipped[t] : flipped[t] / norm;
    }
    return out;
}

}  // namespace oracle
