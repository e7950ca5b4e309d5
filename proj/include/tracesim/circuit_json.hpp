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

#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "tracesim/circuit.hpp"

namespace tracesim {

using Json = nlohmann::json;

namespace detail {

inline const Json &require(const Json &object, const char *key, std::string_view where) {
    if (!object.is_object() || !object.contains(key)) {
        throw Error(ErrorCode::ParseError, std::string(where) + ": missing field \"" + key + "\"");
    }
    return object.at(key);
}

inline double read_number(const Json &object, const char *key, std::string_view where, std::optional<double> fallback = {}) {
    if (!object.contains(key)) {
        if (fallback) {
            return *fallback;
        }
        require(object, key, where);
    }
    const auto &v = object.at(key);
    if (!v.is_number()) {
        throw Error(ErrorCode::ParseError, std::string(where) + ": field \"" + key + "\" must be a number");
    }
    return v.get<double>();
}

inline std::string read_string(const Json &object, const char *key, std::string_view where, std::optional<std::string> fallback = {}) {
    if (!object.contains(key)) {
        if (fallback) {
            return *fallback;
        }
        require(object, key, where);
    }
    const auto &v = object.at(key);
    if (!v.is_string()) {
        throw Error(ErrorCode::ParseError, std::string(where) + ": field \"" + key + "\" must be a string");
    }
    return v.get<std::string>();
}

inline std::size_t read_index(const Json &v, std::string_view where) {
    if (!v.is_number_integer()) {
        throw Error(ErrorCode::ParseError, std::string(where) + ": expected an integer");
    }
    const auto i = v.get<long long>();
    if (i < 0) {
        throw Error(ErrorCode::UnknownMode, std::string(where) + ": negative index " + std::to_string(i));
    }
    return static_cast<std::size_t>(i);
}

inline ModeId read_mode(const Json &object, const char *key, std::string_view where) {
    return ModeId{read_index(require(object, key, where), where)};
}

inline std::pair<ModeId, ModeId> read_mode_pair(const Json &object, std::string_view where) {
    const auto &v = require(object, "modes", where);
    if (!v.is_array() || v.size() != 2) {
        throw Error(ErrorCode::ParseError, std::string(where) + ": \"modes\" must hold two modes");
    }
    return {ModeId{read_index(v[0], where)}, ModeId{read_index(v[1], where)}};
}

inline Element parse_element(const Json &j, std::string_view where) {
    const auto type = read_string(j, "type", where);
    if (type == "beamsplitter") {
        auto [a, b] = read_mode_pair(j, where);
        return BeamSplitter{a, b, read_number(j, "theta", where), read_number(j, "phi", where, 0.0)};
    }
    if (type == "phase") {
        return PhaseShift{read_mode(j, "mode", where), read_number(j, "delta", where), read_string(j, "param", where, "")};
    }
    if (type == "mirror") {
        return Mirror{read_mode(j, "mode", where)};
    }
    if (type == "double_sided_mirror") {
        auto [a, b] = read_mode_pair(j, where);
        return DoubleSidedMirror{a, b};
    }
    if (type == "block") {
        return Block{read_mode(j, "mode", where), read_string(j, "label", where, "absorbed")};
    }
    if (type == "detector") {
        return Detector{read_mode(j, "mode", where), read_string(j, "label", where)};
    }
    if (type == "linear") {
        auto [a, b] = read_mode_pair(j, where);
        const auto &m = require(j, "matrix", where);
        if (!m.is_array() || m.size() != 4) {
            throw Error(ErrorCode::ParseError, std::string(where) + ": \"matrix\" must list 4 entries, row-major");
        }
        LinearMap out{a, b, {}};
        for (std::size_t i = 0; i < 4; i++) {
            if (!m[i].is_array() || m[i].size() != 2 || !m[i][0].is_number() || !m[i][1].is_number()) {
                throw Error(ErrorCode::ParseError, std::string(where) + ": matrix entries are [re, im] pairs");
            }
            out.matrix[i] = Complex{m[i][0].get<double>(), m[i][1].get<double>()};
        }
        return out;
    }
    throw Error(ErrorCode::ParseError, std::string(where) + ": unknown element type \"" + type + "\"");
}

inline Json element_to_json(const Element &element) {
    return std::visit(
        [](const auto &e) -> Json {
            using T = std::decay_t<decltype(e)>;
            Json j;
            if constexpr (std::is_same_v<T, BeamSplitter>) {
                j = {{"type", "beamsplitter"}, {"modes", {e.a.index, e.b.index}}, {"theta", e.theta}, {"phi", e.phi}};
            } else if constexpr (std::is_same_v<T, PhaseShift>) {
                j = {{"type", "phase"}, {"mode", e.mode.index}, {"delta", e.delta}};
                if (!e.param.empty()) {
                    j["param"] = e.param;
                }
            } else if constexpr (std::is_same_v<T, Mirror>) {
                j = {{"type", "mirror"}, {"mode", e.mode.index}};
            } else if constexpr (std::is_same_v<T, DoubleSidedMirror>) {
                j = {{"type", "double_sided_mirror"}, {"modes", {e.a.index, e.b.index}}};
            } else if constexpr (std::is_same_v<T, Block>) {
                j = {{"type", "block"}, {"mode", e.mode.index}, {"label", e.label}};
            } else if constexpr (std::is_same_v<T, Detector>) {
                j = {{"type", "detector"}, {"mode", e.mode.index}, {"label", e.label}};
            } else {
                Json m = Json::array();
                for (const auto &z : e.matrix) {
                    m.push_back({z.real(), z.imag()});
                }
                j = {{"type", "linear"}, {"modes", {e.a.index, e.b.index}}, {"matrix", m}};
            }
            return j;
        },
        element);
}

}  // namespace detail

/// Parses the circuit file schema:
///   {"modes": n, "source": m, "layers": [[element, ...], ...],
///    "taps": [{"segment": id, "epsilon": e}], "detectors": {"label": mode},
///    "segments": [{"id", "mode", "slots": [begin, end] | "from": begin, "group"}]}   (segments optional)
inline CircuitSpec parse_circuit_spec(const Json &j) {
    if (!j.is_object()) {
        throw Error(ErrorCode::ParseError, "circuit: top level must be an object");
    }
    CircuitSpec spec;
    spec.n_modes = detail::read_index(detail::require(j, "modes", "circuit"), "circuit.modes");
    spec.source = detail::read_mode(j, "source", "circuit");

    const auto &layers = detail::require(j, "layers", "circuit");
    if (!layers.is_array()) {
        throw Error(ErrorCode::ParseError, "circuit: \"layers\" must be an array");
    }
    for (std::size_t k = 0; k < layers.size(); k++) {
        if (!layers[k].is_array()) {
            throw Error(ErrorCode::ParseError, "layer " + std::to_string(k) + " must be an array of elements");
        }
        Layer layer;
        for (std::size_t e = 0; e < layers[k].size(); e++) {
            layer.push_back(detail::parse_element(layers[k][e], "layer " + std::to_string(k) + " element " + std::to_string(e)));
        }
        spec.layers.push_back(std::move(layer));
    }

    if (j.contains("taps")) {
        const auto &taps = j.at("taps");
        if (!taps.is_array()) {
            throw Error(ErrorCode::ParseError, "circuit: \"taps\" must be an array");
        }
        for (const auto &t : taps) {
            spec.taps.push_back({detail::read_string(t, "segment", "tap"), detail::read_number(t, "epsilon", "tap")});
        }
    }

    const auto &detectors = detail::require(j, "detectors", "circuit");
    if (!detectors.is_object()) {
        throw Error(ErrorCode::ParseError, "circuit: \"detectors\" must map labels to modes");
    }
    for (const auto &[label, mode] : detectors.items()) {
        spec.detectors[label] = ModeId{detail::read_index(mode, "detector " + label)};
    }

    if (j.contains("segments")) {
        const auto &segments = j.at("segments");
        if (!segments.is_array()) {
            throw Error(ErrorCode::ParseError, "circuit: \"segments\" must be an array");
        }
        std::vector<SegmentSpec> out;
        for (const auto &s : segments) {
            SegmentSpec seg;
            seg.id = detail::read_string(s, "id", "segment");
            const std::string where = "segment " + seg.id;
            seg.mode = detail::read_mode(s, "mode", where);
            seg.group = detail::read_string(s, "group", where, "");
            if (s.contains("slots")) {
                const auto &r = s.at("slots");
                if (!r.is_array() || r.size() != 2) {
                    throw Error(ErrorCode::ParseError, where + ": \"slots\" must be [begin, end]");
                }
                seg.begin = detail::read_index(r[0], where);
                seg.end = detail::read_index(r[1], where);
            } else {
                seg.begin = detail::read_index(detail::require(s, "from", where), where);
            }
            out.push_back(std::move(seg));
        }
        spec.segments = std::move(out);
    }
    return spec;
}

inline CircuitSpec parse_circuit_spec(std::string_view text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error &e) {
        throw Error(ErrorCode::ParseError, std::string("circuit: ") + e.what());
    }
    return parse_circuit_spec(j);
}

inline Circuit parse_circuit(std::string_view text) { return build_circuit(parse_circuit_spec(text)); }

inline Circuit load_circuit(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::Io, "cannot open circuit file " + path);
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_circuit(buffer.str());
}

/// Emits the file schema. Segments are always written out in full so that parsing the output
/// reproduces the circuit exactly.
inline Json serialize(const Circuit &circuit) {
    Json j;
    j["modes"] = circuit.n_modes;
    j["source"] = circuit.source.index;
    Json layers = Json::array();
    for (const auto &layer : circuit.layers) {
        Json l = Json::array();
        for (const auto &element : layer) {
            l.push_back(detail::element_to_json(element));
        }
        layers.push_back(std::move(l));
    }
    j["layers"] = std::move(layers);
    Json segments = Json::array();
    for (const auto &s : circuit.segments) {
        Json js = {{"id", s.id}, {"mode", s.mode.index}, {"slots", {s.slots.begin, s.slots.end}}};
        if (!s.group.empty()) {
            js["group"] = s.group;
        }
        segments.push_back(std::move(js));
    }
    j["segments"] = std::move(segments);
    Json taps = Json::array();
    for (const auto &t : circuit.taps) {
        taps.push_back({{"segment", t.segment}, {"epsilon", t.epsilon}});
    }
    j["taps"] = std::move(taps);
    Json detectors = Json::object();
    for (const auto &[label, mode] : circuit.detectors) {
        detectors[label] = mode.index;
    }
    j["detectors"] = std::move(detectors);
    return j;
}

}  // namespace tracesim
