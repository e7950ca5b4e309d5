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
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "tracesim/circuit_json.hpp"
#include "tracesim/exact_engine.hpp"
#include "tracesim/monte_carlo.hpp"
#include "tracesim/protocols.hpp"
#include "tracesim/scaling.hpp"
#include "tracesim/trace_analysis.hpp"
#include "tracesim/tsv_engine.hpp"

namespace tracesim::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kPhysicsError = 3, kCapError = 4 };

struct RunConfig {
    std::string command;
    // Circuit source: exactly one of these for circuit commands.
    std::optional<std::string> builder;
    std::optional<std::string> preset;
    std::optional<std::string> circuit_file;
    // Builder parameters.
    double phase = 0;
    std::string inner = "destructive";
    bool block = false;
    std::size_t n = 10;
    std::size_t m = 200;
    // Couplings. Without --epsilon, trace and weak use 1e-3 and other commands keep the circuit's own.
    std::optional<double> epsilon;
    std::map<std::string, double> segment_epsilons;
    std::optional<std::string> postselect;
    std::optional<std::uint64_t> seed;
    std::string format = "json";
    std::optional<std::string> output;
    double floor = 0;
    std::optional<double> tau;
    std::size_t max_taps = 20;
    // protocol
    std::string bits;
    std::size_t zeros = 0;
    std::size_t ones = 0;
    // scaling
    std::string family = "noblock-n";
    std::string observable = "error";
    std::vector<std::size_t> values;
    std::size_t fixed_n = 10;
};

inline const std::vector<std::string> &builder_names() {
    static const std::vector<std::string> names{"mzi", "single_splitter", "double_mzi", "nested_mzi", "ifm",
                                                "naive_bit0", "dsm_bit0", "zeno_chain"};
    return names;
}

/// Figure scenarios as (builder, parameter) settings.
inline const std::map<std::string, std::function<void(RunConfig &)>> &presets() {
    static const std::map<std::string, std::function<void(RunConfig &)>> table{
        {"fig1", [](RunConfig &c) { c.builder = "mzi"; c.phase = 0; }},
        {"fig1-detuned", [](RunConfig &c) { c.builder = "mzi"; c.phase = kPi; }},
        {"fig2", [](RunConfig &c) { c.builder = "single_splitter"; }},
        {"fig3", [](RunConfig &c) { c.builder = "double_mzi"; }},
        {"fig4", [](RunConfig &c) { c.builder = "nested_mzi"; c.inner = "constructive"; }},
        {"fig5", [](RunConfig &c) { c.builder = "nested_mzi"; c.inner = "destructive"; }},
        {"fig6-noblock", [](RunConfig &c) { c.builder = "zeno_chain"; c.n = 10; c.m = 200; c.block = false; }},
        {"fig6-block", [](RunConfig &c) { c.builder = "zeno_chain"; c.n = 10; c.m = 200; c.block = true; }},
        {"fig7-noblock", [](RunConfig &c) { c.builder = "ifm"; c.block = false; }},
        {"fig7-block", [](RunConfig &c) { c.builder = "ifm"; c.block = true; }},
        {"fig8-noblock", [](RunConfig &c) { c.builder = "naive_bit0"; c.block = false; }},
        {"fig8-block", [](RunConfig &c) { c.builder = "naive_bit0"; c.block = true; }},
        {"fig9-noblock", [](RunConfig &c) { c.builder = "dsm_bit0"; c.block = false; }},
        {"fig9-block", [](RunConfig &c) { c.builder = "dsm_bit0"; c.block = true; }},
    };
    return table;
}

inline Json config_to_json(const RunConfig &c) {
    Json j;
    j["command"] = c.command;
    auto opt = [](const auto &v) { return v ? Json(*v) : Json(nullptr); };
    j["builder"] = opt(c.builder);
    j["preset"] = opt(c.preset);
    j["circuit"] = opt(c.circuit_file);
    j["phase"] = c.phase;
    j["inner"] = c.inner;
    j["block"] = c.block;
    j["N"] = c.n;
    j["M"] = c.m;
    j["epsilon"] = opt(c.epsilon);
    j["segment_epsilons"] = c.segment_epsilons;
    j["postselect"] = opt(c.postselect);
    j["seed"] = opt(c.seed);
    j["format"] = c.format;
    j["output"] = opt(c.output);
    j["floor"] = c.floor;
    j["tau"] = opt(c.tau);
    j["max_taps"] = c.max_taps;
    if (c.command == "protocol") {
        j["bits"] = c.bits;
        j["zeros"] = c.zeros;
        j["ones"] = c.ones;
    }
    if (c.command == "scaling") {
        j["family"] = c.family;
        j["observable"] = c.observable;
        j["values"] = c.values;
        j["fixed_n"] = c.fixed_n;
    }
    return j;
}

/// Applies the preset, if any, and command-dependent defaults.
inline RunConfig resolve(RunConfig c) {
    if (c.preset) {
        auto it = presets().find(*c.preset);
        if (it == presets().end()) {
            throw Error(ErrorCode::InvalidParameter, "unknown preset " + *c.preset);
        }
        it->second(c);
    }
    if (!c.epsilon && (c.command == "trace" || c.command == "weak")) {
        c.epsilon = 1e-3;
    }
    if (c.format != "json" && c.format != "csv") {
        throw Error(ErrorCode::InvalidParameter, "format must be json or csv");
    }
    return c;
}

inline Circuit make_circuit(const RunConfig &c) {
    const int sources = (c.builder ? 1 : 0) + (c.circuit_file ? 1 : 0);
    if (sources != 1) {
        throw Error(ErrorCode::InvalidParameter, "give exactly one of --builder, --preset, --circuit");
    }
    Circuit circuit;
    if (c.circuit_file) {
        circuit = load_circuit(*c.circuit_file);
    } else {
        const auto &b = *c.builder;
        if (b == "mzi") {
            circuit = mzi(c.phase);
        } else if (b == "single_splitter") {
            circuit = single_splitter();
        } else if (b == "double_mzi") {
            circuit = double_mzi();
        } else if (b == "nested_mzi") {
            if (c.inner != "destructive" && c.inner != "constructive") {
                throw Error(ErrorCode::InvalidParameter, "--inner must be constructive or destructive");
            }
            circuit = nested_mzi(c.inner == "destructive" ? InnerTuning::Destructive : InnerTuning::Constructive);
        } else if (b == "ifm") {
            circuit = ifm(c.block);
        } else if (b == "naive_bit0") {
            circuit = naive_bit0(c.block);
        } else if (b == "dsm_bit0") {
            circuit = dsm_bit0(c.block);
        } else if (b == "zeno_chain") {
            circuit = zeno_chain({c.n, c.m, c.block, 0.0});
        } else {
            throw Error(ErrorCode::InvalidParameter, "unknown builder " + b);
        }
    }
    if (c.epsilon) {
        circuit = with_uniform_epsilon(std::move(circuit), *c.epsilon);
    }
    return with_epsilons(std::move(circuit), c.segment_epsilons);
}

inline double largest_epsilon(const Circuit &circuit) {
    double e = 0;
    for (const auto &t : circuit.taps) {
        e = std::max(e, t.epsilon);
    }
    return e;
}

inline Json profile_json(const TraceProfile &p) {
    return {{"context", p.context}, {"strengths", p.strengths}};
}

inline Json islands_json(const IslandReport &r) {
    Json islands = Json::array();
    for (const auto &i : r.islands) {
        islands.push_back({{"segments", i.segments},
                           {"min_strength", i.min_strength},
                           {"max_strength", i.max_strength},
                           {"total_strength", i.total_strength}});
    }
    return {{"tau", r.tau}, {"islands", islands}};
}

inline Json complex_json(Complex z) { return Json::array({z.real(), z.imag()}); }

inline std::string csv_rows(const TraceProfile &p) {
    std::ostringstream out;
    Json j = p.strengths;  // reuse the JSON number formatting for byte-stable output
    for (const auto &[segment, value] : j.items()) {
        out << segment << "," << value.dump() << "," << p.context << "\n";
    }
    return out.str();
}

struct Artifact {
    Json json;
    std::string csv;
};

inline Artifact cmd_simulate(const RunConfig &c) {
    const auto state = propagate_exact(make_circuit(c), {c.max_taps});
    return {{{"outcomes", outcome_distribution(state)}, {"norm", state.norm_squared()}}, ""};
}

inline Artifact cmd_trace(const RunConfig &c) {
    const auto circuit = make_circuit(c);
    const auto state = propagate_exact(circuit, {c.max_taps});
    const auto graph = build_trace_graph(circuit);
    const double tau = c.tau ? *c.tau : default_tau(largest_epsilon(circuit));
    Artifact a;
    TraceProfile profile;
    if (c.postselect) {
        const auto post = postselect_trace(state, *c.postselect);
        profile = post.profile;
        a.json["probability"] = post.probability;
    } else {
        profile = union_trace(state);
    }
    a.json["profile"] = profile_json(profile);
    a.json["island_report"] = islands_json(detect_islands(profile, graph, tau));
    a.csv = "segment,strength,context\n" + csv_rows(profile);
    return a;
}

inline Artifact cmd_worlds(const RunConfig &c) {
    const auto state = propagate_exact(make_circuit(c), {c.max_taps});
    Json list = Json::array();
    for (const auto &w : enumerate_worlds(state, c.floor)) {
        list.push_back({{"outcome", w.outcome},
                        {"position", w.position},
                        {"env_record", w.env_record},
                        {"amplitude", complex_json(w.amplitude)},
                        {"probability", w.probability}});
    }
    Json taps = Json::array();
    for (const auto &t : state.taps()) {
        taps.push_back(t.segment);
    }
    return {{{"worlds", list}, {"record_order", taps}}, ""};
}

inline Artifact cmd_weak(const RunConfig &c) {
    if (!c.postselect) {
        throw Error(ErrorCode::InvalidParameter, "weak needs --postselect");
    }
    const auto circuit = make_circuit(c);
    const auto tsv = forward_backward(circuit, *c.postselect);
    const auto w = weak_values(tsv);
    const auto prediction = weak_trace(tsv, tap_epsilons(circuit));
    Artifact a;
    Json wj = Json::object();
    for (const auto &[id, value] : w) {
        wj[id] = complex_json(value);
    }
    a.json["weak_values"] = wj;
    a.json["first_order"] = prediction.first_order;
    a.json["second_order"] = prediction.second_order;
    a.json["group_first_order"] = prediction.group_first_order;
    a.json["group_second_order"] = prediction.group_second_order;
    a.json["postselection_probability"] = std::norm(tsv.overlap);
    try {
        const auto cmp = compare_engines(circuit, *c.postselect, largest_epsilon(circuit), {c.max_taps});
        a.json["engine_comparison"] = {{"max_relative_deviation", cmp.max_relative_deviation},
                                       {"exact", cmp.exact},
                                       {"predicted", cmp.predicted}};
    } catch (const Error &e) {
        if (e.code() != ErrorCode::TooManyTaps) {
            throw;
        }
        a.json["engine_comparison"] = {{"skipped", e.what()}};
    }
    std::ostringstream csv;
    csv << "segment,strength,context\n";
    csv << csv_rows({"first_order:" + *c.postselect, prediction.first_order});
    csv << csv_rows({"second_order:" + *c.postselect, prediction.second_order});
    a.csv = csv.str();
    return a;
}

inline Artifact cmd_protocol(const RunConfig &c) {
    if (!c.seed) {
        throw Error(ErrorCode::InvalidParameter, "protocol needs --seed");
    }
    std::vector<int> bits;
    for (char ch : c.bits) {
        if (ch != '0' && ch != '1') {
            throw Error(ErrorCode::InvalidParameter, "--bits takes a string of 0 and 1");
        }
        bits.push_back(ch - '0');
    }
    bits.insert(bits.end(), c.zeros, 0);
    bits.insert(bits.end(), c.ones, 1);
    if (bits.empty()) {
        throw Error(ErrorCode::InvalidParameter, "no bits to send; use --bits, --zeros or --ones");
    }
    const ZenoParams params{c.n, c.m, false, c.epsilon.value_or(0.0)};
    const auto report = monte_carlo_transmit(bits, params, *c.seed, 0, {c.max_taps});
    Json per_bit = Json::object();
    for (const auto &[bit, stats] : report.per_bit) {
        Json counts = Json::object(), rates = Json::object(), expected = Json::object(), within = Json::object();
        for (const auto &[cls, p] : stats.expected) {
            const std::string name(bit_outcome_name(cls));
            counts[name] = stats.counts.count(cls) ? stats.counts.at(cls) : 0;
            rates[name] = stats.rate(cls);
            expected[name] = p;
            within[name] = stats.within(cls, 3);
        }
        per_bit[std::to_string(bit)] = {
            {"runs", stats.runs}, {"counts", counts}, {"rates", rates}, {"expected", expected}, {"within_3_sigma", within}};
    }
    return {{{"per_bit", per_bit}}, ""};
}

inline Artifact cmd_scaling(const RunConfig &c) {
    ZenoSweep sweep;
    if (c.family == "noblock-n" || c.family == "block-n") {
        const auto values = c.values.empty() ? std::vector<std::size_t>{5, 10, 20, 40} : c.values;
        sweep = ZenoSweep::over_n_with_m_squared(values, c.family == "block-n");
    } else if (c.family == "block-m" || c.family == "noblock-m") {
        const auto values = c.values.empty() ? std::vector<std::size_t>{50, 100, 200, 400} : c.values;
        sweep = ZenoSweep::over_m(c.fixed_n, values, c.family == "block-m");
    } else {
        throw Error(ErrorCode::InvalidParameter, "--family must be noblock-n, block-n, block-m or noblock-m");
    }
    if (c.observable != "error" && c.observable != "loss") {
        throw Error(ErrorCode::InvalidParameter, "--observable must be error or loss");
    }
    const auto fit = scaling_fit(sweep, c.observable == "error" ? Observable::Error : Observable::Loss);
    return {{{"parameter", fit.parameter},
             {"values", fit.values},
             {"observed", fit.observed},
             {"used", fit.used},
             {"slope", fit.slope},
             {"intercept", fit.intercept},
             {"half_width", fit.half_width}},
            ""};
}

inline Artifact cmd_dump(const RunConfig &c) { return {serialize(make_circuit(c)), ""}; }

inline int exit_code_for(const Error &e) {
    switch (e.category()) {
        case ErrorCategory::Config: return kConfigError;
        case ErrorCategory::Physics: return kPhysicsError;
        case ErrorCategory::Cap: return kCapError;
    }
    return kConfigError;
}

/// Executes one resolved command. The artifact goes to config.output when set, otherwise to `out`.
/// Nothing is written when the command fails.
inline int run(const RunConfig &raw, std::ostream &out, std::ostream &err) {
    try {
        const RunConfig c = resolve(raw);
        static const std::map<std::string, Artifact (*)(const RunConfig &)> commands{
            {"simulate", cmd_simulate}, {"trace", cmd_trace},     {"worlds", cmd_worlds}, {"weak", cmd_weak},
            {"protocol", cmd_protocol}, {"scaling", cmd_scaling}, {"dump", cmd_dump},
        };
        auto it = commands.find(c.command);
        if (it == commands.end()) {
            throw Error(ErrorCode::InvalidParameter, "unknown command " + c.command);
        }
        const Artifact artifact = it->second(c);
        std::string text;
        if (c.format == "csv") {
            if (artifact.csv.empty()) {
                throw Error(ErrorCode::InvalidParameter, "csv output is available for trace and weak only");
            }
            text = artifact.csv;
        } else if (c.command == "dump") {
            text = artifact.json.dump(2) + "\n";
        } else {
            text = Json{{"config", config_to_json(c)}, {"result", artifact.json}}.dump(2) + "\n";
        }
        if (c.output) {
            std::ofstream file(*c.output, std::ios::binary);
            if (!file) {
                throw Error(ErrorCode::Io, "cannot write " + *c.output);
            }
            file << text;
        } else {
            out << text;
        }
        return kOk;
    } catch (const Error &e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }
}

/// Parses command-line arguments (without the program name) and runs the command.
inline int main_with_args(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    CLI::App app{"tracesim: single-photon interferometer traces"};
    app.require_subcommand(1);
    RunConfig config;
    std::vector<std::string> segment_eps;

    auto add_circuit_options = [&](CLI::App *sub) {
        sub->add_option("--builder", config.builder, "protocol builder")->check(CLI::IsMember(builder_names()));
        sub->add_option("--preset", config.preset, "scenario preset (fig1 ... fig9-block)");
        sub->add_option("--circuit", config.circuit_file, "circuit JSON file");
        sub->add_option("--phase", config.phase, "mzi extra phase (rad)");
        sub->add_option("--inner", config.inner, "nested_mzi inner tuning: constructive | destructive");
        sub->add_flag("--block", config.block, "Bob blocks his arm");
        sub->add_option("--N", config.n, "zeno_chain outer cycles");
        sub->add_option("--M", config.m, "zeno_chain inner cycles");
        sub->add_option("--epsilon", config.epsilon, "uniform tap coupling");
        sub->add_option("--epsilon-for", segment_eps, "per-segment coupling SEGMENT=VALUE");
        sub->add_option("--postselect", config.postselect, "outcome label to condition on");
        sub->add_option("--seed", config.seed, "random seed");
        sub->add_option("--format", config.format, "json | csv");
        sub->add_option("--output,-o", config.output, "output file (default stdout)");
        sub->add_option("--max-taps", config.max_taps, "exact-engine tap cap");
    };
    for (const char *name : {"simulate", "trace", "worlds", "weak", "dump"}) {
        add_circuit_options(app.add_subcommand(name, std::string(name) + " a circuit"));
    }
    app.get_subcommand("worlds")->add_option("--floor", config.floor, "probability floor");
    app.get_subcommand("trace")->add_option("--tau", config.tau, "island threshold (default eps^2/2)");

    auto *protocol = app.add_subcommand("protocol", "Monte Carlo transmission through the Zeno chain");
    add_circuit_options(protocol);
    protocol->add_option("--bits", config.bits, "bit string, e.g. 0110");
    protocol->add_option("--zeros", config.zeros, "number of 0 bits");
    protocol->add_option("--ones", config.ones, "number of 1 bits");

    auto *scaling = app.add_subcommand("scaling", "log-log fits of Zeno-chain error and loss");
    add_circuit_options(scaling);
    scaling->add_option("--family", config.family, "noblock-n | block-n | block-m | noblock-m");
    scaling->add_option("--observable", config.observable, "error | loss");
    scaling->add_option("--values", config.values, "parameter values")->delimiter(',');
    scaling->add_option("--fixed-n", config.fixed_n, "N for the M sweeps");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp &) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError &e) {
        err << "usage error: " << e.what() << "\n";
        return kConfigError;
    }
    config.command = app.get_subcommands().front()->get_name();
    for (const auto &entry : segment_eps) {
        const auto eq = entry.find('=');
        try {
            if (eq == std::string::npos) {
                throw std::invalid_argument(entry);
            }
            config.segment_epsilons[entry.substr(0, eq)] = std::stod(entry.substr(eq + 1));
        } catch (const std::exception &) {
            err << "usage error: --epsilon-for expects SEGMENT=VALUE, got " << entry << "\n";
            return kConfigError;
        }
    }
    return run(config, out, err);
}

}  // namespace tracesim::cli
