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

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include "tracesim/circuit.hpp"
#include "tracesim/tsv_engine.hpp"

namespace tracesim {

/// Which configuration of Bob's blocks a constraint is evaluated on.
enum class BlockVariant {
    AsBuilt,
    /// Blocks labelled "absorbed" replaced by mirrors.
    Unblocked,
};

struct TuningConstraint {
    enum class Kind { OutcomeNull, WeakValueNull };

    Kind kind = Kind::OutcomeNull;
    /// OutcomeNull: the nulled outcome. WeakValueNull: the postselected outcome.
    std::string outcome;
    /// WeakValueNull only.
    std::string segment;
    BlockVariant variant = BlockVariant::AsBuilt;
    double tolerance = 1e-12;

    static TuningConstraint outcome_null(std::string label, BlockVariant variant = BlockVariant::AsBuilt, double tolerance = 1e-12) {
        return {Kind::OutcomeNull, std::move(label), "", variant, tolerance};
    }
    static TuningConstraint weak_value_null(std::string segment, std::string postselect,
                                            BlockVariant variant = BlockVariant::AsBuilt, double tolerance = 1e-12) {
        return {Kind::WeakValueNull, std::move(postselect), std::move(segment), variant, tolerance};
    }
};

using PhaseAssignment = std::map<std::string, double>;

/// Names of the circuit's free phases, sorted.
inline std::vector<std::string> free_parameters(const Circuit &circuit) {
    std::set<std::string> names;
    for (const auto &layer : circuit.layers) {
        for (const auto &element : layer) {
            if (const auto *p = std::get_if<PhaseShift>(&element); p != nullptr && !p->param.empty()) {
                names.insert(p->param);
            }
        }
    }
    return {names.begin(), names.end()};
}

/// Current value of each free phase (first occurrence wins).
inline PhaseAssignment current_phases(const Circuit &circuit) {
    PhaseAssignment out;
    for (const auto &layer : circuit.layers) {
        for (const auto &element : layer) {
            if (const auto *p = std::get_if<PhaseShift>(&element); p != nullptr && !p->param.empty()) {
                out.emplace(p->param, p->delta);
            }
        }
    }
    return out;
}

/// Sets every phase element tagged with a parameter in `phases`. Unknown names throw.
inline Circuit apply_phases(Circuit circuit, const PhaseAssignment &phases) {
    std::set<std::string> seen;
    for (auto &layer : circuit.layers) {
        for (auto &element : layer) {
            if (auto *p = std::get_if<PhaseShift>(&element); p != nullptr && !p->param.empty()) {
                if (auto it = phases.find(p->param); it != phases.end()) {
                    p->delta = it->second;
                    seen.insert(p->param);
                }
            }
        }
    }
    for (const auto &[name, value] : phases) {
        if (seen.count(name) == 0) {
            throw Error(ErrorCode::InvalidParameter, "circuit has no free phase \"" + name + "\"");
        }
    }
    return circuit;
}

inline double wrap_phase(double x) {
    double y = std::fmod(x, 2 * kPi);
    if (y < 0) {
        y += 2 * kPi;
    }
    return y >= 2 * kPi ? 0.0 : y;
}

/// Shortest distance between two angles.
inline double circular_distance(double a, double b) {
    const double d = wrap_phase(a - b);
    return std::min(d, 2 * kPi - d);
}

/// Complex quantities each constraint drives to zero: the outcome amplitude(s), or the weak-value
/// numerator conj(phi_s) psi_s.
inline std::vector<Complex> constraint_residuals(const Circuit &circuit, const TuningConstraint &constraint) {
    const Circuit variant = constraint.variant == BlockVariant::Unblocked ? unblocked(circuit) : circuit;
    if (constraint.kind == TuningConstraint::Kind::OutcomeNull) {
        const auto layout = make_layout(variant);
        const auto positions = layout.positions_of(constraint.outcome);
        if (constraint.outcome.empty() || positions.empty()) {
            throw Error(ErrorCode::UnknownOutcome, "no terminal outcome named \"" + constraint.outcome + "\"");
        }
        const auto ops = compile_layers(variant, layout);
        std::vector<Complex> psi(layout.n_positions, Complex{0});
        psi[variant.source.index] = 1;
        for (const auto &layer : ops) {
            for (const auto &op : layer) {
                apply_local_op(op, psi.data(), 1, 0);
            }
        }
        std::vector<Complex> out;
        for (auto p : positions) {
            out.push_back(psi[p]);
        }
        return out;
    }
    if (variant.find_segment(constraint.segment) == nullptr) {
        throw Error(ErrorCode::UnknownSegment, "no segment " + constraint.segment);
    }
    const auto tsv = detail::two_state_unchecked(variant, constraint.outcome);
    return {std::conj(tsv.backward.at(constraint.segment)) * tsv.forward.at(constraint.segment)};
}

/// Largest residual magnitude over all constraints.
inline double max_constraint_residual(const Circuit &circuit, const std::vector<TuningConstraint> &constraints) {
    double worst = 0;
    for (const auto &c : constraints) {
        for (const auto &r : constraint_residuals(circuit, c)) {
            worst = std::max(worst, std::abs(r));
        }
    }
    return worst;
}

inline bool constraints_met(const Circuit &circuit, const std::vector<TuningConstraint> &constraints) {
    for (const auto &c : constraints) {
        for (const auto &r : constraint_residuals(circuit, c)) {
            if (!(std::abs(r) < c.tolerance)) {
                return false;
            }
        }
    }
    return true;
}

struct TuneOptions {
    std::uint64_t seed = 0;
    /// Start 0 is the template's own phases; later starts are uniform random in [0, 2 pi).
    std::size_t max_starts = 16;
};

namespace detail {

struct ResidualFunctor {
    using Scalar = double;
    enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
    using InputType = Eigen::VectorXd;
    using ValueType = Eigen::VectorXd;
    using JacobianType = Eigen::MatrixXd;

    const Circuit *circuit;
    const std::vector<TuningConstraint> *constraints;
    const std::vector<std::string> *names;
    int n_values;

    int inputs() const { return static_cast<int>(names->size()); }
    int values() const { return n_values; }

    Circuit with(const Eigen::VectorXd &x) const {
        PhaseAssignment phases;
        for (std::size_t i = 0; i < names->size(); i++) {
            phases[(*names)[i]] = x[static_cast<Eigen::Index>(i)];
        }
        return apply_phases(*circuit, phases);
    }

    int operator()(const Eigen::VectorXd &x, Eigen::VectorXd &f) const {
        const Circuit c = with(x);
        f.setZero(n_values);
        Eigen::Index k = 0;
        for (const auto &constraint : *constraints) {
            // Scale so that every constraint is judged against its own tolerance.
            const double scale = 1e-12 / constraint.tolerance;
            for (const auto &r : constraint_residuals(c, constraint)) {
                f[k++] = scale * r.real();
                f[k++] = scale * r.imag();
            }
        }
        return 0;
    }
};

}  // namespace detail

/// Solves for free phases so that every constraint residual drops below its tolerance.
/// Deterministic for a given template, constraint list and seed.
inline PhaseAssignment tune(const Circuit &circuit, const std::vector<TuningConstraint> &constraints, const TuneOptions &options = {}) {
    const auto names = free_parameters(circuit);
    for (const auto &c : constraints) {
        if (!(c.tolerance > 0)) {
            throw Error(ErrorCode::InvalidParameter, "constraint tolerance must be positive");
        }
    }
    auto normalized = [&](const PhaseAssignment &p) {
        PhaseAssignment out;
        for (const auto &[k, v] : p) {
            out[k] = wrap_phase(v);
        }
        return out;
    };
    const auto start = current_phases(circuit);
    if (constraints_met(circuit, constraints)) {
        return normalized(start);
    }
    if (names.empty()) {
        throw Error(ErrorCode::TuningFailed, "constraints violated and the circuit has no free phases");
    }

    std::size_t n_residuals = 0;
    for (const auto &c : constraints) {
        n_residuals += 2 * constraint_residuals(circuit, c).size();
    }
    // Levenberg-Marquardt wants at least as many residuals as unknowns; pad with zeros.
    const int n_values = static_cast<int>(std::max(n_residuals, names.size()));
    detail::ResidualFunctor functor{&circuit, &constraints, &names, n_values};

    std::mt19937_64 rng(options.seed);
    std::uniform_real_distribution<double> uniform(0.0, 2 * kPi);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t attempt = 0; attempt < std::max<std::size_t>(1, options.max_starts); attempt++) {
        Eigen::VectorXd x(static_cast<Eigen::Index>(names.size()));
        for (std::size_t i = 0; i < names.size(); i++) {
            x[static_cast<Eigen::Index>(i)] = attempt == 0 ? start.at(names[i]) : uniform(rng);
        }
        Eigen::NumericalDiff<detail::ResidualFunctor> numeric(functor);
        Eigen::LevenbergMarquardt<Eigen::NumericalDiff<detail::ResidualFunctor>> lm(numeric);
        lm.parameters.ftol = 1e-16;
        lm.parameters.xtol = 1e-16;
        lm.parameters.gtol = 0;
        lm.parameters.maxfev = 4000;
        lm.minimize(x);

        const Circuit solved = functor.with(x);
        if (constraints_met(solved, constraints)) {
            PhaseAssignment out;
            for (std::size_t i = 0; i < names.size(); i++) {
                out[names[i]] = x[static_cast<Eigen::Index>(i)];
            }
            return normalized(out);
        }
        best = std::min(best, max_constraint_residual(solved, constraints));
    }
    throw Error(ErrorCode::TuningFailed, "no phase assignment met the constraints after " + std::to_string(options.max_starts) +
                                             " starts; best residual " + std::to_string(best));
}

}  // namespace tracesim
