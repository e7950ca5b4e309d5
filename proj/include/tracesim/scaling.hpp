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
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "tracesim/protocols.hpp"
#include "tracesim/tsv_engine.hpp"

namespace tracesim {

/// Probabilities at or below this are indistinguishable from zero and left out of fits.
inline constexpr double kFitFloor = 1e-14;

struct ScalingFit {
    std::string parameter;
    std::vector<double> values;
    std::vector<double> observed;
    /// Whether each point entered the fit.
    std::vector<bool> used;
    double slope = 0;
    double intercept = 0;
    /// 95% confidence half-width of the slope (Student t, n - 2 degrees of freedom).
    double half_width = 0;
};

/// Least-squares slope of log(y) against log(x) over points with y > kFitFloor.
inline ScalingFit fit_loglog(std::vector<double> x, std::vector<double> y, std::string parameter = "x") {
    if (x.size() != y.size()) {
        throw Error(ErrorCode::InvalidParameter, "fit needs as many observations as parameter values");
    }
    ScalingFit fit;
    fit.parameter = std::move(parameter);
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); i++) {
        const bool ok = x[i] > 0 && y[i] > kFitFloor && std::isfinite(y[i]);
        fit.used.push_back(ok);
        if (ok) {
            lx.push_back(std::log(x[i]));
            ly.push_back(std::log(y[i]));
        }
    }
    fit.values = std::move(x);
    fit.observed = std::move(y);
    const std::size_t n = lx.size();
    if (n < 4) {
        throw Error(ErrorCode::DegenerateRange, "scaling fit needs at least 4 points above " + std::to_string(kFitFloor) + ", got " +
                                                    std::to_string(n));
    }
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; i++) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; i++) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (sxx <= 0) {
        throw Error(ErrorCode::DegenerateRange, "scaling fit needs distinct parameter values");
    }
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ssr = 0;
    for (std::size_t i = 0; i < n; i++) {
        const double r = ly[i] - (fit.intercept + fit.slope * lx[i]);
        ssr += r * r;
    }
    const double dof = static_cast<double>(n - 2);
    const double se = std::sqrt(ssr / dof / sxx);
    const boost::math::students_t dist(dof);
    fit.half_width = boost::math::quantile(boost::math::complement(dist, 0.025)) * se;
    return fit;
}

enum class Observable {
    /// Wrong detector: D_2 without block, D_1 with block.
    Error,
    /// Any sink.
    Loss,
};

/// A family of Zeno-chain runs; point i uses (n_values[i], m_values[i]).
struct ZenoSweep {
    bool block = false;
    std::vector<std::size_t> n_values;
    std::vector<std::size_t> m_values;
    /// "N" or "M": the fit's abscissa.
    std::string parameter = "N";

    /// N varies, M = N^2.
    static ZenoSweep over_n_with_m_squared(const std::vector<std::size_t> &ns, bool block) {
        ZenoSweep s{block, ns, {}, "N"};
        for (auto n : ns) {
            s.m_values.push_back(n * n);
        }
        return s;
    }
    /// M varies at fixed N.
    static ZenoSweep over_m(std::size_t n, const std::vector<std::size_t> &ms, bool block) {
        return {block, std::vector<std::size_t>(ms.size(), n), ms, "M"};
    }
};

inline double zeno_observable(const ZenoParams &params, Observable observable) {
    const auto dist = forward_outcome_distribution(zeno_chain(params));
    const double d1 = dist.count("D_1") ? dist.at("D_1") : 0.0;
    const double d2 = dist.count("D_2") ? dist.at("D_2") : 0.0;
    if (observable == Observable::Error) {
        return params.block ? d1 : d2;
    }
    double loss = 0;
    for (const auto &[label, p] : dist) {
        if (label != "D_1" && label != "D_2") {
            loss += p;
        }
    }
    return loss;
}

inline ScalingFit scaling_fit(const ZenoSweep &sweep, Observable observable) {
    if (sweep.n_values.size() != sweep.m_values.size()) {
        throw Error(ErrorCode::InvalidParameter, "sweep needs one M per N");
    }
    std::vector<double> x, y;
    for (std::size_t i = 0; i < sweep.n_values.size(); i++) {
        const ZenoParams p{sweep.n_values[i], sweep.m_values[i], sweep.block, 0.0};
        x.push_back(static_cast<double>(sweep.parameter == "M" ? p.M : p.N));
        y.push_back(zeno_observable(p, observable));
    }
    return fit_loglog(std::move(x), std::move(y), sweep.parameter);
}

}  // namespace tracesim
