// Copyright 2026 The nmqsd Authors
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
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "nmqsd/ensemble.hpp"
#include "nmqsd/errors.hpp"
#include "nmqsd/model.hpp"
#include "nmqsd/pulse_schedule.hpp"

namespace nmqsd {

/// Malformed input: syntax, unknown keys, wrong types.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Well-formed input with a value out of range.
class ValidationError : public InvalidArgument {
  public:
    using InvalidArgument::InvalidArgument;
};

using Json = nlohmann::ordered_json;

struct ScheduleConfig {
    int outer_pulses = 0;
    int inner_pulses = 0;
    bool include_boundary_intervals = false;
};

struct InitialStateConfig {
    std::string kind = "pure";
    Vector3 amplitudes = Vector3::Constant(1.0 / std::sqrt(3.0));
    double mixing = 1.0;
};

struct RunConfig {
    std::string model = "dephasing";
    double omega = 1.0;
    double gamma = 1.0;
    double total_time = 5.0;
    ScheduleConfig schedule;
    std::int64_t trajectories = 2000;
    std::uint64_t seed = 12345;
    int steps_per_segment = kDefaultStepsPerSegment;
    double max_step = 0.0;
    InitialStateConfig initial_state;
    std::int64_t output_times = static_cast<std::int64_t>(kDefaultOutputTimes);
    std::string fidelity = "squared";
    std::string frame = "toggling";
    bool normalize_trace = false;
    bool oracle = true;
    std::string output = "nmqsd-out";
};

namespace detail {

inline void require_keys(const Json &j, const std::set<std::string> &allowed, const std::string &where) {
    if (!j.is_object()) {
        throw ConfigError(where + " must be an object");
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!allowed.count(it.key())) {
            throw ConfigError("unknown key '" + (where.empty() ? "" : where + ".") + it.key() + "'");
        }
    }
}

template <class T>
void read(const Json &j, const char *key, T &dst, const std::string &where) {
    if (!j.contains(key)) {
        return;
    }
    const Json &v = j.at(key);
    bool ok = false;
    if constexpr (std::is_same_v<T, bool>) {
        ok = v.is_boolean();
    } else if constexpr (std::is_same_v<T, std::string>) {
        ok = v.is_string();
    } else if constexpr (std::is_floating_point_v<T>) {
        ok = v.is_number();
    } else if constexpr (std::is_unsigned_v<T>) {
        ok = v.is_number_unsigned() || (v.is_number_integer() && v.template get<std::int64_t>() >= 0);
    } else {
        ok = v.is_number_integer();
    }
    if (!ok) {
        throw ConfigError("key '" + (where.empty() ? "" : where + ".") + key + "' has the wrong type");
    }
    dst = v.template get<T>();
}

inline Complex read_amplitude(const Json &v) {
    if (v.is_number()) {
        return {v.get<double>(), 0.0};
    }
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
        return {v[0].get<double>(), v[1].get<double>()};
    }
    throw ConfigError("amplitudes must be numbers or [re, im] pairs");
}

inline double round_trip_safe(double v) { return v == 0.0 ? 0.0 : v; }

}  // namespace detail

/// Parses a config object; amplitudes are normalized. Throws ConfigError on
/// unknown keys or wrong types. Ranges are checked by validate().
inline RunConfig config_from_json(const Json &j) {
    detail::require_keys(j,
                         {"model", "omega", "gamma", "total_time", "schedule", "trajectories", "seed",
                          "steps_per_segment", "max_step", "initial_state", "output_times", "fidelity", "frame",
                          "normalize_trace", "oracle", "output"},
                         "");
    RunConfig c;
    detail::read(j, "model", c.model, "");
    detail::read(j, "omega", c.omega, "");
    detail::read(j, "gamma", c.gamma, "");
    detail::read(j, "total_time", c.total_time, "");
    detail::read(j, "trajectories", c.trajectories, "");
    detail::read(j, "seed", c.seed, "");
    detail::read(j, "steps_per_segment", c.steps_per_segment, "");
    detail::read(j, "max_step", c.max_step, "");
    detail::read(j, "output_times", c.output_times, "");
    detail::read(j, "fidelity", c.fidelity, "");
    detail::read(j, "frame", c.frame, "");
    detail::read(j, "normalize_trace", c.normalize_trace, "");
    detail::read(j, "oracle", c.oracle, "");
    detail::read(j, "output", c.output, "");
    if (j.contains("schedule")) {
        const Json &s = j.at("schedule");
        detail::require_keys(s, {"outer_pulses", "inner_pulses", "include_boundary_intervals"}, "schedule");
        detail::read(s, "outer_pulses", c.schedule.outer_pulses, "schedule");
        detail::read(s, "inner_pulses", c.schedule.inner_pulses, "schedule");
        detail::read(s, "include_boundary_intervals", c.schedule.include_boundary_intervals, "schedule");
    }
    if (j.contains("initial_state")) {
        const Json &s = j.at("initial_state");
        detail::require_keys(s, {"kind", "amplitudes", "mixing"}, "initial_state");
        detail::read(s, "kind", c.initial_state.kind, "initial_state");
        detail::read(s, "mixing", c.initial_state.mixing, "initial_state");
        if (s.contains("amplitudes")) {
            const Json &a = s.at("amplitudes");
            if (!a.is_array() || a.size() != 3) {
                throw ConfigError("initial_state.amplitudes must list three entries");
            }
            Vector3 v;
            for (int i = 0; i < 3; ++i) {
                v(i) = detail::read_amplitude(a[static_cast<std::size_t>(i)]);
            }
            const double n = v.norm();
            if (!(n > 0.0) || !std::isfinite(n)) {
                throw ValidationError("initial_state.amplitudes must have a finite nonzero norm");
            }
            c.initial_state.amplitudes = v / n;
        }
    }
    return c;
}

inline RunConfig parse_config(const std::string &text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const nlohmann::json::parse_error &e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return config_from_json(j);
}

inline Json config_to_json(const RunConfig &c) {
    Json amps = Json::array();
    for (int i = 0; i < 3; ++i) {
        amps.push_back({detail::round_trip_safe(c.initial_state.amplitudes(i).real()),
                        detail::round_trip_safe(c.initial_state.amplitudes(i).imag())});
    }
    Json j;
    j["model"] = c.model;
    j["omega"] = c.omega;
    j["gamma"] = c.gamma;
    j["total_time"] = c.total_time;
    j["schedule"] = {{"outer_pulses", c.schedule.outer_pulses},
                     {"inner_pulses", c.schedule.inner_pulses},
                     {"include_boundary_intervals", c.schedule.include_boundary_intervals}};
    j["trajectories"] = c.trajectories;
    j["seed"] = c.seed;
    j["steps_per_segment"] = c.steps_per_segment;
    j["max_step"] = c.max_step;
    j["initial_state"] = {{"kind", c.initial_state.kind}, {"amplitudes", amps}, {"mixing", c.initial_state.mixing}};
    j["output_times"] = c.output_times;
    j["fidelity"] = c.fidelity;
    j["frame"] = c.frame;
    j["normalize_trace"] = c.normalize_trace;
    j["oracle"] = c.oracle;
    j["output"] = c.output;
    return j;
}

/// Range checks, all before any computation.
inline void validate(const RunConfig &c) {
    auto fail = [](const std::string &m) { throw ValidationError(m); };
    if (c.model != "dephasing" && c.model != "dissipative") {
        fail("model must be 'dephasing' or 'dissipative'");
    }
    if (!std::isfinite(c.omega)) {
        fail("omega must be finite");
    }
    if (!(c.gamma > 0.0) || !std::isfinite(c.gamma)) {
        fail("gamma must be positive");
    }
    if (!(c.total_time > 0.0) || !std::isfinite(c.total_time)) {
        fail("total_time must be positive");
    }
    if (c.schedule.outer_pulses < 0 || c.schedule.outer_pulses > 10000) {
        fail("schedule.outer_pulses must lie in [0, 10000]");
    }
    if (c.schedule.inner_pulses < 0 || c.schedule.inner_pulses > 10000) {
        fail("schedule.inner_pulses must lie in [0, 10000]");
    }
    if (c.schedule.inner_pulses > 0 && c.schedule.outer_pulses == 0) {
        fail("inner pulses need at least one outer pulse");
    }
    if (c.trajectories < 2) {
        fail("trajectories must be at least 2");
    }
    if (c.steps_per_segment < 1) {
        fail("steps_per_segment must be at least 1");
    }
    if (!(c.max_step >= 0.0) || !std::isfinite(c.max_step)) {
        fail("max_step must be >= 0 (0 selects the default)");
    }
    if (c.output_times < 2 || c.output_times > 1000000) {
        fail("output_times must lie in [2, 1000000]");
    }
    if (c.initial_state.kind != "pure" && c.initial_state.kind != "werner") {
        fail("initial_state.kind must be 'pure' or 'werner'");
    }
    if (std::abs(c.initial_state.amplitudes.norm() - 1.0) > 1e-10) {
        fail("initial_state.amplitudes must have unit norm");
    }
    if (c.initial_state.kind == "werner" &&
        !(c.initial_state.mixing >= 1.0 / 3.0 - 1e-12 && c.initial_state.mixing <= 1.0 + 1e-12)) {
        fail("initial_state.mixing must lie in [1/3, 1]");
    }
    if (c.fidelity != "squared" && c.fidelity != "root") {
        fail("fidelity must be 'squared' or 'root'");
    }
    if (c.frame != "toggling" && c.frame != "lab") {
        fail("frame must be 'toggling' or 'lab'");
    }
    if (c.output.empty()) {
        fail("output must name a directory");
    }
}

inline ModelParams model_params(const RunConfig &c) { return {parse_model(c.model), c.omega, c.gamma}; }

inline PulseSchedule build_schedule(const RunConfig &c) {
    if (c.schedule.outer_pulses == 0 || (c.schedule.inner_pulses == 0 && !c.schedule.include_boundary_intervals)) {
        return single_layer_udd(c.schedule.outer_pulses, c.total_time);
    }
    return nested_udd_times(c.schedule.outer_pulses, c.schedule.inner_pulses, c.total_time,
                            c.schedule.include_boundary_intervals);
}

inline InitialStateSpec initial_state(const RunConfig &c) {
    return c.initial_state.kind == "pure" ? InitialStateSpec::pure(c.initial_state.amplitudes)
                                          : InitialStateSpec::werner(c.initial_state.mixing, c.initial_state.amplitudes);
}

inline EnsembleOptions ensemble_options(const RunConfig &c, bool deterministic) {
    EnsembleOptions o;
    o.trajectories = static_cast<std::size_t>(c.trajectories);
    o.master_seed = c.seed;
    o.output_times = linspace(0.0, c.total_time, static_cast<std::size_t>(c.output_times));
    o.steps_per_segment = c.steps_per_segment;
    o.max_step = c.max_step;
    o.deterministic = deterministic;
    o.fidelity = c.fidelity == "root" ? FidelityConvention::Root : FidelityConvention::Squared;
    o.frame = c.frame == "lab" ? Frame::Lab : Frame::Toggling;
    o.normalize_trace = c.normalize_trace;
    return o;
}

/// Applies "a.b=value" overrides to a config object. The value is parsed as
/// JSON when possible and taken as a string otherwise.
inline void apply_override(Json &j, const std::string &assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ConfigError("override '" + assignment + "' is not of the form key=value");
    }
    const std::string path = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);
    Json value;
    try {
        value = Json::parse(raw);
    } catch (const nlohmann::json::parse_error &) {
        value = raw;
    }
    Json *node = &j;
    std::size_t start = 0;
    for (;;) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (key.empty()) {
            throw ConfigError("override '" + assignment + "' has an empty key");
        }
        if (!node->is_object()) {
            throw ConfigError("override '" + assignment + "' descends into a non-object");
        }
        if (dot == std::string::npos) {
            (*node)[key] = value;
            return;
        }
        node = &(*node)[key];
        if (node->is_null()) {
            *node = Json::object();
        }
        start = dot + 1;
    }
}

}  // namespace nmqsd
