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

#include <cstdio>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "nmqsd/config.hpp"

namespace nmqsd {

struct PresetRun {
    std::string subdir;  // empty for single-run presets
    RunConfig config;
};

struct Preset {
    std::string name;
    std::string description;
    std::vector<PresetRun> runs;
};

namespace detail {

inline RunConfig base_config(const std::string &model, double total_time, int outer, int inner) {
    RunConfig c;
    c.model = model;
    c.omega = 1.0;
    c.gamma = 1.0;
    c.total_time = total_time;
    c.schedule.outer_pulses = outer;
    c.schedule.inner_pulses = inner;
    c.trajectories = 2000;
    c.seed = 12345;
    c.initial_state.kind = "pure";
    c.initial_state.amplitudes = Vector3::Constant(1.0 / std::sqrt(3.0));
    return c;
}

inline std::string tag(const char *key, double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s_%.4g", key, v);
    return buf;
}

}  // namespace detail

/// Built-in scenarios. All use omega = 1, 2000 trajectories per component,
/// seed 12345 and the equal superposition (1, 1, 1)/sqrt(3) as the pure or
/// reference state.
inline std::vector<Preset> list_presets() {
    using detail::base_config;
    std::vector<Preset> out;

    const std::pair<const char *, int> fig1[] = {{"fig1a", 0}, {"fig1b", 20}, {"fig1c", 40}};
    for (const auto &[name, n] : fig1) {
        out.push_back({name, "dephasing, gamma=1, T=5, single-layer UDD with N=" + std::to_string(n),
                       {{"", base_config("dephasing", 5.0, n, 0)}}});
    }

    Preset fig2{"fig2", "dephasing, N=20 UDD, T=5, gamma in {0.5, 1, 5, 10}", {}};
    for (double g : {0.5, 1.0, 5.0, 10.0}) {
        RunConfig c = base_config("dephasing", 5.0, 20, 0);
        c.gamma = g;
        fig2.runs.push_back({detail::tag("gamma", g), c});
    }
    out.push_back(fig2);

    const double mixings[] = {1.0 / 3.0, 0.5, 2.0 / 3.0, 5.0 / 6.0, 1.0};
    Preset fig3{"fig3", "dephasing, gamma=1, T=5, Werner mixing M in {1/3, 1/2, 2/3, 5/6, 1}, N in {0, 10}", {}};
    for (int n : {0, 10}) {
        for (double m : mixings) {
            RunConfig c = base_config("dephasing", 5.0, n, 0);
            c.initial_state.kind = "werner";
            c.initial_state.mixing = m;
            fig3.runs.push_back({"N_" + std::to_string(n) + "/" + detail::tag("M", m), c});
        }
    }
    out.push_back(fig3);

    const std::tuple<const char *, int, int> fig4[] = {
        {"fig4a", 0, 0}, {"fig4b", 10, 10}, {"fig4c", 13, 2}, {"fig4d", 5, 10}};
    for (const auto &[name, n1, n2] : fig4) {
        out.push_back({name,
                       "dissipative, gamma=1, T=10, nested UDD with N1=" + std::to_string(n1) +
                           ", N2=" + std::to_string(n2),
                       {{"", base_config("dissipative", 10.0, n1, n2)}}});
    }

    Preset fig5{"fig5", "dissipative, T=10, nested UDD N1=20, N2=10, gamma in {1, 5, 10, 20}", {}};
    for (double g : {1.0, 5.0, 10.0, 20.0}) {
        RunConfig c = base_config("dissipative", 10.0, 20, 10);
        c.gamma = g;
        fig5.runs.push_back({detail::tag("gamma", g), c});
    }
    out.push_back(fig5);

    Preset fig6{"fig6",
                "dissipative, gamma=1, T=10, Werner mixing M in {1/3, 1/2, 2/3, 5/6, 1}, no control and N1=N2=10",
                {}};
    const std::pair<int, int> controls[] = {{0, 0}, {10, 10}};
    for (const auto &[n1, n2] : controls) {
        for (double m : mixings) {
            RunConfig c = base_config("dissipative", 10.0, n1, n2);
            c.initial_state.kind = "werner";
            c.initial_state.mixing = m;
            fig6.runs.push_back(
                {"N1_" + std::to_string(n1) + "_N2_" + std::to_string(n2) + "/" + detail::tag("M", m), c});
        }
    }
    out.push_back(fig6);
    return out;
}

inline Preset find_preset(const std::string &name) {
    for (auto &p : list_presets()) {
        if (p.name == name) {
            return p;
        }
    }
    throw ValidationError("unknown preset '" + name + "'");
}

}  // namespace nmqsd
