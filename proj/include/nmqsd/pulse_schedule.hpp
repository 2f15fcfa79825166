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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "nmqsd/errors.hpp"

namespace nmqsd {

/// Uhrig decoupling times T_j = T sin^2(j pi / (2N + 2)), j = 1..N.
inline std::vector<double> udd_times(int count, double total_time) {
    if (count < 1) {
        throw InvalidArgument("udd_times: pulse count must be >= 1");
    }
    if (!(total_time > 0.0) || !std::isfinite(total_time)) {
        throw InvalidArgument("udd_times: total time must be positive and finite");
    }
    std::vector<double> times(static_cast<std::size_t>(count));
    const double denom = 2.0 * count + 2.0;
    for (int j = 1; j <= count; ++j) {
        const double s = std::sin(j * std::numbers::pi / denom);
        times[static_cast<std::size_t>(j - 1)] = total_time * s * s;
    }
    return times;
}

/// Outer P-pulse layer plus an inner Q-pulse UDD layer nested inside the
/// outer intervals. A single-layer schedule is the inner_count = 0 case.
struct PulseSchedule {
    double total_time = 0.0;
    int outer_count = 0;
    int inner_count = 0;
    bool include_boundary_intervals = false;
    std::vector<double> outer_times;
    std::vector<double> inner_times;

    std::size_t pulse_count() const { return outer_times.size() + inner_times.size(); }

    std::vector<double> all_pulse_times() const {
        std::vector<double> all;
        all.reserve(pulse_count());
        std::merge(outer_times.begin(), outer_times.end(), inner_times.begin(), inner_times.end(),
                   std::back_inserter(all));
        return all;
    }
};

/// Schedule with no pulses over [0, T].
inline PulseSchedule free_evolution(double total_time) {
    if (!(total_time > 0.0) || !std::isfinite(total_time)) {
        throw InvalidArgument("free_evolution: total time must be positive and finite");
    }
    PulseSchedule s;
    s.total_time = total_time;
    return s;
}

/// Outer UDD sequence of N1 pulses; inner UDD sequences of N2 pulses in each
/// interior outer interval [T_j, T_{j+1}), j = 1..N1-1, so the pulse total is
/// N1 + (N1 - 1) N2. With include_boundary_intervals the end intervals
/// [0, T_1) and [T_N1, T] are populated as well.
inline PulseSchedule nested_udd_times(int outer_count, int inner_count, double total_time,
                                      bool include_boundary_intervals = false) {
    if (inner_count < 0) {
        throw InvalidArgument("nested_udd_times: inner count must be >= 0");
    }
    PulseSchedule s;
    s.total_time = total_time;
    s.outer_count = outer_count;
    s.inner_count = inner_count;
    s.include_boundary_intervals = include_boundary_intervals;
    s.outer_times = udd_times(outer_count, total_time);
    if (inner_count == 0 || s.outer_times.empty()) {
        return s;
    }
    const double denom = 2.0 * inner_count + 2.0;
    auto fill = [&](double begin, double end) {
        for (int k = 1; k <= inner_count; ++k) {
            const double w = std::sin(k * std::numbers::pi / denom);
            s.inner_times.push_back(begin + (end - begin) * w * w);
        }
    };
    if (include_boundary_intervals) {
        fill(0.0, s.outer_times.front());
    }
    for (std::size_t j = 0; j + 1 < s.outer_times.size(); ++j) {
        fill(s.outer_times[j], s.outer_times[j + 1]);
    }
    if (include_boundary_intervals) {
        fill(s.outer_times.back(), total_time);
    }
    return s;
}

/// Single-layer UDD; count = 0 gives free evolution.
inline PulseSchedule single_layer_udd(int count, double total_time) {
    if (count < 0) {
        throw InvalidArgument("single_layer_udd: pulse count must be >= 0");
    }
    if (count == 0) {
        return free_evolution(total_time);
    }
    return nested_udd_times(count, 0, total_time);
}

/// Toggling-frame sign functions at one instant. l1 = q(1+p)/2 and
/// l2 = q(1-p)/2 weight J_- and J_+ in the dissipative coupling.
struct SignValues {
    int p = 1;
    int q = 1;
    int l1 = 1;
    int l2 = 0;
};

inline SignValues signs_from_parity(std::size_t outer_flips, std::size_t inner_flips) {
    SignValues v;
    v.p = (outer_flips % 2 == 0) ? 1 : -1;
    v.q = (inner_flips % 2 == 0) ? 1 : -1;
    v.l1 = v.q * (1 + v.p) / 2;
    v.l2 = v.q * (1 - v.p) / 2;
    return v;
}

/// Right-continuous evaluation: a pulse at exactly t has already acted.
inline SignValues signs_at(const PulseSchedule &schedule, double t) {
    if (!(t >= 0.0 && t <= schedule.total_time)) {
        throw InvalidArgument("signs_at: t outside [0, T]");
    }
    auto flips = [t](const std::vector<double> &times) {
        return static_cast<std::size_t>(std::upper_bound(times.begin(), times.end(), t) - times.begin());
    };
    return signs_from_parity(flips(schedule.outer_times), flips(schedule.inner_times));
}

/// Largest step allowed by the default resolution rule: min(1/(10 gamma), T/2000).
inline double default_max_step(double gamma, double total_time) {
    return std::min(1.0 / (10.0 * gamma), total_time / 2000.0);
}

inline constexpr int kDefaultStepsPerSegment = 20;

/// Pulse-aligned integration grid. Every pulse time and both end points are
/// nodes; each inter-pulse segment gets at least min_steps_per_segment uniform
/// steps and no step exceeds max_step. Extra breakpoints (e.g. output times)
/// become nodes too unless they sit within 1e-12 T of an existing one.
inline std::vector<double> segment_grid(const PulseSchedule &schedule, int min_steps_per_segment,
                                        double max_step = std::numeric_limits<double>::infinity(),
                                        std::span<const double> extra_breakpoints = {}) {
    if (min_steps_per_segment < 1) {
        throw InvalidArgument("segment_grid: min_steps_per_segment must be >= 1");
    }
    if (!(max_step > 0.0)) {
        throw InvalidArgument("segment_grid: max_step must be positive");
    }
    const double T = schedule.total_time;
    const double eps = 1e-12 * T;

    std::vector<double> pulse_nodes{0.0};
    for (double t : schedule.all_pulse_times()) {
        pulse_nodes.push_back(t);
    }
    pulse_nodes.push_back(T);

    std::vector<double> extras(extra_breakpoints.begin(), extra_breakpoints.end());
    std::sort(extras.begin(), extras.end());

    std::vector<double> grid;
    grid.push_back(0.0);
    auto extra_it = extras.begin();
    for (std::size_t s = 0; s + 1 < pulse_nodes.size(); ++s) {
        const double a = pulse_nodes[s];
        const double b = pulse_nodes[s + 1];
        const double h = std::min(max_step, (b - a) / min_steps_per_segment);

        std::vector<double> cuts{a};
        while (extra_it != extras.end() && *extra_it < b - eps) {
            if (*extra_it > cuts.back() + eps) {
                cuts.push_back(*extra_it);
            }
            ++extra_it;
        }
        // skip extras coinciding with the pulse node b
        while (extra_it != extras.end() && *extra_it <= b + eps) {
            ++extra_it;
        }
        cuts.push_back(b);

        for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
            const double lo = cuts[c];
            const double hi = cuts[c + 1];
            const auto m = std::max<long>(1, static_cast<long>(std::ceil((hi - lo) / h - 1e-9)));
            for (long i = 1; i < m; ++i) {
                grid.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(m));
            }
            grid.push_back(hi);
        }
    }
    return grid;
}

/// Grid with every step midpoint inserted: node k of the integration grid is
/// entry 2k, the midpoint of step k is entry 2k + 1. Noise samples and memory
/// coefficients live on this grid so RK4 stages read exact values.
inline std::vector<double> stage_grid(std::span<const double> nodes) {
    if (nodes.size() < 2) {
        throw InvalidArgument("stage_grid: need at least two nodes");
    }
    std::vector<double> out(2 * nodes.size() - 1);
    for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
        out[2 * k] = nodes[k];
        out[2 * k + 1] = 0.5 * (nodes[k] + nodes[k + 1]);
    }
    out.back() = nodes.back();
    return out;
}

/// Signs on each step [grid[k], grid[k+1]), evaluated at the step midpoint.
inline std::vector<SignValues> step_signs(const PulseSchedule &schedule, std::span<const double> grid) {
    std::vector<SignValues> out;
    out.reserve(grid.empty() ? 0 : grid.size() - 1);
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
        out.push_back(signs_at(schedule, 0.5 * (grid[k] + grid[k + 1])));
    }
    return out;
}

/// Throws GridMisalignment if a pulse time is not a node (to 1e-12 T) or the
/// grid does not span [0, T].
inline void require_aligned(const PulseSchedule &schedule, std::span<const double> grid) {
    const double eps = 1e-12 * schedule.total_time;
    if (grid.size() < 2 || std::abs(grid.front()) > eps || std::abs(grid.back() - schedule.total_time) > eps) {
        throw GridMisalignment("grid must span [0, T]");
    }
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
        if (!(grid[k + 1] > grid[k])) {
            throw GridMisalignment("grid must be strictly increasing");
        }
    }
    for (double t : schedule.all_pulse_times()) {
        auto it = std::lower_bound(grid.begin(), grid.end(), t - eps);
        if (it == grid.end() || std::abs(*it - t) > eps) {
            throw GridMisalignment("pulse time " + std::to_string(t) + " is not a grid node");
        }
    }
}

/// Index of the node nearest to each requested time.
inline std::vector<std::size_t> nearest_nodes(std::span<const double> grid, std::span<const double> times) {
    std::vector<std::size_t> idx;
    idx.reserve(times.size());
    for (double t : times) {
        auto it = std::lower_bound(grid.begin(), grid.end(), t);
        std::size_t k = static_cast<std::size_t>(it - grid.begin());
        if (k == grid.size()) {
            k = grid.size() - 1;
        } else if (k > 0 && (t - grid[k - 1]) < (grid[k] - t)) {
            --k;
        }
        idx.push_back(k);
    }
    return idx;
}

/// n evenly spaced times over [0, T], endpoints included.
inline std::vector<double> linspace(double begin, double end, std::size_t n) {
    if (n < 2) {
        throw InvalidArgument("linspace: need at least two points");
    }
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = begin + (end - begin) * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    out.back() = end;
    return out;
}

}  // namespace nmqsd
