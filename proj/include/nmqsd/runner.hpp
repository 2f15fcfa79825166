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
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "nmqsd/coefficients.hpp"
#include "nmqsd/config.hpp"
#include "nmqsd/csv.hpp"
#include "nmqsd/ensemble.hpp"
#include "nmqsd/noise.hpp"
#include "nmqsd/oracles.hpp"
#include "nmqsd/presets.hpp"
#include "nmqsd/version.hpp"

namespace nmqsd {

namespace fs = std::filesystem;

inline const std::vector<std::string> &results_columns() {
    static const std::vector<std::string> cols{"time", "fidelity", "fidelity_stderr", "jx", "jy", "jz", "trace",
                                               "trace_stderr"};
    return cols;
}

inline void write_series_csv(const DensitySeries &s, const fs::path &file) {
    CsvWriter w(file.string(), results_columns());
    for (std::size_t i = 0; i < s.size(); ++i) {
        w.row({s.times[i], s.fidelity[i], s.fidelity_stderr[i], s.jx[i], s.jy[i], s.jz[i], s.trace[i],
               s.trace_stderr[i]});
    }
    w.close();
}

struct RunFlags {
    bool deterministic = false;
    std::size_t dump_noise = 0;
    bool dump_coefficients = false;
};

struct RunSummary {
    fs::path directory;
    DensitySeries series;
    bool has_oracle = false;
    DensitySeries oracle;
    double wall_seconds = 0.0;
};

/// Deterministic reference matching the run, if one exists.
inline bool oracle_series(const RunConfig &c, const PulseSchedule &schedule, const std::vector<double> &times,
                          DensitySeries &out, std::string &note) {
    const Matrix3 rho0 = initial_state(c).density();
    const FidelityConvention conv = c.fidelity == "root" ? FidelityConvention::Root : FidelityConvention::Squared;
    const Frame frame = c.frame == "lab" ? Frame::Lab : Frame::Toggling;
    if (c.model == "dephasing") {
        const auto r = dephasing_analytic(schedule, c.omega, c.gamma, rho0, times);
        out = series_from_states(r.times, r.rho);
        note = "dephasing-analytic";
    } else if (schedule.pulse_count() == 0) {
        const auto r = lindblad_markov(c.omega, rho0, times, 1.0);
        out = series_from_states(r.times, r.rho);
        note = "lindblad-markov (rate 1; the Markov limit of the dissipative model)";
    } else {
        note = "none (no reference solution for the controlled dissipative model)";
        return false;
    }
    transform_series(out, schedule, frame, c.normalize_trace);
    derive_observables(out, rho0, conv);
    return true;
}

inline Json series_diagnostics(const DensitySeries &s) {
    double min_eig = std::numeric_limits<double>::infinity();
    double worst_trace_z = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        min_eig = std::min(min_eig, s.min_eigenvalue[i]);
        if (s.trace_stderr[i] > 0.0) {
            worst_trace_z = std::max(worst_trace_z, std::abs(s.trace[i] - 1.0) / s.trace_stderr[i]);
        }
    }
    Json d;
    d["positivity_tol"] = s.positivity_tol;
    d["positivity_violations"] = s.positivity_violations.size();
    d["min_eigenvalue"] = min_eig;
    d["max_trace_deviation_in_stderr"] = worst_trace_z;
    return d;
}

/// Runs one validated config into dir: metadata.json, results.csv and,
/// when available, oracle.csv.
inline RunSummary execute_run(const RunConfig &c, const fs::path &dir, const RunFlags &flags = {}) {
    validate(c);
    const auto start = std::chrono::steady_clock::now();
    const ModelParams params = model_params(c);
    const PulseSchedule schedule = build_schedule(c);
    const InitialStateSpec init = initial_state(c);
    const EnsembleOptions opt = ensemble_options(c, flags.deterministic);

    RunSummary out;
    out.directory = dir;
    out.series = run_ensemble(params, schedule, init, opt);
    std::string oracle_note;
    out.has_oracle = c.oracle && oracle_series(c, schedule, out.series.times, out.oracle, oracle_note);
    if (!c.oracle) {
        oracle_note = "disabled";
    }
    const RunGrid grid = make_run_grid(params, schedule, opt);
    out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    fs::create_directories(dir);
    write_series_csv(out.series, dir / "results.csv");
    if (out.has_oracle) {
        write_series_csv(out.oracle, dir / "oracle.csv");
    }
    if (flags.dump_coefficients) {
        write_coefficients_csv(solve_tables(params, schedule, grid.stages), (dir / "coefficients.csv").string());
    }
    for (std::size_t i = 0; i < flags.dump_noise; ++i) {
        const auto path = sample_ou_path(grid.stages, c.gamma, c.seed, i);
        write_noise_csv(path, (dir / ("noise_" + std::to_string(i) + ".csv")).string());
    }

    Json meta;
    meta["schema"] = kCsvSchema;
    meta["version"] = kVersion;
    meta["config"] = config_to_json(c);
    meta["pulse_times"] = {{"outer", schedule.outer_times}, {"inner", schedule.inner_times}};
    meta["pulse_count"] = schedule.pulse_count();
    meta["grid"] = {{"steps", grid.nodes.size() - 1}, {"max_step", grid.max_step}};
    meta["columns"] = results_columns();
    meta["oracle"] = oracle_note;
    meta["deterministic"] = flags.deterministic;
    meta["wall_time_seconds"] = out.wall_seconds;
    meta["diagnostics"] = series_diagnostics(out.series);
    std::ofstream f(dir / "metadata.json");
    if (!f) {
        throw std::ios_base::failure("cannot write " + (dir / "metadata.json").string());
    }
    f << meta.dump(2) << '\n';
    f.close();
    if (!f) {
        throw std::ios_base::failure("error writing " + (dir / "metadata.json").string());
    }
    return out;
}

}  // namespace nmqsd
