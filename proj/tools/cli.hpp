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

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <ios>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nmqsd/config.hpp"
#include "nmqsd/errors.hpp"
#include "nmqsd/presets.hpp"
#include "nmqsd/runner.hpp"

namespace nmqsd::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kValidation = 2, kNumerical = 3, kIo = 4 };

struct PlannedRun {
    RunConfig config;
    std::filesystem::path directory;
};

inline int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
    CLI::App app{"Non-Markovian quantum state diffusion of a driven qutrit"};
    app.require_subcommand(1);

    auto *run = app.add_subcommand("run", "run a config file or a built-in preset");
    std::string config_path;
    std::string preset_name;
    std::vector<std::string> overrides;
    bool deterministic = false;
    std::string out_dir;
    std::optional<std::int64_t> trajectories;
    std::optional<std::uint64_t> seed;
    std::size_t dump_noise = 0;
    bool dump_coefficients = false;
    auto *cfg_opt = run->add_option("-c,--config", config_path, "JSON run description");
    auto *preset_opt = run->add_option("-p,--preset", preset_name, "built-in preset name (see 'presets')");
    cfg_opt->excludes(preset_opt);
    run->add_option("-s,--set", overrides, "override key=value (dotted keys, e.g. schedule.outer_pulses=20)");
    run->add_flag("-d,--deterministic", deterministic, "single-threaded reproducible mode");
    run->add_option("-o,--out", out_dir, "output directory (overrides the config 'output' key)");
    run->add_option("-n,--trajectories", trajectories, "trajectory count override");
    run->add_option("--seed", seed, "master seed override");
    run->add_option("--dump-noise", dump_noise, "write the first N noise paths as CSV");
    run->add_flag("--dump-coefficients", dump_coefficients, "write the memory-function table as CSV");

    auto *presets = app.add_subcommand("presets", "list built-in presets");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    if (presets->parsed()) {
        for (const auto &p : list_presets()) {
            out << p.name << "\t" << p.description << "\n";
        }
        return kOk;
    }

    if (config_path.empty() && preset_name.empty()) {
        err << "error: run needs --config or --preset\n";
        return kUsage;
    }

    std::vector<PlannedRun> plan;
    try {
        std::vector<std::pair<std::string, Json>> sources;
        if (!config_path.empty()) {
            std::ifstream f(config_path);
            if (!f) {
                err << "error: cannot read config '" << config_path << "'\n";
                return kIo;
            }
            std::stringstream ss;
            ss << f.rdbuf();
            try {
                sources.emplace_back("", Json::parse(ss.str()));
            } catch (const nlohmann::json::parse_error &e) {
                throw ConfigError(std::string("config is not valid JSON: ") + e.what());
            }
        } else {
            for (const auto &r : find_preset(preset_name).runs) {
                sources.emplace_back(r.subdir, config_to_json(r.config));
            }
        }
        for (auto &[subdir, j] : sources) {
            for (const auto &o : overrides) {
                apply_override(j, o);
            }
            if (trajectories) {
                j["trajectories"] = *trajectories;
            }
            if (seed) {
                j["seed"] = *seed;
            }
            if (!out_dir.empty()) {
                j["output"] = out_dir;
            }
            RunConfig c = config_from_json(j);
            validate(c);
            std::filesystem::path dir = c.output;
            if (!subdir.empty()) {
                dir /= subdir;
            }
            plan.push_back({c, dir});
        }
    } catch (const ConfigError &e) {
        err << "config error: " << e.what() << "\n";
        return kUsage;
    } catch (const InvalidArgument &e) {
        err << "validation error: " << e.what() << "\n";
        return kValidation;
    }

    RunFlags flags;
    flags.deterministic = deterministic;
    flags.dump_noise = dump_noise;
    flags.dump_coefficients = dump_coefficients;
    for (const auto &p : plan) {
        try {
            const auto summary = execute_run(p.config, p.directory, flags);
            out << p.directory.string() << "\t" << summary.series.size() << " output times, "
                << summary.wall_seconds << " s\n";
        } catch (const InvalidArgument &e) {
            err << "validation error: " << e.what() << "\n";
            return kValidation;
        } catch (const NumericalFault &e) {
            err << "numerical fault: " << e.what() << "\n";
            return kNumerical;
        } catch (const FactorizationFailure &e) {
            err << "numerical fault: " << e.what() << "\n";
            return kNumerical;
        } catch (const GridMisalignment &e) {
            err << "numerical fault: " << e.what() << "\n";
            return kNumerical;
        } catch (const std::ios_base::failure &e) {
            err << "i/o error: " << e.what() << "\n";
            return kIo;
        } catch (const std::filesystem::filesystem_error &e) {
            err << "i/o error: " << e.what() << "\n";
            return kIo;
        }
    }
    return kOk;
}

}  // namespace nmqsd::cli
