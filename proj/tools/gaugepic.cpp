// Copyright 2026 The gaugepic Authors
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

// gaugepic: batch runner for gauge-picture experiments.
//
//   gaugepic validate --config configs/validate_tfim6.json --seed 11 --out run.jsonl
//
// Log verbosity follows SPDLOG_LEVEL (e.g. SPDLOG_LEVEL=debug).

#include "gaugepic/app/runner.hpp"

#include <CLI11.hpp>
#include <spdlog/cfg/env.h>
#include <spdlog/sinks/stdout_color_sinks.h>

#include <fstream>
#include <iostream>
#include <optional>

namespace {

struct Overrides {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::string> format;
    std::optional<double> dt;
    std::optional<std::string> mode;
};

void add_common_options(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config_path, "Experiment config (JSON)")->required();
    cmd->add_option("--seed", o.seed, "Seed for random states, gates and measurement sampling");
    cmd->add_option("--out", o.out, "Output file (default: standard output)");
    cmd->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
    cmd->add_option("--dt", o.dt, "Integrator time step");
    cmd->add_option("--mode", o.mode, "Integration mode")->check(CLI::IsMember({"generator", "direct"}));
}

gaugepic::app::ExperimentConfig apply_overrides(gaugepic::app::ExperimentConfig cfg, const Overrides& o) {
    using namespace gaugepic::app;
    if (o.seed) cfg.seed = *o.seed;
    if (o.out) cfg.output_path = *o.out;
    if (o.format) cfg.format = *parse_format(*o.format);
    if (o.dt) cfg.integrator.dt = *o.dt;
    if (o.mode) cfg.mode = *parse_mode(*o.mode);
    validate_config(cfg);
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    using namespace gaugepic::app;
    spdlog::set_default_logger(spdlog::stderr_color_st("gaugepic"));
    spdlog::set_pattern("[%l] %v");
    spdlog::cfg::load_env_levels();

    CLI::App app{"Gauge-picture quantum dynamics experiments"};
    app.require_subcommand(1);
    Overrides overrides;
    const std::vector<std::pair<const char*, const char*>> commands{
        {"evolve", "Integrate and record observables at the configured times"},
        {"circuit", "Apply a seeded brickwork circuit and audit light cones"},
        {"measure", "Evolve, measure one site, and follow the collapsed state"},
        {"validate", "Evolve and compare every observable with exact dynamics"},
        {"bench", "Time integration steps against system size and mode"},
    };
    for (const auto& [name, help] : commands) add_common_options(app.add_subcommand(name, help), overrides);
    CLI11_PARSE(app, argc, argv);

    const std::string command = app.get_subcommands().front()->get_name();
    ExperimentConfig cfg;
    try {
        cfg = load_config(overrides.config_path);
        if (command != to_string(cfg.scenario)) {
            throw ConfigError("scenario", "config describes a " + std::string(to_string(cfg.scenario)) +
                                              " scenario, but the " + command + " command was given");
        }
        cfg = apply_overrides(std::move(cfg), overrides);
    } catch (const ConfigError& e) {
        spdlog::error("invalid config: {}", e.what());
        return kExitConfigError;
    }

    std::ofstream file;
    if (!cfg.output_path.empty()) {
        file.open(cfg.output_path, std::ios::binary | std::ios::trunc);
        if (!file) {
            spdlog::error("cannot open output file {}", cfg.output_path);
            return kExitConfigError;
        }
    }
    std::ostream& out = cfg.output_path.empty() ? std::cout : file;
    try {
        const int code = run(cfg, out);
        out.flush();
        if (code != kExitOk) spdlog::warn("run finished with exit code {}", code);
        return code;
    } catch (const ConfigError& e) {
        spdlog::error("invalid config: {}", e.what());
        return kExitConfigError;
    }
}
