// Copyright 2026 The LSOC Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end for the experiment harness.
//
//   lsoc solve    --scenario grid --out runs/grid
//   lsoc rollout  --scenario grid --component 1 --seed 3
//   lsoc compose  --scenario uav-example2 --samples 500 --mode receding
//   lsoc compare  --config grid.json
//   lsoc weights  --scenario uav-example2
//
// Exit codes: 0 ok, 2 configuration, 3 convergence or numerical failure, 4 I/O.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "lsoc/harness/experiment.hpp"

namespace {

struct Overrides {
  std::string config;
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::optional<int> samples;
  std::optional<double> dt;
  std::optional<int> horizon;
  std::optional<double> tol;
  std::optional<std::string> out;
  std::optional<std::string> mode;
  std::optional<int> threads;
  std::optional<int> runs;
  std::optional<int> component;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON experiment config");
  cmd->add_option("--scenario", o.scenario, "built-in scenario: grid, uav-example1, uav-example2");
  cmd->add_option("--seed", o.seed, "base seed (run r uses seed + r)");
  cmd->add_option("--samples", o.samples, "rollouts per control query");
  cmd->add_option("--dt", o.dt, "integration step");
  cmd->add_option("--horizon", o.horizon, "rollout horizon in steps");
  cmd->add_option("--tol", o.tol, "desirability solver tolerance");
  cmd->add_option("--out", o.out, "output directory (default $LSOC_OUT_DIR or ./lsoc_out)");
  cmd->add_option("--mode", o.mode, "continuous execution: receding or tape")
      ->check(CLI::IsMember({"receding", "tape"}));
  cmd->add_option("--threads", o.threads, "rollout worker threads");
  cmd->add_option("--runs", o.runs, "number of seeded runs");
  cmd->add_option("--component", o.component, "component index for rollout");
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw lsoc::IoError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

lsoc::harness::ExperimentConfig resolve(const Overrides& o, lsoc::harness::Mode mode) {
  using lsoc::harness::Json;
  Json j;
  if (!o.config.empty()) {
    const std::string text = read_text(o.config);
    lsoc::harness::load_config(text);  // reports parse errors against the file as written
    j = Json::parse(text);
  } else {
    if (o.scenario.empty()) throw lsoc::ConfigError("scenario: pass --config or --scenario");
    j["scenario"] = o.scenario;
  }
  if (!o.scenario.empty() && !o.config.empty()) {
    if (j["scenario"].is_object()) {
      j["scenario"]["base"] = o.scenario;
    } else {
      j["scenario"] = o.scenario;
    }
  }
  j["mode"] = lsoc::harness::mode_name(mode);
  if (o.seed) j["seed"] = *o.seed;
  if (o.runs) j["runs"] = *o.runs;
  if (o.component) j["component"] = *o.component;
  if (o.samples) j["sampling"]["n_rollouts"] = *o.samples;
  if (o.dt) j["sampling"]["dt"] = *o.dt;
  if (o.horizon) j["sampling"]["horizon_steps"] = *o.horizon;
  if (o.threads) j["sampling"]["threads"] = *o.threads;
  if (o.tol) j["solver"]["tol"] = *o.tol;
  if (o.mode) j["execution"]["mode"] = *o.mode;
  if (o.out) {
    j["output_dir"] = *o.out;
  } else if (!j.contains("output_dir")) {
    if (const char* env = std::getenv("LSOC_OUT_DIR"); env && *env) j["output_dir"] = env;
  }
  return lsoc::harness::load_config(j.dump());
}

int exit_code(const lsoc::Error& e) {
  switch (e.category()) {
    case lsoc::ErrorCategory::kConfig:
    case lsoc::ErrorCategory::kStructure:
      return 2;
    case lsoc::ErrorCategory::kConvergence:
    case lsoc::ErrorCategory::kNumerical:
      return 3;
    case lsoc::ErrorCategory::kIo:
      return 4;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compositional linearly solvable optimal control for agent teams"};
  app.require_subcommand(1);
  Overrides o;
  struct Sub {
    const char* name;
    const char* help;
    lsoc::harness::Mode mode;
  };
  const Sub subs[] = {
      {"solve", "solve component tasks and write desirability caches", lsoc::harness::Mode::kSolveComponent},
      {"rollout", "run a component controller", lsoc::harness::Mode::kRunComponent},
      {"compose", "run the composite controller for the new task", lsoc::harness::Mode::kCompose},
      {"compare", "check composite against a direct solve", lsoc::harness::Mode::kCompare},
      {"weights", "print composition weights", lsoc::harness::Mode::kCompose},
  };
  for (const auto& s : subs) add_common(app.add_subcommand(s.name, s.help), o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    for (const auto& s : subs) {
      if (!app.got_subcommand(s.name)) continue;
      const auto cfg = resolve(o, s.mode);
      if (std::string(s.name) == "weights") {
        const auto report = lsoc::harness::weight_report(cfg);
        std::filesystem::create_directories(cfg.output_dir);
        lsoc::harness::write_json((std::filesystem::path(cfg.output_dir) / "weights.json").string(), report);
        for (const auto& sub : report["subsystems"]) {
          std::cout << "subsystem " << sub["subsystem"] << ": " << sub["weights"].dump() << "\n";
        }
        return 0;
      }
      const auto summary = lsoc::harness::run_experiment(cfg, std::cout);
      if (cfg.mode == lsoc::harness::Mode::kCompare && !summary["pass"].get<bool>()) return 3;
      return 0;
    }
  } catch (const lsoc::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e);
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
