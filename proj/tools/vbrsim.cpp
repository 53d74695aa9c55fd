// Copyright 2026 The vbrsched Authors
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

#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "vbrsched/config.hpp"
#include "vbrsched/io.hpp"
#include "vbrsched/simulator.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "Downlink power scheduler for stored VBR video sessions sharing one cell:\n"
      "per-slot two-step allocation with a distributed dual-decomposition solver,\n"
      "plus a diversity-aware baseline for comparison."};

  std::string config_path, preset, allocator, out_dir;
  long slots = -1;
  long long seed = -1;
  int users = 0;
  bool log_all_rounds = false;

  app.add_option("--config", config_path, "Config file (flat key = value sections)");
  app.add_option("--preset", preset, "Experiment preset (sec5)");
  app.add_option("--allocator", allocator, "proposed | diversity")
      ->check(CLI::IsMember({"proposed", "diversity"}));
  app.add_option("--slots", slots, "Number of slots to simulate (0 = full traces)");
  app.add_option("--seed", seed, "Master RNG seed");
  app.add_option("--users", users, "Number of users (overrides config/preset)");
  app.add_option("--out", out_dir, "Output directory");
  app.add_flag("--log-all-rounds", log_all_rounds,
               "Log dual-solver rounds for every solved slot, not just the last");

  CLI11_PARSE(app, argc, argv);

  try {
    vbrsched::IniMap map;
    if (!config_path.empty()) map = vbrsched::parse_ini_file(config_path);
    vbrsched::RunConfig cfg = vbrsched::make_config(map, preset);

    if (!allocator.empty())
      cfg.allocator = allocator == "diversity" ? vbrsched::Allocator::kDiversity
                                               : vbrsched::Allocator::kProposed;
    if (slots >= 0) cfg.slots = slots;
    if (seed >= 0) {
      cfg.seed = static_cast<std::uint64_t>(seed);
    } else if (map.find("run.seed") == map.end()) {
      if (const char* env = std::getenv("VBR_SEED"))
        cfg.seed = static_cast<std::uint64_t>(std::stoull(env));
    }
    if (users > 0) cfg.users = users;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (log_all_rounds) cfg.log_all_rounds = true;

    vbrsched::validate(cfg);
    const vbrsched::RunSummary summary = vbrsched::run_to_directory(cfg);
    vbrsched::print_summary_text(summary, std::cout);
    std::cout << "outputs = " << cfg.out_dir << "/{slots.csv,rounds.csv,summary.json,config.ini}\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
