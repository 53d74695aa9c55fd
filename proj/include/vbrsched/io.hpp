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

#ifndef VBRSCHED_IO_HPP_
#define VBRSCHED_IO_HPP_

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "vbrsched/simulator.hpp"

namespace vbrsched {

namespace detail {
// Fixed double formatting so identical runs produce identical bytes.
inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}
}  // namespace detail

inline void write_slots_header(std::ostream& os) {
  os << "slot,user,power_w,sinr,delivered_bits,buffer_bits,utilization,event,path\n";
}

inline void append_slot_rows(std::ostream& os, std::span<const SlotUserRecord> rows) {
  using detail::fmt;
  for (const auto& r : rows) {
    os << r.slot << ',' << r.user << ',' << fmt(r.power_w) << ',' << fmt(r.sinr) << ','
       << fmt(r.delivered_bits) << ',' << fmt(r.buffer_bits) << ',' << fmt(r.utilization)
       << ',' << to_string(r.event) << ',' << to_string(r.path) << '\n';
  }
}

inline void write_rounds_header(std::ostream& os, int users) {
  os << "slot,phase,round,nu,dual_objective,primal_objective";
  for (int u = 0; u < users; ++u) os << ",power_u" << u;
  for (int u = 0; u < users; ++u) os << ",lambda_u" << u;
  for (int u = 0; u < users; ++u) os << ",mu_u" << u;
  os << '\n';
}

// One block of dual-solver rounds. Participants are a subset of the run's
// users; non-participants get empty fields.
inline void append_round_rows(std::ostream& os, long slot, int phase,
                              std::span<const RoundRecord> rounds,
                              std::span<const int> participants, int users) {
  using detail::fmt;
  std::vector<int> col(static_cast<std::size_t>(users), -1);
  for (std::size_t i = 0; i < participants.size(); ++i)
    col[static_cast<std::size_t>(participants[i])] = static_cast<int>(i);
  for (const auto& r : rounds) {
    os << slot << ',' << phase << ',' << r.round << ',' << fmt(r.nu) << ','
       << fmt(r.dual_objective) << ',' << fmt(r.primal_objective);
    auto emit = [&](const std::vector<double>& v) {
      for (int u = 0; u < users; ++u) {
        os << ',';
        if (col[static_cast<std::size_t>(u)] >= 0)
          os << fmt(v[static_cast<std::size_t>(col[static_cast<std::size_t>(u)])]);
      }
    };
    emit(r.powers);
    emit(r.lambda);
    emit(r.mu);
    os << '\n';
  }
}

inline nlohmann::json summary_to_json(const RunSummary& s) {
  nlohmann::json j;
  j["allocator"] = s.allocator;
  j["seed"] = s.seed;
  j["users"] = s.users;
  j["slots"] = s.slots;
  j["user_slots"] = s.user_slots;
  j["underflow_events"] = s.underflow_events;
  j["overflow_events"] = s.overflow_events;
  j["underflow_fraction"] = s.underflow_fraction;
  j["mean_utilization"] = s.mean_utilization;
  j["stall_counts"] = s.stall_counts;
  j["delivered_total_bits"] = s.delivered_total;
  return j;
}

inline void print_summary_text(const RunSummary& s, std::ostream& os) {
  os << "allocator = " << s.allocator << "\n"
     << "seed = " << s.seed << "\n"
     << "users = " << s.users << "\n"
     << "slots = " << s.slots << "\n"
     << "user_slots = " << s.user_slots << "\n"
     << "underflow_events = " << s.underflow_events << "\n"
     << "overflow_events = " << s.overflow_events << "\n"
     << "underflow_fraction = " << detail::fmt(s.underflow_fraction) << "\n"
     << "mean_utilization = " << detail::fmt(s.mean_utilization) << "\n";
}

// Run a configured simulation and write slots.csv, rounds.csv, summary.json
// and the effective config into the output directory.
inline RunSummary run_to_directory(const RunConfig& cfg) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);

  std::ofstream slots(fs::path(cfg.out_dir) / "slots.csv", std::ios::binary);
  if (!slots) throw std::runtime_error("cannot write slots.csv under " + cfg.out_dir);
  write_slots_header(slots);

  std::ofstream rounds(fs::path(cfg.out_dir) / "rounds.csv", std::ios::binary);
  if (!rounds) throw std::runtime_error("cannot write rounds.csv under " + cfg.out_dir);
  write_rounds_header(rounds, cfg.users);

  Simulation sim(cfg);
  {
    std::ofstream cfg_out(fs::path(cfg.out_dir) / "config.ini", std::ios::binary);
    write_config(sim.config(), cfg_out);
  }

  // Without log_all_rounds only the last solved slot's log is kept.
  long last_slot = -1;
  std::array<std::vector<RoundRecord>, 3> last_rounds;
  std::array<std::vector<int>, 3> last_users;

  while (!sim.done()) {
    const auto& slot = sim.step();
    append_slot_rows(slots, slot.rows);
    if (slot.step2_ran && slot.step2) {
      auto absolute = [&](const std::vector<int>& subset) {
        std::vector<int> ids;
        ids.reserve(subset.size());
        for (int k : subset) ids.push_back(slot.demand_users[static_cast<std::size_t>(k)]);
        return ids;
      };
      if (cfg.log_all_rounds) {
        for (const auto& ph : slot.step2->phases)
          if (ph.ran_solver && !ph.solve.rounds.empty())
            append_round_rows(rounds, slot.slot, ph.phase_id, ph.solve.rounds,
                              absolute(ph.solver_users), cfg.users);
      } else {
        last_slot = slot.slot;
        for (const auto& ph : slot.step2->phases) {
          const auto idx = static_cast<std::size_t>(ph.phase_id - 1);
          if (ph.ran_solver && !ph.solve.rounds.empty()) {
            last_rounds[idx] = ph.solve.rounds;
            last_users[idx] = absolute(ph.solver_users);
          } else {
            last_rounds[idx].clear();
          }
        }
      }
    }
  }
  if (!cfg.log_all_rounds && last_slot >= 0)
    for (std::size_t i = 0; i < 3; ++i)
      if (!last_rounds[i].empty())
        append_round_rows(rounds, last_slot, static_cast<int>(i) + 1, last_rounds[i],
                          last_users[i], cfg.users);

  const RunSummary summary = sim.summary();
  {
    std::ofstream js(fs::path(cfg.out_dir) / "summary.json", std::ios::binary);
    js << summary_to_json(summary).dump(2) << '\n';
  }
  return summary;
}

}  // namespace vbrsched

#endif  // VBRSCHED_IO_HPP_
