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

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "vbrsched/io.hpp"
#include "vbrsched/simulator.hpp"

using namespace vbrsched;

namespace {

RunConfig small_config() {
  RunConfig cfg;
  cfg.users = 3;
  cfg.slots = 40;
  cfg.seed = 5;
  cfg.synthetic_frames = 60;
  cfg.synthetic_titles = 2;
  cfg.synthetic_mean_bits = 12000.0;
  return cfg;
}

}  // namespace

TEST_CASE("single user with a huge budget rides the overflow curve", "[simulator]") {
  RunConfig cfg;
  cfg.users = 1;
  cfg.slots = 50;
  cfg.seed = 3;
  cfg.synthetic_frames = 50;
  cfg.synthetic_titles = 1;
  cfg.peak_power_w = 1e6;  // step 1 is optimal every slot
  Simulation sim(cfg);
  while (!sim.done()) {
    const auto& slot = sim.step();
    REQUIRE(slot.path == AllocPath::kStep1);
    const auto& s = sim.sessions()[0];
    CHECK(s.transmitted(slot.slot) ==
          Catch::Approx(s.overflow()[static_cast<std::size_t>(slot.slot)]).epsilon(1e-9));
    CHECK(slot.rows[0].event == SlotEvent::kNone);
  }
  const RunSummary sum = sim.summary();
  CHECK(sum.underflow_events == 0);
  CHECK(sum.overflow_events == 0);
  CHECK(sum.slots == 50);
}

TEST_CASE("full buffers draw zero power", "[simulator]") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "vbrsched_zero_demand";
  fs::create_directories(dir);
  {
    // front-loaded trace: the buffer covers the whole remainder after slot 1
    std::ofstream out(dir / "front.txt");
    out << "# fps=30 unit=bits\n" << 100 << "\n";
    for (int i = 0; i < 4; ++i) out << 1 << "\n";
  }
  RunConfig cfg;
  cfg.users = 1;
  cfg.seed = 11;
  cfg.peak_power_w = 1e7;
  cfg.user_specs.resize(1);
  cfg.user_specs[0].trace = (dir / "front.txt").string();
  cfg.user_specs[0].start_offset = 0;
  Simulation sim(cfg);

  const auto& s1 = sim.step();
  CHECK(s1.rows[0].power_w > 0.0);
  CHECK(sim.sessions()[0].transmitted(1) == Catch::Approx(104.0));  // all bits prefetched
  while (!sim.done()) {
    const auto& slot = sim.step();
    CHECK(slot.rows[0].power_w == 0.0);
    CHECK(slot.rows[0].delivered_bits == 0.0);
    CHECK(slot.rows[0].event == SlotEvent::kNone);
  }
  CHECK(sim.summary().overflow_events == 0);
  CHECK(sim.summary().underflow_events == 0);
  fs::remove_all(dir);
}

TEST_CASE("records carry exact CSV semantics", "[simulator]") {
  RunConfig cfg = small_config();
  Simulation sim(cfg);
  const auto& slot = sim.step();
  REQUIRE(slot.rows.size() == 3);
  for (const auto& row : slot.rows) {
    CHECK(row.slot == 1);
    const auto& s = sim.sessions()[static_cast<std::size_t>(row.user)];
    CHECK(row.delivered_bits ==
          Catch::Approx(capacity(row.sinr, cfg.bandwidth_hz) * s.slot_length()));
    CHECK(row.buffer_bits == Catch::Approx(s.transmitted(1) - s.consumption()[1]));
    CHECK(row.utilization == Catch::Approx(row.buffer_bits / s.buffer_size()));
  }
}

TEST_CASE("utilization series averages active users per slot", "[simulator]") {
  std::vector<SlotUserRecord> records;
  SlotUserRecord r;
  r.slot = 1;
  r.utilization = 0.0;
  records.push_back(r);
  r.utilization = 1.0;
  records.push_back(r);
  r.slot = 2;
  r.utilization = 0.5;
  records.push_back(r);
  r.slot = 2;
  r.utilization = -0.25;  // stalled user counts as empty, not negative
  records.push_back(r);
  const std::vector<double> series = utilization_series(records);
  REQUIRE(series.size() == 2);
  CHECK(series[0] == Catch::Approx(0.5));
  CHECK(series[1] == Catch::Approx(0.25));
  CHECK_THROWS_AS(utilization_series({}), std::invalid_argument);

  // boundary values: X = D everywhere gives 0, X = B = D + b gives 1
  SlotUserRecord lo;
  lo.slot = 1;
  lo.utilization = 0.0;
  SlotUserRecord hi;
  hi.slot = 1;
  hi.utilization = 1.0;
  CHECK(utilization_series(std::vector<SlotUserRecord>{lo})[0] == 0.0);
  CHECK(utilization_series(std::vector<SlotUserRecord>{hi})[0] == 1.0);
}

TEST_CASE("delivered bits are conserved into the transmission curve", "[simulator]") {
  RunConfig cfg = small_config();
  Simulation sim(cfg);
  std::vector<double> delivered(static_cast<std::size_t>(cfg.users), 0.0);
  while (!sim.done()) {
    const auto& slot = sim.step();
    for (const auto& row : slot.rows) delivered[static_cast<std::size_t>(row.user)] += row.delivered_bits;
  }
  for (int u = 0; u < cfg.users; ++u) {
    const auto& s = sim.sessions()[static_cast<std::size_t>(u)];
    CHECK(delivered[static_cast<std::size_t>(u)] ==
          Catch::Approx(s.transmitted(sim.slot_limit())).margin(1e-9));
    CHECK(s.transmitted(sim.slot_limit()) <= s.consumption().back() * (1.0 + 1e-12) +
                                                 s.buffer_size());
  }
}

TEST_CASE("proposed allocator never overflows and exhausts the budget under load",
          "[simulator]") {
  RunConfig cfg = small_config();
  cfg.users = 6;
  cfg.slots = 80;
  cfg.synthetic_frames = 90;
  cfg.peak_power_w = 2.0;  // tight budget forces step 2 regularly
  Simulation sim(cfg);
  bool step2_seen = false;
  while (!sim.done()) {
    const auto& slot = sim.step();
    double total = 0.0;
    for (const auto& row : slot.rows) {
      CHECK(row.event != SlotEvent::kOverflow);
      total += row.power_w;
    }
    CHECK(total <= cfg.peak_power_w * (1.0 + 1e-9));
    step2_seen = step2_seen || slot.step2_ran;
  }
  CHECK(step2_seen);
  CHECK(sim.summary().overflow_events == 0);
}

TEST_CASE("baseline allocator runs standalone and may stall", "[simulator]") {
  RunConfig cfg = small_config();
  cfg.users = 8;
  cfg.slots = 60;
  cfg.synthetic_frames = 80;
  cfg.allocator = Allocator::kDiversity;
  cfg.peak_power_w = 1.5;
  Simulation sim(cfg);
  while (!sim.done()) {
    const auto& slot = sim.step();
    CHECK(slot.path == AllocPath::kBaseline);
    double total = 0.0;
    for (const auto& row : slot.rows) {
      total += row.power_w;
      CHECK(row.event != SlotEvent::kOverflow);
    }
    CHECK(total <= cfg.peak_power_w * (1.0 + 1e-12));
  }
}

TEST_CASE("sessions of different lengths retire from allocation", "[simulator]") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "vbrsched_sim_traces";
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "short.txt");
    out << "# fps=30 unit=bits\n";
    for (int i = 0; i < 10; ++i) out << 5000 << "\n";
  }
  RunConfig cfg = small_config();
  cfg.users = 2;
  cfg.slots = 0;
  cfg.synthetic_frames = 25;
  cfg.user_specs.resize(2);
  cfg.user_specs[0].trace = (dir / "short.txt").string();
  cfg.user_specs[0].start_offset = 0;
  Simulation sim(cfg);
  long rows_last = 0;
  while (!sim.done()) rows_last = static_cast<long>(sim.step().rows.size());
  CHECK(sim.slot_limit() == 25);
  CHECK(rows_last == 1);  // the short session retired after slot 10
  CHECK(sim.sessions()[0].complete());
  fs::remove_all(dir);
}

TEST_CASE("frame-rate mismatch across sessions is rejected", "[simulator]") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "vbrsched_fps_traces";
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "fast.txt");
    out << "# fps=60 unit=bits\n";
    for (int i = 0; i < 30; ++i) out << 4000 << "\n";
  }
  RunConfig cfg = small_config();
  cfg.users = 2;
  cfg.user_specs.resize(1);
  cfg.user_specs[0].trace = (dir / "fast.txt").string();
  CHECK_THROWS_WITH(Simulation(cfg), Catch::Matchers::ContainsSubstring("frame rate"));
  fs::remove_all(dir);
}

TEST_CASE("runs are reproducible byte for byte", "[simulator]") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "vbrsched_repro";
  fs::remove_all(dir);

  RunConfig cfg = small_config();
  cfg.users = 4;
  cfg.slots = 30;
  cfg.out_dir = (dir / "a").string();
  run_to_directory(cfg);
  cfg.out_dir = (dir / "b").string();
  run_to_directory(cfg);

  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const std::string a = slurp(dir / "a" / "slots.csv");
  CHECK(!a.empty());
  CHECK(a == slurp(dir / "b" / "slots.csv"));

  // reloading the echoed effective config reproduces the run too
  RunConfig cfg2 = load_config(dir / "a" / "config.ini");
  cfg2.out_dir = (dir / "c").string();
  run_to_directory(cfg2);
  CHECK(a == slurp(dir / "c" / "slots.csv"));
  fs::remove_all(dir);
}

TEST_CASE("csv headers match the published schema", "[simulator]") {
  std::ostringstream os;
  write_slots_header(os);
  CHECK(os.str() ==
        "slot,user,power_w,sinr,delivered_bits,buffer_bits,utilization,event,path\n");
  std::ostringstream ros;
  write_rounds_header(ros, 2);
  CHECK(ros.str() ==
        "slot,phase,round,nu,dual_objective,primal_objective,power_u0,power_u1,"
        "lambda_u0,lambda_u1,mu_u0,mu_u1\n");
}
