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

#ifndef VBRSCHED_CONFIG_HPP_
#define VBRSCHED_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vbrsched/dual_solver.hpp"

namespace vbrsched {

enum class Allocator { kProposed, kDiversity };

inline const char* to_string(Allocator a) {
  return a == Allocator::kDiversity ? "diversity" : "proposed";
}

// Per-user overrides; unset fields fall back to drawn/derived values.
struct UserSpec {
  double distance_m = 0.0;  // <= 0: draw from the distance range
  std::string trace;        // empty: bundled synthetic title (user mod titles)
  long start_offset = -1;   // < 0: automatic stagger
};

struct RunConfig {
  // [run]
  int users = 4;
  long slots = 0;  // 0: run until all sessions complete
  Allocator allocator = Allocator::kProposed;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  double buffer_multiplier = 1.5;
  double gamma_th = 0.0;
  bool log_all_rounds = false;
  std::string preset;

  // [channel]
  double pathloss_exponent = 4.0;
  double shadow_sigma_db = 8.0;
  double temperature_k = 290.0;
  double bandwidth_hz = 1e6;
  double peak_power_w = 10.0;
  double proc_gain = 128.0;
  double orthogonality = 1.0;
  int coherence_slots = 1;
  double distance_min_m = 100.0;
  double distance_max_m = 1000.0;

  // [solver]
  SolverConfig solver;

  // [traces]
  long synthetic_frames = 2000;
  double synthetic_fps = 30.0;
  double synthetic_mean_bits = 25000.0;
  int synthetic_titles = 3;

  std::vector<UserSpec> user_specs;
};

namespace detail {

inline double parse_double(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "': not a number: " + value);
  }
  while (pos < value.size() && std::isspace(static_cast<unsigned char>(value[pos]))) ++pos;
  if (pos != value.size())
    throw std::invalid_argument("config key '" + key + "': not a number: " + value);
  return v;
}

inline long parse_long(const std::string& key, const std::string& value) {
  const double v = parse_double(key, value);
  const long l = static_cast<long>(v);
  if (static_cast<double>(l) != v)
    throw std::invalid_argument("config key '" + key + "': not an integer: " + value);
  return l;
}

inline bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw std::invalid_argument("config key '" + key + "': not a boolean: " + value);
}

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

}  // namespace detail

// Flat key/value sections: "[section]" headers, "key = value" lines,
// '#' comments. Keys are reported as "section.key".
using IniMap = std::map<std::string, std::string>;

inline IniMap parse_ini(std::istream& in) {
  IniMap map;
  std::string line, section;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument("config line " + std::to_string(lineno) +
                                    ": malformed section header");
      section = detail::trim(line.substr(1, line.size() - 2));
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
    map[section.empty() ? key : section + "." + key] = value;
  }
  return map;
}

inline IniMap parse_ini_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path.string());
  return parse_ini(in);
}

inline void apply_preset(RunConfig& cfg, const std::string& preset) {
  if (preset.empty()) return;
  if (preset == "sec5") {
    // 20 users, 1 MHz, L = 128, sigma 8 dB, 290 K, 10 W peak, 1.5x buffers,
    // three long synthetic titles shared round-robin.
    cfg.users = 20;
    cfg.peak_power_w = 10.0;
    cfg.proc_gain = 128.0;
    cfg.bandwidth_hz = 1e6;
    cfg.shadow_sigma_db = 8.0;
    cfg.temperature_k = 290.0;
    cfg.buffer_multiplier = 1.5;
    cfg.pathloss_exponent = 4.0;
    cfg.distance_min_m = 100.0;
    cfg.distance_max_m = 1000.0;
    cfg.synthetic_frames = 10000;
    cfg.synthetic_fps = 30.0;
    cfg.synthetic_titles = 3;
    cfg.preset = preset;
    return;
  }
  throw std::invalid_argument("unknown preset: " + preset);
}

// Build a config from parsed keys: defaults, then preset, then explicit keys.
inline RunConfig make_config(const IniMap& map, const std::string& preset_override = "") {
  RunConfig cfg;
  std::string preset = preset_override;
  if (preset.empty()) {
    const auto it = map.find("run.preset");
    if (it != map.end()) preset = it->second;
  }
  apply_preset(cfg, preset);

  for (const auto& [key, value] : map) {
    using detail::parse_bool;
    using detail::parse_double;
    using detail::parse_long;
    if (key == "run.preset") continue;  // handled above
    if (key == "run.users") cfg.users = static_cast<int>(parse_long(key, value));
    else if (key == "run.slots") cfg.slots = parse_long(key, value);
    else if (key == "run.allocator") {
      if (value == "proposed") cfg.allocator = Allocator::kProposed;
      else if (value == "diversity") cfg.allocator = Allocator::kDiversity;
      else throw std::invalid_argument("config key 'run.allocator': must be proposed or diversity");
    } else if (key == "run.seed") cfg.seed = static_cast<std::uint64_t>(parse_long(key, value));
    else if (key == "run.out") cfg.out_dir = value;
    else if (key == "run.buffer_multiplier") cfg.buffer_multiplier = parse_double(key, value);
    else if (key == "run.gamma_th") cfg.gamma_th = parse_double(key, value);
    else if (key == "run.log_all_rounds") cfg.log_all_rounds = parse_bool(key, value);
    else if (key == "channel.pathloss_exponent") cfg.pathloss_exponent = parse_double(key, value);
    else if (key == "channel.shadow_sigma_db") cfg.shadow_sigma_db = parse_double(key, value);
    else if (key == "channel.temperature_k") cfg.temperature_k = parse_double(key, value);
    else if (key == "channel.bandwidth_hz") cfg.bandwidth_hz = parse_double(key, value);
    else if (key == "channel.peak_power_w") cfg.peak_power_w = parse_double(key, value);
    else if (key == "channel.proc_gain") cfg.proc_gain = parse_double(key, value);
    else if (key == "channel.orthogonality") cfg.orthogonality = parse_double(key, value);
    else if (key == "channel.coherence_slots") cfg.coherence_slots = static_cast<int>(parse_long(key, value));
    else if (key == "channel.distance_min_m") cfg.distance_min_m = parse_double(key, value);
    else if (key == "channel.distance_max_m") cfg.distance_max_m = parse_double(key, value);
    else if (key == "solver.armijo_shrink") cfg.solver.armijo_shrink = parse_double(key, value);
    else if (key == "solver.armijo_slope") cfg.solver.armijo_slope = parse_double(key, value);
    else if (key == "solver.initial_step") cfg.solver.initial_step = parse_double(key, value);
    else if (key == "solver.tol") cfg.solver.tol = parse_double(key, value);
    else if (key == "solver.max_iters") cfg.solver.max_iters = static_cast<int>(parse_long(key, value));
    else if (key == "solver.max_rounds") cfg.solver.max_rounds = static_cast<int>(parse_long(key, value));
    else if (key == "traces.synthetic_frames") cfg.synthetic_frames = parse_long(key, value);
    else if (key == "traces.synthetic_fps") cfg.synthetic_fps = parse_double(key, value);
    else if (key == "traces.synthetic_mean_bits") cfg.synthetic_mean_bits = parse_double(key, value);
    else if (key == "traces.synthetic_titles") cfg.synthetic_titles = static_cast<int>(parse_long(key, value));
    else if (key.rfind("user.", 0) == 0) {
      const std::size_t dot = key.find('.', 5);
      if (dot == std::string::npos)
        throw std::invalid_argument("config key '" + key + "': expected user.<index>.<field>");
      const long idx = detail::parse_long(key, key.substr(5, dot - 5));
      if (idx < 0 || idx > 100000)
        throw std::invalid_argument("config key '" + key + "': bad user index");
      if (cfg.user_specs.size() <= static_cast<std::size_t>(idx))
        cfg.user_specs.resize(static_cast<std::size_t>(idx) + 1);
      UserSpec& spec = cfg.user_specs[static_cast<std::size_t>(idx)];
      const std::string field = key.substr(dot + 1);
      if (field == "distance") spec.distance_m = parse_double(key, value);
      else if (field == "trace") spec.trace = value;
      else if (field == "start_offset") spec.start_offset = parse_long(key, value);
      else throw std::invalid_argument("unknown config key '" + key + "'");
    } else {
      throw std::invalid_argument("unknown config key '" + key + "'");
    }
  }
  return cfg;
}

inline void validate(const RunConfig& cfg) {
  auto fail = [](const std::string& key, const std::string& why) {
    throw std::invalid_argument("config key '" + key + "': " + why);
  };
  if (cfg.users < 1) fail("run.users", "must be >= 1");
  if (cfg.slots < 0) fail("run.slots", "must be >= 0");
  if (!(cfg.buffer_multiplier >= 1.0)) fail("run.buffer_multiplier", "must be >= 1");
  if (!(cfg.gamma_th >= 0.0)) fail("run.gamma_th", "must be >= 0");
  if (!(cfg.pathloss_exponent > 0.0)) fail("channel.pathloss_exponent", "must be positive");
  if (!(cfg.shadow_sigma_db >= 0.0)) fail("channel.shadow_sigma_db", "must be >= 0");
  if (!(cfg.temperature_k > 0.0)) fail("channel.temperature_k", "must be positive");
  if (!(cfg.bandwidth_hz > 0.0)) fail("channel.bandwidth_hz", "must be positive");
  if (!(cfg.peak_power_w > 0.0)) fail("channel.peak_power_w", "must be positive");
  if (!(cfg.proc_gain > 2.0)) fail("channel.proc_gain", "must exceed 2");
  if (cfg.orthogonality < 0.0 || cfg.orthogonality > 1.0)
    fail("channel.orthogonality", "must lie in [0, 1]");
  if (cfg.coherence_slots < 1) fail("channel.coherence_slots", "must be >= 1");
  if (!(cfg.distance_min_m > 0.0)) fail("channel.distance_min_m", "must be positive");
  if (!(cfg.distance_max_m >= cfg.distance_min_m))
    fail("channel.distance_max_m", "must be >= channel.distance_min_m");
  if (!(cfg.solver.armijo_shrink > 0.0 && cfg.solver.armijo_shrink < 1.0))
    fail("solver.armijo_shrink", "must lie in (0, 1)");
  if (!(cfg.solver.armijo_slope > 0.0 && cfg.solver.armijo_slope < 1.0))
    fail("solver.armijo_slope", "must lie in (0, 1)");
  if (!(cfg.solver.initial_step > 0.0)) fail("solver.initial_step", "must be positive");
  if (!(cfg.solver.tol > 0.0)) fail("solver.tol", "must be positive");
  if (cfg.solver.max_iters < 1) fail("solver.max_iters", "must be >= 1");
  if (cfg.solver.max_rounds < 1) fail("solver.max_rounds", "must be >= 1");
  if (cfg.synthetic_frames < 1) fail("traces.synthetic_frames", "must be >= 1");
  if (!(cfg.synthetic_fps > 0.0)) fail("traces.synthetic_fps", "must be positive");
  if (!(cfg.synthetic_mean_bits > 0.0)) fail("traces.synthetic_mean_bits", "must be positive");
  if (cfg.synthetic_titles < 1) fail("traces.synthetic_titles", "must be >= 1");
  for (std::size_t i = 0; i < cfg.user_specs.size(); ++i) {
    const UserSpec& spec = cfg.user_specs[i];
    if (!spec.trace.empty() && !std::filesystem::exists(spec.trace))
      fail("user." + std::to_string(i) + ".trace", "trace file not found: " + spec.trace);
  }
}

inline RunConfig load_config(const std::filesystem::path& path) {
  RunConfig cfg = make_config(parse_ini_file(path));
  validate(cfg);
  return cfg;
}

// Effective-config echo; reloading the emitted file reproduces the run.
inline void write_config(const RunConfig& cfg, std::ostream& os) {
  os.precision(17);
  os << "[run]\n";
  if (!cfg.preset.empty()) os << "preset = " << cfg.preset << "\n";
  os << "users = " << cfg.users << "\n"
     << "slots = " << cfg.slots << "\n"
     << "allocator = " << to_string(cfg.allocator) << "\n"
     << "seed = " << cfg.seed << "\n"
     << "out = " << cfg.out_dir << "\n"
     << "buffer_multiplier = " << cfg.buffer_multiplier << "\n"
     << "gamma_th = " << cfg.gamma_th << "\n"
     << "log_all_rounds = " << (cfg.log_all_rounds ? "true" : "false") << "\n\n";
  os << "[channel]\n"
     << "pathloss_exponent = " << cfg.pathloss_exponent << "\n"
     << "shadow_sigma_db = " << cfg.shadow_sigma_db << "\n"
     << "temperature_k = " << cfg.temperature_k << "\n"
     << "bandwidth_hz = " << cfg.bandwidth_hz << "\n"
     << "peak_power_w = " << cfg.peak_power_w << "\n"
     << "proc_gain = " << cfg.proc_gain << "\n"
     << "orthogonality = " << cfg.orthogonality << "\n"
     << "coherence_slots = " << cfg.coherence_slots << "\n"
     << "distance_min_m = " << cfg.distance_min_m << "\n"
     << "distance_max_m = " << cfg.distance_max_m << "\n\n";
  os << "[solver]\n"
     << "armijo_shrink = " << cfg.solver.armijo_shrink << "\n"
     << "armijo_slope = " << cfg.solver.armijo_slope << "\n"
     << "initial_step = " << cfg.solver.initial_step << "\n"
     << "tol = " << cfg.solver.tol << "\n"
     << "max_iters = " << cfg.solver.max_iters << "\n"
     << "max_rounds = " << cfg.solver.max_rounds << "\n\n";
  os << "[traces]\n"
     << "synthetic_frames = " << cfg.synthetic_frames << "\n"
     << "synthetic_fps = " << cfg.synthetic_fps << "\n"
     << "synthetic_mean_bits = " << cfg.synthetic_mean_bits << "\n"
     << "synthetic_titles = " << cfg.synthetic_titles << "\n";
  for (std::size_t i = 0; i < cfg.user_specs.size(); ++i) {
    const UserSpec& spec = cfg.user_specs[i];
    os << "\n[user." << i << "]\n";
    if (spec.distance_m > 0.0) os << "distance = " << spec.distance_m << "\n";
    if (!spec.trace.empty()) os << "trace = " << spec.trace << "\n";
    if (spec.start_offset >= 0) os << "start_offset = " << spec.start_offset << "\n";
  }
}

}  // namespace vbrsched

#endif  // VBRSCHED_CONFIG_HPP_
