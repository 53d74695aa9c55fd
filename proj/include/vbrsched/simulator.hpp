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

#ifndef VBRSCHED_SIMULATOR_HPP_
#define VBRSCHED_SIMULATOR_HPP_

#include <algorithm>
#include <cmath>
#include <iostream>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "vbrsched/baseline.hpp"
#include "vbrsched/channel.hpp"
#include "vbrsched/config.hpp"
#include "vbrsched/rate_model.hpp"
#include "vbrsched/step1.hpp"
#include "vbrsched/step2.hpp"
#include "vbrsched/traces.hpp"

namespace vbrsched {

enum class AllocPath { kStep1, kPhase1, kPhase2, kPhase3, kBaseline, kFallback };

inline const char* to_string(AllocPath p) {
  switch (p) {
    case AllocPath::kStep1: return "step1";
    case AllocPath::kPhase1: return "phase1";
    case AllocPath::kPhase2: return "phase2";
    case AllocPath::kPhase3: return "phase3";
    case AllocPath::kBaseline: return "baseline";
    default: return "fallback";
  }
}

struct SlotUserRecord {
  long slot = 0;
  int user = 0;
  double power_w = 0.0;
  double sinr = 0.0;
  double delivered_bits = 0.0;
  double buffer_bits = 0.0;   // X(t) - D(t), raw (negative while stalled)
  double utilization = 0.0;   // (X - D) / b, raw
  SlotEvent event = SlotEvent::kNone;
  AllocPath path = AllocPath::kStep1;
};

struct RunSummary {
  std::string allocator;
  std::uint64_t seed = 0;
  int users = 0;
  long slots = 0;
  long user_slots = 0;
  long underflow_events = 0;
  long overflow_events = 0;
  double underflow_fraction = 0.0;
  double mean_utilization = 0.0;
  std::vector<long> stall_counts;       // per user
  std::vector<double> delivered_total;  // per user, curve units
};

// Per-slot mean of the buffer utilization over the active users in each slot,
// clamped to [0, 1] (a stalled buffer is empty, not negative).
inline std::vector<double> utilization_series(std::span<const SlotUserRecord> records) {
  if (records.empty()) throw std::invalid_argument("utilization_series: no records");
  std::vector<double> series;
  std::size_t i = 0;
  while (i < records.size()) {
    const long slot = records[i].slot;
    double sum = 0.0;
    int count = 0;
    while (i < records.size() && records[i].slot == slot) {
      sum += std::clamp(records[i].utilization, 0.0, 1.0);
      ++count;
      ++i;
    }
    series.push_back(sum / count);
  }
  return series;
}

// Slot-by-slot orchestration of the per-slot pipeline: channel draw, SINR and
// power windows, Step I (exact fill check), Step II or the baseline, delivery
// accounting against the session curves.
class Simulation {
 public:
  struct SlotResult {
    long slot = 0;
    AllocPath path = AllocPath::kStep1;
    std::vector<SlotUserRecord> rows;
    bool step2_ran = false;
    std::optional<Step2Result> step2;
    std::vector<int> demand_users;  // maps step2 subset indices to user ids
  };

  explicit Simulation(const RunConfig& cfg) : cfg_(cfg) {
    validate(cfg_);
    distances_ = draw_distances(static_cast<std::size_t>(cfg_.users), cfg_.distance_min_m,
                                cfg_.distance_max_m, cfg_.seed);
    for (std::size_t u = 0; u < distances_.size(); ++u)
      if (u < cfg_.user_specs.size() && cfg_.user_specs[u].distance_m > 0.0)
        distances_[u] = cfg_.user_specs[u].distance_m;

    build_sessions();

    ChannelParams params;
    params.pathloss_exponent = cfg_.pathloss_exponent;
    params.shadow_sigma_db = cfg_.shadow_sigma_db;
    params.noise_w = thermal_noise(cfg_.temperature_k, cfg_.bandwidth_hz);
    params.proc_gain = cfg_.proc_gain;
    params.orthogonality = cfg_.orthogonality;
    params.coherence_slots = cfg_.coherence_slots;
    channel_model_.emplace(params, distances_, cfg_.seed);

    long max_frames = 0;
    for (const auto& s : sessions_) max_frames = std::max(max_frames, s.total_frames());
    slot_limit_ = cfg_.slots > 0 ? std::min(cfg_.slots, max_frames) : max_frames;

    summary_.allocator = to_string(cfg_.allocator);
    summary_.seed = cfg_.seed;
    summary_.users = cfg_.users;
    summary_.stall_counts.assign(static_cast<std::size_t>(cfg_.users), 0);
    summary_.delivered_total.assign(static_cast<std::size_t>(cfg_.users), 0.0);
  }

  const RunConfig& config() const { return cfg_; }
  const std::vector<double>& distances() const { return distances_; }
  const std::vector<VideoSession>& sessions() const { return sessions_; }
  const std::vector<ChannelState>& channels() const { return channel_model_->states(); }
  const std::vector<SinrBounds>& last_sinr_bounds() const { return last_sb_; }
  const std::vector<PowerBounds>& last_power_bounds() const { return last_pb_; }
  long slot_limit() const { return slot_limit_; }
  bool done() const { return next_slot_ > slot_limit_; }

  const SlotResult& step() {
    if (done()) throw std::logic_error("Simulation::step past the end of the run");
    const long t = next_slot_++;
    const auto& channels = channel_model_->advance(t);
    const std::size_t n = sessions_.size();

    result_.slot = t;
    result_.rows.clear();
    result_.step2_ran = false;
    result_.step2.reset();
    result_.demand_users.clear();

    std::vector<int> active;
    for (std::size_t u = 0; u < n; ++u)
      if (!sessions_[u].complete()) active.push_back(static_cast<int>(u));

    // Per-slot windows; users whose transceiver floor exceeds gamma_max sit
    // this slot out (transmitting would overflow, staying silent may stall).
    std::vector<SinrBounds>& sb = last_sb_;
    std::vector<PowerBounds>& pb = last_pb_;
    sb.assign(n, SinrBounds{});
    pb.assign(n, PowerBounds{});
    std::vector<int> demand;
    for (int u : active) {
      const auto i = static_cast<std::size_t>(u);
      sb[i] = sinr_bounds(sessions_[i], t, cfg_.bandwidth_hz, cfg_.gamma_th);
      pb[i] = power_bounds(sb[i], channels[i], cfg_.peak_power_w);
      if (sb[i].gamma_max > 0.0 && sb[i].feasible()) demand.push_back(u);
    }
    result_.demand_users = demand;

    std::vector<double> powers(n, 0.0);
    std::vector<double> gammas(n, 0.0);
    AllocPath path = AllocPath::kStep1;

    std::vector<SinrBounds> sub_sb;
    std::vector<PowerBounds> sub_pb;
    std::vector<ChannelState> sub_ch;
    for (int u : demand) {
      const auto i = static_cast<std::size_t>(u);
      sub_sb.push_back(sb[i]);
      sub_pb.push_back(pb[i]);
      sub_ch.push_back(channels[i]);
    }

    try {
      if (cfg_.allocator == Allocator::kDiversity) {
        path = AllocPath::kBaseline;
        const BaselineAllocation alloc =
            allocate_diversity(sub_pb, sub_ch, cfg_.peak_power_w);
        for (std::size_t k = 0; k < demand.size(); ++k) {
          const auto i = static_cast<std::size_t>(demand[k]);
          powers[i] = alloc.powers[k];
          gammas[i] = sinr_in_map(powers[i], channels[i], cfg_.peak_power_w);
        }
      } else {
        const Step1Run s1 = run_step1(sub_sb, sub_ch, cfg_.peak_power_w);
        if (s1.outcome.status == Step1Status::kOptimal) {
          path = AllocPath::kStep1;
          for (std::size_t k = 0; k < demand.size(); ++k)
            powers[static_cast<std::size_t>(demand[k])] = s1.powers_full[k];
          // exact solve: account with the true SINR at the solved powers
          for (int u : active) {
            const auto i = static_cast<std::size_t>(u);
            gammas[i] = powers[i] > 0.0 ? sinr(powers, channels, i) : 0.0;
          }
        } else {
          const TriageReport tri = triage(sub_pb, sub_ch, cfg_.peak_power_w);
          Step2Result s2 = run_phases(tri, sub_pb, sub_ch, cfg_.peak_power_w, cfg_.solver);
          path = s2.best_phase == 1   ? AllocPath::kPhase1
                 : s2.best_phase == 2 ? AllocPath::kPhase2
                                      : AllocPath::kPhase3;
          for (std::size_t k = 0; k < demand.size(); ++k) {
            const auto i = static_cast<std::size_t>(demand[k]);
            powers[i] = s2.best().powers[k];
            gammas[i] = sinr_in_map(powers[i], channels[i], cfg_.peak_power_w);
          }
          result_.step2_ran = true;
          result_.step2 = std::move(s2);
        }
      }
    } catch (const std::exception& e) {
      // Numerical failure: log, fall back to an equal split for this slot,
      // keep the run going. Accounted SINR is capped at gamma_max so the
      // fallback cannot overflow a buffer.
      std::cerr << "slot " << t << ": " << e.what() << "; falling back to equal split\n";
      path = AllocPath::kFallback;
      std::fill(powers.begin(), powers.end(), 0.0);
      const std::vector<double> split = equal_split(demand.size(), cfg_.peak_power_w);
      for (std::size_t k = 0; k < demand.size(); ++k) {
        const auto i = static_cast<std::size_t>(demand[k]);
        powers[i] = split[k];
        gammas[i] = std::min(sinr_in_map(powers[i], channels[i], cfg_.peak_power_w),
                             sb[i].gamma_max);
      }
    }

    result_.path = path;
    double util_sum = 0.0;
    for (int u : active) {
      const auto i = static_cast<std::size_t>(u);
      const double delivered = capacity(gammas[i], cfg_.bandwidth_hz) * sessions_[i].slot_length();
      const SlotEvent event = sessions_[i].record_delivery(t, delivered);
      SlotUserRecord row;
      row.slot = t;
      row.user = u;
      row.power_w = powers[i];
      row.sinr = gammas[i];
      row.delivered_bits = delivered;
      row.buffer_bits = sessions_[i].buffer_level(t);
      row.utilization = row.buffer_bits / sessions_[i].buffer_size();
      row.event = event;
      row.path = path;
      result_.rows.push_back(row);

      ++summary_.user_slots;
      summary_.delivered_total[i] += delivered;
      util_sum += std::clamp(row.utilization, 0.0, 1.0);
      if (event == SlotEvent::kUnderflow) {
        ++summary_.underflow_events;
        ++summary_.stall_counts[i];
      } else if (event == SlotEvent::kOverflow) {
        ++summary_.overflow_events;
      }
    }
    if (!active.empty()) {
      util_slot_means_.push_back(util_sum / static_cast<double>(active.size()));
      ++summary_.slots;
    }
    return result_;
  }

  RunSummary summary() const {
    RunSummary s = summary_;
    s.underflow_fraction =
        s.user_slots > 0 ? static_cast<double>(s.underflow_events) / s.user_slots : 0.0;
    double sum = 0.0;
    for (double v : util_slot_means_) sum += v;
    s.mean_utilization = util_slot_means_.empty() ? 0.0 : sum / util_slot_means_.size();
    return s;
  }

  const std::vector<double>& utilization_history() const { return util_slot_means_; }

 private:
  void build_sessions() {
    std::vector<FrameTrace> titles;
    for (int tindex = 0; tindex < cfg_.synthetic_titles; ++tindex) {
      SyntheticSpec spec;
      spec.title = "synthetic" + std::to_string(tindex);
      spec.frames = cfg_.synthetic_frames;
      spec.fps = cfg_.synthetic_fps;
      spec.mean_bits = cfg_.synthetic_mean_bits;
      spec.seed = cfg_.seed + 1000003ULL * static_cast<std::uint64_t>(tindex);
      titles.push_back(make_synthetic_trace(spec));
    }
    double fps = 0.0;
    for (int u = 0; u < cfg_.users; ++u) {
      const UserSpec* spec =
          static_cast<std::size_t>(u) < cfg_.user_specs.size() ? &cfg_.user_specs[u] : nullptr;
      FrameTrace trace = (spec && !spec->trace.empty())
                             ? load_trace_file(spec->trace, cfg_.synthetic_fps)
                             : titles[static_cast<std::size_t>(u) % titles.size()];
      if (fps == 0.0) fps = trace.frame_rate;
      if (trace.frame_rate != fps)
        throw std::invalid_argument(
            "config key 'user." + std::to_string(u) +
            ".trace': frame rate differs across sessions (" + std::to_string(trace.frame_rate) +
            " vs " + std::to_string(fps) + ")");
      const long frames = trace.frames();
      long offset = (spec && spec->start_offset >= 0) ? spec->start_offset
                                                      : (131L * u) % frames;
      trace = rotate_trace(std::move(trace), offset);
      const double buffer = cfg_.buffer_multiplier * trace.max_frame();
      sessions_.emplace_back(std::move(trace), buffer);
    }
  }

  RunConfig cfg_;
  std::vector<double> distances_;
  std::vector<VideoSession> sessions_;
  std::optional<ChannelModel> channel_model_;
  long slot_limit_ = 0;
  long next_slot_ = 1;
  SlotResult result_;
  RunSummary summary_;
  std::vector<double> util_slot_means_;
  std::vector<SinrBounds> last_sb_;
  std::vector<PowerBounds> last_pb_;
};

}  // namespace vbrsched

#endif  // VBRSCHED_SIMULATOR_HPP_
