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

#ifndef VBRSCHED_CHANNEL_HPP_
#define VBRSCHED_CHANNEL_HPP_

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "vbrsched/rng.hpp"

namespace vbrsched {

inline constexpr double kBoltzmann = 1.380649e-23;  // J/K

// One user's link state for one slot. `quality` is A = eta/G, the noise to
// gain ratio in Watts; smaller means a better channel.
struct ChannelState {
  double gain = 1.0;           // path gain G (dimensionless)
  double noise = 1.0;          // noise power eta (Watts)
  double quality = 1.0;        // A = noise/gain (Watts)
  double proc_gain = 128.0;    // processing gain L
  double orthogonality = 1.0;  // beta in [0,1]
  double distance = 0.0;       // meters (0 when synthetic/unset)
};

inline double thermal_noise(double temperature_k, double bandwidth_hz) {
  if (!(temperature_k > 0.0)) throw std::invalid_argument("temperature_k must be positive");
  if (!(bandwidth_hz > 0.0)) throw std::invalid_argument("bandwidth_hz must be positive");
  return kBoltzmann * temperature_k * bandwidth_hz;
}

struct ChannelParams {
  double pathloss_exponent = 4.0;
  double shadow_sigma_db = 8.0;    // std dev of the dB-domain shadowing term
  double noise_w = 0.0;            // per-user noise power (Watts)
  double proc_gain = 128.0;
  double orthogonality = 1.0;
  int coherence_slots = 1;         // hold each shadowing draw this many slots
};

// Average path gain d^-alpha with a log-normal shadowing draw on top.
// sigma = 0 disables shadowing.
inline ChannelState draw_channel(const ChannelParams& params, double distance_m,
                                 NormalSampler& shadow) {
  if (!(distance_m > 0.0)) throw std::invalid_argument("distance must be positive");
  double gain = std::pow(distance_m, -params.pathloss_exponent);
  if (params.shadow_sigma_db > 0.0)
    gain *= std::pow(10.0, params.shadow_sigma_db * shadow() / 10.0);
  ChannelState state;
  state.gain = gain;
  state.noise = params.noise_w;
  state.quality = params.noise_w / gain;
  state.proc_gain = params.proc_gain;
  state.orthogonality = params.orthogonality;
  state.distance = distance_m;
  return state;
}

// Per-slot channel sequence for all users. Each user has an independent
// shadowing stream derived from the master seed, so the sequence is
// bit-identical across runs with the same seed and config regardless of
// how many users exist or which other streams were consumed.
class ChannelModel {
 public:
  ChannelModel(ChannelParams params, std::vector<double> distances_m, std::uint64_t master_seed)
      : params_(params), distances_(std::move(distances_m)) {
    if (params_.coherence_slots < 1)
      throw std::invalid_argument("coherence_slots must be >= 1");
    samplers_.reserve(distances_.size());
    for (std::size_t n = 0; n < distances_.size(); ++n)
      samplers_.emplace_back(make_stream(master_seed, kShadowStreamBase + n));
    states_.resize(distances_.size());
  }

  std::size_t users() const { return distances_.size(); }

  // Advance to slot t (1-based, strictly sequential).
  const std::vector<ChannelState>& advance(long t) {
    if (t != next_slot_) throw std::logic_error("ChannelModel::advance: slots must be sequential");
    ++next_slot_;
    const bool redraw = ((t - 1) % params_.coherence_slots) == 0;
    if (redraw) {
      for (std::size_t n = 0; n < distances_.size(); ++n)
        states_[n] = draw_channel(params_, distances_[n], samplers_[n]);
    }
    return states_;
  }

  const std::vector<ChannelState>& states() const { return states_; }

 private:
  ChannelParams params_;
  std::vector<double> distances_;
  std::vector<NormalSampler> samplers_;
  std::vector<ChannelState> states_;
  long next_slot_ = 1;
};

// Uniform user placement per the simulation setup; one draw per run.
inline std::vector<double> draw_distances(std::size_t users, double min_m, double max_m,
                                          std::uint64_t master_seed) {
  if (!(min_m > 0.0) || !(max_m >= min_m))
    throw std::invalid_argument("invalid distance range");
  auto rng = make_stream(master_seed, kDistanceStream);
  std::vector<double> d(users);
  for (auto& v : d) v = uniform_in(rng, min_m, max_m);
  return d;
}

}  // namespace vbrsched

#endif  // VBRSCHED_CHANNEL_HPP_
