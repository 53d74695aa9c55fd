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

#ifndef VBRSCHED_RATE_MODEL_HPP_
#define VBRSCHED_RATE_MODEL_HPP_

#include <cmath>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "vbrsched/channel.hpp"
#include "vbrsched/traces.hpp"

namespace vbrsched {

// Relative tolerance used for boundary comparisons throughout.
inline constexpr double kRelTol = 1e-9;

// Cap on exp() arguments when inverting the rate map. Keeps gamma finite for
// absurd buffer headrooms (the resulting demand is still far beyond any
// budget, so downstream feasibility tests reject it the same way).
inline constexpr double kMaxExpArg = 700.0;

// Per-slot feasible SINR window. gamma_min just avoids underflow at the end
// of the slot, gamma_max just avoids overflow; both include the transceiver
// floor gamma_th.
struct SinrBounds {
  double gamma_min = 0.0;
  double gamma_max = 0.0;
  double gamma_th = 0.0;

  bool feasible() const { return gamma_min <= gamma_max * (1.0 + kRelTol) + kRelTol; }
};

// Per-slot power window under the full-load SINR map, plus the capacity
// inflection point p_star and the concave-region cap p_th = min(p_max, p_star).
struct PowerBounds {
  double p_min = 0.0;
  double p_max = 0.0;
  double p_star = 0.0;
  double p_th = 0.0;
};

struct PowerAllocation {
  std::vector<double> powers;  // Watts, one per user
  double budget = 0.0;         // peak total power P_bar

  double total() const {
    double s = 0.0;
    for (double p : powers) s += p;
    return s;
  }
  bool valid() const {
    for (double p : powers)
      if (p < 0.0) return false;
    return total() <= budget * (1.0 + kRelTol);
  }
};

// SINR at user n for a full power vector: all interference comes from the
// same base station, so interferers are weighted by the receiver's own gain.
inline double sinr(std::span<const double> powers, std::span<const ChannelState> channels,
                   std::size_t n) {
  const ChannelState& ch = channels[n];
  double others = 0.0;
  for (std::size_t k = 0; k < powers.size(); ++k)
    if (k != n) others += powers[k];
  return ch.proc_gain * ch.gain * powers[n] / (ch.orthogonality * ch.gain * others + ch.noise);
}

// Shannon bound, natural log. Result is in nats/s; delivered amounts stay in
// this currency end to end so the gamma_min/gamma_max inversion is exact.
inline double capacity(double gamma, double bandwidth_hz) {
  if (gamma < 0.0) throw std::invalid_argument("negative SINR");
  return bandwidth_hz * std::log1p(gamma);
}

inline double nats_to_bits(double nats) { return nats / 0.6931471805599453; }

// Feasible SINR window for slot t from the session's curve state.
inline SinrBounds sinr_bounds(const VideoSession& session, long t, double bandwidth_hz,
                              double gamma_th) {
  const double denom = bandwidth_hz * session.slot_length();
  const double deficit = session.min_bits(t);
  const double headroom = session.max_bits(t);
  if (headroom < -kRelTol * std::max(1.0, std::abs(session.transmitted(t - 1))))
    throw std::runtime_error("sinr_bounds: transmitted curve exceeds overflow curve");
  SinrBounds b;
  b.gamma_th = gamma_th;
  b.gamma_min = std::max(std::expm1(std::min(deficit / denom, kMaxExpArg)), gamma_th);
  b.gamma_max = std::expm1(std::min(std::max(headroom, 0.0) / denom, kMaxExpArg));
  return b;
}

// --- Full-load map: with total transmit power pinned at the budget P_bar,
// user n's SINR depends on its own power only:
//   gamma(p) = L p / (P_bar - p + A).

inline double sinr_in_map(double p, const ChannelState& ch, double budget) {
  return ch.proc_gain * p / (budget - p + ch.quality);
}

// ln(1 + gamma(p)): the per-user objective term, unit-bandwidth nats.
inline double capacity_in_map(double p, const ChannelState& ch, double budget) {
  return std::log1p(sinr_in_map(p, ch, budget));
}

// First and second derivatives of ln(1 + gamma(p)) under the map.
inline std::pair<double, double> capacity_derivatives(double p, const ChannelState& ch,
                                                      double budget) {
  const double l = ch.proc_gain;
  const double pa = budget + ch.quality;
  const double u = budget - p + ch.quality;        // P_bar - p + A
  const double v = pa + (l - 1.0) * p;             // P_bar + (L-1)p + A
  const double first = l * pa / (u * v);
  const double second = -l * ((l - 2.0) * pa + 2.0 * (1.0 - l) * p) * pa / (u * u * v * v);
  return {first, second};
}

inline double capacity_derivative(double p, const ChannelState& ch, double budget) {
  return capacity_derivatives(p, ch, budget).first;
}

// Inflection point of the per-user capacity curve; only defined for L > 2.
inline double inflection_point(const ChannelState& ch, double budget) {
  const double l = ch.proc_gain;
  if (!(l > 2.0))
    throw std::invalid_argument("proc_gain must exceed 2 for a positive inflection point");
  return (l - 2.0) / (2.0 * (l - 1.0)) * (budget + ch.quality);
}

// Invert the map: power that achieves a target SINR at full load.
inline double power_for_sinr(double gamma, const ChannelState& ch, double budget) {
  return gamma * (budget + ch.quality) / (ch.proc_gain + gamma);
}

inline PowerBounds power_bounds(const SinrBounds& bounds, const ChannelState& ch,
                                double budget) {
  if (!(budget > 0.0)) throw std::invalid_argument("budget must be positive");
  PowerBounds pb;
  pb.p_min = power_for_sinr(bounds.gamma_min, ch, budget);
  pb.p_max = power_for_sinr(bounds.gamma_max, ch, budget);
  pb.p_star = inflection_point(ch, budget);
  pb.p_th = std::min(pb.p_max, pb.p_star);
  return pb;
}

// L threshold below which more than two links could sit in the convex region
// of the capacity curve at full load.
inline double convex_region_bound(const ChannelState& ch, double budget) {
  if (!(budget > 0.0)) throw std::invalid_argument("budget must be positive");
  return (4.0 * budget + 6.0 * ch.quality) / (budget + 3.0 * ch.quality);
}

}  // namespace vbrsched

#endif  // VBRSCHED_RATE_MODEL_HPP_
