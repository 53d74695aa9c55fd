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

#ifndef VBRSCHED_BASELINE_HPP_
#define VBRSCHED_BASELINE_HPP_

#include <algorithm>
#include <numeric>
#include <span>
#include <vector>

#include "vbrsched/rate_model.hpp"

namespace vbrsched {

// Diversity-aware comparison scheme: fund users in channel-quality order
// (ascending A), each up to its p_max, until the budget runs out. The
// marginal user takes the remainder; everyone after gets nothing. No p_min
// floors, which is what makes this scheme underflow under load.
struct BaselineAllocation {
  std::vector<double> powers;
  std::vector<int> fill_order;
};

inline BaselineAllocation allocate_diversity(std::span<const PowerBounds> bounds,
                                             std::span<const ChannelState> channels,
                                             double budget) {
  BaselineAllocation out;
  out.powers.assign(bounds.size(), 0.0);
  out.fill_order.resize(bounds.size());
  std::iota(out.fill_order.begin(), out.fill_order.end(), 0);
  std::sort(out.fill_order.begin(), out.fill_order.end(), [&](int x, int y) {
    const double ax = channels[static_cast<std::size_t>(x)].quality;
    const double ay = channels[static_cast<std::size_t>(y)].quality;
    if (ax != ay) return ax < ay;
    return x < y;
  });
  double remaining = budget;
  for (int n : out.fill_order) {
    if (remaining <= 0.0) break;
    const double p = std::min(bounds[static_cast<std::size_t>(n)].p_max, remaining);
    out.powers[static_cast<std::size_t>(n)] = p;
    remaining -= p;
  }
  return out;
}

// Uniform split over the given users; test helper and last-resort fallback.
inline std::vector<double> equal_split(std::size_t users, double budget) {
  return std::vector<double>(users, users == 0 ? 0.0 : budget / static_cast<double>(users));
}

}  // namespace vbrsched

#endif  // VBRSCHED_BASELINE_HPP_
