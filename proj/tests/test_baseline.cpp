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

#include <random>

#include "vbrsched/baseline.hpp"

using namespace vbrsched;

namespace {

ChannelState quality_channel(double a) {
  ChannelState ch;
  ch.gain = 1.0;
  ch.noise = a;
  ch.quality = a;
  ch.proc_gain = 128.0;
  return ch;
}

PowerBounds cap(double p_max) {
  PowerBounds b;
  b.p_max = p_max;
  b.p_th = p_max;
  return b;
}

}  // namespace

TEST_CASE("everyone saturates when the budget covers all caps", "[baseline]") {
  const std::vector<ChannelState> ch{quality_channel(0.3), quality_channel(0.1)};
  const std::vector<PowerBounds> b{cap(2.0), cap(3.0)};
  const BaselineAllocation a = allocate_diversity(b, ch, 10.0);
  CHECK(a.powers == std::vector<double>{2.0, 3.0});
  CHECK(a.fill_order == std::vector<int>{1, 0});  // better channel first
}

TEST_CASE("the marginal user takes the remainder, the rest get nothing", "[baseline]") {
  const std::vector<ChannelState> ch{quality_channel(0.1), quality_channel(0.3)};
  const std::vector<PowerBounds> b{cap(6.0), cap(6.0)};
  const BaselineAllocation a = allocate_diversity(b, ch, 10.0);
  CHECK(a.powers == std::vector<double>{6.0, 4.0});

  const std::vector<ChannelState> ch3{quality_channel(0.1), quality_channel(0.2),
                                      quality_channel(0.3)};
  const std::vector<PowerBounds> b3{cap(6.0), cap(6.0), cap(6.0)};
  const BaselineAllocation a3 = allocate_diversity(b3, ch3, 10.0);
  CHECK(a3.powers == std::vector<double>{6.0, 4.0, 0.0});
}

TEST_CASE("equal quality ties break by index", "[baseline]") {
  const std::vector<ChannelState> ch{quality_channel(0.2), quality_channel(0.2)};
  const std::vector<PowerBounds> b{cap(8.0), cap(8.0)};
  const BaselineAllocation a = allocate_diversity(b, ch, 10.0);
  CHECK(a.fill_order == std::vector<int>{0, 1});
  CHECK(a.powers == std::vector<double>{8.0, 2.0});
}

TEST_CASE("allocations have the funded-prefix shape", "[baseline]") {
  std::mt19937_64 rng(57);
  auto urand = [&](double lo, double hi) {
    return lo + (hi - lo) * static_cast<double>(rng() % 100000) / 99999.0;
  };
  for (int rep = 0; rep < 50; ++rep) {
    const int n = 1 + static_cast<int>(rng() % 8);
    std::vector<ChannelState> ch;
    std::vector<PowerBounds> b;
    for (int i = 0; i < n; ++i) {
      ch.push_back(quality_channel(urand(1e-4, 1.0)));
      b.push_back(cap(urand(0.1, 7.0)));
    }
    const double budget = 10.0;
    const BaselineAllocation a = allocate_diversity(b, ch, budget);
    const BaselineAllocation again = allocate_diversity(b, ch, budget);
    CHECK(a.powers == again.powers);  // deterministic

    double total = 0.0;
    bool partial_seen = false;
    for (std::size_t k = 0; k < a.fill_order.size(); ++k) {
      const auto u = static_cast<std::size_t>(a.fill_order[k]);
      total += a.powers[u];
      const bool full = a.powers[u] == b[u].p_max;
      const bool empty = a.powers[u] == 0.0;
      if (partial_seen) CHECK(empty);
      if (!full && !empty) partial_seen = true;
    }
    CHECK(total <= budget * (1.0 + 1e-12));
  }
}

TEST_CASE("equal split helper", "[baseline]") {
  CHECK(equal_split(4, 10.0) == std::vector<double>(4, 2.5));
  CHECK(equal_split(0, 10.0).empty());
}
