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

#ifndef VBRSCHED_RNG_HPP_
#define VBRSCHED_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <random>

namespace vbrsched {

// Stream ids for deriving independent per-purpose generators from one master
// seed. Keeping the ids disjoint means adding or skipping one consumer (e.g.
// explicitly configured distances) does not shift any other stream.
inline constexpr std::uint64_t kDistanceStream = 1;
inline constexpr std::uint64_t kShadowStreamBase = 1000;
inline constexpr std::uint64_t kTraceStreamBase = 100000;

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic sub-stream: master seed and stream id in, seeded engine out.
inline std::mt19937_64 make_stream(std::uint64_t master_seed, std::uint64_t stream_id) {
  std::uint64_t s = master_seed;
  (void)splitmix64(s);
  s ^= 0x6a09e667f3bcc909ULL * (stream_id + 1);
  return std::mt19937_64(splitmix64(s));
}

inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_in(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

// Box-Muller, pair cached. Hand-rolled so the draw sequence does not depend
// on the standard library's std::normal_distribution implementation.
class NormalSampler {
 public:
  explicit NormalSampler(std::mt19937_64 rng) : rng_(rng) {}

  double operator()() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform01(rng_);
    double u2 = uniform01(rng_);
    while (u1 <= 0.0) u1 = uniform01(rng_);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  std::mt19937_64 rng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace vbrsched

#endif  // VBRSCHED_RNG_HPP_
