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

#ifndef VBRSCHED_TRACES_HPP_
#define VBRSCHED_TRACES_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "vbrsched/rng.hpp"

namespace vbrsched {

// Per-frame sizes of a stored video, in bits.
struct FrameTrace {
  std::string title;
  double frame_rate = 30.0;               // frames per second
  std::vector<double> frame_sizes;        // bits, one entry per frame

  long frames() const { return static_cast<long>(frame_sizes.size()); }
  double max_frame() const {
    return frame_sizes.empty() ? 0.0
                               : *std::max_element(frame_sizes.begin(), frame_sizes.end());
  }
};

// Cumulative consumption curve: D(0) = 0, D(t) = sum of frame sizes 1..t.
inline std::vector<double> build_consumption(const FrameTrace& trace) {
  if (trace.frame_sizes.empty())
    throw std::invalid_argument("trace '" + trace.title + "' has no frames");
  std::vector<double> d(trace.frame_sizes.size() + 1);
  d[0] = 0.0;
  for (std::size_t i = 0; i < trace.frame_sizes.size(); ++i) {
    if (!(trace.frame_sizes[i] > 0.0))
      throw std::invalid_argument("trace '" + trace.title + "' has a nonpositive frame size");
    d[i + 1] = d[i] + trace.frame_sizes[i];
  }
  return d;
}

// Cumulative overflow curve: B(t) = min(D(t-1) + b, D(T)) with D(-1) = 0,
// so B(0) = min(b, D(T)) and the buffer may be prefilled before playout.
inline std::vector<double> build_overflow(const std::vector<double>& consumption,
                                          double buffer_bits) {
  if (!(buffer_bits > 0.0)) throw std::invalid_argument("buffer size must be positive");
  if (consumption.empty()) throw std::invalid_argument("empty consumption curve");
  const double total = consumption.back();
  std::vector<double> b(consumption.size());
  b[0] = std::min(buffer_bits, total);
  for (std::size_t t = 1; t < consumption.size(); ++t)
    b[t] = std::min(consumption[t - 1] + buffer_bits, total);
  return b;
}

enum class SlotEvent { kNone, kUnderflow, kOverflow };

inline const char* to_string(SlotEvent e) {
  switch (e) {
    case SlotEvent::kUnderflow: return "underflow";
    case SlotEvent::kOverflow: return "overflow";
    default: return "none";
  }
}

// One user's session: immutable consumption/overflow curves plus the live
// transmission curve X. Slots are 1-based; X(0) = 0.
class VideoSession {
 public:
  VideoSession(FrameTrace trace, double buffer_bits)
      : trace_(std::move(trace)),
        buffer_bits_(buffer_bits),
        consumption_(build_consumption(trace_)),
        overflow_(build_overflow(consumption_, buffer_bits)) {
    transmitted_.reserve(consumption_.size());
    transmitted_.push_back(0.0);
  }

  const FrameTrace& trace() const { return trace_; }
  const std::vector<double>& consumption() const { return consumption_; }
  const std::vector<double>& overflow() const { return overflow_; }
  double buffer_size() const { return buffer_bits_; }
  long total_frames() const { return trace_.frames(); }
  double slot_length() const { return 1.0 / trace_.frame_rate; }

  long current_slot() const { return static_cast<long>(transmitted_.size()) - 1; }
  bool complete() const { return current_slot() >= total_frames(); }
  double transmitted(long t) const { return transmitted_.at(static_cast<std::size_t>(t)); }

  // Bits that must arrive in slot t to avoid underflow.
  double min_bits(long t) const {
    return std::max(0.0, consumption_[static_cast<std::size_t>(t)] - transmitted_.back());
  }
  // Bits that may arrive in slot t without overflow.
  double max_bits(long t) const {
    return overflow_[static_cast<std::size_t>(t)] - transmitted_.back();
  }

  // Advance X by one slot. Events are recorded, never fatal: the deterministic
  // curves keep advancing and later slots may recover.
  SlotEvent record_delivery(long t, double bits) {
    if (bits < 0.0) throw std::invalid_argument("negative delivery");
    if (t != current_slot() + 1 || t > total_frames())
      throw std::logic_error("record_delivery: slots must advance one at a time");
    const double x = transmitted_.back() + bits;
    transmitted_.push_back(x);
    const double d = consumption_[static_cast<std::size_t>(t)];
    const double b = overflow_[static_cast<std::size_t>(t)];
    const double tol_d = 1e-9 * std::max(1.0, d);
    const double tol_b = 1e-9 * std::max(1.0, b);
    if (x < d - tol_d) return SlotEvent::kUnderflow;
    if (x > b + tol_b) return SlotEvent::kOverflow;
    return SlotEvent::kNone;
  }

  // Buffer occupancy X(t) - D(t); negative while stalled.
  double buffer_level(long t) const {
    return transmitted(t) - consumption_[static_cast<std::size_t>(t)];
  }

 private:
  FrameTrace trace_;
  double buffer_bits_;
  std::vector<double> consumption_;
  std::vector<double> overflow_;
  std::vector<double> transmitted_;
};

// Rotate a trace so playout starts at frame `offset` (mod T). Keeps length and
// total bits, which is how differently aligned sessions of one title are made.
inline FrameTrace rotate_trace(FrameTrace trace, long offset) {
  const long n = trace.frames();
  if (n == 0) return trace;
  long k = ((offset % n) + n) % n;
  std::rotate(trace.frame_sizes.begin(), trace.frame_sizes.begin() + k, trace.frame_sizes.end());
  return trace;
}

// Trace file: one frame size per line, optional header
//   # fps=<float> unit=<bits|bytes>
inline FrameTrace load_trace_file(const std::filesystem::path& path,
                                  double default_fps = 30.0) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open trace file: " + path.string());
  FrameTrace trace;
  trace.title = path.stem().string();
  trace.frame_rate = default_fps;
  double unit_scale = 1.0;  // bits
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (first && line.rfind('#', 0) == 0) {
      std::istringstream hs(line.substr(1));
      std::string tok;
      while (hs >> tok) {
        if (tok.rfind("fps=", 0) == 0) {
          trace.frame_rate = std::stod(tok.substr(4));
        } else if (tok.rfind("unit=", 0) == 0) {
          const std::string unit = tok.substr(5);
          if (unit == "bytes") unit_scale = 8.0;
          else if (unit == "bits") unit_scale = 1.0;
          else throw std::invalid_argument("trace header unit must be bits or bytes: " + path.string());
        }
      }
      first = false;
      continue;
    }
    first = false;
    if (line.empty() || line[0] == '#') continue;
    std::size_t pos = 0;
    const double v = std::stod(line, &pos);
    trace.frame_sizes.push_back(v * unit_scale);
  }
  if (trace.frame_sizes.empty())
    throw std::invalid_argument("trace file has no frames: " + path.string());
  if (!(trace.frame_rate > 0.0))
    throw std::invalid_argument("trace fps must be positive: " + path.string());
  return trace;
}

// Bundled synthetic VBR source for tests and default runs: lognormal frame
// sizes, a large intra frame every `gop` frames, and a slow scene-level
// modulation so demand is bursty at two time scales.
struct SyntheticSpec {
  std::string title = "synthetic";
  long frames = 2000;
  double fps = 30.0;
  double mean_bits = 15000.0;   // mean size of non-intra frames
  long gop = 12;                // intra-frame period
  double intra_boost = 5.0;     // intra frame mean multiplier
  double jitter = 0.22;         // lognormal sigma of per-frame noise
  double scene_depth = 0.3;     // +/- fraction of slow modulation
  double scene_period = 300.0;  // frames per modulation cycle
  std::uint64_t seed = 1;
};

inline FrameTrace make_synthetic_trace(const SyntheticSpec& spec) {
  if (spec.frames < 1) throw std::invalid_argument("synthetic trace needs frames >= 1");
  FrameTrace trace;
  trace.title = spec.title;
  trace.frame_rate = spec.fps;
  trace.frame_sizes.reserve(static_cast<std::size_t>(spec.frames));
  NormalSampler normal(make_stream(spec.seed, kTraceStreamBase));
  const double sigma = spec.jitter;
  for (long i = 0; i < spec.frames; ++i) {
    const bool intra = (i % std::max<long>(1, spec.gop)) == 0;
    const double scene =
        1.0 + spec.scene_depth * std::sin(2.0 * 3.14159265358979323846 * static_cast<double>(i) / spec.scene_period);
    const double base = spec.mean_bits * (intra ? spec.intra_boost : 1.0) * scene;
    const double size = base * std::exp(sigma * normal() - 0.5 * sigma * sigma);
    trace.frame_sizes.push_back(std::max(1.0, size));
  }
  return trace;
}

}  // namespace vbrsched

#endif  // VBRSCHED_TRACES_HPP_
