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

#ifndef VBRSCHED_STEP1_HPP_
#define VBRSCHED_STEP1_HPP_

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "vbrsched/rate_model.hpp"

namespace vbrsched {

// Dense row-major square matrix; the linear systems here are at most a few
// dozen users wide.
struct Matrix {
  int n = 0;
  std::vector<double> a;

  explicit Matrix(int size = 0) : n(size), a(static_cast<std::size_t>(size) * size, 0.0) {}
  double& at(int r, int c) { return a[static_cast<std::size_t>(r) * n + c]; }
  double at(int r, int c) const { return a[static_cast<std::size_t>(r) * n + c]; }
};

// Linear system for hitting every user's gamma_max simultaneously:
// (I - F) P = u, with F and u from the SINR equations at those targets.
// Zero-demand users (gamma_max = 0) are filtered out before the system is
// built; `users` maps rows back to the caller's indices.
struct SinrSystem {
  std::vector<int> users;
  Matrix F;
  std::vector<double> u;

  int size() const { return F.n; }
};

enum class Step1Status { kOptimal, kInfeasibleSpectral, kExceedsBudget };

struct Step1Outcome {
  Step1Status status = Step1Status::kInfeasibleSpectral;
  std::vector<double> powers;  // per system row; meaningful unless spectral-infeasible
  double spectral_radius = 0.0;
  bool radius_converged = true;
};

inline SinrSystem build_system(std::span<const SinrBounds> bounds,
                               std::span<const ChannelState> channels) {
  if (bounds.size() != channels.size())
    throw std::invalid_argument("build_system: bounds/channels size mismatch");
  SinrSystem sys;
  for (std::size_t n = 0; n < bounds.size(); ++n)
    if (bounds[n].gamma_max > 0.0) sys.users.push_back(static_cast<int>(n));
  const int m = static_cast<int>(sys.users.size());
  sys.F = Matrix(m);
  sys.u.resize(static_cast<std::size_t>(m));
  for (int r = 0; r < m; ++r) {
    const auto& b = bounds[static_cast<std::size_t>(sys.users[r])];
    const auto& ch = channels[static_cast<std::size_t>(sys.users[r])];
    for (int c = 0; c < m; ++c)
      sys.F.at(r, c) = (r == c) ? 0.0 : b.gamma_max / ch.proc_gain;
    sys.u[static_cast<std::size_t>(r)] = ch.noise * b.gamma_max / (ch.proc_gain * ch.gain);
  }
  return sys;
}

// Largest eigenvalue modulus of a nonnegative matrix by power iteration.
// Iterating on F + sI (s = max entry) keeps the dominant eigenvalue real and
// aperiodic; the Perron root shifts by exactly s.
inline double spectral_radius(const Matrix& f, double tol = 1e-10, int max_iters = 10000,
                              bool* converged = nullptr) {
  if (converged) *converged = true;
  if (f.n == 0) return 0.0;
  double shift = 0.0;
  for (double v : f.a) {
    if (v < 0.0) throw std::invalid_argument("spectral_radius: negative entry");
    shift = std::max(shift, v);
  }
  if (shift == 0.0) return 0.0;

  std::vector<double> v(static_cast<std::size_t>(f.n), 1.0), w(v.size());
  double lambda = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    double norm = 0.0;
    for (int r = 0; r < f.n; ++r) {
      double s = shift * v[static_cast<std::size_t>(r)];
      for (int c = 0; c < f.n; ++c) s += f.at(r, c) * v[static_cast<std::size_t>(c)];
      w[static_cast<std::size_t>(r)] = s;
      norm = std::max(norm, std::abs(s));
    }
    if (norm == 0.0) return 0.0;
    for (auto& x : w) x /= norm;
    const double prev = lambda;
    lambda = norm;
    v.swap(w);
    if (it > 0 && std::abs(lambda - prev) <= tol * std::max(1.0, lambda))
      return lambda - shift;
  }
  if (converged) *converged = false;
  return lambda - shift;
}

// Gaussian elimination with partial pivoting; empty result when singular.
inline std::vector<double> solve_dense(Matrix a, std::vector<double> b) {
  const int n = a.n;
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a.at(r, col)) > std::abs(a.at(pivot, col))) pivot = r;
    if (std::abs(a.at(pivot, col)) < 1e-300) return {};
    if (pivot != col) {
      for (int c = 0; c < n; ++c) std::swap(a.at(pivot, c), a.at(col, c));
      std::swap(b[static_cast<std::size_t>(pivot)], b[static_cast<std::size_t>(col)]);
    }
    for (int r = col + 1; r < n; ++r) {
      const double m = a.at(r, col) / a.at(col, col);
      if (m == 0.0) continue;
      a.at(r, col) = 0.0;
      for (int c = col + 1; c < n; ++c) a.at(r, c) -= m * a.at(col, c);
      b[static_cast<std::size_t>(r)] -= m * b[static_cast<std::size_t>(col)];
    }
  }
  std::vector<double> x(static_cast<std::size_t>(n));
  for (int r = n - 1; r >= 0; --r) {
    double s = b[static_cast<std::size_t>(r)];
    for (int c = r + 1; c < n; ++c) s -= a.at(r, c) * x[static_cast<std::size_t>(c)];
    x[static_cast<std::size_t>(r)] = s / a.at(r, r);
  }
  return x;
}

// Step I: if the gamma_max system is solvable (spectral radius of F below 1)
// solve it exactly; accept when the solution fits the power budget.
// A radius within 1e-8 of 1 is treated as infeasible: the solve would produce
// powers far beyond any budget anyway.
inline Step1Outcome solve_step1(const SinrSystem& sys, double budget) {
  Step1Outcome out;
  if (sys.size() == 0) {
    out.status = Step1Status::kOptimal;
    out.spectral_radius = 0.0;
    return out;
  }
  out.spectral_radius = spectral_radius(sys.F, 1e-10, 10000, &out.radius_converged);
  if (!(out.spectral_radius < 1.0 - 1e-8)) {
    out.status = Step1Status::kInfeasibleSpectral;
    return out;
  }
  Matrix m(sys.size());
  for (int r = 0; r < sys.size(); ++r)
    for (int c = 0; c < sys.size(); ++c)
      m.at(r, c) = (r == c ? 1.0 : 0.0) - sys.F.at(r, c);
  out.powers = solve_dense(std::move(m), sys.u);
  if (out.powers.empty())
    throw std::runtime_error("step1: (I - F) numerically singular despite radius < 1");
  double total = 0.0;
  for (double p : out.powers) {
    if (!(p > 0.0))
      throw std::runtime_error("step1: solved power vector not component-wise positive");
    total += p;
  }
  out.status = total <= budget * (1.0 + 1e-12) ? Step1Status::kOptimal
                                               : Step1Status::kExceedsBudget;
  return out;
}

struct Step1Run {
  Step1Outcome outcome;
  std::vector<double> powers_full;  // scattered to the caller's indexing
};

inline Step1Run run_step1(std::span<const SinrBounds> bounds,
                          std::span<const ChannelState> channels, double budget) {
  Step1Run run;
  const SinrSystem sys = build_system(bounds, channels);
  run.outcome = solve_step1(sys, budget);
  run.powers_full.assign(bounds.size(), 0.0);
  if (run.outcome.status != Step1Status::kInfeasibleSpectral)
    for (std::size_t i = 0; i < sys.users.size(); ++i)
      run.powers_full[static_cast<std::size_t>(sys.users[i])] = run.outcome.powers[i];
  return run;
}

}  // namespace vbrsched

#endif  // VBRSCHED_STEP1_HPP_
