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

#ifndef VBRSCHED_STEP2_HPP_
#define VBRSCHED_STEP2_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "vbrsched/dual_solver.hpp"
#include "vbrsched/rate_model.hpp"

namespace vbrsched {

// Feasibility triage: when the minimum required powers do not fit the budget,
// links are suspended in descending order of A (worst channel first) until
// they do. Suspended links get zero power this slot.
struct TriageReport {
  std::vector<int> retained;    // ascending user index
  std::vector<int> suspended;   // in removal order
  double p_min_sum = 0.0;       // over retained users
  double gap = 0.0;             // budget - p_min_sum
};

inline TriageReport triage(std::span<const PowerBounds> bounds,
                           std::span<const ChannelState> channels, double budget) {
  TriageReport rep;
  rep.retained.reserve(bounds.size());
  double sum = 0.0;
  for (std::size_t n = 0; n < bounds.size(); ++n) {
    rep.retained.push_back(static_cast<int>(n));
    sum += bounds[n].p_min;
  }
  while (sum > budget && !rep.retained.empty()) {
    // victim: largest A; ties keep the lower index
    std::size_t victim = 0;
    for (std::size_t i = 1; i < rep.retained.size(); ++i) {
      const double a_i = channels[static_cast<std::size_t>(rep.retained[i])].quality;
      const double a_v = channels[static_cast<std::size_t>(rep.retained[victim])].quality;
      if (a_i >= a_v) victim = i;
    }
    const int user = rep.retained[victim];
    rep.retained.erase(rep.retained.begin() + static_cast<std::ptrdiff_t>(victim));
    rep.suspended.push_back(user);
    sum = 0.0;
    for (int n : rep.retained) sum += bounds[static_cast<std::size_t>(n)].p_min;
  }
  rep.p_min_sum = sum;
  rep.gap = std::max(0.0, budget - sum);
  return rep;
}

// Average capacity gain per Watt of raising this user from p_from by up to
// `gap`, capped at p_max. Degenerates to the derivative when the interval
// has zero width.
inline double marginal_rate(double p_from, double gap, const PowerBounds& bounds,
                            const ChannelState& ch, double budget) {
  const double w = std::min(bounds.p_max, p_from + gap);
  if (w - p_from <= 1e-12 * std::max(1.0, budget))
    return capacity_derivative(p_from, ch, budget);
  return (capacity_in_map(w, ch, budget) - capacity_in_map(p_from, ch, budget)) /
         (w - p_from);
}

struct PhaseOutcome {
  bool valid = false;
  int phase_id = 0;
  std::vector<double> powers;  // full length; suspended users at zero
  double objective = -std::numeric_limits<double>::infinity();
  DistributedSolution solve;   // concave-solve round log, when one ran
  std::vector<int> solver_users;
  bool ran_solver = false;
};

struct Step2Result {
  TriageReport triage;
  std::array<PhaseOutcome, 3> phases;
  int best_phase = 0;  // 1-based; 0 when no phase succeeded

  const PhaseOutcome& best() const { return phases[static_cast<std::size_t>(best_phase - 1)]; }
};

namespace detail {

inline double step2_objective(std::span<const double> powers, std::span<const int> retained,
                              std::span<const ChannelState> channels, double budget) {
  double f = 0.0;
  for (int n : retained)
    f += capacity_in_map(powers[static_cast<std::size_t>(n)],
                         channels[static_cast<std::size_t>(n)], budget);
  return f;
}

// Hand out `leftover` Watts in descending marginal-rate order, filling each
// taker to min(p_max, current + leftover). Rates are ranked once per call;
// a taker either saturates at p_max or exhausts the leftover, so no re-rank
// is needed afterwards. Ties go to the smaller A, then the lower index.
inline void pour_leftover(std::vector<double>& powers, double leftover,
                          std::span<const int> takers, std::span<const PowerBounds> bounds,
                          std::span<const ChannelState> channels, double budget) {
  const double eps = 1e-12 * std::max(1.0, budget);
  if (leftover <= eps) return;
  struct Cand { int user; double rate; };
  std::vector<Cand> cands;
  for (int n : takers) {
    const auto u = static_cast<std::size_t>(n);
    if (bounds[u].p_max - powers[u] > eps)
      cands.push_back({n, marginal_rate(powers[u], leftover, bounds[u], channels[u], budget)});
  }
  std::sort(cands.begin(), cands.end(), [&](const Cand& x, const Cand& y) {
    if (x.rate != y.rate) return x.rate > y.rate;
    const double ax = channels[static_cast<std::size_t>(x.user)].quality;
    const double ay = channels[static_cast<std::size_t>(y.user)].quality;
    if (ax != ay) return ax < ay;
    return x.user < y.user;
  });
  for (const Cand& c : cands) {
    if (leftover <= eps) break;
    const auto u = static_cast<std::size_t>(c.user);
    const double w = std::min(bounds[u].p_max, powers[u] + leftover);
    leftover -= w - powers[u];
    powers[u] = w;
  }
}

// Concave solve over the sub-box [p_min, p_th] of `members` with the power
// share `p_total`, writing the solution back into `powers`. The phase stays
// usable if the solver at least reached the configured tolerance.
inline bool concave_solve(std::vector<double>& powers, std::span<const int> members,
                          std::span<const PowerBounds> bounds,
                          std::span<const ChannelState> channels, double budget,
                          double p_total, const SolverConfig& cfg, PhaseOutcome& out) {
  if (members.empty()) return true;
  ConcaveProblem prob;
  prob.budget = budget;
  prob.p_total = p_total;
  for (int n : members) {
    const auto u = static_cast<std::size_t>(n);
    prob.users.push_back(n);
    prob.p_min.push_back(bounds[u].p_min);
    prob.p_th.push_back(bounds[u].p_th);
    prob.channels.push_back(channels[u]);
  }
  SolverConfig tight = cfg;
  tight.tol = std::min(cfg.tol, 1e-10);
  DistributedSolution sol = solve_distributed(prob, tight);
  const bool usable =
      sol.converged || dual_residual(prob, sol.state) <= cfg.tol * std::max(1.0, p_total);
  for (std::size_t i = 0; i < prob.users.size(); ++i)
    powers[static_cast<std::size_t>(prob.users[i])] = sol.powers[i];
  out.solver_users = prob.users;
  out.solve = std::move(sol);
  out.ran_solver = true;
  return usable;
}

}  // namespace detail

// Step II of the two-step allocation: after triage, three candidate power
// structures are built and the best objective wins.
//   Phase 1: optimize the concave region first, then pour the remainder.
//   Phase 2: push the best marginal-rate link toward p_max first.
//   Phase 3: push the two best links first (only worth attempting when more
//            than two links could reach the convex region).
inline Step2Result run_phases(const TriageReport& tri, std::span<const PowerBounds> bounds,
                              std::span<const ChannelState> channels, double budget,
                              const SolverConfig& solver_cfg) {
  Step2Result result;
  result.triage = tri;
  for (int id = 1; id <= 3; ++id)
    result.phases[static_cast<std::size_t>(id - 1)].phase_id = id;
  const std::size_t n_all = bounds.size();
  const double eps = 1e-12 * std::max(1.0, budget);

  auto retained_sum = [&](const std::vector<double>& powers) {
    double s = 0.0;
    for (int n : tri.retained) s += powers[static_cast<std::size_t>(n)];
    return s;
  };

  // Convex-capable links and their initial marginal rates (Table II line 5).
  std::vector<int> convex_capable;
  for (int n : tri.retained) {
    const auto u = static_cast<std::size_t>(n);
    if (bounds[u].p_max > bounds[u].p_star) convex_capable.push_back(n);
  }
  auto rate_at_min = [&](int n) {
    const auto u = static_cast<std::size_t>(n);
    return marginal_rate(bounds[u].p_min, tri.gap, bounds[u], channels[u], budget);
  };
  auto better_rate = [&](int x, int y) {
    const double rx = rate_at_min(x), ry = rate_at_min(y);
    if (rx != ry) return rx > ry;
    const double ax = channels[static_cast<std::size_t>(x)].quality;
    const double ay = channels[static_cast<std::size_t>(y)].quality;
    if (ax != ay) return ax < ay;
    return x < y;
  };

  // Phase body shared by all three: fix `pinned` links at given powers, run
  // the concave solve over the rest that can sit below p_star, then pour
  // whatever remains.
  auto finish_phase = [&](PhaseOutcome& out, std::vector<double>& powers,
                          std::span<const int> pinned) {
    std::vector<int> rest, concave_set;
    for (int n : tri.retained)
      if (std::find(pinned.begin(), pinned.end(), n) == pinned.end()) rest.push_back(n);
    double fixed = 0.0;
    for (int n : rest) {
      const auto u = static_cast<std::size_t>(n);
      if (bounds[u].p_min < bounds[u].p_star) concave_set.push_back(n);
      else fixed += bounds[u].p_min;
    }
    for (int n : pinned) fixed += powers[static_cast<std::size_t>(n)];
    // rounding drift in the fixed terms must never make the share infeasible
    double floor_sum = 0.0;
    for (int n : concave_set) floor_sum += bounds[static_cast<std::size_t>(n)].p_min;
    const double share = std::max(budget - fixed, floor_sum);
    if (!detail::concave_solve(powers, concave_set, bounds, channels, budget, share,
                               solver_cfg, out))
      return false;
    detail::pour_leftover(powers, budget - retained_sum(powers), rest, bounds, channels,
                          budget);
    return true;
  };

  auto run_phase = [&](int id, std::span<const int> pinned_order) {
    PhaseOutcome& out = result.phases[static_cast<std::size_t>(id - 1)];
    out.phase_id = id;
    std::vector<double> powers(n_all, 0.0);
    for (int n : tri.retained)
      powers[static_cast<std::size_t>(n)] = bounds[static_cast<std::size_t>(n)].p_min;
    double gap = tri.gap;
    for (int n : pinned_order) {
      const auto u = static_cast<std::size_t>(n);
      const double w = std::min(bounds[u].p_max, powers[u] + gap);
      gap -= w - powers[u];
      powers[u] = w;
    }
    bool ok = true;
    if (pinned_order.empty() || budget - retained_sum(powers) > eps)
      ok = finish_phase(out, powers, pinned_order);
    if (ok) {
      out.valid = true;
      out.objective = detail::step2_objective(powers, tri.retained, channels, budget);
      out.powers = std::move(powers);
    }
  };

  run_phase(1, {});

  if (!convex_capable.empty()) {
    const int top = *std::min_element(convex_capable.begin(), convex_capable.end(),
                                      [&](int x, int y) { return better_rate(x, y); });
    const std::array<int, 1> pin2{top};
    run_phase(2, pin2);

    bool low_gain = false;
    for (int n : tri.retained)
      low_gain = low_gain || channels[static_cast<std::size_t>(n)].proc_gain <
                                 convex_region_bound(channels[static_cast<std::size_t>(n)], budget);
    if (convex_capable.size() >= 2 && low_gain) {
      std::vector<int> order = convex_capable;
      std::sort(order.begin(), order.end(), better_rate);
      const std::array<int, 2> pin3{order[0], order[1]};
      run_phase(3, pin3);
    }
  }

  double best = -std::numeric_limits<double>::infinity();
  for (const auto& ph : result.phases)
    if (ph.valid && ph.objective > best) {
      best = ph.objective;
      result.best_phase = ph.phase_id;
    }
  if (result.best_phase == 0)
    throw std::runtime_error("step2: no phase produced a usable allocation");
  return result;
}

}  // namespace vbrsched

#endif  // VBRSCHED_STEP2_HPP_
