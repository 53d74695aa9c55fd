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

#ifndef VBRSCHED_DUAL_SOLVER_HPP_
#define VBRSCHED_DUAL_SOLVER_HPP_

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "vbrsched/rate_model.hpp"

namespace vbrsched {

struct SolverConfig {
  double armijo_shrink = 0.5;   // backtracking factor, in (0,1)
  double armijo_slope = 0.01;   // sufficient-decrease fraction, in (0,1)
  double initial_step = 1.0;    // first trial step size
  double tol = 1e-6;            // relative convergence tolerance
  int max_iters = 200;          // per-user subproblem iterations
  int max_rounds = 500;         // master message rounds
};

// Concave-region power allocation instance:
//   maximize sum ln(1 + L p / (budget - p + A))
//   s.t.     p_min <= p <= p_th per user,  sum p <= p_total.
// `budget` is the cell's peak power (fixes the interference level in the
// map); `p_total` is the share available to these users.
struct ConcaveProblem {
  std::vector<int> users;       // caller-side indices, for reporting only
  std::vector<double> p_min;
  std::vector<double> p_th;
  std::vector<ChannelState> channels;
  double budget = 0.0;
  double p_total = 0.0;

  std::size_t size() const { return p_min.size(); }
};

struct DualState {
  std::vector<double> lambda;   // lower-box multipliers, >= 0
  std::vector<double> mu;       // upper-box multipliers, >= 0
  double nu = 0.0;              // total-power multiplier, >= 0
  std::vector<double> iterate;  // requested powers at current prices
  double dual_value = 0.0;
  double primal_value = 0.0;
  int iteration = 0;
  bool converged = false;
  bool subproblems_converged = true;
  // line-search memory: secant curvature estimate for nu, plus per-family
  // base trial steps that expand through flat subgradient regions (a fixed
  // trial step would crawl there; backtracking can only shrink)
  double nu_prev = 0.0;
  double nu_grad_prev = 0.0;
  bool nu_memory = false;
  double lambda_step = 0.0;
  double mu_step = 0.0;
  double nu_step = 0.0;
};

struct RoundRecord {
  int round = 0;
  std::vector<double> powers;
  std::vector<double> lambda;
  std::vector<double> mu;
  double nu = 0.0;
  double dual_objective = 0.0;
  double primal_objective = 0.0;
};

struct DistributedSolution {
  std::vector<double> powers;   // final allocation, projected to feasibility
  DualState state;
  std::vector<RoundRecord> rounds;
  bool converged = false;
};

// Per-user subproblem: maximize ln(1 + gamma(p)) + (lambda - mu - nu) p over
// the box [p_min, p_th]. Projected gradient ascent; each step is accepted by
// the Armijo rule. Trial steps after the first use a secant estimate of the
// local curvature, which keeps progress fast near the inflection point where
// the curvature fades out.
inline double user_subproblem(double lambda, double mu, double nu, const PowerBounds& bounds,
                              const ChannelState& ch, double budget, double start,
                              const SolverConfig& cfg, bool* converged = nullptr) {
  const double lo = bounds.p_min;
  const double hi = bounds.p_th;
  if (converged) *converged = true;
  if (hi <= lo) return lo;

  const double price = lambda - mu - nu;
  auto value = [&](double p) { return capacity_in_map(p, ch, budget) + price * p; };
  auto slope = [&](double p) { return capacity_derivative(p, ch, budget) + price; };
  auto clip = [&](double p) { return std::clamp(p, lo, hi); };

  const double res_tol = 1e-11 * std::max(1.0, hi);
  double p = clip(start);
  double prev_p = 0.0, prev_g = 0.0;
  bool have_prev = false;

  for (int it = 0; it < cfg.max_iters; ++it) {
    const double g = slope(p);
    if (std::abs(clip(p + g) - p) <= res_tol) return p;

    double theta = cfg.initial_step;
    if (have_prev && std::abs(g - prev_g) > 0.0 && p != prev_p)
      theta = std::clamp(std::abs((p - prev_p) / (g - prev_g)), 1e-10, 1e10);

    const double fp = value(p);
    bool moved = false;
    while (theta >= 1e-16) {
      const double cand = clip(p + theta * g);
      const double step = cand - p;
      if (std::abs(step) <= 1e-18 * std::max(1.0, hi)) break;
      if (value(cand) >= fp + cfg.armijo_slope * g * step) {
        prev_p = p;
        prev_g = g;
        have_prev = true;
        p = cand;
        moved = true;
        break;
      }
      theta *= cfg.armijo_shrink;
    }
    if (!moved) return p;  // line search pinned; g is already tiny
  }
  if (converged) *converged = false;
  return p;
}

namespace detail {

struct DualEval {
  double dual_value = 0.0;
  double primal_value = 0.0;
  double sum_p = 0.0;
  bool subs_converged = true;
};

// Solve all subproblems at the given prices and evaluate the Lagrangian there.
inline DualEval evaluate_dual(const ConcaveProblem& prob, std::span<const double> lambda,
                              std::span<const double> mu, double nu,
                              std::span<const double> warm, const SolverConfig& cfg,
                              std::vector<double>& out_powers) {
  DualEval ev;
  out_powers.resize(prob.size());
  for (std::size_t n = 0; n < prob.size(); ++n) {
    PowerBounds box;
    box.p_min = prob.p_min[n];
    box.p_th = prob.p_th[n];
    bool conv = true;
    out_powers[n] = user_subproblem(lambda[n], mu[n], nu, box, prob.channels[n], prob.budget,
                                    warm[n], cfg, &conv);
    ev.subs_converged = ev.subs_converged && conv;
    const double c = capacity_in_map(out_powers[n], prob.channels[n], prob.budget);
    ev.primal_value += c;
    ev.dual_value += c + lambda[n] * (out_powers[n] - prob.p_min[n]) +
                     mu[n] * (prob.p_th[n] - out_powers[n]);
    ev.sum_p += out_powers[n];
  }
  ev.dual_value += nu * (prob.p_total - ev.sum_p);
  return ev;
}

}  // namespace detail

// One master round: projected subgradient steps on each multiplier family
// (lambda, mu, then nu), each step size chosen by backtracking under the
// Armijo rule so the dual objective never increases. Every trial evaluation
// re-solves the user subproblems at the trial prices. The base trial step of
// a family doubles whenever its first trial is accepted outright and resets
// to the accepted value after any backtracking, so flat stretches of the
// dual are crossed in logarithmically many rounds.
inline DualState master_update(const ConcaveProblem& prob, DualState state,
                               const SolverConfig& cfg) {
  const std::size_t n = prob.size();
  std::vector<double> grad(n), trial(n), trial_powers;

  auto accept = [&](const detail::DualEval& ev) {
    state.iterate = trial_powers;
    state.dual_value = ev.dual_value;
    state.primal_value = ev.primal_value;
    state.subproblems_converged = ev.subs_converged;
  };

  auto try_vector_family = [&](std::vector<double>& family, double& base_step,
                               bool lower_box) {
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      grad[i] = lower_box ? state.iterate[i] - prob.p_min[i]
                          : prob.p_th[i] - state.iterate[i];
      norm = std::max(norm, std::abs(grad[i]));
    }
    if (norm == 0.0) return;
    if (base_step <= 0.0) base_step = cfg.initial_step;
    double alpha = base_step;
    bool backtracked = false;
    while (alpha >= 1e-14) {
      double moved = 0.0, decrease = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        trial[i] = std::max(0.0, family[i] - alpha * grad[i]);
        moved += std::abs(trial[i] - family[i]);
        decrease += grad[i] * (family[i] - trial[i]);
      }
      if (moved == 0.0) return;  // projection pins the whole family
      const auto& lam = lower_box ? trial : state.lambda;
      const auto& mu = lower_box ? state.mu : trial;
      const auto ev = detail::evaluate_dual(prob, lam, mu, state.nu, state.iterate, cfg,
                                            trial_powers);
      if (ev.dual_value <= state.dual_value - cfg.armijo_slope * decrease) {
        family = trial;
        accept(ev);
        base_step = backtracked ? alpha : std::min(base_step * 2.0, 1e12);
        return;
      }
      alpha *= cfg.armijo_shrink;
      backtracked = true;
    }
  };

  try_vector_family(state.lambda, state.lambda_step, /*lower_box=*/true);
  try_vector_family(state.mu, state.mu_step, /*lower_box=*/false);

  // nu family: a secant estimate of the local curvature seeds the trial step
  // when it is available, the adaptive base step otherwise
  double sum_p = 0.0;
  for (double p : state.iterate) sum_p += p;
  const double g_nu = prob.p_total - sum_p;
  if (!(state.nu == 0.0 && g_nu >= 0.0)) {
    if (state.nu_step <= 0.0) state.nu_step = cfg.initial_step;
    const bool have_secant = state.nu_memory &&
                             std::abs(g_nu - state.nu_grad_prev) > 0.0 &&
                             state.nu != state.nu_prev;
    double alpha = state.nu_step;
    if (have_secant)
      alpha = std::clamp(std::abs((state.nu - state.nu_prev) / (g_nu - state.nu_grad_prev)),
                         1e-10, 1e10);
    bool backtracked = false;
    while (alpha >= 1e-14) {
      const double cand = std::max(0.0, state.nu - alpha * g_nu);
      const double decrease = g_nu * (state.nu - cand);
      if (cand == state.nu) break;
      const auto ev = detail::evaluate_dual(prob, state.lambda, state.mu, cand, state.iterate,
                                            cfg, trial_powers);
      if (ev.dual_value <= state.dual_value - cfg.armijo_slope * decrease) {
        state.nu_prev = state.nu;
        state.nu_grad_prev = g_nu;
        state.nu_memory = true;
        state.nu = cand;
        accept(ev);
        if (backtracked) state.nu_step = alpha;
        else if (!have_secant) state.nu_step = std::min(state.nu_step * 2.0, 1e12);
        break;
      }
      alpha *= cfg.armijo_shrink;
      backtracked = true;
    }
  }

  ++state.iteration;
  return state;
}

// Projected-gradient residual of the dual at the current iterate. Zero means
// primal feasibility and complementary slackness hold at once.
inline double dual_residual(const ConcaveProblem& prob, const DualState& state) {
  double sum_p = 0.0;
  for (double p : state.iterate) sum_p += p;
  double res = std::max(0.0, sum_p - prob.p_total);
  for (std::size_t i = 0; i < prob.size(); ++i) {
    if (state.lambda[i] > 0.0)
      res = std::max(res, std::abs(state.iterate[i] - prob.p_min[i]));
    if (state.mu[i] > 0.0)
      res = std::max(res, std::abs(prob.p_th[i] - state.iterate[i]));
  }
  if (state.nu > 0.0) res = std::max(res, std::abs(prob.p_total - sum_p));
  return res;
}

struct KktResiduals {
  double stationarity = 0.0;     // scaled by max(1, nu + max |C'|)
  double primal = 0.0;           // scaled by max(1, p_total)
  double complementarity = 0.0;  // scaled by max(1, p_total)

  double worst() const { return std::max({stationarity, primal, complementarity}); }
};

inline KktResiduals kkt_residuals(const ConcaveProblem& prob, std::span<const double> powers,
                                  std::span<const double> lambda, std::span<const double> mu,
                                  double nu) {
  KktResiduals r;
  double sum_p = 0.0, grad_scale = 1.0;
  const double box_eps = 1e-9 * std::max(1.0, prob.p_total);
  for (std::size_t i = 0; i < prob.size(); ++i) {
    const double p = powers[i];
    sum_p += p;
    const double c1 = capacity_derivative(p, prob.channels[i], prob.budget);
    grad_scale = std::max(grad_scale, std::abs(c1) + nu);
    const double g = c1 + lambda[i] - mu[i] - nu;
    double viol;
    if (p <= prob.p_min[i] + box_eps) viol = std::max(0.0, g);
    else if (p >= prob.p_th[i] - box_eps) viol = std::max(0.0, -g);
    else viol = std::abs(g);
    r.stationarity = std::max(r.stationarity, viol);
    r.primal = std::max({r.primal, prob.p_min[i] - p, p - prob.p_th[i]});
    r.complementarity = std::max({r.complementarity,
                                  std::abs(lambda[i] * (p - prob.p_min[i])),
                                  std::abs(mu[i] * (prob.p_th[i] - p))});
  }
  r.primal = std::max(r.primal, sum_p - prob.p_total) / std::max(1.0, prob.p_total);
  r.primal = std::max(r.primal, 0.0);
  r.complementarity = std::max(r.complementarity, std::abs(nu * (prob.p_total - sum_p)));
  r.complementarity /= std::max(1.0, prob.p_total);
  r.stationarity /= grad_scale;
  return r;
}

// Full distributed solve: broadcast prices, per-user subproblems, collect
// requested powers, master price update; repeat until the residual falls
// under tol or the round budget runs out. Deterministic for fixed inputs.
inline DistributedSolution solve_distributed(const ConcaveProblem& prob,
                                             const SolverConfig& cfg) {
  DistributedSolution sol;
  const std::size_t n = prob.size();
  if (prob.p_min.size() != n || prob.p_th.size() != n || prob.channels.size() != n)
    throw std::invalid_argument("solve_distributed: inconsistent problem arrays");
  double sum_min = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (prob.p_th[i] < prob.p_min[i] - kRelTol * std::max(1.0, prob.p_min[i]))
      throw std::invalid_argument("solve_distributed: empty box");
    sum_min += prob.p_min[i];
  }
  if (sum_min > prob.p_total * (1.0 + kRelTol) + kRelTol)
    throw std::invalid_argument("solve_distributed: sum of lower bounds exceeds p_total");
  if (n == 0) {
    sol.converged = true;
    sol.state.converged = true;
    return sol;
  }

  DualState state;
  state.lambda.assign(n, 0.0);
  state.mu.assign(n, 0.0);
  state.iterate = prob.p_min;

  std::vector<double> powers;
  const auto ev0 = detail::evaluate_dual(prob, state.lambda, state.mu, state.nu, state.iterate,
                                         cfg, powers);
  state.iterate = powers;
  state.dual_value = ev0.dual_value;
  state.primal_value = ev0.primal_value;
  state.subproblems_converged = ev0.subs_converged;

  const double scale = std::max(1.0, prob.p_total);
  for (int round = 1; round <= cfg.max_rounds; ++round) {
    sol.rounds.push_back(RoundRecord{round, state.iterate, state.lambda, state.mu, state.nu,
                                     state.dual_value, state.primal_value});
    if (dual_residual(prob, state) <= cfg.tol * scale && state.subproblems_converged) {
      state.converged = true;
      break;
    }
    state = master_update(prob, state, cfg);
  }

  sol.powers = state.iterate;
  double total = 0.0;
  for (double p : sol.powers) total += p;
  // Converged runs are within the residual allowance by construction; only a
  // clearly over-budget iterate (round budget ran out) gets projected back.
  if (total > prob.p_total + cfg.tol * scale && total > 0.0) {
    const double k = prob.p_total / total;
    for (double& p : sol.powers) p *= k;
  }
  sol.converged = state.converged;
  sol.state = std::move(state);
  return sol;
}

}  // namespace vbrsched

#endif  // VBRSCHED_DUAL_SOLVER_HPP_
