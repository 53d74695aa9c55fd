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

#include <cmath>
#include <random>

#include "vbrsched/step1.hpp"

using namespace vbrsched;

namespace {

ChannelState make_channel(double gain, double noise, double proc_gain) {
  ChannelState ch;
  ch.gain = gain;
  ch.noise = noise;
  ch.quality = noise / gain;
  ch.proc_gain = proc_gain;
  return ch;
}

SinrBounds demand(double gamma_max) {
  SinrBounds b;
  b.gamma_max = gamma_max;
  return b;
}

// Independent oracle: P <- F P + u converges to the same fixed point when the
// spectral radius is below one.
std::vector<double> fixed_point_solve(const Matrix& f, const std::vector<double>& u) {
  std::vector<double> p(u.size(), 0.0), q(u.size());
  for (int it = 0; it < 2000000; ++it) {
    double rel_delta = 0.0;
    for (int r = 0; r < f.n; ++r) {
      double s = u[static_cast<std::size_t>(r)];
      for (int c = 0; c < f.n; ++c) s += f.at(r, c) * p[static_cast<std::size_t>(c)];
      q[static_cast<std::size_t>(r)] = s;
      rel_delta = std::max(rel_delta, std::abs(s - p[static_cast<std::size_t>(r)]) /
                                          std::max(std::abs(s), 1e-300));
    }
    p.swap(q);
    if (rel_delta < 1e-13) break;
  }
  return p;
}

}  // namespace

TEST_CASE("system matrix follows the gamma_max targets", "[step1]") {
  const std::vector<SinrBounds> bounds{demand(1.0), demand(1.0)};
  const std::vector<ChannelState> ch{make_channel(1, 1, 2), make_channel(1, 1, 2)};
  const SinrSystem sys = build_system(bounds, ch);
  REQUIRE(sys.size() == 2);
  CHECK(sys.F.at(0, 0) == 0.0);
  CHECK(sys.F.at(0, 1) == Catch::Approx(0.5));
  CHECK(sys.F.at(1, 0) == Catch::Approx(0.5));
  CHECK(sys.F.at(1, 1) == 0.0);
  CHECK(sys.u[0] == Catch::Approx(0.5));
  CHECK(sys.u[1] == Catch::Approx(0.5));
}

TEST_CASE("single user reduces to the direct power formula", "[step1]") {
  const std::vector<SinrBounds> bounds{demand(3.0)};
  const std::vector<ChannelState> ch{make_channel(2.0, 0.5, 8.0)};
  const SinrSystem sys = build_system(bounds, ch);
  REQUIRE(sys.size() == 1);
  CHECK(sys.F.at(0, 0) == 0.0);
  const Step1Outcome out = solve_step1(sys, 100.0);
  REQUIRE(out.status == Step1Status::kOptimal);
  // gamma = L G P / eta  =>  P = gamma eta / (L G)
  CHECK(out.powers[0] == Catch::Approx(3.0 * 0.5 / (8.0 * 2.0)));
}

TEST_CASE("zero demand users are excluded and solve trivially", "[step1]") {
  const std::vector<SinrBounds> bounds{demand(0.0), demand(0.0)};
  const std::vector<ChannelState> ch{make_channel(1, 1, 4), make_channel(1, 1, 4)};
  const Step1Run run = run_step1(bounds, ch, 10.0);
  CHECK(run.outcome.status == Step1Status::kOptimal);
  CHECK(run.powers_full == std::vector<double>{0.0, 0.0});
}

TEST_CASE("spectral radius by power iteration", "[step1]") {
  Matrix f(2);
  f.at(0, 1) = 0.5;
  f.at(1, 0) = 0.5;
  CHECK(spectral_radius(f) == Catch::Approx(0.5).margin(1e-9));
  f.at(0, 1) = 1.0;
  f.at(1, 0) = 1.0;
  CHECK(spectral_radius(f) == Catch::Approx(1.0).margin(1e-9));
  CHECK(spectral_radius(Matrix(3)) == 0.0);
  // asymmetric two-cycle: radius is the geometric mean
  Matrix g(2);
  g.at(0, 1) = 0.8;
  g.at(1, 0) = 0.2;
  CHECK(spectral_radius(g) == Catch::Approx(std::sqrt(0.16)).margin(1e-8));
  Matrix neg(1);
  neg.at(0, 0) = -1.0;
  CHECK_THROWS_AS(spectral_radius(neg), std::invalid_argument);
}

TEST_CASE("hand-worked two-user system solves to unit powers", "[step1]") {
  const std::vector<SinrBounds> bounds{demand(1.0), demand(1.0)};
  const std::vector<ChannelState> ch{make_channel(1, 1, 2), make_channel(1, 1, 2)};
  const SinrSystem sys = build_system(bounds, ch);
  const Step1Outcome out = solve_step1(sys, 10.0);
  REQUIRE(out.status == Step1Status::kOptimal);
  CHECK(out.powers[0] == Catch::Approx(1.0));
  CHECK(out.powers[1] == Catch::Approx(1.0));
  // the solved powers reproduce gamma_max through the true SINR
  const std::vector<double> p = out.powers;
  CHECK(sinr(p, ch, 0) == Catch::Approx(1.0).epsilon(1e-8));
  CHECK(sinr(p, ch, 1) == Catch::Approx(1.0).epsilon(1e-8));
  // same system against a 1 W budget spills over to Step II
  CHECK(solve_step1(sys, 1.0).status == Step1Status::kExceedsBudget);
}

TEST_CASE("radius at one is classified infeasible", "[step1]") {
  const std::vector<SinrBounds> bounds{demand(2.0), demand(2.0)};
  const std::vector<ChannelState> ch{make_channel(1, 1, 2), make_channel(1, 1, 2)};
  const SinrSystem sys = build_system(bounds, ch);  // off-diagonals 1.0
  CHECK(solve_step1(sys, 1e12).status == Step1Status::kInfeasibleSpectral);
}

TEST_CASE("direct solve agrees with the fixed-point oracle on random instances", "[step1]") {
  std::mt19937_64 rng(71);
  auto urand = [&](double lo, double hi) {
    return lo + (hi - lo) * static_cast<double>(rng() % 100000) / 99999.0;
  };
  int feasible = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const int n = 1 + static_cast<int>(rng() % 4);
    std::vector<SinrBounds> bounds;
    std::vector<ChannelState> ch;
    for (int i = 0; i < n; ++i) {
      bounds.push_back(demand(urand(0.05, 3.0)));
      ch.push_back(make_channel(urand(1e-10, 1e-7), urand(1e-15, 1e-13), urand(8.0, 128.0)));
    }
    const SinrSystem sys = build_system(bounds, ch);
    const Step1Outcome out = solve_step1(sys, 1e9);
    if (out.status == Step1Status::kInfeasibleSpectral) continue;
    ++feasible;
    const std::vector<double> oracle = fixed_point_solve(sys.F, sys.u);
    REQUIRE(out.powers.size() == oracle.size());
    for (std::size_t i = 0; i < oracle.size(); ++i) {
      CHECK(out.powers[i] == Catch::Approx(oracle[i]).epsilon(1e-8));
      CHECK(out.powers[i] > 0.0);  // component-wise positivity
    }
    // achieved SINR matches the target through the true interference model
    std::vector<double> full(bounds.size(), 0.0);
    for (std::size_t k = 0; k < sys.users.size(); ++k)
      full[static_cast<std::size_t>(sys.users[k])] = out.powers[k];
    for (int user : sys.users)
      CHECK(sinr(full, ch, static_cast<std::size_t>(user)) ==
            Catch::Approx(bounds[static_cast<std::size_t>(user)].gamma_max).epsilon(1e-8));
  }
  CHECK(feasible >= 100);  // the generator must actually exercise the solver
}
