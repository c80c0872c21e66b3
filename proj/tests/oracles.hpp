// Copyright 2026 The mfrl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Independent test oracles. Everything here recomputes quantities by a
// different route than the library (subset enumeration, full trajectory
// enumeration, Monte Carlo frequencies) and must stay that way.

#pragma once

#include <cmath>
#include <map>
#include <vector>

#include "mfrl/mfrl.hpp"

namespace oracles {

using mfrl::Density;
using mfrl::DensityFlow;
using mfrl::Matrix;
using mfrl::MeanFieldModel;
using mfrl::Policy;
using mfrl::Real;
using mfrl::RngStream;

// sup_A |P(A) - Q(A)| by enumerating all 2^n events. Exact for n <= ~20.
inline Real tv_by_event_enumeration(const Density& p, const Density& q) {
  const std::size_t n = p.size();
  Real best = 0.0;
  for (std::size_t mask = 0; mask < (std::size_t(1) << n); ++mask) {
    Real dp = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (std::size_t(1) << i)) dp += p[i] - q[i];
    best = std::max(best, std::abs(dp));
  }
  return best;
}

// Exact expected return of `pi` conditioned on a fixed flow, by enumerating
// every trajectory (s_1, a_1, ..., s_H, a_H) and summing prob * return.
inline Real return_by_trajectory_enumeration(const Policy& pi,
                                             const MeanFieldModel& m,
                                             const DensityFlow& cond) {
  Real total = 0.0;
  // stack of (h, s, prob, reward-so-far)
  struct Node {
    std::size_t h, s;
    Real prob, ret;
  };
  std::vector<Node> stack;
  for (std::size_t s = 0; s < m.S; ++s)
    if (m.mu1[s] > 0.0) stack.push_back({0, s, m.mu1[s], 0.0});
  while (!stack.empty()) {
    Node n = stack.back();
    stack.pop_back();
    for (std::size_t a = 0; a < m.A; ++a) {
      Real pa = pi.step(n.h)(n.s, a);
      if (pa == 0.0) continue;
      Real r = mfrl::reward_eval(m, n.h, n.s, a, cond[n.h]);
      if (n.h + 1 == m.H) {
        total += n.prob * pa * (n.ret + r);
        continue;
      }
      Density next = mfrl::transition_eval(m, n.h, n.s, a, cond[n.h]);
      for (std::size_t sp = 0; sp < m.S; ++sp) {
        if (next[sp] == 0.0) continue;
        stack.push_back({n.h + 1, sp, n.prob * pa * next[sp], n.ret + r});
      }
    }
  }
  return total;
}

inline Real return_by_trajectory_enumeration(const Policy& pi,
                                             const MeanFieldModel& m) {
  return return_by_trajectory_enumeration(pi, m, mfrl::density_flow(m, pi));
}

// Empirical per-step (s, a) frequencies of the representative agent.
inline std::vector<Matrix> monte_carlo_occupancy(const Policy& behavior,
                                                 const Policy& population,
                                                 const MeanFieldModel& m,
                                                 std::size_t n_traj,
                                                 RngStream& rng) {
  std::vector<Matrix> freq(m.H, Matrix(m.S, m.A, 0.0));
  for (std::size_t t = 0; t < n_traj; ++t) {
    auto traj = mfrl::sample_trajectory(behavior, population, m, rng);
    for (std::size_t h = 0; h < m.H; ++h) freq[h](traj[h].s, traj[h].a) += 1.0;
  }
  for (auto& f : freq)
    for (Real& v : f.data()) v /= static_cast<Real>(n_traj);
  return freq;
}

// Exact optimum over deterministic policies, value route only (never the
// backward-induction maximizer it is used to check).
inline Real best_deterministic_value(const MeanFieldModel& m,
                                     const DensityFlow& cond) {
  Real best = -1.0;
  mfrl::for_each_deterministic_policy(m.H, m.S, m.A, [&](const Policy& pi) {
    best = std::max(best, mfrl::policy_value(pi, m, cond).j);
  });
  return best;
}

// max over deterministic deviations of Delta_M(~pi, pi).
inline Real best_deterministic_delta(const MeanFieldModel& m, const Policy& pi) {
  DensityFlow flow = mfrl::density_flow(m, pi);
  Real base = mfrl::policy_value(pi, m, flow).j;
  Real best = -1.0;
  mfrl::for_each_deterministic_policy(m.H, m.S, m.A, [&](const Policy& dev) {
    best = std::max(best, mfrl::policy_value(dev, m, flow).j - base);
  });
  return best;
}

// Exhaustive deterministic optimum of the control objective J_M(pi).
inline Real best_deterministic_mfc_value(const MeanFieldModel& m) {
  Real best = -1.0;
  mfrl::for_each_deterministic_policy(m.H, m.S, m.A, [&](const Policy& pi) {
    best = std::max(best, mfrl::policy_value(pi, m).j);
  });
  return best;
}

// Sampled supremum of the one-step population-operator TV ratio.
inline Real sampled_gamma_ratio(const MeanFieldModel& m, std::size_t samples,
                                RngStream& rng) {
  Real best = 0.0;
  for (std::size_t t = 0; t < samples; ++t) {
    std::size_t h = rng.uniform_index(m.H);
    Density mu = Density::random(m.S, rng);
    Density mup = Density::random(m.S, rng);
    Real denom = mfrl::tv_distance(mu, mup);
    if (denom < 1e-9) continue;
    Matrix pi_h(m.S, m.A);
    for (std::size_t s = 0; s < m.S; ++s) {
      auto row = rng.dirichlet(m.A);
      for (std::size_t a = 0; a < m.A; ++a) pi_h(s, a) = row[a];
    }
    Real num = mfrl::tv_distance(mfrl::density_propagate(m, h, mu, pi_h),
                                 mfrl::density_propagate(m, h, mup, pi_h));
    best = std::max(best, num / denom);
  }
  return best;
}

// Random simplex pair of a given size.
inline std::pair<Density, Density> random_density_pair(std::size_t n,
                                                       RngStream& rng) {
  return {Density::random(n, rng), Density::random(n, rng)};
}

}  // namespace oracles
