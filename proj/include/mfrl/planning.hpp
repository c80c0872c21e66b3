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

#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mfrl/dynamics.hpp"
#include "mfrl/model.hpp"
#include "mfrl/policy.hpp"

namespace mfrl {

struct BestResponseResult {
  Policy policy;          // greedy, ties broken toward the lowest action index
  Real value = 0.0;       // <mu_1, V_1>
  std::vector<Matrix> q;  // q[h], S x A
};

// Backward induction against a fixed conditioning flow. This is the inner
// maximization of the exploitability objective: the flow is frozen, so the
// problem is an ordinary finite-horizon MDP and the result is exact.
inline BestResponseResult best_response(const MeanFieldModel& m,
                                        const DensityFlow& cond) {
  if (cond.size() != m.H) throw DimensionError("best_response: flow length mismatch");
  std::vector<Matrix> q(m.H, Matrix(m.S, m.A));
  std::vector<std::vector<std::size_t>> greedy(m.H,
                                               std::vector<std::size_t>(m.S, 0));
  std::vector<Real> next(m.S, 0.0);
  std::vector<Real> v(m.S, 0.0);
  for (std::size_t hh = m.H; hh-- > 0;) {
    for (std::size_t s = 0; s < m.S; ++s) {
      Real best = -std::numeric_limits<Real>::infinity();
      std::size_t best_a = 0;
      for (std::size_t a = 0; a < m.A; ++a) {
        Real qv = reward_eval(m, hh, s, a, cond[hh]);
        if (hh + 1 < m.H) {
          Density p = transition_eval(m, hh, s, a, cond[hh]);
          for (std::size_t sp = 0; sp < m.S; ++sp) qv += p[sp] * next[sp];
        }
        q[hh](s, a) = qv;
        if (qv > best) {
          best = qv;
          best_a = a;
        }
      }
      v[s] = best;
      greedy[hh][s] = best_a;
    }
    next = v;
  }
  Real value = 0.0;
  for (std::size_t s = 0; s < m.S; ++s) value += m.mu1[s] * next[s];
  return BestResponseResult{Policy::deterministic(m.H, m.S, m.A, greedy), value,
                            std::move(q)};
}

// Delta_M(pi~, pi) = J_M(pi~; mu^pi_M) - J_M(pi; mu^pi_M).
inline Real delta_gap(const MeanFieldModel& m, const Policy& pi_tilde,
                      const Policy& pi, FlowCache* cache = nullptr) {
  DensityFlow flow = density_flow(m, pi, cache);
  return policy_value(pi_tilde, m, flow).j - policy_value(pi, m, flow).j;
}

// Exact exploitability: the inner max over deviation policies is over a
// fixed-flow MDP, so the best response solves it exactly.
inline Real exploitability(const MeanFieldModel& m, const Policy& pi,
                           FlowCache* cache = nullptr) {
  DensityFlow flow = density_flow(m, pi, cache);
  return best_response(m, flow).value - policy_value(pi, m, flow).j;
}

// Visit every deterministic policy (action table) in lexicographic order.
// The visitor returns void; enumeration is A^(S*H) policies.
template <typename Fn>
void for_each_deterministic_policy(std::size_t H, std::size_t S, std::size_t A,
                                   Fn&& fn) {
  std::vector<std::vector<std::size_t>> table(H, std::vector<std::size_t>(S, 0));
  for (;;) {
    fn(Policy::deterministic(H, S, A, table));
    bool carried = true;
    for (std::size_t idx = H * S; idx-- > 0;) {
      std::size_t h = idx / S;
      std::size_t s = idx % S;
      if (++table[h][s] < A) {
        carried = false;
        break;
      }
      table[h][s] = 0;
    }
    if (carried) break;
  }
}

inline Real deterministic_policy_count(std::size_t H, std::size_t S, std::size_t A) {
  Real n = 1.0;
  for (std::size_t i = 0; i < H * S; ++i) {
    n *= static_cast<Real>(A);
    if (n > 1e15) return n;
  }
  return n;
}

struct PlannerBudget {
  std::size_t exhaustive_cap = 4096;  // deterministic-policy count limit
  std::size_t restarts = 8;
  std::size_t max_iters = 120;
  Real damping = 0.5;
  std::uint64_t seed = 0;
};

struct PlanResult {
  Policy policy;
  Real value = 0.0;
  std::string method;  // "exhaustive" or "local"
};

// Planner for max_pi J_M(pi; mu^pi_M). Exhausts the deterministic policies
// when the instance is small enough; otherwise damped best-response ascent
// with restarts and coordinate perturbations. Approximate results are
// labeled; the MFC optimum may be randomized, which only the local path can
// reach.
inline PlanResult mfc_plan(const MeanFieldModel& m, const PlannerBudget& budget) {
  if (deterministic_policy_count(m.H, m.S, m.A) <=
      static_cast<Real>(budget.exhaustive_cap)) {
    std::optional<Policy> best;
    Real best_j = -1.0;
    for_each_deterministic_policy(m.H, m.S, m.A, [&](const Policy& pi) {
      Real j = policy_value(pi, m).j;
      if (j > best_j) {
        best_j = j;
        best = pi;
      }
    });
    return PlanResult{*best, best_j, "exhaustive"};
  }

  RngStream rng(derive_seed(budget.seed, "planner-restarts"));
  std::optional<Policy> incumbent;
  Real incumbent_j = -1.0;
  auto consider = [&](const Policy& pi) {
    Real j = policy_value(pi, m).j;
    if (j > incumbent_j) {
      incumbent_j = j;
      incumbent = pi;
    }
    return j;
  };
  // Coordinate hill-climb over single-(h, s) action changes, starting from
  // the greedy rounding of the given policy. Finds a deterministic local
  // optimum of J_M; randomized optima stay the damped ascent's job.
  auto polish = [&](const Policy& start) {
    std::vector<std::vector<std::size_t>> table(m.H,
                                                std::vector<std::size_t>(m.S, 0));
    for (std::size_t h = 0; h < m.H; ++h)
      for (std::size_t s = 0; s < m.S; ++s) {
        Real best = -1.0;
        for (std::size_t a = 0; a < m.A; ++a)
          if (start.step(h)(s, a) > best) {
            best = start.step(h)(s, a);
            table[h][s] = a;
          }
      }
    Real cur = consider(Policy::deterministic(m.H, m.S, m.A, table));
    bool improved = true;
    while (improved) {
      improved = false;
      for (std::size_t h = 0; h < m.H; ++h)
        for (std::size_t s = 0; s < m.S; ++s) {
          std::size_t keep = table[h][s];
          for (std::size_t a = 0; a < m.A; ++a) {
            if (a == keep) continue;
            table[h][s] = a;
            Real j = consider(Policy::deterministic(m.H, m.S, m.A, table));
            if (j > cur + 1e-12) {
              cur = j;
              keep = a;
              improved = true;
            }
          }
          table[h][s] = keep;
        }
    }
  };
  for (std::size_t r = 0; r < std::max<std::size_t>(budget.restarts, 1); ++r) {
    Policy pi = (r == 0) ? Policy::uniform(m.H, m.S, m.A)
                         : Policy::random(m.H, m.S, m.A, rng);
    Real local_best = consider(pi);
    std::size_t stall = 0;
    for (std::size_t it = 0; it < budget.max_iters; ++it) {
      BestResponseResult br = best_response(m, density_flow(m, pi));
      pi = Policy::mix(pi, br.policy, budget.damping);
      Real j = consider(pi);
      if (j > local_best + 1e-12) {
        local_best = j;
        stall = 0;
      } else if (++stall >= 10) {
        // coordinate perturbation: re-randomize one state's row
        std::size_t h = rng.uniform_index(m.H);
        std::size_t s = rng.uniform_index(m.S);
        std::vector<Matrix> steps;
        for (std::size_t hh = 0; hh < m.H; ++hh) steps.push_back(pi.step(hh));
        auto row = rng.dirichlet(m.A);
        for (std::size_t a = 0; a < m.A; ++a) steps[h](s, a) = row[a];
        Policy jiggled(m.H, m.S, m.A, std::move(steps));
        Real jj = consider(jiggled);
        if (jj > local_best) {
          pi = jiggled;
          local_best = jj;
        }
        stall = 0;
      }
    }
    polish(pi);
  }
  return PlanResult{*incumbent, incumbent_j, "local"};
}

// Proximal policy update: per (h, s), argmax_u Q^pi_h(s,.)^T u -
// prox_weight * ||pi_h(.|s) - u||_2^2 over the action simplex, solved in
// closed form as a Euclidean projection.
inline Policy gamma_pp_step(const MeanFieldModel& m, const Policy& pi,
                            const DensityFlow& cond, Real prox_weight = 1.0) {
  if (prox_weight <= 0.0) throw ParameterError("gamma_pp_step: prox_weight <= 0");
  PolicyQ pq = policy_q(pi, m, cond);
  std::vector<Matrix> steps;
  steps.reserve(m.H);
  for (std::size_t h = 0; h < m.H; ++h) {
    Matrix out(m.S, m.A);
    for (std::size_t s = 0; s < m.S; ++s) {
      std::vector<Real> target(m.A);
      for (std::size_t a = 0; a < m.A; ++a)
        target[a] = pi.step(h)(s, a) + pq.q[h](s, a) / (2.0 * prox_weight);
      std::vector<Real> proj = project_to_simplex(target);
      for (std::size_t a = 0; a < m.A; ++a) out(s, a) = proj[a];
    }
    steps.push_back(std::move(out));
  }
  return Policy(m.H, m.S, m.A, std::move(steps));
}

struct NeSolveParams {
  Real damping = 0.5;  // step toward Gamma_NE(pi)
  // near-tied actions make the proximal mass decay linearly in the tie gap,
  // so the iteration budget is generous; iterations are cheap at this scale
  std::size_t max_iters = 20000;
  Real tolerance = 1e-10;  // sup_h Frobenius residual for convergence
  std::size_t restarts = 4;
  Real prox_weight = 1.0;
  std::uint64_t seed = 0;
};

struct NeSolveResult {
  Policy policy;
  DensityFlow flow;
  Real exploitability = 0.0;        // exact certificate
  Real consistency_residual = 0.0;  // flow vs one-step pushforward
  std::size_t iterations = 0;
  bool converged = false;
  std::size_t restarts_used = 0;
};

namespace detail {

inline Real policy_residual(const Policy& a, const Policy& b) {
  Real worst = 0.0;
  for (std::size_t h = 0; h < a.horizon(); ++h) {
    Real sq = 0.0;
    for (std::size_t s = 0; s < a.states(); ++s)
      for (std::size_t act = 0; act < a.actions(); ++act) {
        Real d = a.step(h)(s, act) - b.step(h)(s, act);
        sq += d * d;
      }
    worst = std::max(worst, std::sqrt(sq));
  }
  return worst;
}

}  // namespace detail

// Damped fixed-point iteration on Gamma_NE(pi) = Gamma_pp(pi, Gamma_pop(pi)).
// Fixed points are exactly the Nash equilibria, but existence is proved
// non-constructively, so the result is always re-certified by the exact
// exploitability and non-convergence is a reported state.
inline NeSolveResult ne_solve(const MeanFieldModel& m, const NeSolveParams& params) {
  if (params.damping <= 0.0 || params.damping > 1.0)
    throw ParameterError("ne_solve: damping outside (0, 1]");
  RngStream rng(derive_seed(params.seed, "ne-restarts"));
  std::optional<NeSolveResult> best;
  for (std::size_t r = 0; r < std::max<std::size_t>(params.restarts, 1); ++r) {
    Policy pi = (r == 0) ? Policy::uniform(m.H, m.S, m.A)
                         : Policy::random(m.H, m.S, m.A, rng);
    Real residual = std::numeric_limits<Real>::infinity();
    std::size_t it = 0;
    for (; it < params.max_iters; ++it) {
      DensityFlow flow = density_flow(m, pi);
      Policy target = gamma_pp_step(m, pi, flow, params.prox_weight);
      residual = detail::policy_residual(pi, target);
      if (residual <= params.tolerance) break;
      pi = Policy::mix(pi, target, params.damping);
    }
    NeSolveResult res;
    res.policy = pi;
    res.flow = density_flow(m, pi);
    res.exploitability = exploitability(m, pi);
    res.iterations = it;
    res.converged = residual <= params.tolerance;
    res.restarts_used = r + 1;
    Real cres = 0.0;
    for (std::size_t h = 0; h + 1 < m.H; ++h)
      cres = std::max(cres, tv_distance(res.flow[h + 1],
                                        density_propagate(m, h, res.flow[h],
                                                          pi.step(h))));
    res.consistency_residual = cres;
    auto better = [](const NeSolveResult& a, const NeSolveResult& b) {
      if (a.converged != b.converged) return a.converged;
      return a.exploitability < b.exploitability;
    };
    if (!best || better(res, *best)) best = res;
    if (best->converged) break;
  }
  return *best;
}

inline NeSolveResult ne_solve(const MeanFieldModel& m) {
  return ne_solve(m, NeSolveParams{});
}

struct BoundCheck {
  std::string name;
  Real lhs = 0.0;
  Real rhs = 0.0;
  Real slack = 0.0;  // rhs - lhs at the tightest instance of the check
  bool pass = false;
  bool skipped = false;
};

struct BoundCheckReport {
  std::vector<BoundCheck> checks;
  Real l_t = 0.0;
  Real l_r = 0.0;

  bool all_pass(Real slack_floor = -1e-8) const {
    for (const auto& c : checks)
      if (!c.skipped && c.slack < slack_floor) return false;
    return true;
  }
};

// Evaluates both sides of the value-difference, model-difference-conversion
// and density-estimation inequalities exactly, via occupancy expectations
// and exact Lipschitz constants. The contraction-dependent conversion runs
// only when a certified L_Gamma < 1 is supplied.
inline BoundCheckReport bound_check_suite(const MeanFieldModel& m,
                                          const MeanFieldModel& mt,
                                          const Policy& pi, const Policy& pi_tilde,
                                          std::optional<Real> l_gamma = std::nullopt) {
  if (m.S != mt.S || m.A != mt.A || m.H != mt.H)
    throw DimensionError("bound_check_suite: shape mismatch");
  if (m.reward.r0 != mt.reward.r0 || m.reward.r1 != mt.reward.r1)
    throw PreconditionError("bound_check_suite: models must share the reward");

  const std::size_t H = m.H;
  const Real l_t = std::max(transition_lipschitz(m), transition_lipschitz(mt));
  const Real l_r = reward_lipschitz(m);

  DensityFlow flow_m = density_flow(m, pi);
  DensityFlow flow_mt = density_flow(mt, pi);
  std::vector<Matrix> occ_pi = occupancy_flow(pi, m, flow_m);
  std::vector<Matrix> occ_tilde = occupancy_flow(pi_tilde, m, flow_m);

  // Per-step expected TV between the two models' conditionals, under the
  // trajectory distribution of (behavior, m | flow_m): "same" conditions
  // both models on flow_m, "diff" conditions each on its own flow.
  std::vector<Real> same_pi(H, 0.0), diff_pi(H, 0.0), diff_tilde(H, 0.0);
  for (std::size_t h = 0; h < H; ++h) {
    for (std::size_t s = 0; s < m.S; ++s)
      for (std::size_t a = 0; a < m.A; ++a) {
        Density p_same_m = transition_eval(m, h, s, a, flow_m[h]);
        Density p_same_mt = transition_eval(mt, h, s, a, flow_m[h]);
        Density p_diff_mt = transition_eval(mt, h, s, a, flow_mt[h]);
        Real tv_same = tv_distance(p_same_m, p_same_mt);
        Real tv_diff = tv_distance(p_same_m, p_diff_mt);
        same_pi[h] += occ_pi[h](s, a) * tv_same;
        diff_pi[h] += occ_pi[h](s, a) * tv_diff;
        diff_tilde[h] += occ_tilde[h](s, a) * tv_diff;
      }
  }
  auto total = [](const std::vector<Real>& v) {
    Real s = 0.0;
    for (Real x : v) s += x;
    return s;
  };

  BoundCheckReport rep;
  rep.l_t = l_t;
  rep.l_r = l_r;
  auto add = [&rep](const std::string& name, Real lhs, Real rhs) {
    BoundCheck c{name, lhs, rhs, rhs - lhs, rhs - lhs >= -1e-8, false};
    rep.checks.push_back(c);
  };

  // Value difference for MFC (Lem. 5.4 roles: expectation under m).
  {
    Real lhs = std::abs(policy_value(pi, m, flow_m).j -
                        policy_value(pi, mt, flow_mt).j);
    Real rhs = (1.0 + l_r * H) * total(diff_pi);
    add("value_diff_mfc", lhs, rhs);
  }

  // Value difference for MFG (exploitability difference).
  {
    Real delta_m = policy_value(pi_tilde, m, flow_m).j - policy_value(pi, m, flow_m).j;
    Real delta_mt =
        policy_value(pi_tilde, mt, flow_mt).j - policy_value(pi, mt, flow_mt).j;
    Real lhs = std::abs(delta_m - delta_mt);
    Real rhs = total(diff_tilde) + (2.0 * l_r * H + 1.0) * total(diff_pi);
    add("value_diff_mfg", lhs, rhs);
  }

  // Model difference conversion, same-density side bounded by cross-density.
  add("model_diff_1", total(same_pi), (1.0 + l_t * H) * total(diff_pi));

  // Model difference conversion, cross-density side bounded by weighted
  // same-density sums.
  {
    Real rhs = 0.0;
    for (std::size_t h = 0; h < H; ++h)
      rhs += std::pow(1.0 + l_t, static_cast<Real>(H - 1 - h)) * same_pi[h];
    add("model_diff_2", total(diff_pi), rhs);
  }

  // Density estimation error, both displays, tightest step reported.
  {
    Real worst_slack = std::numeric_limits<Real>::infinity();
    Real lhs_at = 0.0, rhs_at = 0.0;
    Real prefix = 0.0;
    for (std::size_t i = 1; i < H; ++i) {
      prefix += diff_pi[i - 1];
      Real lhs = tv_distance(flow_m[i], flow_mt[i]);
      Real slack = prefix - lhs;
      if (slack < worst_slack) {
        worst_slack = slack;
        lhs_at = lhs;
        rhs_at = prefix;
      }
    }
    if (H > 1) add("density_diff_1", lhs_at, rhs_at);
  }
  {
    Real worst_slack = std::numeric_limits<Real>::infinity();
    Real lhs_at = 0.0, rhs_at = 0.0;
    for (std::size_t i = 1; i < H; ++i) {
      Real rhs = 0.0;
      for (std::size_t u = 0; u < i; ++u)
        rhs += std::pow(1.0 + l_t, static_cast<Real>(i - 1 - u)) * same_pi[u];
      Real lhs = tv_distance(flow_m[i], flow_mt[i]);
      Real slack = rhs - lhs;
      if (slack < worst_slack) {
        worst_slack = slack;
        lhs_at = lhs;
        rhs_at = rhs;
      }
    }
    if (H > 1) add("density_diff_2", lhs_at, rhs_at);
  }

  // Contraction-based conversion; needs a certified margin.
  if (l_gamma.has_value() && *l_gamma < 1.0) {
    Real rhs = (1.0 + l_t / (1.0 - *l_gamma)) * total(same_pi);
    add("model_diff_contraction", total(diff_pi), rhs);
  } else {
    BoundCheck c{"model_diff_contraction", 0.0, 0.0, 0.0, true, true};
    rep.checks.push_back(c);
  }
  return rep;
}

}  // namespace mfrl
