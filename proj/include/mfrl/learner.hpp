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

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mfrl/dynamics.hpp"
#include "mfrl/model_class.hpp"
#include "mfrl/planning.hpp"
#include "mfrl/rng.hpp"

namespace mfrl {

// Log-probability floor handed to the MLE scores: avoids -inf while
// perturbing a score by at most ~27.6 nats, and only on impossible
// transitions.
inline constexpr Real kLogProbFloor = 1e-12;

enum class Role { main, deviant };

struct DataRecord {
  std::size_t k = 0;  // iteration, 1-based
  std::size_t h = 0;  // step, 0-based
  std::size_t s = 0;
  std::size_t a = 0;
  std::size_t s_next = 0;
  Role role = Role::main;
};

// Transition tuples plus the policy pair used in each iteration. Every
// record comes from its own freshly sampled trajectory: one main record per
// (k, h), plus one deviant record per (k, h) in game mode.
struct TransitionDataset {
  std::vector<DataRecord> records;
  std::vector<std::pair<Policy, Policy>> policy_log;  // [k-1] = (pi^k, ~pi^k)

  void check_counts(std::size_t H, bool game_mode) const {
    std::map<std::pair<std::size_t, std::size_t>, std::pair<int, int>> counts;
    for (const auto& r : records) {
      auto& c = counts[{r.k, r.h}];
      (r.role == Role::main ? c.first : c.second) += 1;
    }
    for (std::size_t k = 1; k <= policy_log.size(); ++k)
      for (std::size_t h = 0; h < H; ++h) {
        auto it = counts.find({k, h});
        int main_n = it == counts.end() ? 0 : it->second.first;
        int dev_n = it == counts.end() ? 0 : it->second.second;
        if (main_n != 1 || dev_n != (game_mode ? 1 : 0))
          throw PreconditionError("TransitionDataset: record counts violated");
      }
  }
};

// l^k_MLE(M): cumulative floored transition log-likelihood over records of
// iterations <= upto_k, with each record scored against the model's own
// induced density flow of that iteration's population policy.
inline Real mle_loss(const MeanFieldModel& m, const TransitionDataset& data,
                     std::size_t upto_k, FlowCache* cache = nullptr) {
  Real total = 0.0;
  for (const auto& rec : data.records) {
    if (rec.k == 0 || rec.k > upto_k) continue;
    const Policy& population = data.policy_log.at(rec.k - 1).first;
    DensityFlow flow = density_flow(m, population, cache);
    Density p = transition_eval(m, rec.h, rec.s, rec.a, flow[rec.h]);
    total += std::log(std::max(p[rec.s_next], kLogProbFloor));
  }
  return total;
}

struct ConfidenceSet {
  std::vector<std::size_t> members;  // indices into the model class
  Real threshold = 0.0;              // log(2 |M| K H / delta)
  std::vector<Real> scores;

  bool contains(std::size_t idx) const {
    for (std::size_t m : members)
      if (m == idx) return true;
    return false;
  }
};

inline ConfidenceSet confidence_set(const ModelClass& cls,
                                    const TransitionDataset& data, std::size_t k,
                                    std::size_t K, std::size_t H, Real delta,
                                    FlowCache* cache = nullptr) {
  if (delta <= 0.0 || delta >= 1.0)
    throw ParameterError("confidence_set: delta outside (0,1)");
  if (K == 0 || H == 0) throw ParameterError("confidence_set: K, H must be >= 1");
  ConfidenceSet out;
  out.threshold =
      std::log(2.0 * static_cast<Real>(cls.size()) * static_cast<Real>(K) *
               static_cast<Real>(H) / delta);
  out.scores.reserve(cls.size());
  Real best = -std::numeric_limits<Real>::infinity();
  for (const auto& m : cls.models) {
    Real s = mle_loss(m, data, k, cache);
    out.scores.push_back(s);
    best = std::max(best, s);
  }
  for (std::size_t i = 0; i < cls.size(); ++i)
    if (out.scores[i] >= best - out.threshold) out.members.push_back(i);
  return out;
}

struct Regret2PacSchedule {
  std::size_t subsamples = 0;        // N = ceil(log_{3/2}(1 / delta))
  std::size_t trajectories_each = 0; // ceil(16 / eps^2 * log(2N / delta))
};

inline Regret2PacSchedule regret2pac_schedule(Real epsilon, Real delta) {
  if (epsilon <= 0.0 || epsilon >= 1.0 || delta <= 0.0 || delta >= 1.0)
    throw ParameterError("regret2pac: epsilon, delta must lie in (0,1)");
  Regret2PacSchedule s;
  s.subsamples =
      static_cast<std::size_t>(std::ceil(std::log(1.0 / delta) / std::log(1.5)));
  s.trajectories_each = static_cast<std::size_t>(std::ceil(
      16.0 / (epsilon * epsilon) * std::log(2.0 * s.subsamples / delta)));
  return s;
}

// Regret-to-PAC conversion: subsample N candidates uniformly with
// replacement, estimate each by the empirical mean return of fresh on-policy
// trajectories, return the empirical argmax (ties to the lowest index).
inline Policy regret2pac(const std::vector<Policy>& candidates,
                         const MeanFieldModel& env, Real epsilon, Real delta,
                         RngStream& rng, FlowCache* cache = nullptr,
                         std::size_t* trajectories_used = nullptr) {
  if (candidates.empty()) throw DimensionError("regret2pac: no candidates");
  const Regret2PacSchedule sched = regret2pac_schedule(epsilon, delta);
  const std::size_t N = sched.subsamples;
  const std::size_t n_traj = sched.trajectories_each;
  std::size_t best_n = 0;
  Real best_mean = -1.0;
  std::vector<std::size_t> picks(N);
  for (std::size_t n = 0; n < N; ++n) picks[n] = rng.uniform_index(candidates.size());
  for (std::size_t n = 0; n < N; ++n) {
    const Policy& cand = candidates[picks[n]];
    Real sum = 0.0;
    for (std::size_t t = 0; t < n_traj; ++t) {
      auto traj = sample_trajectory(cand, cand, env, rng, cache);
      for (const auto& step : traj) sum += step.r;
    }
    Real mean = sum / static_cast<Real>(n_traj);
    if (mean > best_mean) {
      best_mean = mean;
      best_n = n;
    }
  }
  if (trajectories_used != nullptr) *trajectories_used = N * n_traj;
  return candidates[picks[best_n]];
}

struct RunParams {
  std::size_t K = 50;
  Real delta = 0.1;
  Real epsilon = 0.1;
  PlannerBudget planner;
  NeSolveParams ne;
  std::uint64_t seed = 0;
  bool record_timing = false;  // keeps artifacts byte-stable by default
  // pi^1 (and the first deviant policy in game mode); uniform when unset
  std::optional<Policy> initial_policy;
};

struct TraceRow {
  std::size_t k = 0;
  std::size_t conf_set_size = 0;
  bool truth_in_set = false;
  Real optimistic = 0.0;    // planner value (MFC) or optimistic gap (MFG)
  Real true_metric = 0.0;   // exact E_Opt / E_NE against the truth
  bool ne_converged = true;
  std::int64_t wallclock_ms = 0;
  std::size_t chosen_model = 0;
};

struct RunResult {
  std::string mode;
  std::uint64_t seed = 0;
  std::vector<TraceRow> rows;
  Policy returned_policy;
  Real final_metric = 0.0;
  std::size_t trajectories = 0;
  TransitionDataset dataset;  // full replay record, incl. the policy log
};

namespace detail {

inline void collect_records(TransitionDataset& data, std::size_t k,
                            const Policy& pi, const Policy* pi_tilde,
                            const MeanFieldModel& truth, RngStream& rng,
                            FlowCache* cache) {
  for (std::size_t h = 0; h < truth.H; ++h) {
    auto traj = sample_trajectory(pi, pi, truth, rng, cache);
    data.records.push_back(
        DataRecord{k, h, traj[h].s, traj[h].a, traj[h].s_next, Role::main});
    if (pi_tilde != nullptr) {
      auto dev = sample_trajectory(*pi_tilde, pi, truth, rng, cache);
      data.records.push_back(
          DataRecord{k, h, dev[h].s, dev[h].a, dev[h].s_next, Role::deviant});
    }
  }
}

inline std::int64_t elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::steady_clock::now() - start)
      .count();
}

}  // namespace detail

// Optimistic MLE loop, control branch: per iteration, collect one main record
// per step from fresh on-policy trajectories, rebuild the confidence set, and
// play the policy with the best planner value over surviving members. Ends
// with the regret-to-PAC conversion over the played policies.
inline RunResult run_mfc(const ModelClass& cls, const RunParams& params) {
  cls.validate();
  const MeanFieldModel& truth = cls.truth();
  const std::size_t H = truth.H;
  FlowCache cache;
  RngStream traj_rng(derive_seed(params.seed, "trajectory"));
  RngStream r2p_rng(derive_seed(params.seed, "regret2pac"));

  // Exact E_Opt diagnostics use the exhaustive deterministic oracle when the
  // instance is small enough for it.
  const bool oracle_feasible =
      deterministic_policy_count(H, truth.S, truth.A) <=
      static_cast<Real>(params.planner.exhaustive_cap);
  Real j_opt = std::numeric_limits<Real>::quiet_NaN();
  if (oracle_feasible) j_opt = mfc_plan(truth, params.planner).value;

  // The planner result for a fixed member does not depend on the data, so
  // each member is planned at most once per run.
  std::vector<std::optional<PlanResult>> plans(cls.size());
  auto plan_for = [&](std::size_t idx) -> const PlanResult& {
    if (!plans[idx].has_value()) {
      PlannerBudget b = params.planner;
      b.seed = derive_seed(params.seed, "planner-restarts", idx);
      plans[idx] = mfc_plan(cls.models[idx], b);
    }
    return *plans[idx];
  };

  TransitionDataset data;
  RunResult out;
  out.mode = "mfc";
  out.seed = params.seed;
  Policy pi_k = params.initial_policy.value_or(Policy::uniform(H, truth.S, truth.A));
  std::vector<Policy> candidates;
  candidates.reserve(params.K);

  for (std::size_t k = 1; k <= params.K; ++k) {
    auto t0 = std::chrono::steady_clock::now();
    data.policy_log.emplace_back(pi_k, pi_k);
    detail::collect_records(data, k, pi_k, nullptr, truth, traj_rng, &cache);
    ConfidenceSet cs =
        confidence_set(cls, data, k, params.K, H, params.delta, &cache);

    std::size_t best_idx = cs.members.front();
    Real best_val = -1.0;
    for (std::size_t idx : cs.members) {
      const PlanResult& plan = plan_for(idx);
      if (plan.value > best_val) {
        best_val = plan.value;
        best_idx = idx;
      }
    }
    pi_k = plan_for(best_idx).policy;
    candidates.push_back(pi_k);

    TraceRow row;
    row.k = k;
    row.conf_set_size = cs.members.size();
    row.truth_in_set = cs.contains(cls.truth_index);
    row.optimistic = best_val;
    row.true_metric = oracle_feasible
                          ? j_opt - policy_value(pi_k, truth, &cache).j
                          : std::numeric_limits<Real>::quiet_NaN();
    row.ne_converged = true;
    row.chosen_model = best_idx;
    row.wallclock_ms = params.record_timing ? detail::elapsed_ms(t0) : 0;
    out.rows.push_back(row);
  }

  std::size_t extra = 0;
  out.returned_policy = regret2pac(candidates, truth, params.epsilon, params.delta,
                                   r2p_rng, &cache, &extra);
  out.final_metric =
      oracle_feasible ? j_opt - policy_value(out.returned_policy, truth, &cache).j
                      : std::numeric_limits<Real>::quiet_NaN();
  out.trajectories = params.K * H + extra;
  out.dataset = std::move(data);
  return out;
}

// Optimistic MLE loop, game branch: collect main records with (pi, pi) and
// deviant records with (~pi, pi); pick a model uniformly from the confidence
// set and play its equilibrium policy; compute the optimistic exploitability
// gap exactly by a best-response sweep over members; return the policy with
// the smallest optimistic gap.
inline RunResult run_mfg(const ModelClass& cls, const RunParams& params) {
  cls.validate();
  const MeanFieldModel& truth = cls.truth();
  const std::size_t H = truth.H;
  FlowCache cache;
  RngStream traj_rng(derive_seed(params.seed, "trajectory"));
  RngStream pick_rng(derive_seed(params.seed, "model-pick"));

  TransitionDataset data;
  RunResult out;
  out.mode = "mfg";
  out.seed = params.seed;
  Policy pi_k = params.initial_policy.value_or(Policy::uniform(H, truth.S, truth.A));
  Policy pi_tilde_k = pi_k;

  Real best_gap = std::numeric_limits<Real>::infinity();
  Policy best_policy;

  for (std::size_t k = 1; k <= params.K; ++k) {
    auto t0 = std::chrono::steady_clock::now();
    data.policy_log.emplace_back(pi_k, pi_tilde_k);
    detail::collect_records(data, k, pi_k, &pi_tilde_k, truth, traj_rng, &cache);
    ConfidenceSet cs =
        confidence_set(cls, data, k, params.K, H, params.delta, &cache);

    std::size_t chosen = cs.members[pick_rng.uniform_index(cs.members.size())];
    NeSolveParams ne = params.ne;
    ne.seed = derive_seed(params.seed, "ne", k);
    NeSolveResult eq = ne_solve(cls.models[chosen], ne);
    const Policy& pi_next = eq.policy;

    // Optimistic gap: exact max over members and deviation policies.
    Real gap = -std::numeric_limits<Real>::infinity();
    Policy gap_policy;
    for (std::size_t idx : cs.members) {
      DensityFlow flow = density_flow(cls.models[idx], pi_next, &cache);
      BestResponseResult br = best_response(cls.models[idx], flow);
      Real d = br.value - policy_value(pi_next, cls.models[idx], flow).j;
      if (d > gap) {
        gap = d;
        gap_policy = br.policy;
      }
    }

    TraceRow row;
    row.k = k;
    row.conf_set_size = cs.members.size();
    row.truth_in_set = cs.contains(cls.truth_index);
    row.optimistic = gap;
    row.true_metric = exploitability(truth, pi_next, &cache);
    row.ne_converged = eq.converged;
    row.chosen_model = chosen;
    row.wallclock_ms = params.record_timing ? detail::elapsed_ms(t0) : 0;
    out.rows.push_back(row);

    if (gap < best_gap) {
      best_gap = gap;
      best_policy = pi_next;
    }
    pi_k = pi_next;
    pi_tilde_k = gap_policy;
  }

  out.returned_policy = best_policy;
  out.final_metric = exploitability(truth, out.returned_policy, &cache);
  out.trajectories = 2 * params.K * H;
  out.dataset = std::move(data);
  return out;
}

}  // namespace mfrl
