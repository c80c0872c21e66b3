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
#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "mfrl/density.hpp"
#include "mfrl/errors.hpp"
#include "mfrl/model.hpp"
#include "mfrl/policy.hpp"
#include "mfrl/rng.hpp"

namespace mfrl {

// One-step population pushforward: sum_{s,a} mu(s) pi(a|s) P(.|s,a,mu).
inline Density density_propagate(const MeanFieldModel& m, std::size_t h,
                                 const Density& mu, const Matrix& pi_h) {
  if (mu.size() != m.S) throw DimensionError("density_propagate: mu support mismatch");
  if (pi_h.rows() != m.S || pi_h.cols() != m.A)
    throw DimensionError("density_propagate: policy step shape mismatch");
  std::vector<Real> out(m.S, 0.0);
  for (std::size_t s = 0; s < m.S; ++s) {
    if (mu[s] == 0.0) continue;
    for (std::size_t a = 0; a < m.A; ++a) {
      Real w = mu[s] * pi_h(s, a);
      if (w == 0.0) continue;
      Density next = transition_eval(m, h, s, a, mu);
      for (std::size_t sp = 0; sp < m.S; ++sp) out[sp] += w * next[sp];
    }
  }
  Real sum = 0.0;
  for (Real v : out) sum += v;
  if (std::abs(sum - 1.0) > 1e-6)
    throw NumericError("density_propagate: renormalization drift beyond 1e-6");
  return Density(std::move(out));
}

// Shared cache of induced density flows keyed by (model id, policy
// fingerprint). Safe for concurrent insertion; values are immutable.
class FlowCache {
 public:
  std::optional<DensityFlow> find(const std::string& model_id,
                                  std::uint64_t fingerprint) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = map_.find(key(model_id, fingerprint));
    if (it == map_.end()) return std::nullopt;
    return it->second;
  }

  void insert(const std::string& model_id, std::uint64_t fingerprint,
              DensityFlow flow) {
    std::lock_guard<std::mutex> lock(mu_);
    map_.emplace(key(model_id, fingerprint), std::move(flow));
  }

  std::size_t size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return map_.size();
  }

 private:
  static std::string key(const std::string& model_id, std::uint64_t fp) {
    return model_id + "\x1f" + std::to_string(fp);
  }

  mutable std::mutex mu_;
  std::unordered_map<std::string, DensityFlow> map_;
};

// Induced flow mu_1, ..., mu_H of a policy under a model.
inline DensityFlow density_flow(const MeanFieldModel& m, const Policy& pi,
                                FlowCache* cache = nullptr) {
  if (pi.horizon() != m.H || pi.states() != m.S || pi.actions() != m.A)
    throw DimensionError("density_flow: policy shape mismatch");
  std::uint64_t fp = 0;
  if (cache != nullptr) {
    fp = pi.fingerprint();
    if (auto hit = cache->find(m.id, fp)) return *hit;
  }
  DensityFlow flow;
  flow.reserve(m.H);
  flow.push_back(m.mu1);
  for (std::size_t h = 0; h + 1 < m.H; ++h)
    flow.push_back(density_propagate(m, h, flow.back(), pi.step(h)));
  if (cache != nullptr) cache->insert(m.id, fp, flow);
  return flow;
}

// Per-step state-action occupancy of `behavior` when transitions are
// conditioned on the supplied flow. Each step's table sums to 1.
inline std::vector<Matrix> occupancy_flow(const Policy& behavior,
                                          const MeanFieldModel& m,
                                          const DensityFlow& cond) {
  if (cond.size() != m.H) throw DimensionError("occupancy_flow: flow length mismatch");
  if (behavior.horizon() != m.H || behavior.states() != m.S ||
      behavior.actions() != m.A)
    throw DimensionError("occupancy_flow: policy shape mismatch");
  std::vector<Matrix> occ;
  occ.reserve(m.H);
  std::vector<Real> state(m.mu1.probs());
  for (std::size_t h = 0; h < m.H; ++h) {
    Matrix d(m.S, m.A);
    for (std::size_t s = 0; s < m.S; ++s)
      for (std::size_t a = 0; a < m.A; ++a) d(s, a) = state[s] * behavior.step(h)(s, a);
    occ.push_back(d);
    if (h + 1 == m.H) break;
    std::vector<Real> next(m.S, 0.0);
    for (std::size_t s = 0; s < m.S; ++s) {
      for (std::size_t a = 0; a < m.A; ++a) {
        Real w = d(s, a);
        if (w == 0.0) continue;
        Density p = transition_eval(m, h, s, a, cond[h]);
        for (std::size_t sp = 0; sp < m.S; ++sp) next[sp] += w * p[sp];
      }
    }
    state = std::move(next);
  }
  return occ;
}

struct PolicyValue {
  Real j = 0.0;                       // <mu_1, V_1>, in [0, 1]
  std::vector<std::vector<Real>> v;   // v[h][s], h = 0..H-1
};

// Backward policy evaluation conditioned on a fixed flow.
inline PolicyValue policy_value(const Policy& pi, const MeanFieldModel& m,
                                const DensityFlow& cond) {
  if (cond.size() != m.H) throw DimensionError("policy_value: flow length mismatch");
  if (pi.horizon() != m.H || pi.states() != m.S || pi.actions() != m.A)
    throw DimensionError("policy_value: policy shape mismatch");
  PolicyValue out;
  out.v.assign(m.H, std::vector<Real>(m.S, 0.0));
  std::vector<Real> next(m.S, 0.0);
  for (std::size_t hh = m.H; hh-- > 0;) {
    for (std::size_t s = 0; s < m.S; ++s) {
      Real vs = 0.0;
      for (std::size_t a = 0; a < m.A; ++a) {
        Real pa = pi.step(hh)(s, a);
        if (pa == 0.0) continue;
        Real q = reward_eval(m, hh, s, a, cond[hh]);
        if (hh + 1 < m.H) {
          Density p = transition_eval(m, hh, s, a, cond[hh]);
          for (std::size_t sp = 0; sp < m.S; ++sp) q += p[sp] * next[sp];
        }
        vs += pa * q;
      }
      out.v[hh][s] = vs;
    }
    next = out.v[hh];
  }
  for (std::size_t s = 0; s < m.S; ++s) out.j += m.mu1[s] * out.v[0][s];
  return out;
}

// J_M(pi) shorthand: value conditioned on the policy's own induced flow.
inline PolicyValue policy_value(const Policy& pi, const MeanFieldModel& m,
                                FlowCache* cache = nullptr) {
  return policy_value(pi, m, density_flow(m, pi, cache));
}

// Q^pi tables against a fixed flow, alongside V^pi; used by the proximal
// policy update and the planners.
struct PolicyQ {
  std::vector<Matrix> q;              // q[h], S x A
  std::vector<std::vector<Real>> v;   // v[h][s]
};

inline PolicyQ policy_q(const Policy& pi, const MeanFieldModel& m,
                        const DensityFlow& cond) {
  if (cond.size() != m.H) throw DimensionError("policy_q: flow length mismatch");
  PolicyQ out;
  out.q.assign(m.H, Matrix(m.S, m.A));
  out.v.assign(m.H, std::vector<Real>(m.S, 0.0));
  std::vector<Real> next(m.S, 0.0);
  for (std::size_t hh = m.H; hh-- > 0;) {
    for (std::size_t s = 0; s < m.S; ++s) {
      for (std::size_t a = 0; a < m.A; ++a) {
        Real q = reward_eval(m, hh, s, a, cond[hh]);
        if (hh + 1 < m.H) {
          Density p = transition_eval(m, hh, s, a, cond[hh]);
          for (std::size_t sp = 0; sp < m.S; ++sp) q += p[sp] * next[sp];
        }
        out.q[hh](s, a) = q;
      }
      Real vs = 0.0;
      for (std::size_t a = 0; a < m.A; ++a) vs += pi.step(hh)(s, a) * out.q[hh](s, a);
      out.v[hh][s] = vs;
    }
    next = out.v[hh];
  }
  return out;
}

struct TrajectoryStep {
  std::size_t s = 0;
  std::size_t a = 0;
  Real r = 0.0;
  std::size_t s_next = 0;
};

// Representative-agent draw: the agent follows `behavior` while transitions
// and rewards are conditioned on the population flow induced by `population`.
// The final transition leaves the horizon; its landing state is drawn from
// the step-H conditional for completeness of the record.
inline std::vector<TrajectoryStep> sample_trajectory(const Policy& behavior,
                                                     const Policy& population,
                                                     const MeanFieldModel& m,
                                                     RngStream& rng,
                                                     FlowCache* cache = nullptr) {
  DensityFlow flow = density_flow(m, population, cache);
  std::vector<TrajectoryStep> traj;
  traj.reserve(m.H);
  std::size_t s = rng.categorical(m.mu1.span());
  for (std::size_t h = 0; h < m.H; ++h) {
    std::size_t a = rng.categorical(behavior.step(h).row(s));
    Real r = reward_eval(m, h, s, a, flow[h]);
    Density p = transition_eval(m, h, s, a, flow[h]);
    std::size_t sp = rng.categorical(p.span());
    traj.push_back(TrajectoryStep{s, a, r, sp});
    s = sp;
  }
  return traj;
}

struct LipschitzReport {
  Real l_t = 0.0;             // exact, vertex-pair formula
  Real l_r = 0.0;             // exact, from the reward linear part
  Real l_gamma_lower = 0.0;   // sampled lower bound, estimate only
  Real l_gamma_upper = 0.0;   // trivial analytic bound 1 + L_T
};

// Exact transition Lipschitz constant in TV for the discrete families. The
// conditionals are affine in mu, so the constant is the Dobrushin-style
// maximum over density-vertex pairs, per (h, s, a).
inline Real transition_lipschitz(const MeanFieldModel& m) {
  if (!is_discrete_family(m.transition))
    throw UnsupportedFamilyError("transition_lipschitz: GaussianMean family");
  Real best = 0.0;
  for (std::size_t h = 0; h < m.H; ++h)
    for (std::size_t s = 0; s < m.S; ++s)
      for (std::size_t a = 0; a < m.A; ++a) {
        std::vector<Density> vertex;
        vertex.reserve(m.S);
        for (std::size_t x = 0; x < m.S; ++x)
          vertex.push_back(transition_eval(m, h, s, a, Density::dirac(m.S, x)));
        for (std::size_t x = 0; x < m.S; ++x)
          for (std::size_t y = x + 1; y < m.S; ++y)
            best = std::max(best, tv_distance(vertex[x], vertex[y]));
      }
  return best;
}

inline Real reward_lipschitz(const MeanFieldModel& m) {
  Real best = 0.0;
  for (std::size_t c = 0; c < m.reward.dims.cells(); ++c) {
    Real lo = m.reward.r1[c * m.S];
    Real hi = lo;
    for (std::size_t x = 1; x < m.S; ++x) {
      Real v = m.reward.r1[c * m.S + x];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    best = std::max(best, hi - lo);
  }
  return best;
}

inline LipschitzReport lipschitz_constants(const MeanFieldModel& m, RngStream& rng,
                                           std::size_t samples = 200) {
  LipschitzReport rep;
  rep.l_t = transition_lipschitz(m);
  rep.l_r = reward_lipschitz(m);
  rep.l_gamma_upper = 1.0 + rep.l_t;
  Real lb = 0.0;
  for (std::size_t it = 0; it < samples; ++it) {
    std::size_t h = rng.uniform_index(m.H);
    Density mu = Density::random(m.S, rng);
    Density mup = Density::random(m.S, rng);
    Real denom = tv_distance(mu, mup);
    if (denom < 1e-9) continue;
    Matrix pi_h(m.S, m.A);
    for (std::size_t s = 0; s < m.S; ++s) {
      auto row = rng.dirichlet(m.A);
      for (std::size_t a = 0; a < m.A; ++a) pi_h(s, a) = row[a];
    }
    Real num = tv_distance(density_propagate(m, h, mu, pi_h),
                           density_propagate(m, h, mup, pi_h));
    lb = std::max(lb, num / denom);
  }
  rep.l_gamma_lower = lb;
  return rep;
}

inline LipschitzReport lipschitz_constants(const MeanFieldModel& m) {
  RngStream rng(derive_seed(0x4c4950ULL, "lipschitz"));
  return lipschitz_constants(m, rng);
}

// Certified upper bound on the population-operator contraction factor:
// cross-cell Dobrushin coefficient (uniform over conditioning densities)
// plus the transition Lipschitz constant. A value below 1 certifies the
// contraction assumption; the sampled estimate alone never can.
inline std::optional<Real> contraction_certificate(const MeanFieldModel& m) {
  if (!is_discrete_family(m.transition)) return std::nullopt;
  Real worst = 0.0;
  for (std::size_t h = 0; h < m.H; ++h) {
    Real cross = 0.0;
    const std::size_t cells = m.S * m.A;
    auto column_bound = [&](std::size_t c1, std::size_t c2) -> Real {
      std::size_t s1 = c1 / m.A, a1 = c1 % m.A;
      std::size_t s2 = c2 / m.A, a2 = c2 % m.A;
      Real best = 0.0;
      for (std::size_t x = 0; x < m.S; ++x) {
        Density mu = Density::dirac(m.S, x);
        best = std::max(best, tv_distance(transition_eval(m, h, s1, a1, mu),
                                          transition_eval(m, h, s2, a2, mu)));
      }
      return best;
    };
    if (std::holds_alternative<LowRankTransition>(m.transition)) {
      // Conditionals are mixtures of the shared psi columns; their cross
      // distance is bounded by the psi-column diameter.
      const auto& lr = std::get<LowRankTransition>(m.transition);
      for (std::size_t j = 0; j < lr.d; ++j)
        for (std::size_t jp = j + 1; jp < lr.d; ++jp)
          cross = std::max(cross, tv_distance(lr.psi_column(h, j),
                                              lr.psi_column(h, jp)));
    } else {
      // Conditionals are affine in mu, so the supremum over densities is
      // attained at vertex conditioning; column_bound scans those.
      for (std::size_t c1 = 0; c1 < cells; ++c1)
        for (std::size_t c2 = c1 + 1; c2 < cells; ++c2)
          cross = std::max(cross, column_bound(c1, c2));
    }
    worst = std::max(worst, cross);
  }
  return worst + transition_lipschitz(m);
}

}  // namespace mfrl
