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
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "mfrl/density.hpp"
#include "mfrl/errors.hpp"
#include "mfrl/model_class.hpp"

namespace mfrl {

enum class DistanceTag { tv, hellinger };

inline const char* distance_name(DistanceTag d) {
  return d == DistanceTag::tv ? "tv" : "hellinger";
}

// Query point (s, a, mu). Gaussian mean families ignore (s, a) when the
// means are built directly from density probes.
struct Probe {
  std::size_t s = 0;
  std::size_t a = 0;
  Density mu;
};

// How the conditioning densities of the probe set are assembled. The density
// simplex is infinite, so every dimension estimate in this module is
// probe-relative: a certified lower bound on the dimension over the full
// domain, refined by adding probes.
struct ProbeSpec {
  bool vertices = true;
  bool uniform = true;
  std::size_t dirichlet_draws = 4;
  std::uint64_t seed = 0;
};

inline std::vector<Density> probe_densities(std::size_t S, const ProbeSpec& spec) {
  std::vector<Density> out;
  if (spec.uniform) out.push_back(Density::uniform(S));
  if (spec.vertices)
    for (std::size_t x = 0; x < S; ++x) out.push_back(Density::dirac(S, x));
  RngStream rng(derive_seed(spec.seed, "probe"));
  for (std::size_t i = 0; i < spec.dirichlet_draws; ++i)
    out.push_back(Density::random(S, rng));
  return out;
}

// A finite distribution-valued function class restricted to a finite probe
// set, with all pairwise distances precomputed.
class EluderProblem {
 public:
  DistanceTag distance = DistanceTag::tv;
  Real alpha = 1.0;
  Real epsilon = 0.1;
  Real bound_c = 1.0;  // upper bound of the distance measure

  static EluderProblem from_distributions(
      const std::vector<std::vector<Density>>& outputs, DistanceTag dist,
      Real alpha, Real epsilon, std::vector<Probe> probes = {}) {
    EluderProblem p;
    p.distance = dist;
    p.alpha = alpha;
    p.epsilon = epsilon;
    p.bound_c = 1.0;
    p.n_fun_ = outputs.size();
    if (p.n_fun_ == 0) throw DimensionError("EluderProblem: no functions");
    p.n_probe_ = outputs.front().size();
    for (const auto& row : outputs)
      if (row.size() != p.n_probe_)
        throw DimensionError("EluderProblem: ragged output table");
    p.check_params();
    p.probes_ = std::move(probes);
    p.fill_pairs([&](std::size_t i, std::size_t j, std::size_t x) {
      return dist == DistanceTag::tv
                 ? tv_distance(outputs[i][x], outputs[j][x])
                 : hellinger_distance(outputs[i][x], outputs[j][x]);
    });
    return p;
  }

  static EluderProblem from_gaussian(const GaussianMeanClass& cls,
                                     const std::vector<Density>& mus, Real alpha,
                                     Real epsilon) {
    EluderProblem p;
    p.distance = DistanceTag::hellinger;
    p.alpha = alpha;
    p.epsilon = epsilon;
    p.bound_c = 1.0;
    p.n_fun_ = cls.means.size();
    if (p.n_fun_ == 0) throw DimensionError("EluderProblem: no functions");
    p.n_probe_ = mus.size();
    p.check_params();
    std::vector<std::vector<std::vector<Real>>> means(p.n_fun_);
    for (std::size_t i = 0; i < p.n_fun_; ++i)
      for (const auto& mu : mus) means[i].push_back(cls.means[i].eval(mu));
    for (const auto& mu : mus) p.probes_.push_back(Probe{0, 0, mu});
    p.fill_pairs([&](std::size_t i, std::size_t j, std::size_t x) {
      return hellinger_distance_gaussian(
          std::span<const Real>(means[i][x]), std::span<const Real>(means[j][x]),
          cls.sigma);
    });
    return p;
  }

  // Step-h conditionals of a model class over a probe grid of all (s, a)
  // cells crossed with the spec's densities.
  static EluderProblem from_class_step(const ModelClass& cls, std::size_t h,
                                       DistanceTag dist, const ProbeSpec& pspec,
                                       Real alpha, Real epsilon) {
    cls.validate();
    const auto& m0 = cls.models.front();
    const bool gaussian = !is_discrete_family(m0.transition);
    if (gaussian && dist != DistanceTag::hellinger)
      throw UnsupportedFamilyError(
          "EluderProblem: GaussianMean classes only support Hellinger");
    std::vector<Probe> probes;
    for (std::size_t s = 0; s < m0.S; ++s)
      for (std::size_t a = 0; a < m0.A; ++a)
        for (auto& mu : probe_densities(m0.S, pspec))
          probes.push_back(Probe{s, a, std::move(mu)});
    if (!gaussian) {
      std::vector<std::vector<Density>> outputs;
      outputs.reserve(cls.size());
      for (const auto& m : cls.models) {
        std::vector<Density> row;
        row.reserve(probes.size());
        for (const auto& pr : probes)
          row.push_back(transition_eval(m, h, pr.s, pr.a, pr.mu));
        outputs.push_back(std::move(row));
      }
      return from_distributions(outputs, dist, alpha, epsilon, std::move(probes));
    }
    Real sigma = std::get<GaussianMeanTransition>(m0.transition).sigma;
    for (const auto& m : cls.models)
      if (std::get<GaussianMeanTransition>(m.transition).sigma != sigma)
        throw UnsupportedFamilyError(
            "EluderProblem: Gaussian class members must share sigma");
    EluderProblem p;
    p.distance = DistanceTag::hellinger;
    p.alpha = alpha;
    p.epsilon = epsilon;
    p.n_fun_ = cls.size();
    p.n_probe_ = probes.size();
    p.check_params();
    std::vector<std::vector<std::vector<Real>>> means(p.n_fun_);
    for (std::size_t i = 0; i < p.n_fun_; ++i)
      for (const auto& pr : probes)
        means[i].push_back(gaussian_mean_eval(cls.models[i], h, pr.s, pr.a, pr.mu));
    p.probes_ = std::move(probes);
    p.fill_pairs([&](std::size_t i, std::size_t j, std::size_t x) {
      return hellinger_distance_gaussian(std::span<const Real>(means[i][x]),
                                         std::span<const Real>(means[j][x]), sigma);
    });
    return p;
  }

  std::size_t num_functions() const { return n_fun_; }
  std::size_t num_probes() const { return n_probe_; }
  const std::vector<Probe>& probes() const { return probes_; }

  Real pair_distance(std::size_t f1, std::size_t f2, std::size_t probe) const {
    if (f1 == f2) return 0.0;
    return pair_dist_[pair_index(std::min(f1, f2), std::max(f1, f2))][probe];
  }

 private:
  void check_params() const {
    if (alpha < 1.0) throw ParameterError("EluderProblem: alpha must be >= 1");
    if (epsilon <= 0.0) throw ParameterError("EluderProblem: epsilon must be > 0");
    if (n_probe_ == 0) throw DimensionError("EluderProblem: empty probe set");
  }

  std::size_t pair_index(std::size_t i, std::size_t j) const {
    return i * (2 * n_fun_ - i - 1) / 2 + (j - i - 1);
  }

  template <typename F>
  void fill_pairs(F&& dist_fn) {
    pair_dist_.assign(n_fun_ * (n_fun_ - 1) / 2, {});
    for (std::size_t i = 0; i < n_fun_; ++i)
      for (std::size_t j = i + 1; j < n_fun_; ++j) {
        auto& row = pair_dist_[pair_index(i, j)];
        row.resize(n_probe_);
        for (std::size_t x = 0; x < n_probe_; ++x) row[x] = dist_fn(i, j, x);
      }
  }

  std::size_t n_fun_ = 0;
  std::size_t n_probe_ = 0;
  std::vector<Probe> probes_;
  std::vector<std::vector<Real>> pair_dist_;
};

struct IndependenceWitness {
  std::size_t f1 = 0;
  std::size_t f2 = 0;
  Real eps_prime = 0.0;
};

// Is probe x alpha-weakly-eps_prime-independent of the history? Searches
// function pairs in lexicographic order; first witness wins.
inline std::optional<IndependenceWitness> independence_test(
    const EluderProblem& p, std::size_t x, const std::vector<std::size_t>& history,
    Real eps_prime) {
  if (eps_prime < p.epsilon)
    throw ParameterError("independence_test: eps_prime below problem epsilon");
  for (std::size_t i = 0; i < p.num_functions(); ++i)
    for (std::size_t j = i + 1; j < p.num_functions(); ++j) {
      Real hist_sq = 0.0;
      for (std::size_t t : history) {
        Real d = p.pair_distance(i, j, t);
        hist_sq += d * d;
      }
      if (hist_sq <= eps_prime * eps_prime &&
          p.pair_distance(i, j, x) > p.alpha * eps_prime)
        return IndependenceWitness{i, j, eps_prime};
    }
  return std::nullopt;
}

struct IndependentSequence {
  std::vector<std::size_t> points;
  std::vector<IndependenceWitness> witnesses;

  std::size_t length() const { return points.size(); }

  // Re-verifies every stored witness against the definition.
  bool verify(const EluderProblem& p) const {
    if (points.size() != witnesses.size()) return false;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto& w = witnesses[i];
      if (w.eps_prime < p.epsilon) return false;
      Real hist_sq = 0.0;
      for (std::size_t t = 0; t < i; ++t) {
        Real d = p.pair_distance(w.f1, w.f2, points[t]);
        hist_sq += d * d;
      }
      if (hist_sq > w.eps_prime * w.eps_prime) return false;
      if (p.pair_distance(w.f1, w.f2, points[i]) <= p.alpha * w.eps_prime)
        return false;
    }
    return true;
  }
};

inline std::vector<Real> default_eps_grid(Real epsilon) {
  std::vector<Real> grid;
  Real v = epsilon;
  for (int j = 0; j <= 16; ++j) {
    grid.push_back(v);
    v *= 1.25;
  }
  return grid;
}

// Greedy scan over probes in order, appending any probe certified independent
// of the current sequence at some grid eps'. The returned length is a valid
// lower bound on the eluder dimension restricted to the probe set.
inline IndependentSequence greedy_dim(const EluderProblem& p,
                                      const std::vector<Real>& eps_grid) {
  for (Real e : eps_grid)
    if (e < p.epsilon)
      throw ParameterError("greedy_dim: grid value below problem epsilon");
  IndependentSequence seq;
  for (std::size_t x = 0; x < p.num_probes(); ++x) {
    for (Real e : eps_grid) {
      if (auto w = independence_test(p, x, seq.points, e)) {
        seq.points.push_back(x);
        seq.witnesses.push_back(*w);
        break;
      }
    }
  }
  return seq;
}

inline IndependentSequence greedy_dim(const EluderProblem& p) {
  return greedy_dim(p, default_eps_grid(p.epsilon));
}

namespace detail {

// Closed form of the existential over eps' >= epsilon: a valid eps' exists
// for pair (i, j) iff D(x) > alpha * max(epsilon, sqrt(sum of squared
// history distances)), and the smallest valid eps' is that max.
inline std::optional<IndependenceWitness> independence_test_exact(
    const EluderProblem& p, std::size_t x, const std::vector<std::size_t>& history) {
  for (std::size_t i = 0; i < p.num_functions(); ++i)
    for (std::size_t j = i + 1; j < p.num_functions(); ++j) {
      Real hist_sq = 0.0;
      for (std::size_t t : history) {
        Real d = p.pair_distance(i, j, t);
        hist_sq += d * d;
      }
      Real eps_opt = std::max(p.epsilon, std::sqrt(hist_sq));
      // sqrt rounding can leave eps_opt^2 one ulp short of hist_sq
      while (eps_opt * eps_opt < hist_sq)
        eps_opt = std::nextafter(eps_opt, std::numeric_limits<Real>::infinity());
      if (p.pair_distance(i, j, x) > p.alpha * eps_opt)
        return IndependenceWitness{i, j, eps_opt};
    }
  return std::nullopt;
}

}  // namespace detail

// Greedy scan that resolves the eps' existential exactly instead of on a
// grid; this is the strongest greedy lower bound.
inline IndependentSequence greedy_dim_exact(const EluderProblem& p) {
  IndependentSequence seq;
  for (std::size_t x = 0; x < p.num_probes(); ++x) {
    if (auto w = detail::independence_test_exact(p, x, seq.points)) {
      seq.points.push_back(x);
      seq.witnesses.push_back(*w);
    }
  }
  return seq;
}

// Exact longest-sequence oracle over all ordered probe subsequences, with the
// eps' existential resolved in closed form. Whether a probe can extend a
// sequence depends only on the set of points already used, so the search
// memoizes over subsets.
inline int brute_force_dim(const EluderProblem& p) {
  const std::size_t P = p.num_probes();
  if (P > 10 || p.num_functions() > 8)
    throw SizeError("brute_force_dim: instance exceeds exact-oracle caps");
  std::vector<int> memo(std::size_t(1) << P, -1);
  auto rec = [&](auto&& self, std::uint32_t mask) -> int {
    if (memo[mask] >= 0) return memo[mask];
    int best = 0;
    std::vector<std::size_t> used;
    for (std::size_t t = 0; t < P; ++t)
      if (mask & (1u << t)) used.push_back(t);
    for (std::size_t x = 0; x < P; ++x) {
      if (mask & (1u << x)) continue;
      if (detail::independence_test_exact(p, x, used))
        best = std::max(best, 1 + self(self, mask | (1u << x)));
    }
    memo[mask] = best;
    return best;
  };
  return rec(rec, 0u);
}

struct MfMbedRow {
  std::size_t h = 0;
  int tv_dim = -1;  // -1 when TV is not applicable (Gaussian classes)
  int hellinger_dim = 0;
  int min_dim = 0;
};

struct MfMbedReport {
  std::vector<MfMbedRow> per_h;
  int dimension = 0;  // max over h of min over distances
  std::size_t probe_count = 0;
  std::uint64_t probe_seed = 0;
};

// Mean-field model-based eluder dimension estimate: per step, greedy lower
// bounds under both distances, min over distances, then max over steps.
inline MfMbedReport mf_mbed(const ModelClass& cls, Real alpha, Real epsilon,
                            const ProbeSpec& pspec) {
  cls.validate();
  const auto& m0 = cls.models.front();
  const bool gaussian = !is_discrete_family(m0.transition);
  MfMbedReport rep;
  rep.probe_seed = pspec.seed;
  for (std::size_t h = 0; h < m0.H; ++h) {
    MfMbedRow row;
    row.h = h;
    auto ph = EluderProblem::from_class_step(cls, h, DistanceTag::hellinger, pspec,
                                             alpha, epsilon);
    rep.probe_count = ph.num_probes();
    row.hellinger_dim = static_cast<int>(greedy_dim(ph).length());
    if (!gaussian) {
      auto pt = EluderProblem::from_class_step(cls, h, DistanceTag::tv, pspec,
                                               alpha, epsilon);
      row.tv_dim = static_cast<int>(greedy_dim(pt).length());
      row.min_dim = std::min(row.tv_dim, row.hellinger_dim);
    } else {
      row.min_dim = row.hellinger_dim;
    }
    rep.dimension = std::max(rep.dimension, row.min_dim);
    rep.per_h.push_back(row);
  }
  return rep;
}

// Largest n with (3/2)^n <= (1 + n C_phi^2 C^2 / (d eps^2))^d: the
// explicit-constant form of the linear-family dimension bounds.
inline int linear_dim_bound(std::size_t d, Real c_phi, Real c_const, Real epsilon) {
  if (d == 0 || c_phi <= 0.0 || c_const <= 0.0 || epsilon <= 0.0)
    throw ParameterError("linear_dim_bound: all parameters must be positive");
  const Real c = (c_phi * c_phi * c_const * c_const) /
                 (static_cast<Real>(d) * epsilon * epsilon);
  const Real lhs_rate = std::log(1.5);
  constexpr int kCap = 1 << 24;
  int n = 0;
  while (n < kCap) {
    int next = n + 1;
    Real lhs = next * lhs_rate;
    Real rhs = static_cast<Real>(d) * std::log1p(next * c);
    if (lhs > rhs) break;
    n = next;
  }
  return n;
}

struct RegretBoundReport {
  int dim_exact = 0;
  Real violation_lhs = 0.0;   // count of D > alpha * eps events
  Real violation_rhs = 0.0;   // (beta / eps^2 + 1) * dim
  bool violation_pass = false;
  Real cumulative_lhs = 0.0;  // sum of D(f_k, f*)(x_k)
  Real cumulative_rhs = 0.0;  // alpha K eps + (dim + 1) C + 2 sqrt(beta K dim)
  bool cumulative_pass = false;
};

// Explicit-constant packing checks: given a premise-respecting sequence,
// the number of large-distance steps and the cumulative distance are both
// bounded in terms of the exact dimension.
inline RegretBoundReport regret_bound_check(
    const std::vector<std::pair<std::size_t, std::size_t>>& steps,  // (f_k, x_k)
    std::size_t f_star, Real beta, const EluderProblem& p) {
  if (f_star >= p.num_functions())
    throw DimensionError("regret_bound_check: f_star out of range");
  for (std::size_t k = 0; k < steps.size(); ++k) {
    Real sq = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      Real d = p.pair_distance(steps[k].first, f_star, steps[i].second);
      sq += d * d;
    }
    if (sq > beta + 1e-12)
      throw PreconditionError("regret_bound_check: premise sum exceeds beta");
  }
  RegretBoundReport rep;
  rep.dim_exact = brute_force_dim(p);
  const Real K = static_cast<Real>(steps.size());
  Real count = 0.0, total = 0.0;
  for (const auto& [fk, xk] : steps) {
    Real d = p.pair_distance(fk, f_star, xk);
    total += d;
    if (d > p.alpha * p.epsilon) count += 1.0;
  }
  rep.violation_lhs = count;
  rep.violation_rhs = (beta / (p.epsilon * p.epsilon) + 1.0) * rep.dim_exact;
  rep.violation_pass = rep.violation_lhs <= rep.violation_rhs + 1e-9;
  rep.cumulative_lhs = total;
  rep.cumulative_rhs = p.alpha * K * p.epsilon + (rep.dim_exact + 1.0) * p.bound_c +
                       2.0 * std::sqrt(beta * K * rep.dim_exact);
  rep.cumulative_pass = rep.cumulative_lhs <= rep.cumulative_rhs + 1e-9;
  return rep;
}

}  // namespace mfrl
