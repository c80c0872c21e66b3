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

#include <algorithm>
#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "mfrl/density.hpp"
#include "mfrl/errors.hpp"
#include "mfrl/matrix.hpp"
#include "mfrl/policy.hpp"

namespace mfrl {

// Every discrete transition family below is a convex structure: it outputs a
// convex combination of stored densities for any density input, so its output
// is a simplex element by construction and never needs projecting.

struct ModelDims {
  std::size_t S = 0, A = 0, H = 0;
  std::size_t cell(std::size_t h, std::size_t s, std::size_t a) const {
    return (h * S + s) * A + a;
  }
  std::size_t cells() const { return H * S * A; }
  bool operator==(const ModelDims&) const = default;
};

// Transition table independent of the population density (L_T = 0).
struct DensityFreeTransition {
  ModelDims dims;
  std::vector<Density> table;  // indexed by dims.cell(h, s, a)

  void validate() const {
    if (table.size() != dims.cells())
      throw DimensionError("DensityFreeTransition: table size mismatch");
    for (const auto& d : table)
      if (d.size() != dims.S)
        throw DimensionError("DensityFreeTransition: next-state support mismatch");
  }

  const Density& at(std::size_t h, std::size_t s, std::size_t a) const {
    return table[dims.cell(h, s, a)];
  }

  Density eval(std::size_t h, std::size_t s, std::size_t a,
               const Density& /*mu*/) const {
    return at(h, s, a);
  }
};

// P(.|s,a,mu) = sum_x mu(x) K[h][s][a][x].
struct ConvexMixtureTransition {
  ModelDims dims;
  std::vector<Density> kernel;  // indexed by dims.cell(h,s,a) * S + x

  void validate() const {
    if (kernel.size() != dims.cells() * dims.S)
      throw DimensionError("ConvexMixtureTransition: kernel size mismatch");
    for (const auto& d : kernel)
      if (d.size() != dims.S)
        throw DimensionError("ConvexMixtureTransition: next-state support mismatch");
  }

  const Density& column(std::size_t h, std::size_t s, std::size_t a,
                        std::size_t x) const {
    return kernel[dims.cell(h, s, a) * dims.S + x];
  }

  Density eval(std::size_t h, std::size_t s, std::size_t a,
               const Density& mu) const {
    std::vector<Real> out(dims.S, 0.0);
    for (std::size_t x = 0; x < dims.S; ++x) {
      Real w = mu[x];
      if (w == 0.0) continue;
      const Density& col = column(h, s, a, x);
      for (std::size_t sp = 0; sp < dims.S; ++sp) out[sp] += w * col[sp];
    }
    return Density(std::move(out));
  }
};

// (1 - w) * density-free base + w * convex mixture.
struct InterpolatedTransition {
  Real w = 0.0;
  DensityFreeTransition base;
  ConvexMixtureTransition mixture;

  void validate() const {
    if (w < 0.0 || w > 1.0)
      throw ParameterError("InterpolatedTransition: weight outside [0,1]");
    base.validate();
    mixture.validate();
    if (!(base.dims == mixture.dims))
      throw DimensionError("InterpolatedTransition: component shape mismatch");
  }

  const ModelDims& dims() const { return base.dims; }

  Density eval(std::size_t h, std::size_t s, std::size_t a,
               const Density& mu) const {
    const Density& b = base.at(h, s, a);
    Density m = mixture.eval(h, s, a, mu);
    std::vector<Real> out(b.size());
    for (std::size_t sp = 0; sp < b.size(); ++sp)
      out[sp] = (1.0 - w) * b[sp] + w * m[sp];
    return Density(std::move(out));
  }
};

// P(.|s,a,mu) = sum_j phi_j(s,a,mu) psi_j, with phi affine in mu and kept on
// the d-simplex (projected as a safeguard; generated instances are in-simplex
// by construction), and psi columns that are densities over next states.
struct LowRankTransition {
  ModelDims dims;
  std::size_t d = 0;
  std::vector<Real> phi_base;   // [cells * d]
  std::vector<Real> phi_lin;    // [cells * d * S], row-major (j, x)
  std::vector<Density> psi;     // [H * d]

  void validate() const {
    if (d == 0) throw ParameterError("LowRankTransition: d must be positive");
    if (phi_base.size() != dims.cells() * d)
      throw DimensionError("LowRankTransition: phi_base size mismatch");
    if (phi_lin.size() != dims.cells() * d * dims.S)
      throw DimensionError("LowRankTransition: phi_lin size mismatch");
    if (psi.size() != dims.H * d)
      throw DimensionError("LowRankTransition: psi size mismatch");
    for (const auto& col : psi)
      if (col.size() != dims.S)
        throw DimensionError("LowRankTransition: psi support mismatch");
  }

  std::vector<Real> feature(std::size_t h, std::size_t s, std::size_t a,
                            const Density& mu) const {
    const std::size_t c = dims.cell(h, s, a);
    std::vector<Real> phi(d);
    for (std::size_t j = 0; j < d; ++j) {
      Real v = phi_base[c * d + j];
      const Real* lin = &phi_lin[(c * d + j) * dims.S];
      for (std::size_t x = 0; x < dims.S; ++x) v += lin[x] * mu[x];
      phi[j] = v;
    }
    return project_to_simplex(phi);
  }

  const Density& psi_column(std::size_t h, std::size_t j) const {
    return psi[h * d + j];
  }

  Density eval(std::size_t h, std::size_t s, std::size_t a,
               const Density& mu) const {
    std::vector<Real> phi = feature(h, s, a, mu);
    std::vector<Real> out(dims.S, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
      if (phi[j] == 0.0) continue;
      const Density& col = psi_column(h, j);
      for (std::size_t sp = 0; sp < dims.S; ++sp) out[sp] += phi[j] * col[sp];
    }
    return Density(std::move(out));
  }
};

// Deterministic mean in R^d plus isotropic Gaussian noise. Only the eluder
// toolkit consumes this variant; the dynamics operations reject it.
struct GaussianMeanTransition {
  ModelDims dims;
  std::size_t d = 0;
  Real sigma = 1.0;
  std::vector<Real> mean_base;  // [cells * d]
  std::vector<Real> mean_lin;   // [cells * d * S]

  void validate() const {
    if (d == 0) throw ParameterError("GaussianMeanTransition: d must be positive");
    if (sigma <= 0.0)
      throw ParameterError("GaussianMeanTransition: sigma must be positive");
    if (mean_base.size() != dims.cells() * d)
      throw DimensionError("GaussianMeanTransition: mean_base size mismatch");
    if (mean_lin.size() != dims.cells() * d * dims.S)
      throw DimensionError("GaussianMeanTransition: mean_lin size mismatch");
  }

  std::vector<Real> mean(std::size_t h, std::size_t s, std::size_t a,
                         const Density& mu) const {
    const std::size_t c = dims.cell(h, s, a);
    std::vector<Real> f(d);
    for (std::size_t j = 0; j < d; ++j) {
      Real v = mean_base[c * d + j];
      const Real* lin = &mean_lin[(c * d + j) * dims.S];
      for (std::size_t x = 0; x < dims.S; ++x) v += lin[x] * mu[x];
      f[j] = v;
    }
    return f;
  }
};

using TransitionFamily =
    std::variant<DensityFreeTransition, ConvexMixtureTransition,
                 InterpolatedTransition, LowRankTransition,
                 GaussianMeanTransition>;

inline const ModelDims& transition_dims(const TransitionFamily& t) {
  return std::visit(
      [](const auto& v) -> const ModelDims& {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, InterpolatedTransition>)
          return v.dims();
        else
          return v.dims;
      },
      t);
}

inline void validate_transition(const TransitionFamily& t) {
  std::visit([](const auto& v) { v.validate(); }, t);
}

inline bool is_discrete_family(const TransitionFamily& t) {
  return !std::holds_alternative<GaussianMeanTransition>(t);
}

// Rewards are affine in the conditioning density and clipped to [0, 1/H].
// One reward family is shared by every model of a class (known reward).
struct RewardFamily {
  ModelDims dims;
  std::vector<Real> r0;  // [cells]
  std::vector<Real> r1;  // [cells * S]

  void validate() const {
    if (r0.size() != dims.cells())
      throw DimensionError("RewardFamily: r0 size mismatch");
    if (r1.size() != dims.cells() * dims.S)
      throw DimensionError("RewardFamily: r1 size mismatch");
    const Real cap = 1.0 / static_cast<Real>(dims.H);
    for (Real v : r0)
      if (v < 0.0 || v > cap + 1e-12)
        throw ParameterError("RewardFamily: base reward outside [0, 1/H]");
  }

  static RewardFamily zero(const ModelDims& dims) {
    return RewardFamily{dims, std::vector<Real>(dims.cells(), 0.0),
                        std::vector<Real>(dims.cells() * dims.S, 0.0)};
  }

  static RewardFamily constant(const ModelDims& dims, Real value) {
    return RewardFamily{dims, std::vector<Real>(dims.cells(), value),
                        std::vector<Real>(dims.cells() * dims.S, 0.0)};
  }

  Real eval(std::size_t h, std::size_t s, std::size_t a, const Density& mu) const {
    const std::size_t c = dims.cell(h, s, a);
    Real v = r0[c];
    const Real* lin = &r1[c * dims.S];
    for (std::size_t x = 0; x < dims.S; ++x) v += lin[x] * mu[x];
    return std::clamp(v, 0.0, 1.0 / static_cast<Real>(dims.H));
  }
};

// One candidate mean-field MDP: (mu_1, S, A, H, transition, reward).
struct MeanFieldModel {
  std::size_t S = 0, A = 0, H = 0;
  Density mu1;
  TransitionFamily transition;
  RewardFamily reward;
  std::string id;

  MeanFieldModel(std::size_t states, std::size_t actions, std::size_t horizon,
                 Density initial, TransitionFamily trans, RewardFamily rew,
                 std::string ident)
      : S(states),
        A(actions),
        H(horizon),
        mu1(std::move(initial)),
        transition(std::move(trans)),
        reward(std::move(rew)),
        id(std::move(ident)) {
    if (S == 0 || A == 0 || H == 0)
      throw DimensionError("MeanFieldModel: zero-sized dimension");
    if (mu1.size() != S)
      throw DimensionError("MeanFieldModel: mu1 support mismatch");
    ModelDims want{S, A, H};
    if (!(transition_dims(transition) == want))
      throw DimensionError("MeanFieldModel: transition shape mismatch");
    validate_transition(transition);
    if (!(reward.dims == want))
      throw DimensionError("MeanFieldModel: reward shape mismatch");
    reward.validate();
  }

  ModelDims dims() const { return ModelDims{S, A, H}; }

  void check_indices(std::size_t h, std::size_t s, std::size_t a) const {
    if (h >= H) throw DimensionError("step index out of range");
    if (s >= S) throw DimensionError("state index out of range");
    if (a >= A) throw DimensionError("action index out of range");
  }
};

// P_{T,h}(.|s,a,mu) for discrete families; steps are 0-based.
inline Density transition_eval(const MeanFieldModel& m, std::size_t h,
                               std::size_t s, std::size_t a, const Density& mu) {
  m.check_indices(h, s, a);
  if (mu.size() != m.S) throw DimensionError("transition_eval: mu support mismatch");
  return std::visit(
      [&](const auto& v) -> Density {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, GaussianMeanTransition>) {
          throw UnsupportedFamilyError(
              "transition_eval: GaussianMean family has no discrete conditional");
        } else {
          return v.eval(h, s, a, mu);
        }
      },
      m.transition);
}

// Mean vector of the GaussianMean family at (h, s, a, mu).
inline std::vector<Real> gaussian_mean_eval(const MeanFieldModel& m, std::size_t h,
                                            std::size_t s, std::size_t a,
                                            const Density& mu) {
  m.check_indices(h, s, a);
  const auto* g = std::get_if<GaussianMeanTransition>(&m.transition);
  if (g == nullptr)
    throw UnsupportedFamilyError("gaussian_mean_eval: not a GaussianMean family");
  return g->mean(h, s, a, mu);
}

inline Real reward_eval(const MeanFieldModel& m, std::size_t h, std::size_t s,
                        std::size_t a, const Density& mu) {
  m.check_indices(h, s, a);
  if (mu.size() != m.S) throw DimensionError("reward_eval: mu support mismatch");
  return m.reward.eval(h, s, a, mu);
}

}  // namespace mfrl
