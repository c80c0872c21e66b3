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

#include <optional>
#include <string>
#include <vector>

#include "mfrl/dynamics.hpp"
#include "mfrl/model.hpp"
#include "mfrl/rng.hpp"
#include "mfrl/serialize.hpp"

namespace mfrl {

enum class FamilyTag { density_free, convex_mixture, interpolated, low_rank };

inline std::string family_name(FamilyTag f) {
  switch (f) {
    case FamilyTag::density_free: return "density_free";
    case FamilyTag::convex_mixture: return "convex_mixture";
    case FamilyTag::interpolated: return "interpolated";
    case FamilyTag::low_rank: return "low_rank";
  }
  throw ParameterError("family_name: unknown family");
}

inline FamilyTag family_from_name(const std::string& s) {
  if (s == "density_free") return FamilyTag::density_free;
  if (s == "convex_mixture") return FamilyTag::convex_mixture;
  if (s == "interpolated") return FamilyTag::interpolated;
  if (s == "low_rank") return FamilyTag::low_rank;
  throw ParameterError("family_from_name: unknown family '" + s + "'");
}

struct ClassGenSpec {
  std::size_t S = 3, A = 2, H = 3;
  std::size_t size = 8;
  FamilyTag family = FamilyTag::convex_mixture;
  Real perturbation = 0.2;  // mixing weight of fresh column redraws
  Real lt_min = 0.0;
  Real lt_max = 1.0;
  bool contraction = false;
  std::uint64_t seed = 0;
  std::size_t low_rank_d = 3;

  void validate() const {
    if (S == 0 || A == 0 || H == 0)
      throw ParameterError("ClassGenSpec: zero-sized dimension");
    if (size == 0) throw ParameterError("ClassGenSpec: class size must be >= 1");
    if (perturbation < 0.0 || perturbation > 1.0)
      throw ParameterError("ClassGenSpec: perturbation outside [0,1]");
    if (lt_min < 0.0 || lt_max < lt_min)
      throw ParameterError("ClassGenSpec: invalid L_T target range");
    if (family == FamilyTag::low_rank && low_rank_d == 0)
      throw ParameterError("ClassGenSpec: low_rank_d must be >= 1");
  }
};

// Finite model class containing a designated true model. All members share
// (S, A, H, mu1) and the reward family; the reward is known to the learner.
struct ModelClass {
  std::vector<MeanFieldModel> models;
  std::size_t truth_index = 0;
  std::string family;
  std::uint64_t seed = 0;
  std::optional<ClassGenSpec> gen_spec;

  void validate() const {
    if (models.empty()) throw DimensionError("ModelClass: empty class");
    if (truth_index >= models.size())
      throw DimensionError("ModelClass: truth_index out of range");
    const auto& m0 = models.front();
    for (const auto& m : models) {
      if (m.S != m0.S || m.A != m0.A || m.H != m0.H)
        throw DimensionError("ModelClass: member shape mismatch");
      if (m.mu1.probs() != m0.mu1.probs())
        throw DimensionError("ModelClass: member mu1 mismatch");
      if (m.reward.r0 != m0.reward.r0 || m.reward.r1 != m0.reward.r1)
        throw DimensionError("ModelClass: reward differs across members");
    }
  }

  std::size_t size() const { return models.size(); }
  const MeanFieldModel& truth() const { return models[truth_index]; }
};

namespace detail {

inline std::vector<Density> anchored_table(const ModelDims& dims, Real anchor_mix,
                                           RngStream& rng) {
  std::vector<Density> out;
  out.reserve(dims.cells());
  for (std::size_t h = 0; h < dims.H; ++h) {
    std::vector<Real> anchor = rng.dirichlet(dims.S);
    for (std::size_t c = 0; c < dims.S * dims.A; ++c) {
      std::vector<Real> col = rng.dirichlet(dims.S);
      for (std::size_t x = 0; x < dims.S; ++x)
        col[x] = anchor_mix * anchor[x] + (1.0 - anchor_mix) * col[x];
      out.emplace_back(std::move(col));
    }
  }
  return out;
}

// Mix every kernel column toward its cell mean; scales each cell's internal
// column differences, and hence the exact L_T, by exactly t.
inline void shrink_kernel_columns(std::vector<Density>& kernel, std::size_t S,
                                  Real t) {
  const std::size_t cells = kernel.size() / S;
  for (std::size_t c = 0; c < cells; ++c) {
    std::vector<Real> mean(S, 0.0);
    for (std::size_t x = 0; x < S; ++x)
      for (std::size_t sp = 0; sp < S; ++sp) mean[sp] += kernel[c * S + x][sp] / S;
    for (std::size_t x = 0; x < S; ++x) {
      std::vector<Real> col(S);
      for (std::size_t sp = 0; sp < S; ++sp)
        col[sp] = (1.0 - t) * mean[sp] + t * kernel[c * S + x][sp];
      kernel[c * S + x] = Density(std::move(col));
    }
  }
}

inline std::vector<Density> perturb_columns(const std::vector<Density>& cols,
                                            Real rho, RngStream& rng) {
  if (rho == 0.0) return cols;
  std::vector<Density> out;
  out.reserve(cols.size());
  for (const auto& c : cols) {
    std::vector<Real> fresh = rng.dirichlet(c.size());
    std::vector<Real> mixed(c.size());
    for (std::size_t i = 0; i < c.size(); ++i)
      mixed[i] = (1.0 - rho) * c[i] + rho * fresh[i];
    out.emplace_back(std::move(mixed));
  }
  return out;
}

inline TransitionFamily perturb_family(const TransitionFamily& truth, Real rho,
                                       RngStream& rng) {
  if (const auto* df = std::get_if<DensityFreeTransition>(&truth)) {
    return DensityFreeTransition{df->dims, perturb_columns(df->table, rho, rng)};
  }
  if (const auto* cm = std::get_if<ConvexMixtureTransition>(&truth)) {
    return ConvexMixtureTransition{cm->dims, perturb_columns(cm->kernel, rho, rng)};
  }
  if (const auto* ip = std::get_if<InterpolatedTransition>(&truth)) {
    InterpolatedTransition out = *ip;
    out.mixture.kernel = perturb_columns(ip->mixture.kernel, rho, rng);
    return out;
  }
  if (const auto* lr = std::get_if<LowRankTransition>(&truth)) {
    LowRankTransition out = *lr;
    out.psi = perturb_columns(lr->psi, rho, rng);
    return out;
  }
  throw UnsupportedFamilyError("perturb_family: GaussianMean classes are fixed");
}

// Exact convex-mixture representation of an interpolated transition:
// (1-w) T0 + w sum_x mu(x) K_x  ==  sum_x mu(x) [(1-w) T0 + w K_x].
inline ConvexMixtureTransition to_convex_mixture(const InterpolatedTransition& ip) {
  const ModelDims& dims = ip.dims();
  std::vector<Density> kernel;
  kernel.reserve(dims.cells() * dims.S);
  for (std::size_t c = 0; c < dims.cells(); ++c) {
    const Density& base = ip.base.table[c];
    for (std::size_t x = 0; x < dims.S; ++x) {
      const Density& col = ip.mixture.kernel[c * dims.S + x];
      std::vector<Real> mixed(dims.S);
      for (std::size_t sp = 0; sp < dims.S; ++sp)
        mixed[sp] = (1.0 - ip.w) * base[sp] + ip.w * col[sp];
      kernel.emplace_back(std::move(mixed));
    }
  }
  return ConvexMixtureTransition{dims, std::move(kernel)};
}

inline TransitionFamily build_truth_transition(const ClassGenSpec& spec,
                                               RngStream& rng) {
  ModelDims dims{spec.S, spec.A, spec.H};
  // just enough common anchor to certify contraction without flattening the
  // agents' control authority
  const Real anchor_mix = spec.contraction ? 0.5 : 0.0;
  const Real lt_target = 0.5 * (spec.lt_min + spec.lt_max);
  switch (spec.family) {
    case FamilyTag::density_free: {
      return DensityFreeTransition{dims, anchored_table(dims, anchor_mix, rng)};
    }
    case FamilyTag::convex_mixture: {
      if (spec.contraction) {
        // Built through the interpolated envelope so that kernel-only
        // perturbations cannot erode the density-free component of weight
        // >= 0.7; members are converted back to their exact convex-mixture
        // form after perturbation.
        ClassGenSpec inner = spec;
        inner.family = FamilyTag::interpolated;
        return build_truth_transition(inner, rng);
      }
      std::vector<Density> kernel;
      kernel.reserve(dims.cells() * spec.S);
      for (std::size_t c = 0; c < dims.cells(); ++c)
        for (std::size_t x = 0; x < spec.S; ++x)
          kernel.emplace_back(rng.dirichlet(spec.S));
      ConvexMixtureTransition t{dims, std::move(kernel)};
      MeanFieldModel probe(spec.S, spec.A, spec.H, Density::uniform(spec.S), t,
                           RewardFamily::zero(dims), "probe");
      Real raw = transition_lipschitz(probe);
      if (raw > 0.0 && lt_target < raw)
        shrink_kernel_columns(t.kernel, spec.S, lt_target / raw);
      return t;
    }
    case FamilyTag::interpolated: {
      InterpolatedTransition t;
      t.w = spec.contraction ? 0.25 : 0.5;
      t.base = DensityFreeTransition{dims, anchored_table(dims, anchor_mix, rng)};
      std::vector<Density> kernel;
      kernel.reserve(dims.cells() * spec.S);
      for (std::size_t i = 0; i < dims.cells() * spec.S; ++i)
        kernel.emplace_back(rng.dirichlet(spec.S));
      t.mixture = ConvexMixtureTransition{dims, std::move(kernel)};
      MeanFieldModel probe(spec.S, spec.A, spec.H, Density::uniform(spec.S), t,
                           RewardFamily::zero(dims), "probe");
      Real raw = transition_lipschitz(probe);
      if (raw > 0.0 && lt_target < raw)
        shrink_kernel_columns(t.mixture.kernel, spec.S, lt_target / raw);
      return t;
    }
    case FamilyTag::low_rank: {
      LowRankTransition t;
      t.dims = dims;
      t.d = spec.low_rank_d;
      const Real c_mix = 0.5;  // mu-sensitivity of the feature map
      t.phi_base.resize(dims.cells() * t.d);
      t.phi_lin.resize(dims.cells() * t.d * spec.S);
      for (std::size_t c = 0; c < dims.cells(); ++c) {
        std::vector<Real> p0 = rng.dirichlet(t.d);
        // column-stochastic linear part keeps phi affine and in-simplex
        std::vector<std::vector<Real>> cols;
        cols.reserve(spec.S);
        for (std::size_t x = 0; x < spec.S; ++x) cols.push_back(rng.dirichlet(t.d));
        for (std::size_t j = 0; j < t.d; ++j) {
          t.phi_base[c * t.d + j] = (1.0 - c_mix) * p0[j];
          for (std::size_t x = 0; x < spec.S; ++x)
            t.phi_lin[(c * t.d + j) * spec.S + x] = c_mix * cols[x][j];
        }
      }
      t.psi.reserve(dims.H * t.d);
      const Real psi_anchor = spec.contraction ? 0.7 : 0.0;
      for (std::size_t h = 0; h < dims.H; ++h) {
        std::vector<Real> anchor = rng.dirichlet(spec.S);
        for (std::size_t j = 0; j < t.d; ++j) {
          std::vector<Real> col = rng.dirichlet(spec.S);
          for (std::size_t sp = 0; sp < spec.S; ++sp)
            col[sp] = psi_anchor * anchor[sp] + (1.0 - psi_anchor) * col[sp];
          t.psi.emplace_back(std::move(col));
        }
      }
      MeanFieldModel probe(spec.S, spec.A, spec.H, Density::uniform(spec.S), t,
                           RewardFamily::zero(dims), "probe");
      Real raw = transition_lipschitz(probe);
      if (raw > 0.0 && lt_target < raw) {
        // Mixing each row of the linear part toward its mean scales the
        // feature's vertex differences, and hence the exact L_T, by `scale`;
        // the constant shift is absorbed by the linear part since the
        // conditioning density always has unit mass.
        Real scale = lt_target / raw;
        for (std::size_t c = 0; c < dims.cells(); ++c) {
          for (std::size_t j = 0; j < t.d; ++j) {
            Real mean = 0.0;
            for (std::size_t x = 0; x < spec.S; ++x)
              mean += t.phi_lin[(c * t.d + j) * spec.S + x] / spec.S;
            for (std::size_t x = 0; x < spec.S; ++x) {
              Real& v = t.phi_lin[(c * t.d + j) * spec.S + x];
              v = (1.0 - scale) * mean + scale * v;
            }
          }
        }
      }
      return t;
    }
  }
  throw ParameterError("build_truth_transition: unknown family");
}

}  // namespace detail

// Draws the true model from the requested family and surrounds it with
// structured in-family perturbations. Exact L_T of every member must land in
// the requested range; the contraction flag additionally requires a certified
// population-operator bound below 1. Fails loudly after bounded retries.
inline ModelClass generate_class(const ClassGenSpec& spec, RngStream& rng) {
  spec.validate();
  if (spec.family == FamilyTag::density_free && spec.lt_min > 0.0)
    throw GenerationError("generate_class: density-free family cannot reach L_T > 0");

  const ModelDims dims{spec.S, spec.A, spec.H};
  const Real inv_h = 1.0 / static_cast<Real>(spec.H);
  constexpr int kMaxRetries = 20;

  for (int attempt = 0; attempt < kMaxRetries; ++attempt) {
    RngStream draw = rng.child("attempt", static_cast<std::uint64_t>(attempt));

    Density mu1 = Density::uniform(spec.S);
    // Rewards are mostly state- and density-driven: action preferences then
    // flow through the member-specific transitions, so perturbed members
    // genuinely disagree about which policy is good. Ranges keep the clipped
    // affine form inside [0, 1/H] for every density.
    // Rewards mix a state-dependent base (navigation stakes), a small
    // action term, and a strong density coupling; the ranges keep the
    // clipped affine form strictly inside [0, 1/H] for every density.
    RewardFamily reward = RewardFamily::zero(dims);
    for (std::size_t h = 0; h < spec.H; ++h)
      for (std::size_t s = 0; s < spec.S; ++s) {
        Real state_base = draw.uniform_in(0.3, 0.6) * inv_h;
        std::vector<Real> density_row(spec.S);
        for (std::size_t x = 0; x < spec.S; ++x)
          density_row[x] = draw.uniform_in(-0.3, 0.3) * inv_h;
        for (std::size_t a = 0; a < spec.A; ++a) {
          const std::size_t c = dims.cell(h, s, a);
          reward.r0[c] = state_base + draw.uniform_in(0.0, 0.1) * inv_h;
          for (std::size_t x = 0; x < spec.S; ++x)
            reward.r1[c * spec.S + x] = density_row[x];
        }
      }

    TransitionFamily truth_t = detail::build_truth_transition(spec, draw);
    const bool convert_back =
        spec.contraction && spec.family == FamilyTag::convex_mixture;
    std::string tag = family_name(spec.family);
    std::vector<MeanFieldModel> models;
    models.reserve(spec.size);
    std::size_t truth_index = draw.uniform_index(spec.size);
    for (std::size_t i = 0; i < spec.size; ++i) {
      TransitionFamily t =
          (i == truth_index)
              ? truth_t
              : detail::perturb_family(truth_t, spec.perturbation, draw);
      if (convert_back)
        t = detail::to_convex_mixture(std::get<InterpolatedTransition>(t));
      models.emplace_back(spec.S, spec.A, spec.H, mu1, std::move(t), reward,
                          tag + "-" + std::to_string(spec.seed) + "-" +
                              std::to_string(i));
    }

    bool ok = true;
    for (const auto& m : models) {
      Real lt = transition_lipschitz(m);
      if (lt < spec.lt_min - 1e-9 || lt > spec.lt_max + 1e-9) {
        ok = false;
        break;
      }
      if (spec.contraction) {
        auto cert = contraction_certificate(m);
        auto rep = lipschitz_constants(m);
        if (!cert.has_value() || *cert >= 0.95 || rep.l_gamma_lower >= 1.0) {
          ok = false;
          break;
        }
      }
    }
    if (!ok) continue;

    ModelClass cls{std::move(models), truth_index, tag, spec.seed, spec};
    cls.validate();
    return cls;
  }
  throw GenerationError("generate_class: constraints infeasible after retries");
}

inline ModelClass generate_class(const ClassGenSpec& spec) {
  RngStream rng(derive_seed(spec.seed, "class-gen"));
  return generate_class(spec, rng);
}

// Pairwise separation diagnostic: entry (i, j) is the maximum, over sampled
// (h, s, a, mu) probes, of the TV distance between the two members'
// conditionals. Probes sweep every cell deterministically and cycle the
// conditioning density through uniform, the vertices, then random draws.
inline Matrix class_separation(const ModelClass& c, std::size_t probe_count,
                               RngStream& rng) {
  if (probe_count == 0) throw ParameterError("class_separation: probe_count >= 1");
  c.validate();
  const auto& m0 = c.models.front();
  const std::size_t cells = m0.H * m0.S * m0.A;
  Matrix sep(c.size(), c.size(), 0.0);
  for (std::size_t t = 0; t < probe_count; ++t) {
    const std::size_t cell = t % cells;
    const std::size_t h = cell / (m0.S * m0.A);
    const std::size_t s = (cell / m0.A) % m0.S;
    const std::size_t a = cell % m0.A;
    const std::size_t cycle = t / cells;
    Density mu = Density::uniform(m0.S);
    if (cycle >= 1 && cycle <= m0.S)
      mu = Density::dirac(m0.S, cycle - 1);
    else if (cycle > m0.S)
      mu = Density::random(m0.S, rng);
    std::vector<Density> cond;
    cond.reserve(c.size());
    for (const auto& m : c.models) cond.push_back(transition_eval(m, h, s, a, mu));
    for (std::size_t i = 0; i < c.size(); ++i)
      for (std::size_t j = i + 1; j < c.size(); ++j) {
        Real d = tv_distance(cond[i], cond[j]);
        if (d > sep(i, j)) {
          sep(i, j) = d;
          sep(j, i) = d;
        }
      }
  }
  return sep;
}

// Mean function mu -> base + lin * mu for the Gaussian-noise family.
struct AffineMeanFn {
  std::vector<Real> base;
  Matrix lin;  // d x |support|; zero-sized means a constant mean

  std::vector<Real> eval(const Density& mu) const {
    std::vector<Real> out = base;
    if (lin.rows() == 0) return out;
    if (lin.rows() != base.size() || lin.cols() != mu.size())
      throw DimensionError("AffineMeanFn: shape mismatch");
    for (std::size_t j = 0; j < lin.rows(); ++j)
      for (std::size_t x = 0; x < lin.cols(); ++x) out[j] += lin(j, x) * mu[x];
    return out;
  }
};

// Finite family of Gaussian mean functions with one shared isotropic scale.
// This is the eluder toolkit's input for the deterministic-transition-with-
// noise example; the learner and planners reject Gaussian families.
struct GaussianMeanClass {
  std::size_t d = 0;
  Real sigma = 1.0;
  std::vector<AffineMeanFn> means;
};

inline GaussianMeanClass gaussian_mean_class(std::size_t d,
                                             std::vector<AffineMeanFn> means,
                                             Real sigma) {
  if (sigma <= 0.0) throw ParameterError("gaussian_mean_class: sigma must be > 0");
  if (d == 0) throw ParameterError("gaussian_mean_class: d must be >= 1");
  for (const auto& f : means)
    if (f.base.size() != d)
      throw DimensionError("gaussian_mean_class: mean dimension mismatch");
  return GaussianMeanClass{d, sigma, std::move(means)};
}

inline json class_gen_spec_to_json(const ClassGenSpec& s) {
  return json{{"S", s.S},
              {"A", s.A},
              {"H", s.H},
              {"size", s.size},
              {"family", family_name(s.family)},
              {"perturbation", s.perturbation},
              {"lt_min", s.lt_min},
              {"lt_max", s.lt_max},
              {"contraction", s.contraction},
              {"seed", s.seed},
              {"low_rank_d", s.low_rank_d}};
}

inline ClassGenSpec class_gen_spec_from_json(const json& j) {
  ClassGenSpec s;
  s.S = j.at("S").get<std::size_t>();
  s.A = j.at("A").get<std::size_t>();
  s.H = j.at("H").get<std::size_t>();
  s.size = j.at("size").get<std::size_t>();
  s.family = family_from_name(j.at("family").get<std::string>());
  if (j.contains("perturbation")) s.perturbation = j["perturbation"].get<Real>();
  if (j.contains("lt_min")) s.lt_min = j["lt_min"].get<Real>();
  if (j.contains("lt_max")) s.lt_max = j["lt_max"].get<Real>();
  if (j.contains("contraction")) s.contraction = j["contraction"].get<bool>();
  if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("low_rank_d")) s.low_rank_d = j["low_rank_d"].get<std::size_t>();
  s.validate();
  return s;
}

inline json class_to_json(const ModelClass& c) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["family"] = c.family;
  j["seed"] = c.seed;
  j["truth_index"] = c.truth_index;
  j["spec"] = c.gen_spec.has_value() ? class_gen_spec_to_json(*c.gen_spec)
                                     : json(nullptr);
  json models = json::array();
  for (const auto& m : c.models) models.push_back(model_to_json(m));
  j["models"] = models;
  return j;
}

inline ModelClass class_from_json(const json& j) {
  check_schema(j, "model class");
  ModelClass c;
  c.family = j.at("family").get<std::string>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.truth_index = j.at("truth_index").get<std::size_t>();
  if (j.contains("spec") && !j["spec"].is_null())
    c.gen_spec = class_gen_spec_from_json(j["spec"]);
  for (const auto& mj : j.at("models")) c.models.push_back(model_from_json(mj));
  c.validate();
  return c;
}

}  // namespace mfrl
