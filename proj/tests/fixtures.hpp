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
// Hand-built tiny models shared by the unit and acceptance suites.

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mfrl/mfrl.hpp"

namespace fixtures {

using mfrl::Density;
using mfrl::MeanFieldModel;
using mfrl::ModelDims;
using mfrl::Real;

// Density-free model with per-cell next-state law given by `next(h, s, a)`.
inline MeanFieldModel density_free_model(
    std::size_t S, std::size_t A, std::size_t H,
    const std::function<Density(std::size_t, std::size_t, std::size_t)>& next,
    mfrl::RewardFamily reward, Density mu1, std::string id = "df") {
  ModelDims dims{S, A, H};
  std::vector<Density> table;
  table.reserve(dims.cells());
  for (std::size_t h = 0; h < H; ++h)
    for (std::size_t s = 0; s < S; ++s)
      for (std::size_t a = 0; a < A; ++a) table.push_back(next(h, s, a));
  return MeanFieldModel(S, A, H, std::move(mu1),
                        mfrl::DensityFreeTransition{dims, std::move(table)},
                        std::move(reward), std::move(id));
}

inline MeanFieldModel identity_model(std::size_t S, std::size_t A, std::size_t H,
                                     mfrl::RewardFamily reward, Density mu1) {
  return density_free_model(
      S, A, H,
      [S](std::size_t, std::size_t s, std::size_t) { return Density::dirac(S, s); },
      std::move(reward), std::move(mu1), "identity");
}

inline MeanFieldModel swap_model(std::size_t A, std::size_t H,
                                 mfrl::RewardFamily reward, Density mu1) {
  return density_free_model(
      2, A, H,
      [](std::size_t, std::size_t s, std::size_t) { return Density::dirac(2, 1 - s); },
      std::move(reward), std::move(mu1), "swap");
}

// Convex mixture whose every column is the Dirac at its own index, so the
// conditional always reproduces the conditioning density.
inline MeanFieldModel echo_mixture_model(std::size_t S, std::size_t A,
                                         std::size_t H, mfrl::RewardFamily reward,
                                         Density mu1) {
  ModelDims dims{S, A, H};
  std::vector<Density> kernel;
  kernel.reserve(dims.cells() * S);
  for (std::size_t c = 0; c < dims.cells(); ++c)
    for (std::size_t x = 0; x < S; ++x) kernel.push_back(Density::dirac(S, x));
  return MeanFieldModel(S, A, H, std::move(mu1),
                        mfrl::ConvexMixtureTransition{dims, std::move(kernel)},
                        std::move(reward), "echo");
}

// Random model drawn through the class generator (size-1 class).
inline MeanFieldModel random_model(std::size_t S, std::size_t A, std::size_t H,
                                   mfrl::FamilyTag family, std::uint64_t seed) {
  mfrl::ClassGenSpec spec;
  spec.S = S;
  spec.A = A;
  spec.H = H;
  spec.size = 1;
  spec.family = family;
  spec.seed = seed;
  return mfrl::generate_class(spec).models.front();
}

inline mfrl::ModelClass random_pair(std::size_t S, std::size_t A, std::size_t H,
                                    Real perturbation, bool contraction,
                                    std::uint64_t seed) {
  mfrl::ClassGenSpec spec;
  spec.S = S;
  spec.A = A;
  spec.H = H;
  spec.size = 2;
  spec.family = mfrl::FamilyTag::convex_mixture;
  spec.perturbation = perturbation;
  spec.contraction = contraction;
  if (contraction) spec.lt_max = 0.3;
  spec.seed = seed;
  return mfrl::generate_class(spec);
}

}  // namespace fixtures
