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
#include <cstddef>
#include <span>
#include <vector>

#include "mfrl/errors.hpp"
#include "mfrl/rng.hpp"

namespace mfrl {

// Probability vector over states. Renormalizes on construction; construction
// fails if the raw mass deviates from 1 by more than 1e-6, so that rounding
// drift and genuine bugs stay distinguishable.
class Density {
 public:
  static constexpr Real kMassTolerance = 1e-6;
  static constexpr Real kNegativeTolerance = 1e-12;
  // below this drift the mass is left untouched, which makes construction
  // idempotent and serialization round-trips bit-exact
  static constexpr Real kRenormSkip = 1e-13;

  explicit Density(std::vector<Real> probs) : p_(std::move(probs)) {
    if (p_.empty()) throw DimensionError("Density: empty support");
    Real sum = 0.0;
    for (Real& v : p_) {
      if (v < -kNegativeTolerance)
        throw NumericError("Density: negative entry beyond tolerance");
      if (v < 0.0) v = 0.0;
      sum += v;
    }
    if (std::abs(sum - 1.0) > kMassTolerance)
      throw NumericError("Density: raw mass deviates from 1 beyond 1e-6");
    if (std::abs(sum - 1.0) > kRenormSkip)
      for (Real& v : p_) v /= sum;
  }

  static Density dirac(std::size_t n, std::size_t at) {
    std::vector<Real> v(n, 0.0);
    v.at(at) = 1.0;
    return Density(std::move(v));
  }

  static Density uniform(std::size_t n) {
    return Density(std::vector<Real>(n, 1.0 / static_cast<Real>(n)));
  }

  static Density random(std::size_t n, RngStream& rng) {
    return Density(rng.dirichlet(n));
  }

  std::size_t size() const { return p_.size(); }
  Real operator[](std::size_t i) const { return p_[i]; }
  const std::vector<Real>& probs() const { return p_; }
  std::span<const Real> span() const { return {p_.data(), p_.size()}; }

  auto begin() const { return p_.begin(); }
  auto end() const { return p_.end(); }

 private:
  std::vector<Real> p_;
};

// Per-step sequence of population densities, one per h = 1..H.
using DensityFlow = std::vector<Density>;

inline Real tv_distance(const Density& p, const Density& q) {
  if (p.size() != q.size()) throw DimensionError("tv_distance: length mismatch");
  Real acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) acc += std::abs(p[i] - q[i]);
  return 0.5 * acc;
}

inline Real hellinger_distance(const Density& p, const Density& q) {
  if (p.size() != q.size())
    throw DimensionError("hellinger_distance: length mismatch");
  Real bc = 0.0;  // Bhattacharyya coefficient
  for (std::size_t i = 0; i < p.size(); ++i) bc += std::sqrt(p[i] * q[i]);
  Real inner = 1.0 - bc;
  if (inner < 0.0) inner = 0.0;  // rounding can push bc slightly past 1
  return std::sqrt(inner);
}

// Hellinger distance between two Gaussians with means f1, f2 and shared
// isotropic covariance sigma^2 I:  H^2 = 1 - exp(-||f1 - f2||^2 / (8 sigma^2)).
inline Real hellinger_distance_gaussian(std::span<const Real> f1,
                                        std::span<const Real> f2, Real sigma) {
  if (f1.size() != f2.size())
    throw DimensionError("hellinger_distance_gaussian: length mismatch");
  if (sigma <= 0.0) throw ParameterError("hellinger_distance_gaussian: sigma <= 0");
  Real sq = 0.0;
  for (std::size_t i = 0; i < f1.size(); ++i) {
    Real d = f1[i] - f2[i];
    sq += d * d;
  }
  return std::sqrt(1.0 - std::exp(-sq / (8.0 * sigma * sigma)));
}

}  // namespace mfrl
