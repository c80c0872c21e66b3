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
#include <vector>

#include "mfrl/density.hpp"
#include "mfrl/errors.hpp"
#include "mfrl/matrix.hpp"

namespace mfrl {

// Non-stationary Markov policy: one row-stochastic S x A matrix per step.
class Policy {
 public:
  // Empty placeholder; result structs default-construct before assignment.
  Policy() : s_(0), a_(0) {}

  Policy(std::size_t horizon, std::size_t states, std::size_t actions,
         std::vector<Matrix> steps)
      : s_(states), a_(actions), steps_(std::move(steps)) {
    if (steps_.size() != horizon)
      throw DimensionError("Policy: step count does not match horizon");
    for (auto& m : steps_) {
      if (m.rows() != s_ || m.cols() != a_)
        throw DimensionError("Policy: step matrix shape mismatch");
      for (std::size_t s = 0; s < s_; ++s) normalize_row(m.row(s));
    }
  }

  static Policy uniform(std::size_t horizon, std::size_t states,
                        std::size_t actions) {
    std::vector<Matrix> steps(horizon,
                              Matrix(states, actions, 1.0 / static_cast<Real>(actions)));
    return Policy(horizon, states, actions, std::move(steps));
  }

  // Deterministic policy from an action table, actions[h][s].
  static Policy deterministic(std::size_t horizon, std::size_t states,
                              std::size_t actions,
                              const std::vector<std::vector<std::size_t>>& table) {
    if (table.size() != horizon)
      throw DimensionError("Policy::deterministic: table horizon mismatch");
    std::vector<Matrix> steps;
    steps.reserve(horizon);
    for (std::size_t h = 0; h < horizon; ++h) {
      Matrix m(states, actions, 0.0);
      for (std::size_t s = 0; s < states; ++s) m(s, table[h].at(s)) = 1.0;
      steps.push_back(std::move(m));
    }
    return Policy(horizon, states, actions, std::move(steps));
  }

  static Policy random(std::size_t horizon, std::size_t states,
                       std::size_t actions, RngStream& rng) {
    std::vector<Matrix> steps;
    steps.reserve(horizon);
    for (std::size_t h = 0; h < horizon; ++h) {
      Matrix m(states, actions);
      for (std::size_t s = 0; s < states; ++s) {
        auto row = rng.dirichlet(actions);
        for (std::size_t a = 0; a < actions; ++a) m(s, a) = row[a];
      }
      steps.push_back(std::move(m));
    }
    return Policy(horizon, states, actions, std::move(steps));
  }

  // Convex mixture (1 - w) * a + w * b, entrywise.
  static Policy mix(const Policy& a, const Policy& b, Real w) {
    if (a.horizon() != b.horizon() || a.states() != b.states() ||
        a.actions() != b.actions())
      throw DimensionError("Policy::mix: shape mismatch");
    std::vector<Matrix> steps;
    steps.reserve(a.horizon());
    for (std::size_t h = 0; h < a.horizon(); ++h) {
      Matrix m(a.states(), a.actions());
      for (std::size_t s = 0; s < a.states(); ++s)
        for (std::size_t act = 0; act < a.actions(); ++act)
          m(s, act) = (1.0 - w) * a.step(h)(s, act) + w * b.step(h)(s, act);
      steps.push_back(std::move(m));
    }
    return Policy(a.horizon(), a.states(), a.actions(), std::move(steps));
  }

  std::size_t horizon() const { return steps_.size(); }
  std::size_t states() const { return s_; }
  std::size_t actions() const { return a_; }

  const Matrix& step(std::size_t h) const { return steps_.at(h); }

  // Hash of the entries quantized to a 1e-12 grid, used as a cache key so that
  // density flows are reused exactly across repeated (model, policy) pairs.
  std::uint64_t fingerprint() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix_u64 = [&h](std::uint64_t v) {
      for (int i = 0; i < 8; ++i) {
        h ^= static_cast<unsigned char>(v >> (8 * i));
        h *= 1099511628211ULL;
      }
    };
    mix_u64(steps_.size());
    mix_u64(s_);
    mix_u64(a_);
    for (const auto& m : steps_)
      for (Real v : m.data())
        mix_u64(static_cast<std::uint64_t>(std::llround(v * 1e12)));
    return h;
  }

  bool operator==(const Policy& other) const {
    if (s_ != other.s_ || a_ != other.a_ || steps_.size() != other.steps_.size())
      return false;
    for (std::size_t h = 0; h < steps_.size(); ++h)
      if (steps_[h].data() != other.steps_[h].data()) return false;
    return true;
  }

 private:
  static void normalize_row(std::span<Real> row) {
    Real sum = 0.0;
    for (Real& v : row) {
      if (v < -Density::kNegativeTolerance)
        throw NumericError("Policy: negative probability beyond tolerance");
      if (v < 0.0) v = 0.0;
      sum += v;
    }
    if (std::abs(sum - 1.0) > Density::kMassTolerance)
      throw NumericError("Policy: row mass deviates from 1 beyond 1e-6");
    if (std::abs(sum - 1.0) > Density::kRenormSkip)
      for (Real& v : row) v /= sum;
  }

  std::size_t s_, a_;
  std::vector<Matrix> steps_;
};

}  // namespace mfrl
