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
#include <span>
#include <string_view>
#include <vector>

#include "mfrl/errors.hpp"

namespace mfrl {

using Real = double;

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-based child-seed derivation: a master seed plus a stream name plus a
// counter always map to the same child seed, independent of how many draws the
// parent stream has consumed. This is the whole seeding contract of the
// experiment harness; alternate implementations can reproduce the streams from
// this function alone.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view stream,
                                 std::uint64_t counter = 0) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a 64-bit offset basis
  auto mix_byte = [&h](unsigned char b) {
    h ^= b;
    h *= 1099511628211ULL;
  };
  for (char c : stream) mix_byte(static_cast<unsigned char>(c));
  for (int i = 0; i < 8; ++i) mix_byte(static_cast<unsigned char>(master >> (8 * i)));
  for (int i = 0; i < 8; ++i) mix_byte(static_cast<unsigned char>(counter >> (8 * i)));
  std::uint64_t s = h;
  return splitmix64(s);
}

// Deterministic random stream. All distributions are implemented by hand on
// top of the raw 64-bit output so that byte-identical replay does not depend
// on the standard library's distribution internals.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : seed_(seed), state_(seed) {}

  std::uint64_t seed() const { return seed_; }

  RngStream child(std::string_view stream, std::uint64_t counter = 0) const {
    return RngStream(derive_seed(seed_, stream, counter));
  }

  std::uint64_t next_u64() { return splitmix64(state_); }

  // Uniform in [0, 1).
  Real uniform() { return static_cast<Real>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n).
  std::size_t uniform_index(std::size_t n) {
    if (n == 0) throw ParameterError("uniform_index: n must be positive");
    return static_cast<std::size_t>(next_u64() % n);
  }

  Real uniform_in(Real lo, Real hi) { return lo + (hi - lo) * uniform(); }

  Real exponential() {
    Real u = uniform();
    return -std::log1p(-u);
  }

  // Exact categorical draw by CDF walk; weights must be a distribution.
  std::size_t categorical(std::span<const Real> weights) {
    Real u = uniform();
    Real acc = 0.0;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
      acc += weights[i];
      if (u < acc) return i;
    }
    return weights.empty() ? 0 : weights.size() - 1;
  }

  // Dirichlet(1, ..., 1): uniform on the simplex.
  std::vector<Real> dirichlet(std::size_t n) {
    std::vector<Real> v(n);
    Real sum = 0.0;
    for (auto& x : v) {
      x = exponential();
      sum += x;
    }
    if (sum <= 0.0) sum = 1.0;
    for (auto& x : v) x /= sum;
    return v;
  }

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
};

}  // namespace mfrl
