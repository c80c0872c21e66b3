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

#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace mfrl;

TEST(Density, RenormalizesOnConstruction) {
  Density d(std::vector<Real>{0.5000001, 0.4999999 + 5e-7});
  Real sum = 0.0;
  for (Real v : d) sum += v;
  EXPECT_NEAR(sum, 1.0, 1e-15);
}

TEST(Density, RejectsMassDriftBeyondTolerance) {
  EXPECT_THROW(Density(std::vector<Real>{0.5, 0.6}), NumericError);
  EXPECT_THROW(Density(std::vector<Real>{0.9, 0.2}), NumericError);
}

TEST(Density, RejectsNegativeEntries) {
  EXPECT_THROW(Density(std::vector<Real>{1.1, -0.1}), NumericError);
  // tiny negatives from rounding are clamped
  Density d(std::vector<Real>{1.0 + 5e-13, -5e-13});
  EXPECT_EQ(d[1], 0.0);
}

TEST(TvDistance, DisjointSupportsGiveOne) {
  EXPECT_DOUBLE_EQ(tv_distance(Density::dirac(2, 0), Density::dirac(2, 1)), 1.0);
}

TEST(TvDistance, IdentityGivesZero) {
  Density p(std::vector<Real>{0.3, 0.2, 0.5});
  EXPECT_DOUBLE_EQ(tv_distance(p, p), 0.0);
}

TEST(TvDistance, HalfL1Example) {
  Density p(std::vector<Real>{0.6, 0.4});
  Density q(std::vector<Real>{0.5, 0.5});
  EXPECT_NEAR(tv_distance(p, q), 0.1, 1e-15);
}

TEST(TvDistance, LengthMismatchThrows) {
  EXPECT_THROW(tv_distance(Density::uniform(2), Density::uniform(3)),
               DimensionError);
}

TEST(TvDistance, MatchesEventEnumerationOracle) {
  RngStream rng(11);
  for (int i = 0; i < 50; ++i) {
    std::size_t n = 2 + rng.uniform_index(6);
    auto [p, q] = oracles::random_density_pair(n, rng);
    EXPECT_NEAR(tv_distance(p, q), oracles::tv_by_event_enumeration(p, q), 1e-12);
  }
}

TEST(HellingerDistance, IdentityAndDisjoint) {
  Density p(std::vector<Real>{0.25, 0.75});
  EXPECT_DOUBLE_EQ(hellinger_distance(p, p), 0.0);
  EXPECT_DOUBLE_EQ(hellinger_distance(Density::dirac(2, 0), Density::dirac(2, 1)),
                   1.0);
}

TEST(HellingerDistance, GaussianOverloadIdentity) {
  // means at distance 2 sigma sqrt(2): squared Mahalanobis distance is 8,
  // so H = sqrt(1 - exp(-1))
  const Real sigma = 0.7;
  std::vector<Real> f1{0.0, 0.0};
  std::vector<Real> f2{2.0 * sigma * std::sqrt(2.0), 0.0};
  Real h = hellinger_distance_gaussian(f1, f2, sigma);
  EXPECT_NEAR(h, std::sqrt(1.0 - std::exp(-1.0)), 1e-12);
  EXPECT_NEAR(h, 0.7951, 5e-5);
  EXPECT_THROW(hellinger_distance_gaussian(f1, f2, 0.0), ParameterError);
}

TEST(DistanceInequality, SqrtTwoHellingerDominatesTv) {
  RngStream rng(42);
  for (int i = 0; i < 1000; ++i) {
    std::size_t n = 2 + rng.uniform_index(9);
    auto [p, q] = oracles::random_density_pair(n, rng);
    Real tv = tv_distance(p, q);
    Real h = hellinger_distance(p, q);
    EXPECT_GE(std::sqrt(2.0) * h - tv, -1e-12);
  }
}

TEST(Policy, RowValidationAndFingerprint) {
  EXPECT_THROW(Policy(1, 1, 2, {Matrix(1, 2, std::vector<Real>{0.6, 0.6})}),
               NumericError);
  Policy a = Policy::uniform(2, 2, 2);
  Policy b = Policy::uniform(2, 2, 2);
  EXPECT_EQ(a.fingerprint(), b.fingerprint());
  RngStream rng(3);
  Policy c = Policy::random(2, 2, 2, rng);
  EXPECT_NE(a.fingerprint(), c.fingerprint());
}

TEST(Policy, MixStaysStochastic) {
  RngStream rng(5);
  Policy a = Policy::random(3, 2, 3, rng);
  Policy b = Policy::random(3, 2, 3, rng);
  Policy m = Policy::mix(a, b, 0.3);
  for (std::size_t h = 0; h < 3; ++h)
    for (std::size_t s = 0; s < 2; ++s) {
      Real sum = 0.0;
      for (std::size_t act = 0; act < 3; ++act) sum += m.step(h)(s, act);
      EXPECT_NEAR(sum, 1.0, 1e-12);
    }
}

TEST(SimplexProjection, KnownValues) {
  auto p = project_to_simplex(std::vector<Real>{1.0, 0.5});
  ASSERT_EQ(p.size(), 2u);
  EXPECT_NEAR(p[0], 0.75, 1e-15);
  EXPECT_NEAR(p[1], 0.25, 1e-15);
  auto q = project_to_simplex(std::vector<Real>{5.0, -1.0});
  EXPECT_NEAR(q[0], 1.0, 1e-15);
  EXPECT_NEAR(q[1], 0.0, 1e-15);
}

TEST(SimplexProjection, FixedPointOnSimplex) {
  RngStream rng(8);
  for (int i = 0; i < 20; ++i) {
    auto v = rng.dirichlet(4);
    auto p = project_to_simplex(v);
    for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(p[k], v[k], 1e-12);
  }
}

TEST(Rng, ChildStreamsAreStableAndNamed) {
  RngStream a(123);
  RngStream b(123);
  a.uniform();  // consuming the parent must not move the children
  EXPECT_EQ(a.child("trajectory").seed(), b.child("trajectory").seed());
  EXPECT_NE(b.child("trajectory").seed(), b.child("model-pick").seed());
  EXPECT_NE(b.child("trajectory", 0).seed(), b.child("trajectory", 1).seed());
}

TEST(Rng, CategoricalMatchesWeights) {
  RngStream rng(99);
  std::vector<Real> w{0.2, 0.5, 0.3};
  std::vector<int> counts(3, 0);
  const int n = 200000;
  for (int i = 0; i < n; ++i) counts[rng.categorical(w)] += 1;
  for (int k = 0; k < 3; ++k) {
    Real freq = counts[k] / static_cast<Real>(n);
    Real se = std::sqrt(w[k] * (1 - w[k]) / n);
    EXPECT_NEAR(freq, w[k], 4 * se);
  }
}
