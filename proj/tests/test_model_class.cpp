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

#include "fixtures.hpp"

using namespace mfrl;

TEST(GenerateClass, SingletonIsJustTheTruth) {
  ClassGenSpec spec;
  spec.size = 1;
  spec.seed = 3;
  ModelClass cls = generate_class(spec);
  EXPECT_EQ(cls.size(), 1u);
  EXPECT_EQ(cls.truth_index, 0u);
}

TEST(GenerateClass, ZeroPerturbationGivesIdenticalModels) {
  ClassGenSpec spec;
  spec.family = FamilyTag::density_free;
  spec.perturbation = 0.0;
  spec.size = 4;
  spec.seed = 5;
  ModelClass cls = generate_class(spec);
  json truth = model_to_json(cls.truth());
  for (const auto& m : cls.models) {
    json j = model_to_json(m);
    j["id"] = truth["id"];
    EXPECT_EQ(j.dump(), truth.dump());
  }
}

TEST(GenerateClass, SameSeedIsBitIdentical) {
  ClassGenSpec spec;
  spec.size = 8;
  spec.seed = 42;
  std::string a = canonical_dump(class_to_json(generate_class(spec)));
  std::string b = canonical_dump(class_to_json(generate_class(spec)));
  EXPECT_EQ(a, b);
}

TEST(GenerateClass, HitsLipschitzTargetRange) {
  ClassGenSpec spec;
  spec.size = 4;
  spec.lt_min = 0.2;
  spec.lt_max = 0.4;
  spec.seed = 7;
  ModelClass cls = generate_class(spec);
  for (const auto& m : cls.models) {
    Real lt = transition_lipschitz(m);
    EXPECT_GE(lt, 0.2 - 1e-9);
    EXPECT_LE(lt, 0.4 + 1e-9);
  }
}

TEST(GenerateClass, DensityFreeCannotReachPositiveTarget) {
  ClassGenSpec spec;
  spec.family = FamilyTag::density_free;
  spec.lt_min = 0.5;
  EXPECT_THROW(generate_class(spec), GenerationError);
}

TEST(GenerateClass, ContractionFlagCertifies) {
  ClassGenSpec spec;
  spec.size = 4;
  spec.contraction = true;
  spec.lt_max = 0.3;
  spec.seed = 11;
  ModelClass cls = generate_class(spec);
  for (const auto& m : cls.models) {
    auto cert = contraction_certificate(m);
    ASSERT_TRUE(cert.has_value());
    EXPECT_LT(*cert, 0.95);
    EXPECT_LT(lipschitz_constants(m).l_gamma_lower, 1.0);
  }
}

TEST(GenerateClass, LowRankAndInterpolatedFamiliesValidate) {
  for (FamilyTag f : {FamilyTag::low_rank, FamilyTag::interpolated}) {
    ClassGenSpec spec;
    spec.family = f;
    spec.size = 3;
    spec.seed = 13;
    ModelClass cls = generate_class(spec);
    cls.validate();
    // every conditional is a valid density at random probes
    RngStream rng(19);
    for (const auto& m : cls.models)
      for (int i = 0; i < 10; ++i) {
        Density mu = Density::random(spec.S, rng);
        Density out = transition_eval(m, rng.uniform_index(spec.H),
                                      rng.uniform_index(spec.S),
                                      rng.uniform_index(spec.A), mu);
        Real sum = 0.0;
        for (Real v : out) sum += v;
        EXPECT_NEAR(sum, 1.0, 1e-12);
      }
  }
}

TEST(ClassSeparation, IdenticalModelsGiveZeroMatrix) {
  ClassGenSpec spec;
  spec.family = FamilyTag::density_free;
  spec.perturbation = 0.0;
  spec.size = 3;
  spec.seed = 17;
  ModelClass cls = generate_class(spec);
  RngStream rng(20);
  Matrix sep = class_separation(cls, 64, rng);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(sep(i, j), 0.0);
}

TEST(ClassSeparation, SingleCellGapIsRecovered) {
  // two density-free models differing only at (h=1, s=0, a=1) by TV gap g
  ModelDims dims{2, 2, 2};
  auto next_a = [](std::size_t, std::size_t, std::size_t) {
    return Density(std::vector<Real>{0.5, 0.5});
  };
  auto m_a = fixtures::density_free_model(2, 2, 2, next_a,
                                          RewardFamily::zero(dims),
                                          Density::uniform(2), "a");
  auto next_b = [](std::size_t h, std::size_t s, std::size_t a) {
    if (h == 1 && s == 0 && a == 1) return Density(std::vector<Real>{0.9, 0.1});
    return Density(std::vector<Real>{0.5, 0.5});
  };
  auto m_b = fixtures::density_free_model(2, 2, 2, next_b,
                                          RewardFamily::zero(dims),
                                          Density::uniform(2), "b");
  ModelClass cls{{m_a, m_b}, 0, "density_free", 0, std::nullopt};
  RngStream rng(21);
  Matrix sep = class_separation(cls, dims.cells(), rng);
  EXPECT_NEAR(sep(0, 1), 0.4, 1e-12);
  EXPECT_DOUBLE_EQ(sep(0, 1), sep(1, 0));
  EXPECT_DOUBLE_EQ(sep(0, 0), 0.0);
}

TEST(ClassSeparation, SymmetricOutput) {
  ModelClass cls = fixtures::random_pair(3, 2, 2, 0.4, false, 23);
  RngStream rng(22);
  Matrix sep = class_separation(cls, 100, rng);
  for (std::size_t i = 0; i < cls.size(); ++i)
    for (std::size_t j = 0; j < cls.size(); ++j)
      EXPECT_DOUBLE_EQ(sep(i, j), sep(j, i));
}

TEST(GaussianMeanClass, ParameterValidation) {
  EXPECT_THROW(gaussian_mean_class(2, {}, 0.0), ParameterError);
  EXPECT_THROW(gaussian_mean_class(2, {}, -1.0), ParameterError);
  auto cls = gaussian_mean_class(2, {AffineMeanFn{{0.0, 0.0}, Matrix()}}, 1.0);
  EXPECT_EQ(cls.means.size(), 1u);
}

TEST(GaussianMeanClass, ConstantMeanDistances) {
  const Real sigma = 0.5;
  AffineMeanFn f0{{0.0, 0.0}, Matrix()};
  AffineMeanFn f1{{0.0, 0.0}, Matrix()};
  AffineMeanFn f2{{4.0 * sigma, 0.0}, Matrix()};
  auto cls = gaussian_mean_class(2, {f0, f1, f2}, sigma);
  std::vector<Density> probes{Density::uniform(2), Density::dirac(2, 0)};
  auto p = EluderProblem::from_gaussian(cls, probes, 1.0, 0.05);
  for (std::size_t x = 0; x < probes.size(); ++x) {
    EXPECT_DOUBLE_EQ(p.pair_distance(0, 1, x), 0.0);
    EXPECT_NEAR(p.pair_distance(0, 2, x), std::sqrt(1.0 - std::exp(-2.0)), 1e-12);
  }
}

TEST(Serialization, ModelRoundTripsBitExactly) {
  for (FamilyTag f : {FamilyTag::density_free, FamilyTag::convex_mixture,
                      FamilyTag::interpolated, FamilyTag::low_rank}) {
    auto m = fixtures::random_model(3, 2, 2, f, 29);
    std::string once = canonical_dump(model_to_json(m));
    std::string twice =
        canonical_dump(model_to_json(model_from_json(json::parse(once))));
    EXPECT_EQ(once, twice);
  }
}

TEST(Serialization, ClassRoundTripsBitExactly) {
  ClassGenSpec spec;
  spec.size = 4;
  spec.seed = 31;
  ModelClass cls = generate_class(spec);
  std::string once = canonical_dump(class_to_json(cls));
  std::string twice =
      canonical_dump(class_to_json(class_from_json(json::parse(once))));
  EXPECT_EQ(once, twice);
}

TEST(Serialization, RejectsUnknownSchema) {
  ClassGenSpec spec;
  spec.size = 2;
  spec.seed = 37;
  json j = class_to_json(generate_class(spec));
  j["schema_version"] = 99;
  EXPECT_THROW(class_from_json(j), SchemaError);
}

TEST(Serialization, PolicyRoundTrip) {
  RngStream rng(23);
  Policy pi = Policy::random(3, 2, 4, rng);
  Policy back = policy_from_json(policy_to_json(pi));
  EXPECT_TRUE(pi == back);
}
