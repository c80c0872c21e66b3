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

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mfrl/errors.hpp"
#include "mfrl/model.hpp"
#include "mfrl/policy.hpp"

namespace mfrl {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kToolVersion = "0.1.0";

// Canonical text form: sorted keys (nlohmann default), two-space indent,
// trailing newline, shortest round-trip reals. Byte-stable across runs.
inline std::string canonical_dump(const json& j) { return j.dump(2) + "\n"; }

inline void check_schema(const json& j, const std::string& what) {
  if (!j.contains("schema_version") || !j["schema_version"].is_number_integer())
    throw SchemaError(what + ": missing schema_version");
  if (j["schema_version"].get<int>() != kSchemaVersion)
    throw SchemaError(what + ": unknown schema_version " +
                      j["schema_version"].dump());
}

namespace detail {

inline json densities_to_json(const std::vector<Density>& ds) {
  json arr = json::array();
  for (const auto& d : ds)
    for (Real v : d.probs()) arr.push_back(v);
  return arr;
}

inline std::vector<Density> densities_from_json(const json& arr, std::size_t count,
                                                std::size_t support,
                                                const std::string& what) {
  if (!arr.is_array() || arr.size() != count * support)
    throw SchemaError(what + ": flat table has wrong length");
  std::vector<Density> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<Real> p(support);
    for (std::size_t k = 0; k < support; ++k)
      p[k] = arr[i * support + k].get<Real>();
    out.emplace_back(std::move(p));
  }
  return out;
}

inline std::vector<Real> reals_from_json(const json& arr, std::size_t count,
                                         const std::string& what) {
  if (!arr.is_array() || arr.size() != count)
    throw SchemaError(what + ": flat array has wrong length");
  std::vector<Real> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = arr[i].get<Real>();
  return out;
}

}  // namespace detail

inline json transition_to_json(const TransitionFamily& t) {
  json j;
  if (const auto* df = std::get_if<DensityFreeTransition>(&t)) {
    j["variant"] = "density_free";
    j["table"] = detail::densities_to_json(df->table);
  } else if (const auto* cm = std::get_if<ConvexMixtureTransition>(&t)) {
    j["variant"] = "convex_mixture";
    j["kernel"] = detail::densities_to_json(cm->kernel);
  } else if (const auto* ip = std::get_if<InterpolatedTransition>(&t)) {
    j["variant"] = "interpolated";
    j["w"] = ip->w;
    j["base"] = detail::densities_to_json(ip->base.table);
    j["kernel"] = detail::densities_to_json(ip->mixture.kernel);
  } else if (const auto* lr = std::get_if<LowRankTransition>(&t)) {
    j["variant"] = "low_rank";
    j["d"] = lr->d;
    j["phi_base"] = lr->phi_base;
    j["phi_lin"] = lr->phi_lin;
    j["psi"] = detail::densities_to_json(lr->psi);
  } else if (const auto* g = std::get_if<GaussianMeanTransition>(&t)) {
    j["variant"] = "gaussian_mean";
    j["d"] = g->d;
    j["sigma"] = g->sigma;
    j["mean_base"] = g->mean_base;
    j["mean_lin"] = g->mean_lin;
  }
  return j;
}

inline TransitionFamily transition_from_json(const json& j, const ModelDims& dims) {
  const std::string variant = j.at("variant").get<std::string>();
  if (variant == "density_free") {
    DensityFreeTransition t{dims, detail::densities_from_json(
                                      j.at("table"), dims.cells(), dims.S,
                                      "density_free.table")};
    t.validate();
    return t;
  }
  if (variant == "convex_mixture") {
    ConvexMixtureTransition t{dims, detail::densities_from_json(
                                        j.at("kernel"), dims.cells() * dims.S,
                                        dims.S, "convex_mixture.kernel")};
    t.validate();
    return t;
  }
  if (variant == "interpolated") {
    InterpolatedTransition t;
    t.w = j.at("w").get<Real>();
    t.base = DensityFreeTransition{
        dims, detail::densities_from_json(j.at("base"), dims.cells(), dims.S,
                                          "interpolated.base")};
    t.mixture = ConvexMixtureTransition{
        dims, detail::densities_from_json(j.at("kernel"), dims.cells() * dims.S,
                                          dims.S, "interpolated.kernel")};
    t.validate();
    return t;
  }
  if (variant == "low_rank") {
    LowRankTransition t;
    t.dims = dims;
    t.d = j.at("d").get<std::size_t>();
    t.phi_base =
        detail::reals_from_json(j.at("phi_base"), dims.cells() * t.d, "low_rank.phi_base");
    t.phi_lin = detail::reals_from_json(j.at("phi_lin"), dims.cells() * t.d * dims.S,
                                        "low_rank.phi_lin");
    t.psi = detail::densities_from_json(j.at("psi"), dims.H * t.d, dims.S,
                                        "low_rank.psi");
    t.validate();
    return t;
  }
  if (variant == "gaussian_mean") {
    GaussianMeanTransition t;
    t.dims = dims;
    t.d = j.at("d").get<std::size_t>();
    t.sigma = j.at("sigma").get<Real>();
    t.mean_base = detail::reals_from_json(j.at("mean_base"), dims.cells() * t.d,
                                          "gaussian_mean.mean_base");
    t.mean_lin = detail::reals_from_json(j.at("mean_lin"), dims.cells() * t.d * dims.S,
                                         "gaussian_mean.mean_lin");
    t.validate();
    return t;
  }
  throw SchemaError("transition_from_json: unknown variant '" + variant + "'");
}

inline json model_to_json(const MeanFieldModel& m) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["S"] = m.S;
  j["A"] = m.A;
  j["H"] = m.H;
  j["id"] = m.id;
  j["mu1"] = m.mu1.probs();
  j["transition"] = transition_to_json(m.transition);
  j["reward"] = json{{"R0", m.reward.r0}, {"R1", m.reward.r1}};
  return j;
}

inline MeanFieldModel model_from_json(const json& j) {
  check_schema(j, "model");
  ModelDims dims{j.at("S").get<std::size_t>(), j.at("A").get<std::size_t>(),
                 j.at("H").get<std::size_t>()};
  Density mu1(detail::reals_from_json(j.at("mu1"), dims.S, "model.mu1"));
  TransitionFamily t = transition_from_json(j.at("transition"), dims);
  RewardFamily r{dims,
                 detail::reals_from_json(j.at("reward").at("R0"), dims.cells(),
                                         "model.reward.R0"),
                 detail::reals_from_json(j.at("reward").at("R1"),
                                         dims.cells() * dims.S, "model.reward.R1")};
  return MeanFieldModel(dims.S, dims.A, dims.H, std::move(mu1), std::move(t),
                        std::move(r), j.at("id").get<std::string>());
}

inline json policy_to_json(const Policy& pi) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["H"] = pi.horizon();
  j["S"] = pi.states();
  j["A"] = pi.actions();
  json steps = json::array();
  for (std::size_t h = 0; h < pi.horizon(); ++h)
    for (Real v : pi.step(h).data()) steps.push_back(v);
  j["steps"] = steps;
  return j;
}

inline Policy policy_from_json(const json& j) {
  check_schema(j, "policy");
  std::size_t H = j.at("H").get<std::size_t>();
  std::size_t S = j.at("S").get<std::size_t>();
  std::size_t A = j.at("A").get<std::size_t>();
  auto flat = detail::reals_from_json(j.at("steps"), H * S * A, "policy.steps");
  std::vector<Matrix> steps;
  steps.reserve(H);
  for (std::size_t h = 0; h < H; ++h) {
    std::vector<Real> block(flat.begin() + h * S * A, flat.begin() + (h + 1) * S * A);
    steps.emplace_back(S, A, std::move(block));
  }
  return Policy(H, S, A, std::move(steps));
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_text_file: cannot open " + path);
  out << content;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_text_file: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace mfrl
