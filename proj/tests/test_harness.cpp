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

#include <cstdlib>
#include <filesystem>

#include <gtest/gtest.h>

#include "fixtures.hpp"

using namespace mfrl;
namespace fs = std::filesystem;

namespace {

std::string temp_dir(const std::string& tag) {
  fs::path p = fs::temp_directory_path() / ("mfrl_test_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

json small_mfg_config(const std::string& out) {
  ClassGenSpec spec;
  spec.S = 3;
  spec.A = 2;
  spec.H = 3;
  spec.size = 4;
  spec.seed = 77;
  return json{{"mode", "mfg"},
              {"class", {{"gen", class_gen_spec_to_json(spec)}}},
              {"seeds", {1, 2, 3}},
              {"out", out},
              {"run", {{"K", 4}, {"delta", 0.1}, {"epsilon", 0.1}}}};
}

}  // namespace

TEST(Config, RejectsBadMode) {
  json j{{"mode", "nope"}};
  EXPECT_THROW(parse_experiment_config(j), ParameterError);
  try {
    parse_experiment_config(j);
  } catch (const ParameterError& e) {
    EXPECT_NE(std::string(e.what()).find("$.mode"), std::string::npos);
  }
}

TEST(Config, RejectsMissingClassAndBadValues) {
  EXPECT_THROW(parse_experiment_config(json{{"mode", "mfc"}}), ParameterError);
  json j = small_mfg_config("x");
  j["run"]["K"] = 0;
  EXPECT_THROW(parse_experiment_config(j), ParameterError);
  j = small_mfg_config("x");
  j["run"]["delta"] = 1.5;
  EXPECT_THROW(parse_experiment_config(j), ParameterError);
  j = small_mfg_config("x");
  j["seeds"] = json::array();
  EXPECT_THROW(parse_experiment_config(j), ParameterError);
}

TEST(Harness, MfgRunWritesArtifactsPerSeed) {
  std::string out = temp_dir("artifacts");
  auto cfg = parse_experiment_config(small_mfg_config(out));
  EXPECT_EQ(run_experiment(cfg), kExitOk);
  for (int seed : {1, 2, 3}) {
    EXPECT_TRUE(fs::exists(out + "/trace_mfg_seed" + std::to_string(seed) + ".csv"));
    EXPECT_TRUE(
        fs::exists(out + "/summary_mfg_seed" + std::to_string(seed) + ".json"));
  }
  EXPECT_TRUE(fs::exists(out + "/summary.json"));
  EXPECT_TRUE(fs::exists(out + "/manifest.json"));
  json manifest = json::parse(read_text_file(out + "/manifest.json"));
  EXPECT_EQ(manifest["schema_version"], kSchemaVersion);
  EXPECT_TRUE(manifest.contains("config_hash"));
}

TEST(Harness, RerunIsByteIdentical) {
  std::string out1 = temp_dir("rerun1");
  std::string out2 = temp_dir("rerun2");
  auto cfg1 = parse_experiment_config(small_mfg_config(out1));
  auto cfg2 = parse_experiment_config(small_mfg_config(out2));
  ASSERT_EQ(run_experiment(cfg1), kExitOk);
  ASSERT_EQ(run_experiment(cfg2), kExitOk);
  for (const auto& entry : fs::directory_iterator(out1)) {
    std::string name = entry.path().filename().string();
    if (name == "manifest.json") continue;  // config hash differs via "out"
    EXPECT_EQ(read_text_file(out1 + "/" + name), read_text_file(out2 + "/" + name))
        << name;
  }
}

TEST(Harness, ParallelJobsMatchSerial) {
  json base = small_mfg_config(temp_dir("serial"));
  auto serial_cfg = parse_experiment_config(base);
  ASSERT_EQ(run_experiment(serial_cfg), kExitOk);
  json par = base;
  std::string out2 = temp_dir("parallel");
  par["out"] = out2;
  par["jobs"] = 3;
  auto parallel_cfg = parse_experiment_config(par);
  ASSERT_EQ(run_experiment(parallel_cfg), kExitOk);
  std::string out1 = base["out"].get<std::string>();
  for (int seed : {1, 2, 3}) {
    std::string name = "/trace_mfg_seed" + std::to_string(seed) + ".csv";
    EXPECT_EQ(read_text_file(out1 + name), read_text_file(out2 + name));
  }
}

TEST(Harness, EnvVarOverridesOutDir) {
  std::string out = temp_dir("envdir");
  setenv("MFRL_OUT", out.c_str(), 1);
  auto cfg = parse_experiment_config(small_mfg_config(temp_dir("ignored")));
  EXPECT_EQ(run_experiment(cfg), kExitOk);
  unsetenv("MFRL_OUT");
  EXPECT_TRUE(fs::exists(out + "/summary.json"));
}

TEST(Harness, EluderModeEmitsReport) {
  std::string out = temp_dir("eluder");
  ClassGenSpec spec;
  spec.size = 3;
  spec.seed = 13;
  json j{{"mode", "eluder"},
         {"class", {{"gen", class_gen_spec_to_json(spec)}}},
         {"out", out},
         {"eluder",
          {{"alpha", 1.0},
           {"epsilon", 0.05},
           {"probes", {{"dirichlet_draws", 2}, {"seed", 4}}}}}};
  EXPECT_EQ(run_experiment(parse_experiment_config(j)), kExitOk);
  json rep = json::parse(read_text_file(out + "/eluder_report.json"));
  EXPECT_EQ(rep["per_h"].size(), spec.H);
  EXPECT_TRUE(rep.contains("mf_mbed"));
  EXPECT_TRUE(rep.contains("probes"));
  EXPECT_TRUE(rep.contains("seed"));
}

TEST(Harness, BoundsModePassesAndSignalsExitCode) {
  std::string out = temp_dir("bounds");
  json j{{"mode", "bounds"},
         {"seeds", {5}},
         {"out", out},
         {"bounds",
          {{"instances", 6}, {"S", 3}, {"A", 2}, {"H", 3},
           {"contraction_instances", 2}}}};
  EXPECT_EQ(run_experiment(parse_experiment_config(j)), kExitOk);
  json rep = json::parse(read_text_file(out + "/bounds_report.json"));
  EXPECT_TRUE(rep["all_pass"].get<bool>());
  EXPECT_EQ(rep["instances"].size(), 6u);
}

TEST(Harness, BoundsModeIdenticalPairIsTrivialPass) {
  // zero perturbation generates identical model pairs: every lhs is 0
  std::string out = temp_dir("bounds_id");
  json j{{"mode", "bounds"},
         {"seeds", {5}},
         {"out", out},
         {"bounds",
          {{"instances", 2}, {"S", 2}, {"A", 2}, {"H", 2},
           {"contraction_instances", 0}, {"perturbation", 0.0}}}};
  EXPECT_EQ(run_experiment(parse_experiment_config(j)), kExitOk);
  json rep = json::parse(read_text_file(out + "/bounds_report.json"));
  for (const auto& inst : rep["instances"])
    for (const auto& c : inst["checks"])
      if (!c["skipped"].get<bool>()) EXPECT_NEAR(c["lhs"].get<Real>(), 0.0, 1e-12);
}

TEST(Harness, NeModeCertifiesContractiveTruth) {
  std::string out = temp_dir("ne");
  ClassGenSpec spec;
  spec.size = 2;
  spec.contraction = true;
  spec.seed = 15;
  json j{{"mode", "ne"},
         {"class", {{"gen", class_gen_spec_to_json(spec)}}},
         {"seeds", {1}},
         {"out", out},
         {"ne_solve", {{"model_index", -1}, {"tolerance", 1e-9}}}};
  int rc = run_experiment(parse_experiment_config(j));
  json rep = json::parse(read_text_file(out + "/ne_report.json"));
  EXPECT_TRUE(rep["converged"].get<bool>());
  EXPECT_EQ(rc, kExitOk);
}

TEST(Harness, NeModeSignalsNonConvergence) {
  std::string out = temp_dir("ne_hard");
  ClassGenSpec spec;
  spec.size = 2;
  spec.seed = 15;
  json j{{"mode", "ne"},
         {"class", {{"gen", class_gen_spec_to_json(spec)}}},
         {"seeds", {1}},
         {"out", out},
         {"ne_solve",
          {{"model_index", -1}, {"tolerance", 1e-13}, {"max_iters", 3},
           {"restarts", 1}}}};
  int rc = run_experiment(parse_experiment_config(j));
  json rep = json::parse(read_text_file(out + "/ne_report.json"));
  EXPECT_FALSE(rep["converged"].get<bool>());
  EXPECT_EQ(rc, kExitCheckFailure);
}

TEST(EmitCurves, LongFormatShapeAndRoundTrip) {
  std::string out = temp_dir("curves");
  auto cfg = parse_experiment_config(small_mfg_config(out));
  ASSERT_EQ(run_experiment(cfg), kExitOk);
  std::vector<std::string> paths;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  for (auto s : seeds)
    paths.push_back(out + "/trace_mfg_seed" + std::to_string(s) + ".csv");
  std::string longfmt = emit_curves_from_files(paths, seeds);
  // row count: header comment + header + K * metrics * seeds
  std::size_t lines = 0;
  for (char c : longfmt) lines += c == '\n' ? 1 : 0;
  EXPECT_EQ(lines, 2 + 4 * trace_metric_names().size() * seeds.size());

  // re-aggregating the long format reproduces the summary mean at k = K
  json summary = json::parse(read_text_file(out + "/summary.json"));
  Real expect_mean = summary["true_metric_at_K_mean"].get<Real>();
  Real sum = 0.0;
  std::size_t count = 0;
  std::istringstream ss(longfmt);
  std::string line;
  while (std::getline(ss, line)) {
    if (line.rfind("#", 0) == 0 || line.rfind("seed", 0) == 0) continue;
    // seed,k,metric,value
    std::vector<std::string> cells;
    std::size_t p = 0;
    while (true) {
      std::size_t c = line.find(',', p);
      if (c == std::string::npos) {
        cells.push_back(line.substr(p));
        break;
      }
      cells.push_back(line.substr(p, c - p));
      p = c + 1;
    }
    if (cells[1] == "4" && cells[2] == "true_eopt_or_ene") {
      sum += std::stod(cells[3]);
      count += 1;
    }
  }
  ASSERT_EQ(count, seeds.size());
  EXPECT_NEAR(sum / count, expect_mean, 1e-15);
}

TEST(EmitCurves, RejectsUnknownSchema) {
  EXPECT_THROW(parse_trace_csv("# schema_version=2\nk\n", 0), SchemaError);
}
