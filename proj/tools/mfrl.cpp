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

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mfrl/mfrl.hpp"

namespace {

using mfrl::json;

struct CommonArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> jobs;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config, "experiment config JSON file")
      ->required();
  cmd->add_option("--seed", args.seed, "override: single replicate seed");
  cmd->add_option("--out", args.out, "override: output directory");
  cmd->add_option("--jobs", args.jobs, "override: parallel replicate slots");
}

int dispatch(const std::string& mode, const CommonArgs& args) {
  json j = json::parse(mfrl::read_text_file(args.config));
  j["mode"] = mode;
  if (args.seed.has_value()) j["seeds"] = json::array({*args.seed});
  if (args.out.has_value()) j["out"] = *args.out;
  if (args.jobs.has_value()) j["jobs"] = *args.jobs;
  mfrl::ExperimentConfig cfg = mfrl::parse_experiment_config(j);
  return mfrl::run_experiment(std::move(cfg));
}

int gen_class_cmd(const std::string& config_path, const std::string& out_path) {
  json j = json::parse(mfrl::read_text_file(config_path));
  mfrl::ClassGenSpec spec = mfrl::class_gen_spec_from_json(
      j.contains("gen") ? j["gen"] : j);
  mfrl::ModelClass cls = mfrl::generate_class(spec);
  mfrl::write_text_file(out_path, mfrl::canonical_dump(mfrl::class_to_json(cls)));
  std::cout << "wrote " << out_path << " (|M|=" << cls.size()
            << ", truth_index=" << cls.truth_index << ")\n";
  return mfrl::kExitOk;
}

int emit_curves_cmd(const std::vector<std::string>& traces,
                    const std::vector<std::uint64_t>& seeds,
                    const std::string& out_path) {
  std::vector<std::uint64_t> s = seeds;
  if (s.empty())
    for (std::size_t i = 0; i < traces.size(); ++i) s.push_back(i);
  mfrl::write_text_file(out_path, mfrl::emit_curves_from_files(traces, s));
  std::cout << "wrote " << out_path << "\n";
  return mfrl::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mean-field RL laboratory"};
  app.require_subcommand(1);

  CommonArgs run_mfc_args, run_mfg_args, eluder_args, bounds_args, ne_args;
  add_common(app.add_subcommand("run-mfc", "optimistic MLE control loop"),
             run_mfc_args);
  add_common(app.add_subcommand("run-mfg", "optimistic MLE equilibrium loop"),
             run_mfg_args);
  add_common(app.add_subcommand("eluder-dim", "MF-MBED estimate of a class"),
             eluder_args);
  add_common(app.add_subcommand("check-bounds", "inequality verification sweep"),
             bounds_args);
  add_common(app.add_subcommand("ne-solve", "fixed-point Nash solve"), ne_args);

  std::string gen_config, gen_out = "class.json";
  auto* gen = app.add_subcommand("gen-class", "generate a model class file");
  gen->add_option("--config", gen_config, "ClassGenSpec JSON file")->required();
  gen->add_option("--out", gen_out, "output class file");

  std::vector<std::string> curve_traces;
  std::vector<std::uint64_t> curve_seeds;
  std::string curve_out = "curves.csv";
  auto* curves = app.add_subcommand("emit-curves", "tidy long-format trace CSV");
  curves->add_option("--trace", curve_traces, "trace CSV files")->required();
  curves->add_option("--trace-seed", curve_seeds, "seed labels, one per trace");
  curves->add_option("--out", curve_out, "output CSV path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("run-mfc")) return dispatch("mfc", run_mfc_args);
    if (app.got_subcommand("run-mfg")) return dispatch("mfg", run_mfg_args);
    if (app.got_subcommand("eluder-dim")) return dispatch("eluder", eluder_args);
    if (app.got_subcommand("check-bounds")) return dispatch("bounds", bounds_args);
    if (app.got_subcommand("ne-solve")) return dispatch("ne", ne_args);
    if (app.got_subcommand("gen-class")) return gen_class_cmd(gen_config, gen_out);
    if (app.got_subcommand("emit-curves"))
      return emit_curves_cmd(curve_traces, curve_seeds, curve_out);
  } catch (const mfrl::ParameterError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return mfrl::kExitValidation;
  } catch (const mfrl::SchemaError& e) {
    std::cerr << "schema error: " << e.what() << "\n";
    return mfrl::kExitValidation;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config parse error: " << e.what() << "\n";
    return mfrl::kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return mfrl::kExitInternal;
  }
  return mfrl::kExitValidation;
}
