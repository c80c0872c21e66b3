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

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "mfrl/eluder.hpp"
#include "mfrl/learner.hpp"
#include "mfrl/model_class.hpp"
#include "mfrl/planning.hpp"
#include "mfrl/serialize.hpp"

namespace mfrl {

// Exit codes of the harness and the CLI.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitCheckFailure = 2;
inline constexpr int kExitInternal = 3;

// 17 significant digits, '.' decimal, no locale: bit-exact diffing.
inline std::string format_real(Real v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::uint64_t fnv1a_hash(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

struct EluderModeConfig {
  Real alpha = 1.0;
  Real epsilon = 0.05;
  ProbeSpec probes;
};

struct BoundsModeConfig {
  std::size_t instances = 200;
  std::size_t S = 4, A = 3, H = 4;
  std::size_t contraction_instances = 50;
  Real perturbation = 0.3;
};

struct NeModeConfig {
  // -1 targets the designated true model.
  long long model_index = -1;
  NeSolveParams params;
};

struct ExperimentConfig {
  std::string mode;  // mfc | mfg | eluder | bounds | ne
  std::optional<std::string> class_file;
  std::optional<ClassGenSpec> gen;
  std::vector<std::uint64_t> seeds;
  std::string out_dir = ".";
  std::size_t jobs = 1;
  RunParams run;
  EluderModeConfig eluder;
  BoundsModeConfig bounds;
  NeModeConfig ne;
  json raw;  // canonical copy for hashing
};

namespace detail {

[[noreturn]] inline void config_error(const std::string& pointer,
                                      const std::string& what) {
  throw ParameterError(pointer + ": " + what);
}

inline std::size_t require_positive(const json& j, const std::string& ptr) {
  if (!j.is_number_integer() || j.get<long long>() <= 0)
    config_error(ptr, "expected a positive integer");
  return j.get<std::size_t>();
}

inline Real require_unit_interval(const json& j, const std::string& ptr) {
  if (!j.is_number()) config_error(ptr, "expected a real in (0,1)");
  Real v = j.get<Real>();
  if (v <= 0.0 || v >= 1.0) config_error(ptr, "expected a real in (0,1)");
  return v;
}

}  // namespace detail

inline ExperimentConfig parse_experiment_config(const json& j) {
  ExperimentConfig cfg;
  cfg.raw = j;
  if (j.contains("schema_version")) check_schema(j, "config");
  if (!j.contains("mode") || !j["mode"].is_string())
    detail::config_error("$.mode", "expected one of mfc|mfg|eluder|bounds|ne");
  cfg.mode = j["mode"].get<std::string>();
  if (cfg.mode != "mfc" && cfg.mode != "mfg" && cfg.mode != "eluder" &&
      cfg.mode != "bounds" && cfg.mode != "ne")
    detail::config_error("$.mode", "unknown mode '" + cfg.mode + "'");

  if (j.contains("class")) {
    const json& c = j["class"];
    if (c.contains("file"))
      cfg.class_file = c["file"].get<std::string>();
    else if (c.contains("gen"))
      cfg.gen = class_gen_spec_from_json(c["gen"]);
    else
      detail::config_error("$.class", "expected 'file' or 'gen'");
  } else if (cfg.mode != "bounds") {
    detail::config_error("$.class", "required for this mode");
  }

  if (j.contains("seeds")) {
    if (!j["seeds"].is_array() || j["seeds"].empty())
      detail::config_error("$.seeds", "expected a nonempty array");
    for (const auto& s : j["seeds"]) cfg.seeds.push_back(s.get<std::uint64_t>());
  } else {
    cfg.seeds.push_back(0);
  }
  if (j.contains("out")) cfg.out_dir = j["out"].get<std::string>();
  if (j.contains("jobs")) cfg.jobs = detail::require_positive(j["jobs"], "$.jobs");

  if (j.contains("run")) {
    const json& r = j["run"];
    if (r.contains("K")) cfg.run.K = detail::require_positive(r["K"], "$.run.K");
    if (r.contains("delta"))
      cfg.run.delta = detail::require_unit_interval(r["delta"], "$.run.delta");
    if (r.contains("epsilon"))
      cfg.run.epsilon = detail::require_unit_interval(r["epsilon"], "$.run.epsilon");
    if (r.contains("record_timing"))
      cfg.run.record_timing = r["record_timing"].get<bool>();
    if (r.contains("planner")) {
      const json& p = r["planner"];
      if (p.contains("exhaustive_cap"))
        cfg.run.planner.exhaustive_cap = p["exhaustive_cap"].get<std::size_t>();
      if (p.contains("restarts"))
        cfg.run.planner.restarts = p["restarts"].get<std::size_t>();
      if (p.contains("max_iters"))
        cfg.run.planner.max_iters = p["max_iters"].get<std::size_t>();
      if (p.contains("damping")) cfg.run.planner.damping = p["damping"].get<Real>();
    }
    if (r.contains("ne")) {
      const json& n = r["ne"];
      if (n.contains("damping")) cfg.run.ne.damping = n["damping"].get<Real>();
      if (n.contains("max_iters"))
        cfg.run.ne.max_iters = n["max_iters"].get<std::size_t>();
      if (n.contains("tolerance")) cfg.run.ne.tolerance = n["tolerance"].get<Real>();
      if (n.contains("restarts"))
        cfg.run.ne.restarts = n["restarts"].get<std::size_t>();
      if (n.contains("prox_weight"))
        cfg.run.ne.prox_weight = n["prox_weight"].get<Real>();
    }
  }
  if (j.contains("eluder")) {
    const json& e = j["eluder"];
    if (e.contains("alpha")) {
      cfg.eluder.alpha = e["alpha"].get<Real>();
      if (cfg.eluder.alpha < 1.0)
        detail::config_error("$.eluder.alpha", "alpha must be >= 1");
    }
    if (e.contains("epsilon")) {
      cfg.eluder.epsilon = e["epsilon"].get<Real>();
      if (cfg.eluder.epsilon <= 0.0)
        detail::config_error("$.eluder.epsilon", "epsilon must be > 0");
    }
    if (e.contains("probes")) {
      const json& p = e["probes"];
      if (p.contains("vertices")) cfg.eluder.probes.vertices = p["vertices"].get<bool>();
      if (p.contains("uniform")) cfg.eluder.probes.uniform = p["uniform"].get<bool>();
      if (p.contains("dirichlet_draws"))
        cfg.eluder.probes.dirichlet_draws = p["dirichlet_draws"].get<std::size_t>();
      if (p.contains("seed")) cfg.eluder.probes.seed = p["seed"].get<std::uint64_t>();
    }
  }
  if (j.contains("bounds")) {
    const json& b = j["bounds"];
    if (b.contains("instances"))
      cfg.bounds.instances = detail::require_positive(b["instances"], "$.bounds.instances");
    if (b.contains("S")) cfg.bounds.S = detail::require_positive(b["S"], "$.bounds.S");
    if (b.contains("A")) cfg.bounds.A = detail::require_positive(b["A"], "$.bounds.A");
    if (b.contains("H")) cfg.bounds.H = detail::require_positive(b["H"], "$.bounds.H");
    if (b.contains("contraction_instances"))
      cfg.bounds.contraction_instances = b["contraction_instances"].get<std::size_t>();
    if (b.contains("perturbation"))
      cfg.bounds.perturbation = b["perturbation"].get<Real>();
  }
  if (j.contains("ne_solve")) {
    const json& n = j["ne_solve"];
    if (n.contains("model_index"))
      cfg.ne.model_index = n["model_index"].get<long long>();
    if (n.contains("damping")) cfg.ne.params.damping = n["damping"].get<Real>();
    if (n.contains("max_iters"))
      cfg.ne.params.max_iters = n["max_iters"].get<std::size_t>();
    if (n.contains("tolerance")) cfg.ne.params.tolerance = n["tolerance"].get<Real>();
    if (n.contains("restarts")) cfg.ne.params.restarts = n["restarts"].get<std::size_t>();
    if (n.contains("prox_weight"))
      cfg.ne.params.prox_weight = n["prox_weight"].get<Real>();
    if (n.contains("seed")) cfg.ne.params.seed = n["seed"].get<std::uint64_t>();
  }
  return cfg;
}

// MFRL_OUT overrides the configured output directory.
inline void apply_env_overrides(ExperimentConfig& cfg) {
  const char* out = std::getenv("MFRL_OUT");
  if (out != nullptr && out[0] != '\0') cfg.out_dir = out;
}

inline ModelClass resolve_class(const ExperimentConfig& cfg) {
  if (cfg.class_file.has_value())
    return class_from_json(json::parse(read_text_file(*cfg.class_file)));
  if (cfg.gen.has_value()) return generate_class(*cfg.gen);
  throw ParameterError("$.class: no class source configured");
}

inline std::string trace_csv(const RunResult& run) {
  std::string out = "# schema_version=1\n";
  out +=
      "k,conf_set_size,truth_in_set,optimistic_value_or_gap,true_eopt_or_ene,"
      "ne_converged,wallclock_ms\n";
  for (const auto& r : run.rows) {
    out += std::to_string(r.k) + "," + std::to_string(r.conf_set_size) + "," +
           (r.truth_in_set ? "1" : "0") + "," + format_real(r.optimistic) + "," +
           format_real(r.true_metric) + "," + (r.ne_converged ? "1" : "0") + "," +
           std::to_string(r.wallclock_ms) + "\n";
  }
  return out;
}

struct ParsedTrace {
  std::uint64_t seed = 0;
  std::vector<std::vector<std::string>> rows;  // raw cells, header order
};

inline const std::vector<std::string>& trace_metric_names() {
  static const std::vector<std::string> names = {
      "conf_set_size",  "truth_in_set", "optimistic_value_or_gap",
      "true_eopt_or_ene", "ne_converged", "wallclock_ms"};
  return names;
}

inline ParsedTrace parse_trace_csv(const std::string& text, std::uint64_t seed) {
  ParsedTrace t;
  t.seed = seed;
  std::size_t pos = 0;
  auto next_line = [&]() -> std::optional<std::string> {
    if (pos >= text.size()) return std::nullopt;
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(pos, end - pos);
    pos = end + 1;
    return line;
  };
  auto schema = next_line();
  if (!schema || *schema != "# schema_version=1")
    throw SchemaError("trace: unknown or missing schema_version line");
  auto header = next_line();
  if (!header ||
      *header !=
          "k,conf_set_size,truth_in_set,optimistic_value_or_gap,true_eopt_or_"
          "ene,ne_converged,wallclock_ms")
    throw SchemaError("trace: unexpected header");
  while (auto line = next_line()) {
    if (line->empty()) continue;
    std::vector<std::string> cells;
    std::size_t p = 0;
    while (true) {
      std::size_t c = line->find(',', p);
      if (c == std::string::npos) {
        cells.push_back(line->substr(p));
        break;
      }
      cells.push_back(line->substr(p, c - p));
      p = c + 1;
    }
    if (cells.size() != 7) throw SchemaError("trace: malformed row");
    t.rows.push_back(std::move(cells));
  }
  return t;
}

// Tidy long-format rows (seed, k, metric, value) for external plotting.
inline std::string emit_curves(const std::vector<ParsedTrace>& traces) {
  std::string out = "# schema_version=1\n";
  out += "seed,k,metric,value\n";
  for (const auto& t : traces)
    for (const auto& row : t.rows)
      for (std::size_t m = 0; m < trace_metric_names().size(); ++m)
        out += std::to_string(t.seed) + "," + row[0] + "," +
               trace_metric_names()[m] + "," + row[m + 1] + "\n";
  return out;
}

inline std::string emit_curves_from_files(const std::vector<std::string>& paths,
                                          const std::vector<std::uint64_t>& seeds) {
  if (paths.size() != seeds.size())
    throw DimensionError("emit_curves: one seed per trace file required");
  std::vector<ParsedTrace> traces;
  traces.reserve(paths.size());
  for (std::size_t i = 0; i < paths.size(); ++i)
    traces.push_back(parse_trace_csv(read_text_file(paths[i]), seeds[i]));
  return emit_curves(traces);
}

namespace detail {

inline json bound_check_to_json(const BoundCheck& c) {
  return json{{"name", c.name},   {"lhs", c.lhs},   {"rhs", c.rhs},
              {"slack", c.slack}, {"pass", c.pass}, {"skipped", c.skipped}};
}

inline void write_manifest(const ExperimentConfig& cfg) {
  json manifest{{"schema_version", kSchemaVersion},
                {"tool_version", kToolVersion},
                {"config_hash", fnv1a_hash(cfg.raw.dump())}};
  write_text_file(cfg.out_dir + "/manifest.json", canonical_dump(manifest));
}

inline int run_learning_modes(const ExperimentConfig& cfg) {
  ModelClass cls = resolve_class(cfg);
  const std::size_t n = cfg.seeds.size();
  std::vector<std::optional<RunResult>> results(n);
  std::atomic<std::size_t> cursor{0};
  auto worker = [&]() {
    for (;;) {
      std::size_t i = cursor.fetch_add(1);
      if (i >= n) return;
      RunParams params = cfg.run;
      params.seed = cfg.seeds[i];
      results[i] = cfg.mode == "mfc" ? run_mfc(cls, params) : run_mfg(cls, params);
    }
  };
  std::vector<std::thread> pool;
  const std::size_t slots = std::min<std::size_t>(std::max<std::size_t>(cfg.jobs, 1), n);
  for (std::size_t t = 0; t < slots; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  json per_seed = json::array();
  Real mean = 0.0, m2 = 0.0;
  Real mean_at_k = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const RunResult& run = *results[i];
    const std::string stem =
        cfg.out_dir + "/trace_" + cfg.mode + "_seed" + std::to_string(run.seed);
    write_text_file(stem + ".csv", trace_csv(run));
    json summary{{"schema_version", kSchemaVersion},
                 {"mode", run.mode},
                 {"seed", run.seed},
                 {"final_metric", run.final_metric},
                 {"trajectories_consumed", run.trajectories},
                 {"returned_policy", policy_to_json(run.returned_policy)}};
    write_text_file(cfg.out_dir + "/summary_" + cfg.mode + "_seed" +
                        std::to_string(run.seed) + ".json",
                    canonical_dump(summary));
    per_seed.push_back(json{{"seed", run.seed},
                            {"final_metric", run.final_metric},
                            {"true_metric_at_K", run.rows.back().true_metric}});
    count += 1;
    Real d = run.final_metric - mean;
    mean += d / count;
    m2 += d * (run.final_metric - mean);
    mean_at_k += run.rows.back().true_metric;
  }
  mean_at_k /= static_cast<Real>(n);
  Real stderr_v = n > 1 ? std::sqrt(m2 / (n - 1) / n) : 0.0;
  json agg{{"schema_version", kSchemaVersion},
           {"mode", cfg.mode},
           {"final_metric_mean", mean},
           {"final_metric_stderr", stderr_v},
           {"true_metric_at_K_mean", mean_at_k},
           {"per_seed", per_seed}};
  write_text_file(cfg.out_dir + "/summary.json", canonical_dump(agg));
  write_manifest(cfg);
  return kExitOk;
}

inline int run_eluder_mode(const ExperimentConfig& cfg) {
  ModelClass cls = resolve_class(cfg);
  MfMbedReport rep =
      mf_mbed(cls, cfg.eluder.alpha, cfg.eluder.epsilon, cfg.eluder.probes);
  json per_h = json::array();
  for (const auto& row : rep.per_h)
    per_h.push_back(json{{"h", row.h},
                         {"tv_dim", row.tv_dim},
                         {"hellinger_dim", row.hellinger_dim}});
  json out{{"schema_version", kSchemaVersion},
           {"per_h", per_h},
           {"mf_mbed", rep.dimension},
           {"probes", rep.probe_count},
           {"seed", rep.probe_seed}};
  write_text_file(cfg.out_dir + "/eluder_report.json", canonical_dump(out));
  write_manifest(cfg);
  return kExitOk;
}

inline int run_bounds_mode(const ExperimentConfig& cfg) {
  json instances = json::array();
  bool all_pass = true;
  const std::uint64_t base = cfg.seeds.front();
  for (std::size_t i = 0; i < cfg.bounds.instances; ++i) {
    const bool contractive = i < cfg.bounds.contraction_instances;
    ClassGenSpec spec;
    spec.S = cfg.bounds.S;
    spec.A = cfg.bounds.A;
    spec.H = cfg.bounds.H;
    spec.size = 2;
    spec.family = FamilyTag::convex_mixture;
    spec.perturbation = cfg.bounds.perturbation;
    spec.contraction = contractive;
    spec.lt_max = contractive ? 0.3 : 1.0;
    spec.seed = derive_seed(base, "bounds-instance", i);
    ModelClass pair = generate_class(spec);
    RngStream prng(derive_seed(base, "bounds-policy", i));
    Policy pi = Policy::random(spec.H, spec.S, spec.A, prng);
    Policy pi_tilde = Policy::random(spec.H, spec.S, spec.A, prng);
    std::optional<Real> cert;
    if (contractive) {
      Real c = 0.0;
      for (const auto& m : pair.models)
        c = std::max(c, contraction_certificate(m).value_or(1.0));
      if (c < 1.0) cert = c;
    }
    BoundCheckReport rep = bound_check_suite(pair.models[0], pair.models[1], pi,
                                             pi_tilde, cert);
    json checks = json::array();
    for (const auto& c : rep.checks) checks.push_back(bound_check_to_json(c));
    all_pass = all_pass && rep.all_pass();
    instances.push_back(json{{"seed", spec.seed},
                             {"contraction", contractive},
                             {"checks", checks}});
  }
  json out{{"schema_version", kSchemaVersion},
           {"instances", instances},
           {"all_pass", all_pass}};
  write_text_file(cfg.out_dir + "/bounds_report.json", canonical_dump(out));
  write_manifest(cfg);
  return all_pass ? kExitOk : kExitCheckFailure;
}

inline int run_ne_mode(const ExperimentConfig& cfg) {
  ModelClass cls = resolve_class(cfg);
  std::size_t idx = cfg.ne.model_index < 0
                        ? cls.truth_index
                        : static_cast<std::size_t>(cfg.ne.model_index);
  if (idx >= cls.size())
    throw ParameterError("$.ne_solve.model_index: out of range");
  NeSolveParams params = cfg.ne.params;
  params.seed = derive_seed(cfg.seeds.front(), "ne");
  NeSolveResult res = ne_solve(cls.models[idx], params);
  const bool certified =
      res.converged && res.exploitability <= 10.0 * params.tolerance + 1e-8;
  json out{{"schema_version", kSchemaVersion},
           {"model_index", idx},
           {"converged", res.converged},
           {"exploitability", res.exploitability},
           {"consistency_residual", res.consistency_residual},
           {"iterations", res.iterations},
           {"restarts_used", res.restarts_used},
           {"certified", certified},
           {"policy", policy_to_json(res.policy)}};
  write_text_file(cfg.out_dir + "/ne_report.json", canonical_dump(out));
  write_manifest(cfg);
  return certified ? kExitOk : kExitCheckFailure;
}

}  // namespace detail

// Dispatches a validated config, writes per-replicate CSV traces, per-seed
// and aggregate JSON summaries, and a manifest. Returns a process exit code.
inline int run_experiment(ExperimentConfig cfg) {
  apply_env_overrides(cfg);
  std::filesystem::create_directories(cfg.out_dir);
  if (cfg.mode == "mfc" || cfg.mode == "mfg") return detail::run_learning_modes(cfg);
  if (cfg.mode == "eluder") return detail::run_eluder_mode(cfg);
  if (cfg.mode == "bounds") return detail::run_bounds_mode(cfg);
  if (cfg.mode == "ne") return detail::run_ne_mode(cfg);
  throw ParameterError("$.mode: unknown mode");
}

}  // namespace mfrl
