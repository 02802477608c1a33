#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "actune/config_space.hpp"
#include "actune/cost_matrix.hpp"
#include "actune/run_result.hpp"

namespace actune {

enum class SeedPolicyKind { Managed, FixedSet };

struct SeedPolicy {
  SeedPolicyKind kind = SeedPolicyKind::Managed;
  int fixed_count = 0;  // k for FixedSet
  bool operator==(const SeedPolicy&) const = default;
};

enum class TempDirPolicy { TmpDir, FixedPath };

// Everything defining one configuration experiment. Immutable after
// parsing; safe to share across worker threads.
struct Scenario {
  std::string scenario_dir;  // directory the scenario file lived in
  std::string command_template;
  std::string pcs_file;
  std::string train_instance_file;
  std::string test_instance_file;
  ConfigSpace space;
  std::vector<std::string> train_instances;
  std::vector<std::string> test_instances;
  double cutoff_max = 0.0;       // seconds, per-run CPU cutoff ceiling
  double memory_limit_mib = 0.0;
  Metric metric = Metric::RuntimePar10;
  int64_t budget_runs = -1;        // -1 = unset
  double budget_wallclock = -1.0;  // seconds, -1 = unset
  bool deterministic = false;
  SeedPolicy seed_policy;
  int validation_seeds = 1;
  std::string parser_hook = "exitcode";  // sat | quality | exitcode | /path/to/executable
  bool solution_checking = false;
  std::string answers_file;  // instance basename -> SAT/UNSAT reference answers
  double worst_quality = 0.0;
  TempDirPolicy temp_dir_policy = TempDirPolicy::TmpDir;
  std::string temp_dir_path;
  std::string oracle_landscape;  // run targets in-process from this landscape spec
  double capping_multiplier = 2.0;
  int max_seeds_per_instance = 5;

  bool is_train_instance(const std::string& inst) const {
    for (const auto& s : train_instances)
      if (s == inst) return true;
    return false;
  }
  bool is_known_instance(const std::string& inst) const {
    if (is_train_instance(inst)) return true;
    for (const auto& s : test_instances)
      if (s == inst) return true;
    return false;
  }
};

namespace detail {

inline std::string resolve_relative(const std::string& base_dir, const std::string& path) {
  std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  return (std::filesystem::path(base_dir) / p).lexically_normal().string();
}

inline std::vector<std::string> read_instance_list(const std::string& path,
                                                   const std::string& base_dir) {
  std::vector<std::string> out;
  for (const auto& raw : split(read_text_file(path), '\n')) {
    std::string line = trim(raw);
    if (line.empty()) continue;
    out.push_back(resolve_relative(base_dir, line));
  }
  return out;
}

}  // namespace detail

// Parses the flat `key = value` scenario format. Paths are resolved
// relative to the scenario file's directory; instance paths are resolved
// once here and then passed to every consumer verbatim, so all
// configurators see byte-identical instance strings.
inline Scenario parse_scenario_text(const std::string& text, const std::string& path,
                                    const std::string& dir) {
  std::map<std::string, std::pair<std::string, int>> kv;
  int lineno = 0;
  for (const auto& raw : split(text, '\n')) {
    ++lineno;
    std::string line = raw;
    if (size_t hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(path, lineno, "expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError(path, lineno, "empty key");
    if (kv.count(key)) throw ParseError(path, lineno, "duplicate key '" + key + "'");
    kv[key] = {value, lineno};
  }

  auto take = [&](const std::string& key) -> std::optional<std::pair<std::string, int>> {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    auto v = it->second;
    kv.erase(it);
    return v;
  };
  auto require = [&](const std::string& key) {
    auto v = take(key);
    if (!v) throw ParseError(path, 0, "missing required key '" + key + "'");
    return *v;
  };
  auto num = [&](const std::pair<std::string, int>& v, const std::string& key) {
    double d;
    if (!parse_double(v.first, d)) throw ParseError(path, v.second, "bad number for '" + key + "'");
    return d;
  };

  Scenario sc;
  sc.scenario_dir = dir;
  sc.command_template = require("command").first;
  auto pcs = require("pcs_file");
  sc.pcs_file = detail::resolve_relative(dir, pcs.first);
  sc.space = parse_config_space(sc.pcs_file);
  auto train = require("train_instance_file");
  sc.train_instance_file = detail::resolve_relative(dir, train.first);
  auto test = require("test_instance_file");
  sc.test_instance_file = detail::resolve_relative(dir, test.first);
  sc.train_instances = detail::read_instance_list(sc.train_instance_file, dir);
  sc.test_instances = detail::read_instance_list(sc.test_instance_file, dir);

  auto cutoff = require("cutoff_time");
  sc.cutoff_max = num(cutoff, "cutoff_time");
  if (!(sc.cutoff_max > 0)) throw ParseError(path, cutoff.second, "cutoff_time must be > 0");
  auto mem = require("memory_limit");
  sc.memory_limit_mib = num(mem, "memory_limit");
  if (!(sc.memory_limit_mib > 0)) throw ParseError(path, mem.second, "memory_limit must be > 0");
  auto metric = require("metric");
  try {
    sc.metric = metric_from(metric.first);
  } catch (const Error& e) {
    throw ParseError(path, metric.second, e.what());
  }

  auto budget_runs = take("budget_runs");
  auto budget_wall = take("budget_wallclock");
  if (!budget_runs && !budget_wall)
    throw ParseError(path, 0, "at least one of budget_runs/budget_wallclock must be set");
  if (budget_runs) {
    long long n;
    if (!parse_int(budget_runs->first, n) || n < 0)
      throw ParseError(path, budget_runs->second, "budget_runs must be a non-negative integer");
    sc.budget_runs = n;
  }
  if (budget_wall) {
    sc.budget_wallclock = num(*budget_wall, "budget_wallclock");
    if (sc.budget_wallclock < 0)
      throw ParseError(path, budget_wall->second, "budget_wallclock must be >= 0");
  }

  if (auto v = take("deterministic")) {
    if (v->first == "true" || v->first == "1")
      sc.deterministic = true;
    else if (v->first == "false" || v->first == "0")
      sc.deterministic = false;
    else
      throw ParseError(path, v->second, "deterministic must be true/false");
  }
  if (auto v = take("seed_policy")) {
    if (v->first == "managed") {
      sc.seed_policy = {SeedPolicyKind::Managed, 0};
    } else if (v->first.rfind("fixed:", 0) == 0) {
      long long k;
      if (!parse_int(v->first.substr(6), k) || k <= 0)
        throw ParseError(path, v->second, "seed_policy fixed:<k> needs k >= 1");
      sc.seed_policy = {SeedPolicyKind::FixedSet, static_cast<int>(k)};
    } else {
      throw ParseError(path, v->second, "seed_policy must be managed or fixed:<k>");
    }
  }
  if (auto v = take("validation_seeds")) {
    long long k;
    if (!parse_int(v->first, k) || k < 1)
      throw ParseError(path, v->second, "validation_seeds must be >= 1");
    sc.validation_seeds = static_cast<int>(k);
  }
  if (auto v = take("wrapper_hooks")) sc.parser_hook = v->first;
  if (auto v = take("solution_checking")) {
    if (v->first == "on")
      sc.solution_checking = true;
    else if (v->first == "off")
      sc.solution_checking = false;
    else
      throw ParseError(path, v->second, "solution_checking must be on/off");
  }
  if (auto v = take("answers_file")) sc.answers_file = detail::resolve_relative(dir, v->first);
  if (auto v = take("worst_quality")) sc.worst_quality = num(*v, "worst_quality");
  if (auto v = take("temp_dir_policy")) {
    if (v->first == "tmpdir") {
      sc.temp_dir_policy = TempDirPolicy::TmpDir;
    } else if (v->first.rfind("path:", 0) == 0) {
      sc.temp_dir_policy = TempDirPolicy::FixedPath;
      sc.temp_dir_path = detail::resolve_relative(dir, v->first.substr(5));
    } else {
      throw ParseError(path, v->second, "temp_dir_policy must be tmpdir or path:<dir>");
    }
  }
  if (auto v = take("oracle_landscape"))
    sc.oracle_landscape = detail::resolve_relative(dir, v->first);
  if (auto v = take("capping_multiplier")) {
    sc.capping_multiplier = num(*v, "capping_multiplier");
    if (sc.capping_multiplier < 1.0)
      throw ParseError(path, v->second, "capping_multiplier must be >= 1");
  }
  if (auto v = take("max_seeds_per_instance")) {
    long long k;
    if (!parse_int(v->first, k) || k < 1)
      throw ParseError(path, v->second, "max_seeds_per_instance must be >= 1");
    sc.max_seeds_per_instance = static_cast<int>(k);
  }

  if (!kv.empty()) {
    auto it = kv.begin();
    throw ParseError(path, it->second.second, "unknown key '" + it->first + "'");
  }

  if (sc.metric == Metric::Quality && sc.worst_quality == 0.0)
    throw ParseError(path, 0, "metric quality requires worst_quality");

  // train/test disjointness
  std::set<std::string> train_set(sc.train_instances.begin(), sc.train_instances.end());
  for (const auto& t : sc.test_instances)
    if (train_set.count(t)) throw ParseError(path, 0, "train/test overlap: " + t);
  if (sc.train_instances.empty()) throw ParseError(path, 0, "empty train instance list");
  if (sc.test_instances.empty()) throw ParseError(path, 0, "empty test instance list");

  for (const auto& inst : sc.train_instances)
    if (!std::filesystem::exists(inst)) throw ParseError(path, 0, "train instance missing: " + inst);
  for (const auto& inst : sc.test_instances)
    if (!std::filesystem::exists(inst)) throw ParseError(path, 0, "test instance missing: " + inst);

  return sc;
}

inline Scenario parse_scenario(const std::string& path) {
  // the scenario directory is resolved to an absolute path so instance
  // strings and file references are identical no matter where the harness
  // was invoked from
  std::filesystem::path abs = std::filesystem::absolute(path).lexically_normal();
  return parse_scenario_text(read_text_file(path), path, abs.parent_path().string());
}

inline std::string to_scenario_text(const Scenario& sc) {
  std::string out;
  auto add = [&](const std::string& k, const std::string& v) { out += k + " = " + v + "\n"; };
  add("command", sc.command_template);
  add("pcs_file", sc.pcs_file);
  add("train_instance_file", sc.train_instance_file);
  add("test_instance_file", sc.test_instance_file);
  add("cutoff_time", repr_double(sc.cutoff_max));
  add("memory_limit", repr_double(sc.memory_limit_mib));
  add("metric", to_string(sc.metric));
  if (sc.budget_runs >= 0) add("budget_runs", std::to_string(sc.budget_runs));
  if (sc.budget_wallclock >= 0) add("budget_wallclock", repr_double(sc.budget_wallclock));
  add("deterministic", sc.deterministic ? "true" : "false");
  add("seed_policy", sc.seed_policy.kind == SeedPolicyKind::Managed
                         ? "managed"
                         : "fixed:" + std::to_string(sc.seed_policy.fixed_count));
  add("validation_seeds", std::to_string(sc.validation_seeds));
  add("wrapper_hooks", sc.parser_hook);
  add("solution_checking", sc.solution_checking ? "on" : "off");
  if (!sc.answers_file.empty()) add("answers_file", sc.answers_file);
  if (sc.worst_quality != 0.0) add("worst_quality", repr_double(sc.worst_quality));
  if (sc.temp_dir_policy == TempDirPolicy::FixedPath) add("temp_dir_policy", "path:" + sc.temp_dir_path);
  if (!sc.oracle_landscape.empty()) add("oracle_landscape", sc.oracle_landscape);
  add("capping_multiplier", repr_double(sc.capping_multiplier));
  add("max_seeds_per_instance", std::to_string(sc.max_seeds_per_instance));
  return out;
}

struct ScenarioWarning {
  std::string code;
  std::string message;
  bool operator==(const ScenarioWarning&) const = default;
};

// Static setup checks. Warnings only, never hard failures: a scenario that
// trips these can still run, it is just unlikely to configure well.
inline std::vector<ScenarioWarning> check_scenario(const Scenario& sc,
                                                   const CostMatrix* probe = nullptr) {
  std::vector<ScenarioWarning> warnings;

  if (sc.train_instances.size() < 300) {
    warnings.push_back(
        {"train-set-small",
         "training set has " + std::to_string(sc.train_instances.size()) +
             " instances; fewer than 300 risks configurations that do not generalize"});
  }

  if (!sc.deterministic && sc.validation_seeds <= 1) {
    warnings.push_back({"single-seed-validation",
                        "target is randomized but validation_seeds = 1; validate with multiple "
                        "seeds per instance to estimate performance across seeds"});
  }

  if (sc.seed_policy.kind == SeedPolicyKind::FixedSet) {
    warnings.push_back({"fixed-seed-policy",
                        "seed_policy fixed:" + std::to_string(sc.seed_policy.fixed_count) +
                            " tunes against a frozen seed set and invites over-tuning to those "
                            "seeds; prefer managed seeds"});
  }

  if (probe && probe->rows() >= 1 && probe->cols() > 0) {
    size_t solved = 0;
    for (size_t j = 0; j < probe->cols(); ++j)
      if (probe->status(0, j) == RunStatus::Success) ++solved;
    double rate = static_cast<double>(solved) / static_cast<double>(probe->cols());
    if (rate < 0.75) {
      warnings.push_back(
          {"probe-solve-rate",
           "default configuration solved " + std::to_string(static_cast<int>(rate * 100.0)) +
               "% of probed training instances within the cutoff; aim for roughly 75% or more"});
    }

    double mean_rt = 0.0;
    for (size_t j = 0; j < probe->cols(); ++j) {
      mean_rt += probe->status(0, j) == RunStatus::Success ? probe->cost(0, j) : sc.cutoff_max;
    }
    mean_rt /= static_cast<double>(probe->cols());
    if (mean_rt > 0) {
      double available = 0.0;
      if (sc.budget_wallclock >= 0) available = std::max(available, sc.budget_wallclock);
      if (sc.budget_runs >= 0)
        available = std::max(available, static_cast<double>(sc.budget_runs) * mean_rt);
      if (available < 200.0 * mean_rt) {
        warnings.push_back(
            {"budget-rule-of-thumb",
             "budget covers about " + std::to_string(static_cast<long long>(available / mean_rt)) +
                 " default-configuration runs; a budget worth 200 to 1000 default runs is a "
                 "sensible starting point"});
      }
    }
  }

  return warnings;
}

}  // namespace actune
