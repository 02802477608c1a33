#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "actune/cost_matrix.hpp"
#include "actune/rng.hpp"
#include "actune/scenario.hpp"
#include "actune/wrapper.hpp"

namespace actune {

// Metric aggregate over a list of finished runs. Unsuccessful runs count at
// the metric's penalty derived from the scenario-level cutoff; aggregation
// never sees adapted cutoffs. Summation is plain left-to-right.
inline double aggregate_cost(const std::vector<RunResult>& results, Metric metric,
                             double kappa_max, double worst_quality = 0.0) {
  if (results.empty()) throw Error("aggregate_cost over empty result list");
  double sum = 0.0;
  for (const auto& r : results) {
    if (r.status == RunStatus::Success) {
      sum += is_runtime_metric(metric) ? r.cpu_time : (r.quality ? *r.quality : worst_quality);
    } else {
      sum += failure_cost(metric, kappa_max, worst_quality);
    }
  }
  return sum / static_cast<double>(results.size());
}

// Adapted cutoff for the next challenger run: the incumbent's cost on the
// shared prefix (times a slack multiplier) minus what the challenger already
// spent, floored so the cutoff can never reach zero.
inline constexpr double kMinAdaptedCutoff = 0.1;

inline double adaptive_cap(double incumbent_prefix_cost_sum, double challenger_spent,
                           double multiplier, double kappa_max) {
  if (incumbent_prefix_cost_sum < 0 || challenger_spent < 0 || multiplier < 1.0 || kappa_max <= 0)
    throw Error("adaptive_cap: invalid arguments");
  double kappa = multiplier * incumbent_prefix_cost_sum - challenger_spent;
  kappa = std::max(kMinAdaptedCutoff, kappa);
  return std::min(kappa_max, kappa);
}

// Seed source for new (instance, seed) pairs. Managed draws a fresh
// pseudorandom seed per pair; FixedSet cycles a pre-drawn set of k seeds
// (kept for reproducing seed over-tuning, and warned about); deterministic
// targets always get seed 0.
class SeedSource {
 public:
  SeedSource(const SeedPolicy& policy, bool deterministic, RngStream& rng)
      : policy_(policy), deterministic_(deterministic) {
    if (!deterministic && policy.kind == SeedPolicyKind::FixedSet) {
      if (policy.fixed_count <= 0) throw Error("fixed seed set must have k >= 1");
      for (int i = 0; i < policy.fixed_count; ++i) fixed_.push_back(rng.draw64() >> 1);
    }
  }

  uint64_t next(RngStream& rng, size_t pair_index) const {
    if (deterministic_) return 0;
    if (policy_.kind == SeedPolicyKind::Managed) return rng.draw64() >> 1;
    return fixed_[pair_index % fixed_.size()];
  }

  const std::vector<uint64_t>& fixed_set() const { return fixed_; }

 private:
  SeedPolicy policy_;
  bool deterministic_;
  std::vector<uint64_t> fixed_;
};

struct EvaluatedPair {
  InstanceSeedPair pair;
  RunResult result;
};

// Incumbent bookkeeping: the evaluated (instance, seed) list is always a
// prefix of the run's master pair sequence, so any two incumbents are
// comparable on their shared prefix.
struct IncumbentStats {
  Configuration config;
  std::vector<EvaluatedPair> evaluated;
  double aggregate = 0.0;

  void recompute(Metric metric, double kappa_max, double worst_quality) {
    std::vector<RunResult> rs;
    rs.reserve(evaluated.size());
    for (const auto& e : evaluated) rs.push_back(e.result);
    aggregate = aggregate_cost(rs, metric, kappa_max, worst_quality);
    std::set<InstanceSeedPair> uniq;
    for (const auto& e : evaluated)
      if (!uniq.insert(e.pair).second) throw Error("duplicate (instance, seed) pair in incumbent");
  }
};

struct TrajectoryEntry {
  double elapsed_s = 0.0;
  double target_cpu_s = 0.0;
  Configuration config;
  double train_cost = 0.0;
};

struct Trajectory {
  uint64_t run_seed = 0;
  std::vector<TrajectoryEntry> entries;

  const Configuration& final_incumbent() const {
    if (entries.empty()) throw Error("empty trajectory");
    return entries.back().config;
  }
  double final_train_cost() const {
    if (entries.empty()) throw Error("empty trajectory");
    return entries.back().train_cost;
  }
};

inline std::string trajectory_to_csv(const Trajectory& t) {
  std::string out = "elapsed_s,target_cpu_s,train_cost,config_id,config_json\n";
  for (const auto& e : t.entries) {
    out += fmt_fixed(e.elapsed_s, 3);
    out += ',';
    out += fmt_fixed(e.target_cpu_s, 3);
    out += ',';
    out += std::isnan(e.train_cost) ? "nan" : fmt_fixed(e.train_cost);
    out += ',';
    out += e.config.id_hex();
    out += ',';
    out += csv_quote(config_to_json(e.config).dump());
    out += '\n';
  }
  return out;
}

struct RaceDecision {
  bool replaced = false;
  IncumbentStats challenger_stats;  // costs on the shared prefix it completed
  size_t runs_used = 0;
  double target_cpu = 0.0;
};

struct BudgetTracker {
  int64_t max_runs = -1;
  double max_wallclock = -1.0;  // for oracle scenarios this bounds simulated target CPU
  int64_t runs_used = 0;
  double target_cpu_used = 0.0;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  bool oracle_mode = false;

  double elapsed() const {
    return oracle_mode
               ? target_cpu_used
               : std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  bool can_run() const {
    if (max_runs >= 0 && runs_used >= max_runs) return false;
    if (max_wallclock >= 0 && elapsed() >= max_wallclock) return false;
    return true;
  }
  void account(const RunResult& r) {
    ++runs_used;
    target_cpu_used += r.cpu_time;
  }
};

// Races a challenger against the incumbent along the incumbent's evaluated
// prefix: runs are capped adaptively (runtime metrics only), the challenger
// is dropped as soon as its aggregate on the shared prefix is worse, and it
// replaces the incumbent only after matching the full list with a strictly
// better aggregate. Exact ties keep the incumbent.
inline RaceDecision race_challenger(const IncumbentStats& incumbent,
                                    const Configuration& challenger, const Scenario& scenario,
                                    BudgetTracker* budget = nullptr,
                                    const RunOptions& run_opt = {}) {
  if (incumbent.evaluated.empty()) throw Error("incumbent must have at least one evaluated pair");
  RaceDecision decision;
  decision.challenger_stats.config = challenger;

  std::vector<RunResult> challenger_results;
  double incumbent_prefix_sum = 0.0;
  double challenger_spent = 0.0;

  for (size_t i = 0; i < incumbent.evaluated.size(); ++i) {
    const auto& entry = incumbent.evaluated[i];
    incumbent_prefix_sum += entry.result.status == RunStatus::Success
                                ? entry.result.cpu_time
                                : scenario.cutoff_max;
    if (budget && !budget->can_run()) return decision;  // abandoned, keep incumbent

    RunRequest req;
    req.config = challenger;
    req.instance = entry.pair.instance;
    req.seed = entry.pair.seed;
    req.cutoff = is_runtime_metric(scenario.metric)
                     ? adaptive_cap(incumbent_prefix_sum, challenger_spent,
                                    scenario.capping_multiplier, scenario.cutoff_max)
                     : scenario.cutoff_max;
    req.limits.cpu_cutoff = req.cutoff;
    req.limits.wall_cutoff = default_wall_cutoff(req.cutoff);
    req.limits.memory_limit_mib = scenario.memory_limit_mib;

    RunOptions opt = run_opt;
    opt.context.role = "challenger";
    RunResult res = run_request(req, scenario, opt);
    if (budget) budget->account(res);
    ++decision.runs_used;
    decision.target_cpu += res.cpu_time;
    challenger_spent += res.cpu_time;
    challenger_results.push_back(res);
    decision.challenger_stats.evaluated.push_back({entry.pair, res});

    std::vector<RunResult> incumbent_prefix;
    for (size_t j = 0; j <= i; ++j) incumbent_prefix.push_back(incumbent.evaluated[j].result);
    double ch_agg = aggregate_cost(challenger_results, scenario.metric, scenario.cutoff_max,
                                   scenario.worst_quality);
    double inc_agg = aggregate_cost(incumbent_prefix, scenario.metric, scenario.cutoff_max,
                                    scenario.worst_quality);
    decision.challenger_stats.aggregate = ch_agg;
    if (ch_agg > inc_agg) return decision;  // prefix dominance: drop now
  }

  if (decision.challenger_stats.aggregate < incumbent.aggregate) decision.replaced = true;
  return decision;
}

struct ConfigureOptions {
  std::string out_dir;         // when set: trajectory.csv + runs.jsonl are written here
  std::string temp_root;
  std::string tag_base;
  double grace = 2.0;
  int64_t budget_runs_override = -2;       // -2: use scenario
  double budget_wallclock_override = -2.0; // -2: use scenario
};

// One full configuration run: starts from the default configuration and
// alternates {sample challenger, race, intensify} until the budget is
// exhausted. Anytime: the trajectory's last entry is always the incumbent
// the run would return if stopped. Deterministic for a fixed run_seed and a
// deterministic target.
inline Trajectory configure(const Scenario& scenario, uint64_t run_seed,
                            const ConfigureOptions& opts = {}) {
  RngStream rng(run_seed);
  Trajectory traj;
  traj.run_seed = run_seed;

  std::optional<RunLog> log;
  std::string traj_path;
  if (!opts.out_dir.empty()) {
    std::filesystem::create_directories(opts.out_dir);
    std::string log_path = opts.out_dir + "/runs.jsonl";
    std::error_code ec;
    std::filesystem::remove(log_path, ec);
    log.emplace(log_path);
    traj_path = opts.out_dir + "/trajectory.csv";
    write_text_file(traj_path, "elapsed_s,target_cpu_s,train_cost,config_id,config_json\n");
  }

  RunOptions run_opt;
  run_opt.temp_root = opts.temp_root;
  run_opt.tag_base = opts.tag_base;
  run_opt.grace = opts.grace;
  if (log) run_opt.sink = &*log;

  BudgetTracker budget;
  budget.max_runs = opts.budget_runs_override != -2 ? opts.budget_runs_override : scenario.budget_runs;
  budget.max_wallclock = opts.budget_wallclock_override != -2.0 ? opts.budget_wallclock_override
                                                                : scenario.budget_wallclock;
  budget.oracle_mode = !scenario.oracle_landscape.empty();

  // Master pair sequence: train instances shuffled once per run; epoch e
  // re-visits each instance with a fresh seed. Every incumbent's evaluated
  // list is a prefix of this sequence.
  std::vector<std::string> order = scenario.train_instances;
  rng.shuffle(order);
  SeedSource seeds(scenario.seed_policy, scenario.deterministic, rng);
  const size_t seeds_per_instance =
      scenario.deterministic
          ? 1
          : (scenario.seed_policy.kind == SeedPolicyKind::FixedSet
                 ? std::min<size_t>(scenario.max_seeds_per_instance, scenario.seed_policy.fixed_count)
                 : static_cast<size_t>(scenario.max_seeds_per_instance));
  const size_t max_pairs = order.size() * seeds_per_instance;

  std::vector<InstanceSeedPair> pairs;
  std::set<InstanceSeedPair> seen;
  auto next_pair = [&]() -> const InstanceSeedPair* {
    if (pairs.size() >= max_pairs) return nullptr;
    size_t idx = pairs.size();
    size_t epoch = idx / order.size();
    InstanceSeedPair p{order[idx % order.size()], 0};
    p.seed = seeds.next(rng, epoch);
    int attempts = 0;
    while (seen.count(p) && attempts++ < 64) p.seed = seeds.next(rng, epoch);
    if (seen.count(p)) return nullptr;  // fixed set exhausted for this instance
    seen.insert(p);
    pairs.push_back(p);
    return &pairs.back();
  };

  auto run_incumbent_pair = [&](const Configuration& config, const InstanceSeedPair& pair,
                                const std::string& role) -> RunResult {
    // the configurator must never touch a test instance
    if (!scenario.is_train_instance(pair.instance))
      throw Error("configurator issued a non-train instance: " + pair.instance);
    RunRequest req;
    req.config = config;
    req.instance = pair.instance;
    req.seed = pair.seed;
    req.cutoff = scenario.cutoff_max;  // incumbent pairs always run uncapped
    req.limits.cpu_cutoff = req.cutoff;
    req.limits.wall_cutoff = default_wall_cutoff(req.cutoff);
    req.limits.memory_limit_mib = scenario.memory_limit_mib;
    RunOptions opt = run_opt;
    opt.context.role = role;
    RunResult res = run_request(req, scenario, opt);
    budget.account(res);
    return res;
  };

  IncumbentStats incumbent;
  incumbent.config = scenario.space.default_configuration();
  incumbent.aggregate = std::nan("");

  // Trajectory rows are appended as they happen, so an interrupted run
  // still leaves its incumbent history on disk (anytime contract).
  auto record = [&](const IncumbentStats& inc) {
    TrajectoryEntry e;
    e.elapsed_s = budget.oracle_mode ? budget.target_cpu_used : budget.elapsed();
    e.target_cpu_s = budget.target_cpu_used;
    e.config = inc.config;
    e.train_cost = inc.aggregate;
    if (!traj.entries.empty() && e.elapsed_s <= traj.entries.back().elapsed_s)
      e.elapsed_s = std::nextafter(traj.entries.back().elapsed_s,
                                   std::numeric_limits<double>::infinity());
    traj.entries.push_back(e);
    if (!traj_path.empty()) {
      std::string row = fmt_fixed(e.elapsed_s, 3) + ',' + fmt_fixed(e.target_cpu_s, 3) + ',' +
                        (std::isnan(e.train_cost) ? "nan" : fmt_fixed(e.train_cost)) + ',' +
                        e.config.id_hex() + ',' + csv_quote(config_to_json(e.config).dump());
      append_line_atomic(traj_path, row);
    }
  };

  if (budget.can_run()) {
    const InstanceSeedPair* first = next_pair();
    if (first) {
      RunResult res = run_incumbent_pair(incumbent.config, *first, "default");
      if (res.status == RunStatus::Abort) throw AbortError("default configuration run aborted");
      incumbent.evaluated.push_back({*first, res});
      incumbent.recompute(scenario.metric, scenario.cutoff_max, scenario.worst_quality);
      record(incumbent);
    }
  }

  int identical_samples = 0;
  int race_no = 0;
  while (budget.can_run() && !incumbent.evaluated.empty()) {
    Configuration challenger = sample_random_config(scenario.space, rng);
    if (challenger.id() == incumbent.config.id()) {
      if (++identical_samples >= 1000) break;  // space is (nearly) exhausted
      continue;
    }
    identical_samples = 0;
    run_opt.context.race = race_no++;
    RaceDecision decision = race_challenger(incumbent, challenger, scenario, &budget, run_opt);
    bool changed = false;
    if (decision.replaced) {
      incumbent = decision.challenger_stats;
      incumbent.recompute(scenario.metric, scenario.cutoff_max, scenario.worst_quality);
      changed = true;
    }
    // Intensification: grow the evaluated prefix by one fresh pair after
    // every finished race, defended or replaced.
    if (budget.can_run()) {
      if (const InstanceSeedPair* p = next_pair()) {
        RunResult res = run_incumbent_pair(incumbent.config, *p, "incumbent");
        incumbent.evaluated.push_back({*p, res});
        incumbent.recompute(scenario.metric, scenario.cutoff_max, scenario.worst_quality);
      }
    }
    if (changed) record(incumbent);
  }

  record(incumbent);  // terminal entry: what the run returns
  return traj;
}

}  // namespace actune
