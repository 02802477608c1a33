#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "actune/configurator.hpp"
#include "actune/cost_matrix.hpp"
#include "actune/scenario.hpp"
#include "actune/wrapper.hpp"

namespace actune {

// Validation seeds are derived from their own fixed stream so they are
// disjoint from anything the configurator drew during training.
inline std::vector<uint64_t> validation_seeds(int k, uint64_t base = 0x76616c6964ULL) {
  std::vector<uint64_t> seeds;
  uint64_t state = base;
  for (int i = 0; i < k; ++i) seeds.push_back(splitmix64(state) >> 1);
  return seeds;
}

struct ValidationResult {
  CostMatrix matrix;
  std::vector<std::string> warnings;
};

// Runs every (config, instance, seed) cell once through the regular wrapper
// path, always with the scenario's full cutoff. Requesting several seeds for
// a deterministic target collapses to one with a warning.
inline ValidationResult validate_configs(const std::vector<Configuration>& configs,
                                         const std::vector<std::string>& instances,
                                         int seeds_per_instance, const Scenario& scenario,
                                         const RunOptions& run_opt = {}) {
  if (configs.empty()) throw Error("validate_configs: no configurations given");
  if (seeds_per_instance < 1) throw Error("validate_configs: seeds_per_instance must be >= 1");
  ValidationResult out;
  out.matrix = CostMatrix(scenario.metric, scenario.cutoff_max);

  int k = seeds_per_instance;
  if (scenario.deterministic && k > 1) {
    out.warnings.push_back("deterministic target: collapsing " + std::to_string(k) +
                           " validation seeds to 1");
    k = 1;
  }
  auto seeds = validation_seeds(k);
  if (scenario.deterministic) seeds = {0};

  for (const auto& inst : instances)
    for (uint64_t s : seeds) out.matrix.add_column({inst, s});
  for (const auto& c : configs) out.matrix.add_config(c);

  for (size_t i = 0; i < configs.size(); ++i) {
    for (size_t j = 0; j < out.matrix.cols(); ++j) {
      const auto& col = out.matrix.columns()[j];
      RunRequest req;
      req.config = configs[i];
      req.instance = col.instance;
      req.seed = col.seed;
      req.cutoff = scenario.cutoff_max;  // fixed cutoff, never adapted
      req.limits.cpu_cutoff = req.cutoff;
      req.limits.wall_cutoff = default_wall_cutoff(req.cutoff);
      req.limits.memory_limit_mib = scenario.memory_limit_mib;
      RunOptions opt = run_opt;
      opt.context.role = "validation";
      RunResult res = run_request(req, scenario, opt);
      if (res.status == RunStatus::Abort) throw AbortError("validation run aborted");
      out.matrix.set(i, j, res.status,
                     is_runtime_metric(scenario.metric)
                         ? res.cpu_time
                         : (res.quality ? *res.quality : scenario.worst_quality));
    }
  }
  return out;
}

// Best final incumbent by training aggregate; ties break toward the lowest
// run seed. Takes only training data, so test costs are unreachable here by
// construction.
inline Configuration select_best_of_n(const std::vector<Trajectory>& trajectories,
                                      const CostMatrix& train_matrix, double worst_quality = 0.0,
                                      uint64_t* winner_seed = nullptr) {
  if (trajectories.empty()) throw Error("select_best_of_n: no trajectories");
  const Configuration* best = nullptr;
  double best_cost = 0.0;
  uint64_t best_seed = 0;
  for (const auto& t : trajectories) {
    const Configuration& cand = t.final_incumbent();
    int row = train_matrix.find_config(cand);
    if (row < 0) throw Error("final incumbent missing from training matrix");
    double cost = train_matrix.row_aggregate(static_cast<size_t>(row), worst_quality);
    if (!best || cost < best_cost || (cost == best_cost && t.run_seed < best_seed)) {
      best = &cand;
      best_cost = cost;
      best_seed = t.run_seed;
    }
  }
  if (winner_seed) *winner_seed = best_seed;
  return *best;
}

struct SpearmanResult {
  double rho = 0.0;
  bool defined = false;
};

namespace detail {

// Average ranks (1-based) with ties sharing the mean of their positions.
inline std::vector<double> average_ranks(const std::vector<double>& x) {
  const size_t n = x.size();
  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(n, 0.0);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && x[idx[j + 1]] == x[idx[i]]) ++j;
    double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (size_t k = i; k <= j; ++k) ranks[idx[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace detail

// Rank correlation with average ranks for ties (Pearson on the ranks).
// Undefined when either side has zero rank variance.
inline SpearmanResult spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw Error("spearman: length mismatch");
  if (x.size() < 2) throw Error("spearman: need at least 2 points");
  auto rx = detail::average_ranks(x);
  auto ry = detail::average_ranks(y);
  const size_t n = rx.size();
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < n; ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return {0.0, false};
  return {sxy / std::sqrt(sxx * syy), true};
}

inline constexpr double kLowCorrelationThreshold = 0.5;

struct OvertuningReport {
  std::vector<std::pair<double, double>> pairs;  // (train_cost, test_cost) per config
  SpearmanResult rho_all;
  std::optional<double> subset_fraction;
  SpearmanResult rho_subset;
  std::vector<std::string> flags;
};

// Train-versus-test scatter over the same configuration set, with rank
// correlation overall and, optionally, over the best `subset` fraction by
// training cost. Low correlation flags the scenario as over-tuning prone.
inline OvertuningReport overtuning_report(const std::vector<double>& train_aggregates,
                                          const std::vector<double>& test_aggregates,
                                          std::optional<double> subset = std::nullopt) {
  if (train_aggregates.size() != test_aggregates.size())
    throw Error("overtuning_report: config sets differ");
  OvertuningReport rep;
  for (size_t i = 0; i < train_aggregates.size(); ++i)
    rep.pairs.emplace_back(train_aggregates[i], test_aggregates[i]);

  rep.rho_all = spearman(train_aggregates, test_aggregates);
  if (!rep.rho_all.defined) {
    rep.flags.push_back("rank correlation undefined (zero rank variance)");
  } else if (rep.rho_all.rho < kLowCorrelationThreshold) {
    rep.flags.push_back("low train/test correlation (rho = " + fmt_fixed(rep.rho_all.rho, 3) +
                        " < " + fmt_fixed(kLowCorrelationThreshold, 2) +
                        "): training performance is unlikely to generalize");
  }

  if (subset) {
    if (!(*subset > 0.0 && *subset <= 1.0)) throw Error("subset fraction must be in (0,1]");
    rep.subset_fraction = subset;
    size_t take = std::max<size_t>(2, static_cast<size_t>(std::llround(
                                          *subset * static_cast<double>(train_aggregates.size()))));
    take = std::min(take, train_aggregates.size());
    std::vector<size_t> idx(train_aggregates.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](size_t a, size_t b) { return train_aggregates[a] < train_aggregates[b]; });
    std::vector<double> tr, te;
    for (size_t i = 0; i < take; ++i) {
      tr.push_back(train_aggregates[idx[i]]);
      te.push_back(test_aggregates[idx[i]]);
    }
    rep.rho_subset = spearman(tr, te);
    if (rep.rho_subset.defined && rep.rho_subset.rho < kLowCorrelationThreshold) {
      rep.flags.push_back("heterogeneity: correlation among the best " +
                          fmt_fixed(*subset * 100, 0) + "% of configurations is " +
                          fmt_fixed(rep.rho_subset.rho, 3));
    }
  }
  return rep;
}

inline nlohmann::json overtuning_report_to_json(const OvertuningReport& rep) {
  nlohmann::json j;
  j["pairs"] = nlohmann::json::array();
  for (const auto& [tr, te] : rep.pairs) j["pairs"].push_back({tr, te});
  j["rho"] = rep.rho_all.defined ? nlohmann::json(rep.rho_all.rho) : nlohmann::json();
  if (rep.subset_fraction) {
    j["subset_fraction"] = *rep.subset_fraction;
    j["rho_subset"] =
        rep.rho_subset.defined ? nlohmann::json(rep.rho_subset.rho) : nlohmann::json();
  }
  j["flags"] = rep.flags;
  auto fp = machine_fingerprint();
  j["machine"] = {{"hostname", fp.hostname}, {"cpu_model", fp.cpu_model}};
  return j;
}

struct TrajectoryValidationPoint {
  double elapsed_s = 0.0;
  double test_cost = 0.0;
  std::optional<double> train_cost;
};

// Validates every incumbent of a trajectory on the given instance set(s),
// aligned to incumbent-change times; ready for median/quartile aggregation
// across independent runs.
inline std::vector<TrajectoryValidationPoint> trajectory_validation(
    const Trajectory& trajectory, const std::vector<std::string>& test_instances,
    const Scenario& scenario, int seeds_per_instance,
    const std::vector<std::string>& train_instances = {}, const RunOptions& run_opt = {}) {
  if (trajectory.entries.empty()) throw Error("trajectory_validation: empty trajectory");
  std::vector<TrajectoryValidationPoint> series;
  std::map<uint64_t, std::pair<double, std::optional<double>>> cache;
  for (const auto& entry : trajectory.entries) {
    TrajectoryValidationPoint pt;
    pt.elapsed_s = entry.elapsed_s;
    auto it = cache.find(entry.config.id());
    if (it != cache.end()) {
      pt.test_cost = it->second.first;
      pt.train_cost = it->second.second;
    } else {
      auto test_res =
          validate_configs({entry.config}, test_instances, seeds_per_instance, scenario, run_opt);
      pt.test_cost = test_res.matrix.row_aggregate(0, scenario.worst_quality);
      if (!train_instances.empty()) {
        auto train_res = validate_configs({entry.config}, train_instances, seeds_per_instance,
                                          scenario, run_opt);
        pt.train_cost = train_res.matrix.row_aggregate(0, scenario.worst_quality);
      }
      cache[entry.config.id()] = {pt.test_cost, pt.train_cost};
    }
    series.push_back(pt);
  }
  return series;
}

}  // namespace actune
