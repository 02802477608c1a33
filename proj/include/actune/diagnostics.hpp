#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "json.hpp"

#include "actune/proc.hpp"
#include "actune/request.hpp"
#include "actune/run_result.hpp"
#include "actune/util.hpp"

namespace actune {

// The monitoring signs themselves are standard; these cut points are
// project defaults, overridable per call and recorded in every report.
struct HealthThresholds {
  double wall_over_cpu = 3.0;
  double wall_check_floor_seconds = 1.0;
  double crash_rate = 0.25;
  double run_variance_ratio = 5.0;
};

// Pure per-run plausibility checks over a finished result. Flags are
// diagnostics, never errors; cost assignment has already ignored anything
// the target claimed about itself.
inline std::vector<std::string> sanity_check_result(const RunResult& result,
                                                    const RunRequest& request,
                                                    const HealthThresholds& th = {}) {
  std::vector<std::string> anomalies;

  if (result.claimed_runtime &&
      (!std::isfinite(*result.claimed_runtime) || *result.claimed_runtime < 0)) {
    anomalies.push_back("faulty self-reported runtime (" + repr_double(*result.claimed_runtime) +
                        "); value ignored for cost");
  }
  if (result.quality && !std::isfinite(*result.quality)) {
    anomalies.push_back("non-finite reported quality");
  }
  if (request.cutoff > 0 &&
      result.cpu_time > request.cutoff + request.limits.grace + kPollIntervalSeconds) {
    anomalies.push_back("cutoff not respected: cpu " + fmt_fixed(result.cpu_time, 3) + "s > " +
                        repr_double(request.cutoff) + "s cutoff");
  }
  if (request.limits.memory_limit_mib > 0 &&
      result.max_memory_mib >
          request.limits.memory_limit_mib * (1.0 + kMemorySlackFraction)) {
    anomalies.push_back("memory limit not respected: " + fmt_fixed(result.max_memory_mib, 1) +
                        " MiB > " + repr_double(request.limits.memory_limit_mib) + " MiB limit");
  }
  if (result.status == RunStatus::Success && result.wall_time >= th.wall_check_floor_seconds &&
      result.wall_time > th.wall_over_cpu * result.cpu_time) {
    anomalies.push_back("wallclock (" + fmt_fixed(result.wall_time, 2) +
                        "s) far exceeds CPU time (" + fmt_fixed(result.cpu_time, 2) + "s)");
  }
  return anomalies;
}

// Live process-table scan for survivors of this experiment's runs, matched
// by the environment tag the sandbox plants. Empty is the healthy state.
inline std::vector<int> scan_orphans(const std::string& experiment_tag) {
  return find_tagged_pids(experiment_tag);
}

// One parsed runs.jsonl entry, reduced to what health checks consume.
struct RunLogEntry {
  std::string role;  // default | challenger | incumbent | validation
  RunStatus status = RunStatus::Abort;
  std::vector<std::string> anomalies;
};

inline RunLogEntry run_log_entry_from_json(const nlohmann::json& j) {
  RunLogEntry e;
  e.role = j.value("role", "adhoc");
  e.status = run_status_from(j.at("status").get<std::string>());
  if (j.contains("anomalies"))
    for (const auto& a : j.at("anomalies")) e.anomalies.push_back(a.get<std::string>());
  return e;
}

inline std::vector<RunLogEntry> parse_run_log(const std::string& path) {
  std::vector<RunLogEntry> out;
  for (const auto& line : split(read_text_file(path), '\n')) {
    std::string t = trim(line);
    if (t.empty()) continue;
    out.push_back(run_log_entry_from_json(nlohmann::json::parse(t)));
  }
  return out;
}

struct HealthReport {
  size_t total_runs = 0;
  size_t challenger_runs = 0;
  size_t challenger_crashes = 0;
  double crash_rate = 0.0;
  double variance_ratio = 1.0;  // max/min of final training aggregates
  size_t anomaly_count = 0;
  std::vector<std::string> warnings;
  std::vector<int> orphans;
  HealthThresholds thresholds;

  // 0 healthy, 1 aggregate warnings, 2 per-run anomalies or orphans
  int exit_code() const {
    if (anomaly_count > 0 || !orphans.empty()) return 2;
    return warnings.empty() ? 0 : 1;
  }
};

inline HealthReport experiment_health(const std::vector<RunLogEntry>& runs,
                                      const std::vector<double>& final_train_aggregates,
                                      const std::vector<int>& orphans = {},
                                      const HealthThresholds& th = {}) {
  HealthReport rep;
  rep.thresholds = th;
  rep.orphans = orphans;
  rep.total_runs = runs.size();
  for (const auto& r : runs) {
    rep.anomaly_count += r.anomalies.size();
    if (r.role == "challenger") {
      ++rep.challenger_runs;
      if (r.status == RunStatus::Crashed) ++rep.challenger_crashes;
    }
  }
  if (rep.challenger_runs > 0) {
    rep.crash_rate =
        static_cast<double>(rep.challenger_crashes) / static_cast<double>(rep.challenger_runs);
    if (rep.crash_rate > th.crash_rate) {
      rep.warnings.push_back("crash rate " + fmt_fixed(rep.crash_rate * 100, 1) +
                             "% of challenger runs crashed (threshold " +
                             fmt_fixed(th.crash_rate * 100, 0) + "%)");
    }
  }
  if (final_train_aggregates.size() >= 2) {
    double lo = final_train_aggregates[0], hi = final_train_aggregates[0];
    for (double v : final_train_aggregates) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (lo > 0) {
      rep.variance_ratio = hi / lo;
      if (rep.variance_ratio > th.run_variance_ratio) {
        rep.warnings.push_back(
            "final training aggregates of independent runs differ by a factor of " +
            fmt_fixed(rep.variance_ratio, 1) + " (threshold " +
            fmt_fixed(th.run_variance_ratio, 0) + "); the runs only differ in their seeds");
      }
    }
  }
  if (!orphans.empty()) {
    std::string pids;
    for (int p : orphans) pids += std::to_string(p) + " ";
    rep.warnings.push_back("surviving tagged processes: " + pids);
  }
  return rep;
}

inline nlohmann::json health_to_json(const HealthReport& rep) {
  nlohmann::json j;
  j["total_runs"] = rep.total_runs;
  j["challenger_runs"] = rep.challenger_runs;
  j["challenger_crashes"] = rep.challenger_crashes;
  j["crash_rate"] = rep.crash_rate;
  j["variance_ratio"] = rep.variance_ratio;
  j["anomaly_count"] = rep.anomaly_count;
  j["warnings"] = rep.warnings;
  j["orphans"] = rep.orphans;
  j["thresholds"] = {{"wall_over_cpu", rep.thresholds.wall_over_cpu},
                     {"crash_rate", rep.thresholds.crash_rate},
                     {"variance_ratio", rep.thresholds.run_variance_ratio}};
  j["exit_code"] = rep.exit_code();
  return j;
}

}  // namespace actune
