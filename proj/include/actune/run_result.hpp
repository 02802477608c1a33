#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "actune/util.hpp"

namespace actune {

enum class RunStatus { Success, Timeout, Memout, Crashed, Abort };

inline const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Success: return "SUCCESS";
    case RunStatus::Timeout: return "TIMEOUT";
    case RunStatus::Memout: return "MEMOUT";
    case RunStatus::Crashed: return "CRASHED";
    default: return "ABORT";
  }
}

inline RunStatus run_status_from(const std::string& s) {
  if (s == "SUCCESS") return RunStatus::Success;
  if (s == "TIMEOUT") return RunStatus::Timeout;
  if (s == "MEMOUT") return RunStatus::Memout;
  if (s == "CRASHED") return RunStatus::Crashed;
  if (s == "ABORT") return RunStatus::Abort;
  throw Error("unknown run status: " + s);
}

enum class Metric { RuntimePar10, RuntimePar1, Quality };

inline const char* to_string(Metric m) {
  switch (m) {
    case Metric::RuntimePar10: return "runtime_par10";
    case Metric::RuntimePar1: return "runtime_par1";
    default: return "quality";
  }
}

inline Metric metric_from(const std::string& s) {
  if (s == "runtime_par10") return Metric::RuntimePar10;
  if (s == "runtime_par1") return Metric::RuntimePar1;
  if (s == "quality") return Metric::Quality;
  throw Error("unknown metric: " + s);
}

inline bool is_runtime_metric(Metric m) { return m != Metric::Quality; }

// Cost charged to any unsuccessful run; for penalized-runtime metrics this is
// the penalty factor times the scenario cutoff, so minimizing cost can never
// favor configurations that crash or time out.
inline double failure_cost(Metric m, double kappa_max, double worst_quality) {
  switch (m) {
    case Metric::RuntimePar10: return 10.0 * kappa_max;
    case Metric::RuntimePar1: return kappa_max;
    default: return worst_quality;
  }
}

// Standardized outcome of one target-algorithm invocation. cpu_time and
// wall_time come from the sandbox's own accounting, never from anything the
// target printed.
struct RunResult {
  RunStatus status = RunStatus::Abort;
  double cost = 0.0;
  double cpu_time = 0.0;
  double wall_time = 0.0;
  double max_memory_mib = 0.0;
  uint64_t seed = 0;
  int exit_code = 0;
  int term_signal = 0;
  std::vector<std::string> anomalies;
  std::string artifacts_dir;  // retained temp dir on failure, empty otherwise

  std::optional<double> quality;          // parsed by the output hook
  std::optional<double> claimed_runtime;  // target's self-reported runtime, diagnostic only
  bool wrong_answer = false;
  std::string detail;
};

}  // namespace actune
