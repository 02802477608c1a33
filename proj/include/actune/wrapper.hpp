#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "actune/diagnostics.hpp"
#include "actune/json_io.hpp"
#include "actune/request.hpp"
#include "actune/run_result.hpp"
#include "actune/sandbox.hpp"
#include "actune/sat.hpp"
#include "actune/scenario.hpp"
#include "actune/synthetic.hpp"

namespace actune {

// ---------------------------------------------------------------------------
// Wire format v1
//
// Inbound:  <instance> <instance_info:ignored> <cutoff:float> <runlength:ignored>
//           <seed:uint> [-<param> <value>]...
// Outbound: RESULT status=<S> cost=<%.6f> cpu=<%.6f> wall=<%.6f> seed=<uint>
//
// One wrapper, one objective: every configurator that speaks this format gets
// byte-identical treatment for identical requests.
// ---------------------------------------------------------------------------

inline RunRequest parse_call(const std::vector<std::string>& argv, const Scenario& scenario) {
  if (argv.size() < 5)
    throw AbortError("wire format v1 needs at least 5 arguments: "
                     "<instance> <instance_info> <cutoff> <runlength> <seed>");
  RunRequest req;
  req.instance = argv[0];
  req.instance_info = argv[1];
  double cutoff;
  if (!parse_double(argv[2], cutoff)) throw AbortError("bad cutoff token '" + argv[2] + "'");
  // the cutoff is used exactly as given; never rounded, never truncated
  req.cutoff = cutoff;
  unsigned long long seed;
  if (!parse_uint(argv[4], seed)) throw AbortError("bad seed token '" + argv[4] + "'");
  req.seed = seed;

  if (!(req.cutoff > 0)) throw AbortError("cutoff must be > 0");
  if (req.cutoff > scenario.cutoff_max)
    throw AbortError("cutoff " + repr_double(req.cutoff) + " exceeds scenario cutoff_time " +
                     repr_double(scenario.cutoff_max));
  if (!scenario.is_known_instance(req.instance))
    throw AbortError("instance not in scenario instance sets: " + req.instance);

  for (size_t i = 5; i < argv.size(); i += 2) {
    const std::string& tok = argv[i];
    if (tok.size() < 2 || tok[0] != '-')
      throw AbortError("expected -<param> token, got '" + tok + "'");
    if (i + 1 >= argv.size()) throw AbortError("missing value for parameter token '" + tok + "'");
    std::string name = tok.substr(1);
    const Parameter* p = scenario.space.find(name);
    if (!p) throw AbortError("unknown parameter '" + name + "'");
    switch (p->kind) {
      case ParamKind::Real: {
        double d;
        if (!parse_double(argv[i + 1], d))
          throw AbortError("bad real value for '" + name + "': " + argv[i + 1]);
        req.config.values[name] = d;
        break;
      }
      case ParamKind::Integer: {
        long long v;
        if (!parse_int(argv[i + 1], v))
          throw AbortError("bad integer value for '" + name + "': " + argv[i + 1]);
        req.config.values[name] = static_cast<int64_t>(v);
        break;
      }
      default:
        req.config.values[name] = argv[i + 1];
    }
  }

  auto violations = validate_config(scenario.space, req.config);
  if (!violations.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& v : violations) msg += " " + v;
    throw AbortError(msg);
  }

  req.limits.cpu_cutoff = req.cutoff;
  req.limits.wall_cutoff = default_wall_cutoff(req.cutoff);
  req.limits.memory_limit_mib = scenario.memory_limit_mib;
  return req;
}

// Renders the command template into a deterministic argv. {params} expands
// each active parameter in declaration order; the expansion pattern defaults
// to `-%n %v` and can be overridden per template as {params:<pattern>}.
// The instance string is inserted verbatim.
inline std::vector<std::string> build_command(const RunRequest& request, const Scenario& scenario) {
  std::vector<std::string> out;
  for (const std::string& raw_tok : split_ws(scenario.command_template)) {
    if (raw_tok.rfind("{params", 0) == 0 && raw_tok.back() == '}') {
      std::string pattern = "-%n %v";
      if (raw_tok[7] == ':') pattern = raw_tok.substr(8, raw_tok.size() - 9);
      else if (raw_tok != "{params}")
        throw Error("unresolved placeholder '" + raw_tok + "'");
      for (const auto& p : scenario.space.parameters()) {
        auto it = request.config.values.find(p.name);
        if (it == request.config.values.end()) continue;
        std::string rendered;
        for (size_t i = 0; i < pattern.size(); ++i) {
          if (pattern[i] == '%' && i + 1 < pattern.size() && pattern[i + 1] == 'n') {
            rendered += p.name;
            ++i;
          } else if (pattern[i] == '%' && i + 1 < pattern.size() && pattern[i + 1] == 'v') {
            rendered += value_repr(it->second);
            ++i;
          } else {
            rendered.push_back(pattern[i]);
          }
        }
        for (auto& piece : split_ws(rendered)) out.push_back(piece);
      }
      continue;
    }
    std::string tok = raw_tok;
    auto replace_all = [&tok](const std::string& ph, const std::string& val) {
      size_t pos = 0;
      while ((pos = tok.find(ph, pos)) != std::string::npos) {
        tok.replace(pos, ph.size(), val);
        pos += val.size();
      }
    };
    replace_all("{instance}", request.instance);
    replace_all("{seed}", std::to_string(request.seed));
    replace_all("{cutoff}", repr_double(request.cutoff));
    // targets run with CWD inside their private workdir; {scenario_dir}
    // lets templates reference files next to the scenario portably
    replace_all("{scenario_dir}", scenario.scenario_dir);
    if (size_t ob = tok.find('{'); ob != std::string::npos) {
      size_t cb = tok.find('}', ob);
      throw Error("unresolved placeholder '" +
                  (cb == std::string::npos ? tok.substr(ob) : tok.substr(ob, cb - ob + 1)) + "'");
    }
    out.push_back(tok);
  }
  if (out.empty()) throw Error("empty command template");
  return out;
}

struct PartialResult {
  RunStatus status = RunStatus::Crashed;
  std::optional<double> quality;
  std::optional<double> claimed_runtime;
  SolutionClaim claim;
  std::string detail;
};

namespace detail {

inline std::optional<double> scan_claimed_runtime(const std::string& output) {
  size_t pos = output.find("runtime=");
  if (pos == std::string::npos) return std::nullopt;
  const char* start = output.c_str() + pos + 8;
  char* end = nullptr;
  double v = std::strtod(start, &end);
  if (end == start) return std::nullopt;
  return v;
}

}  // namespace detail

// Maps raw target output to a status plus optional quality/solution claim.
// Built-in hooks: "quality" (stdout is a single float), "sat"
// (SAT-competition s/v lines), "exitcode" (exit 0 means success). Any other
// name is run as an external executable: it gets the stdout path as argv[1]
// and must print `status [quality] [answer]`. Hook failures of any kind
// become CRASHED; they never take the harness down.
inline PartialResult interpret_output(const std::string& stdout_path,
                                      const std::string& stderr_path, int exit_code,
                                      int term_signal, const std::string& parser_hook) {
  (void)stderr_path;
  PartialResult pr;
  try {
    std::string output = std::filesystem::exists(stdout_path) ? read_text_file(stdout_path) : "";
    pr.claimed_runtime = detail::scan_claimed_runtime(output);

    if (parser_hook == "quality") {
      double q;
      if (parse_double(trim(output), q) && std::isfinite(q)) {
        pr.status = RunStatus::Success;
        pr.quality = q;
      } else {
        pr.status = RunStatus::Crashed;
        pr.detail = "output is not a single finite number";
      }
    } else if (parser_hook == "sat") {
      pr.claim = parse_solver_claim(output);
      if (pr.claim.kind == SolutionClaim::Kind::None) {
        pr.status = RunStatus::Crashed;
        pr.detail = term_signal != 0
                        ? "terminated by signal " + std::to_string(term_signal)
                        : "no s-line in solver output";
      } else {
        pr.status = RunStatus::Success;
      }
    } else if (parser_hook == "exitcode" || parser_hook.empty()) {
      if (term_signal != 0) {
        pr.status = RunStatus::Crashed;
        pr.detail = "terminated by signal " + std::to_string(term_signal);
      } else if (exit_code == 0) {
        pr.status = RunStatus::Success;
      } else {
        pr.status = RunStatus::Crashed;
        pr.detail = "nonzero exit code " + std::to_string(exit_code);
      }
    } else {
      // external hook executable
      std::string hook_dir = std::filesystem::path(stdout_path).parent_path() / "hook";
      ResourceLimits hook_limits{30.0, 60.0, 1024.0, 2.0};
      RawRunOutcome hr = execute_limited({parser_hook, stdout_path}, hook_limits, hook_dir);
      std::string line = trim(read_text_file(hr.stdout_path));
      auto toks = split_ws(line);
      if (toks.empty()) throw Error("hook printed nothing");
      pr.status = run_status_from(toks[0]);
      if (toks.size() > 1) {
        double q;
        if (parse_double(toks[1], q)) pr.quality = q;
      }
      if (toks.size() > 2) {
        if (toks[2] == "SAT") pr.claim.kind = SolutionClaim::Kind::Sat;
        else if (toks[2] == "UNSAT") pr.claim.kind = SolutionClaim::Kind::Unsat;
      }
    }
  } catch (const std::exception& e) {
    pr = PartialResult{};
    pr.status = RunStatus::Crashed;
    pr.detail = std::string("output hook failed: ") + e.what();
  }
  return pr;
}

// Exactly one standardized line per run; everything else the harness knows
// goes to logs, never to this stream.
inline std::string emit_result(const RunResult& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "RESULT status=%s cost=%.6f cpu=%.6f wall=%.6f seed=%llu",
                to_string(r.status), r.cost, r.cpu_time, r.wall_time,
                static_cast<unsigned long long>(r.seed));
  return buf;
}

struct RunContext {
  std::string role = "adhoc";  // default | challenger | incumbent | validation | adhoc
  int race = -1;               // race number within a configuration run
};

// Append-only JSONL sink; one line per target run, written atomically.
class RunLog {
 public:
  explicit RunLog(std::string path) : path_(std::move(path)) {}

  void log(const RunRequest& req, const RunResult& res, const RunContext& ctx) const {
    nlohmann::json j;
    j["role"] = ctx.role;
    if (ctx.race >= 0) j["race"] = ctx.race;
    j["instance"] = req.instance;
    j["seed"] = req.seed;
    j["cutoff"] = req.cutoff;
    j["config_id"] = req.config.id_hex();
    j["config"] = config_to_json(req.config);
    j["status"] = to_string(res.status);
    j["cost"] = res.cost;
    j["cpu"] = res.cpu_time;
    j["wall"] = res.wall_time;
    j["mem"] = res.max_memory_mib;
    j["exit"] = res.exit_code;
    j["signal"] = res.term_signal;
    j["wrong_answer"] = res.wrong_answer;
    j["anomalies"] = res.anomalies;
    if (!res.artifacts_dir.empty()) j["artifacts"] = res.artifacts_dir;
    append_line_atomic(path_, j.dump());
  }

  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct RunOptions {
  std::string temp_root;       // overrides scenario temp policy when set
  std::string tag_base;        // experiment tag; runs get tag_base-r<counter>
  const RunLog* sink = nullptr;
  RunContext context;
  double grace = 2.0;
};

inline std::string resolve_temp_root(const Scenario& sc, const std::string& override_root) {
  if (!override_root.empty()) return override_root;
  if (sc.temp_dir_policy == TempDirPolicy::FixedPath && !sc.temp_dir_path.empty())
    return sc.temp_dir_path;
  if (const char* env = std::getenv("ACTUNE_TMPDIR"); env && *env) return env;
  if (const char* env = std::getenv("TMPDIR"); env && *env) return env;
  return "/tmp";
}

namespace detail {

inline const Landscape& cached_landscape(const std::string& path) {
  static std::mutex mu;
  static std::map<std::string, Landscape> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(path);
  if (it == cache.end()) it = cache.emplace(path, load_landscape(path)).first;
  return it->second;
}

inline uint64_t next_run_counter() {
  static std::atomic<uint64_t> counter{0};
  return counter.fetch_add(1);
}

inline ReferenceAnswer reference_for(const Scenario& sc, const std::string& instance) {
  if (sc.answers_file.empty()) return ReferenceAnswer::Unknown;
  static std::mutex mu;
  static std::map<std::string, std::map<std::string, ReferenceAnswer>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(sc.answers_file);
  if (it == cache.end()) it = cache.emplace(sc.answers_file, parse_answers_file(sc.answers_file)).first;
  const auto& answers = it->second;
  std::string base = std::filesystem::path(instance).filename().string();
  if (auto a = answers.find(base); a != answers.end()) return a->second;
  if (auto a = answers.find(instance); a != answers.end()) return a->second;
  return ReferenceAnswer::Unknown;
}

}  // namespace detail

// Executes one request end to end: build command, run under the sandbox (or
// the in-process oracle for oracle scenarios), parse and verify output, and
// assign the cost. This is the only execution path in the project; the CLI
// `wrap` subcommand and the configurator both land here.
inline RunResult run_request(const RunRequest& request, const Scenario& scenario,
                             const RunOptions& opt = {}) {
  if (!(request.cutoff > 0) || request.cutoff > scenario.cutoff_max)
    throw AbortError("run request cutoff " + repr_double(request.cutoff) +
                     " outside (0, " + repr_double(scenario.cutoff_max) + "]");
  if (!scenario.is_known_instance(request.instance))
    throw AbortError("instance not in scenario instance sets: " + request.instance);
  {
    auto violations = validate_config(scenario.space, request.config);
    if (!violations.empty()) {
      std::string msg = "invalid configuration:";
      for (const auto& v : violations) msg += " " + v;
      throw AbortError(msg);
    }
  }

  RunResult res;
  res.seed = request.seed;

  RawRunOutcome raw;
  PartialResult pr;
  std::string workdir;

  if (!scenario.oracle_landscape.empty()) {
    // In-process oracle: simulate the run from the closed-form landscape.
    const Landscape& ls = detail::cached_landscape(scenario.oracle_landscape);
    double t = synth_runtime(ls, request.config, request.instance, request.seed);
    raw.exit_code = 0;
    raw.limit_hit = t >= request.cutoff ? LimitHit::Cpu : LimitHit::None;
    raw.cpu_time = std::min(t, request.cutoff);
    raw.wall_time = raw.cpu_time;
    raw.max_memory_mib = 0.0;
    pr.status = RunStatus::Success;
    pr.quality = t;
  } else {
    const std::string tag =
        (opt.tag_base.empty() ? "acx" + std::to_string(::getpid()) : opt.tag_base) + "-r" +
        std::to_string(detail::next_run_counter());
    workdir = resolve_temp_root(scenario, opt.temp_root) + "/acrun-" + tag;
    ResourceLimits limits = request.limits;
    limits.grace = opt.grace;
    if (limits.cpu_cutoff <= 0) limits.cpu_cutoff = request.cutoff;
    if (limits.memory_limit_mib <= 0) limits.memory_limit_mib = scenario.memory_limit_mib;
    if (limits.wall_cutoff < limits.cpu_cutoff)
      limits.wall_cutoff = default_wall_cutoff(limits.cpu_cutoff);
    auto argv = build_command(request, scenario);
    raw = execute_limited(argv, limits, workdir, {}, tag);
    pr = interpret_output(raw.stdout_path, raw.stderr_path, raw.exit_code, raw.term_signal,
                          scenario.parser_hook);
  }

  res.cpu_time = std::max(0.0, raw.cpu_time);
  res.wall_time = std::max(0.0, raw.wall_time);
  res.max_memory_mib = raw.max_memory_mib;
  res.exit_code = raw.exit_code;
  res.term_signal = raw.term_signal;
  res.quality = pr.quality;
  res.claimed_runtime = pr.claimed_runtime;
  res.detail = pr.detail;

  if (raw.limit_hit == LimitHit::Cpu || raw.limit_hit == LimitHit::Wall) {
    res.status = RunStatus::Timeout;
  } else if (raw.limit_hit == LimitHit::Memory) {
    res.status = RunStatus::Memout;
  } else {
    res.status = pr.status;
    if (res.status == RunStatus::Success && scenario.solution_checking &&
        pr.claim.kind != SolutionClaim::Kind::None) {
      try {
        Cnf cnf = parse_dimacs(request.instance);
        auto verdict =
            verify_sat_solution(cnf, pr.claim, detail::reference_for(scenario, request.instance));
        if (verdict.verdict == VerificationVerdict::V::WrongAnswer) {
          res.status = RunStatus::Crashed;
          res.wrong_answer = true;
          res.detail = "wrong answer: " + verdict.detail;
        }
      } catch (const std::exception& e) {
        res.status = RunStatus::Crashed;
        res.detail = std::string("solution check failed: ") + e.what();
      }
    }
  }

  // Cost: runtime metrics always use the sandbox's CPU time; every
  // unsuccessful run gets the metric's worst value.
  if (res.status == RunStatus::Success) {
    if (is_runtime_metric(scenario.metric)) {
      res.cost = res.cpu_time;
    } else if (res.quality) {
      res.cost = *res.quality;
    } else {
      res.status = RunStatus::Crashed;
      res.detail = "quality metric but no quality parsed";
      res.cost = failure_cost(scenario.metric, scenario.cutoff_max, scenario.worst_quality);
    }
  }
  if (res.status != RunStatus::Success) {
    res.cost = failure_cost(scenario.metric, scenario.cutoff_max, scenario.worst_quality);
  }

  res.anomalies = sanity_check_result(res, request);

  if (!workdir.empty()) {
    if (res.status == RunStatus::Success && res.anomalies.empty()) {
      std::error_code ec;
      std::filesystem::remove_all(workdir, ec);
    } else {
      res.artifacts_dir = workdir;
    }
  }

  if (opt.sink) opt.sink->log(request, res, opt.context);
  return res;
}

}  // namespace actune
