#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <cstring>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <fcntl.h>
#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include "actune/proc.hpp"
#include "actune/util.hpp"

extern char** environ;

namespace actune {

struct ResourceLimits {
  double cpu_cutoff = 0.0;    // seconds, possibly adapted per run
  double wall_cutoff = 0.0;   // seconds
  double memory_limit_mib = 0.0;
  double grace = 2.0;         // soft-kill to hard-kill delay

  void check() const {
    if (!(cpu_cutoff > 0)) throw Error("cpu_cutoff must be > 0");
    if (wall_cutoff < cpu_cutoff) throw Error("wall_cutoff must be >= cpu_cutoff");
    if (!(grace > 0)) throw Error("grace must be > 0");
  }
};

// Wall backstop for a CPU cutoff: catches targets that sleep instead of
// compute without tripping on normal scheduling jitter.
inline double default_wall_cutoff(double cpu_cutoff) {
  return std::max(2.0 * cpu_cutoff, cpu_cutoff + 30.0);
}

enum class LimitHit { None, Cpu, Wall, Memory };

inline const char* to_string(LimitHit l) {
  switch (l) {
    case LimitHit::None: return "none";
    case LimitHit::Cpu: return "cpu";
    case LimitHit::Wall: return "wall";
    default: return "memory";
  }
}

struct RawRunOutcome {
  int exit_code = -1;          // valid when term_signal == 0
  int term_signal = 0;
  double cpu_time = 0.0;       // whole process tree, sandbox-measured
  double wall_time = 0.0;
  double max_memory_mib = 0.0;
  std::string stdout_path;
  std::string stderr_path;
  LimitHit limit_hit = LimitHit::None;
  int orphan_count_after = 0;  // tagged survivors after cleanup; 0 on success
};

struct ResourceSnapshot {
  double cpu_time = 0.0;
  double wall_time = 0.0;
  double max_memory_mib = 0.0;
  bool stale = false;  // accounting unreadable, values are last known
};

struct TerminationReport {
  std::vector<int> soft_killed;
  std::vector<int> hard_killed;
  std::vector<int> unkillable;
};

struct SpawnOptions {
  std::string workdir;
  std::string stdout_path;  // defaults to workdir/stdout.log
  std::string stderr_path;  // defaults to workdir/stderr.log
  std::map<std::string, std::string> env;
  std::string tag;  // unique per run; exported as ACTUNE_RUN_TAG
};

// One target-algorithm process tree in its own session/process group.
// Owns exactly one group; many groups may run concurrently from
// independent callers.
class ProcessGroup {
 public:
  ProcessGroup(const ProcessGroup&) = delete;
  ProcessGroup& operator=(const ProcessGroup&) = delete;
  ProcessGroup(ProcessGroup&& o) noexcept { *this = std::move(o); }
  ProcessGroup& operator=(ProcessGroup&& o) noexcept {
    leader_ = o.leader_;
    tag_ = std::move(o.tag_);
    start_ = o.start_;
    reaped_ = o.reaped_;
    o.leader_ = -1;
    cpu_max_ = o.cpu_max_;
    mem_max_ = o.mem_max_;
    return *this;
  }

  ~ProcessGroup() {
    if (leader_ > 0 && !reaped_) {
      ::kill(-leader_, SIGKILL);
      ::waitpid(leader_, nullptr, 0);
    }
  }

  static ProcessGroup spawn(const std::vector<std::string>& argv, const SpawnOptions& opt) {
    if (argv.empty()) throw AbortError("cannot spawn empty command");
    namespace fs = std::filesystem;
    fs::create_directories(opt.workdir);
    const std::string out_path =
        opt.stdout_path.empty() ? opt.workdir + "/stdout.log" : opt.stdout_path;
    const std::string err_path =
        opt.stderr_path.empty() ? opt.workdir + "/stderr.log" : opt.stderr_path;

    std::vector<std::string> env_strings;
    for (char** e = environ; *e; ++e) {
      std::string_view entry(*e);
      size_t eq = entry.find('=');
      std::string key(entry.substr(0, eq == std::string_view::npos ? entry.size() : eq));
      if (opt.env.count(key) || key == kRunTagEnv || key == "TMPDIR") continue;
      env_strings.emplace_back(entry);
    }
    for (const auto& [k, v] : opt.env) env_strings.push_back(k + "=" + v);
    env_strings.push_back(std::string(kRunTagEnv) + "=" + opt.tag);
    // point the target's own temp files into the run's local workdir
    env_strings.push_back("TMPDIR=" + opt.workdir);

    std::vector<char*> cargv;
    for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
    cargv.push_back(nullptr);
    std::vector<char*> cenv;
    for (const auto& e : env_strings) cenv.push_back(const_cast<char*>(e.c_str()));
    cenv.push_back(nullptr);

    int err_pipe[2];
    if (::pipe2(err_pipe, O_CLOEXEC) != 0) throw AbortError("pipe2 failed");

    pid_t pid = ::fork();
    if (pid < 0) {
      ::close(err_pipe[0]);
      ::close(err_pipe[1]);
      throw AbortError(std::string("fork failed: ") + std::strerror(errno));
    }
    if (pid == 0) {
      // child: new session => new process group with pgid == pid
      ::close(err_pipe[0]);
      ::setsid();
      struct rlimit no_core {0, 0};
      ::setrlimit(RLIMIT_CORE, &no_core);
      int out_fd = ::open(out_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
      int err_fd = ::open(err_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
      if (out_fd < 0 || err_fd < 0 || ::dup2(out_fd, 1) < 0 || ::dup2(err_fd, 2) < 0 ||
          ::chdir(opt.workdir.c_str()) != 0) {
        int e = errno;
        (void)!::write(err_pipe[1], &e, sizeof(e));
        ::_exit(127);
      }
      ::execve(cargv[0], cargv.data(), cenv.data());
      int e = errno;
      (void)!::write(err_pipe[1], &e, sizeof(e));
      ::_exit(127);
    }

    ::close(err_pipe[1]);
    int child_errno = 0;
    ssize_t n = ::read(err_pipe[0], &child_errno, sizeof(child_errno));
    ::close(err_pipe[0]);
    if (n > 0) {
      ::waitpid(pid, nullptr, 0);
      throw AbortError("failed to start '" + argv[0] + "': " + std::strerror(child_errno));
    }

    ProcessGroup pg;
    pg.leader_ = pid;
    pg.tag_ = opt.tag;
    pg.start_ = std::chrono::steady_clock::now();
    return pg;
  }

  int leader() const { return leader_; }
  const std::string& tag() const { return tag_; }

  // CPU time sums utime+stime of every live/zombie member plus the
  // children-times of members that reaped descendants; each dead process is
  // counted exactly once. Snapshots are monotone non-decreasing.
  ResourceSnapshot measure() const {
    std::lock_guard<std::mutex> lock(mu_);
    auto members = group_members(leader_);
    ResourceSnapshot snap;
    snap.wall_time = wall_elapsed();
    if (members.empty()) {
      snap.cpu_time = cpu_max_;
      snap.max_memory_mib = mem_max_;
      snap.stale = true;
      return snap;
    }
    uint64_t ticks = 0;
    double rss = 0.0;
    for (const auto& m : members) {
      ticks += m.utime + m.stime + m.cutime + m.cstime;
      if (m.state != 'Z') rss += proc_rss_mib(m.pid);
    }
    double cpu = static_cast<double>(ticks) / clock_ticks_per_second();
    cpu_max_ = std::max(cpu_max_, cpu);
    mem_max_ = std::max(mem_max_, rss);
    snap.cpu_time = cpu_max_;
    snap.max_memory_mib = mem_max_;
    return snap;
  }

  bool any_alive() const {
    for (const auto& m : group_members(leader_))
      if (m.state != 'Z' && m.state != 'X') return true;
    // setsid escapees are still ours to account for
    return !find_tagged_pids(tag_).empty();
  }

  // Soft-kill the whole group, escalate to SIGKILL after `grace`, then sweep
  // tagged escapees that left the group. Throws AbortError if anything is
  // still alive after 5 * grace.
  TerminationReport terminate(double grace) {
    TerminationReport report;
    std::vector<int> notified;
    for (const auto& m : group_members(leader_))
      if (m.state != 'Z') notified.push_back(m.pid);
    ::kill(-leader_, SIGTERM);
    for (int pid : find_tagged_pids(tag_)) {
      if (std::find(notified.begin(), notified.end(), pid) == notified.end()) {
        ::kill(pid, SIGTERM);
        notified.push_back(pid);
      }
    }

    auto deadline = std::chrono::steady_clock::now() +
                    std::chrono::duration<double>(grace);
    while (std::chrono::steady_clock::now() < deadline && any_alive())
      std::this_thread::sleep_for(std::chrono::milliseconds(10));

    std::vector<int> survivors = live_members_and_tagged();
    for (int pid : notified)
      if (std::find(survivors.begin(), survivors.end(), pid) == survivors.end())
        report.soft_killed.push_back(pid);

    auto hard_deadline = std::chrono::steady_clock::now() +
                         std::chrono::duration<double>(4.0 * grace);
    while (!survivors.empty()) {
      ::kill(-leader_, SIGKILL);
      for (int pid : survivors) ::kill(pid, SIGKILL);
      for (int pid : survivors)
        if (std::find(report.hard_killed.begin(), report.hard_killed.end(), pid) ==
            report.hard_killed.end())
          report.hard_killed.push_back(pid);
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
      survivors = live_members_and_tagged();
      if (survivors.empty()) break;
      if (std::chrono::steady_clock::now() > hard_deadline) {
        report.unkillable = survivors;
        std::string pids;
        for (int pid : survivors) pids += std::to_string(pid) + " ";
        throw AbortError("unkillable processes after escalation (tag " + tag_ + "): " + pids);
      }
    }
    return report;
  }

  // waitpid + rusage for the leader subtree; returns the raw wait status.
  int reap(double* rusage_cpu_seconds) {
    int status = 0;
    struct rusage ru {};
    if (::wait4(leader_, &status, 0, &ru) < 0) {
      if (rusage_cpu_seconds) *rusage_cpu_seconds = 0.0;
      reaped_ = true;
      return -1;
    }
    reaped_ = true;
    if (rusage_cpu_seconds) {
      *rusage_cpu_seconds = static_cast<double>(ru.ru_utime.tv_sec) +
                            static_cast<double>(ru.ru_utime.tv_usec) * 1e-6 +
                            static_cast<double>(ru.ru_stime.tv_sec) +
                            static_cast<double>(ru.ru_stime.tv_usec) * 1e-6;
    }
    return status;
  }

  double wall_elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  ProcessGroup() = default;

  std::vector<int> live_members_and_tagged() const {
    std::vector<int> out;
    for (const auto& m : group_members(leader_))
      if (m.state != 'Z' && m.state != 'X') out.push_back(m.pid);
    for (int pid : find_tagged_pids(tag_))
      if (std::find(out.begin(), out.end(), pid) == out.end()) out.push_back(pid);
    return out;
  }

  int leader_ = -1;
  std::string tag_;
  std::chrono::steady_clock::time_point start_;
  bool reaped_ = false;
  mutable std::mutex mu_;
  mutable double cpu_max_ = 0.0;
  mutable double mem_max_ = 0.0;
};

inline ResourceSnapshot measure_resources(const ProcessGroup& pg) { return pg.measure(); }

inline TerminationReport terminate_tree(ProcessGroup& pg, double grace) {
  return pg.terminate(grace);
}

inline constexpr double kPollIntervalSeconds = 0.05;
inline constexpr double kMemorySlackFraction = 0.05;

// Runs `command` under the given limits in its own process group, polling
// the whole tree's CPU/memory and killing the tree on any breach. Returns
// only once no group member (or tagged escapee) remains. Cutoffs are used
// exactly as given; sub-second values are honored to poll resolution.
inline RawRunOutcome execute_limited(const std::vector<std::string>& command,
                                     const ResourceLimits& limits, const std::string& workdir,
                                     const std::map<std::string, std::string>& env = {},
                                     const std::string& tag_in = {}) {
  limits.check();
  static std::atomic<uint64_t> counter{0};
  std::string tag = tag_in;
  if (tag.empty())
    tag = "acrun-" + std::to_string(::getpid()) + "-" + std::to_string(counter.fetch_add(1));

  SpawnOptions opt;
  opt.workdir = workdir;
  opt.env = env;
  opt.tag = tag;
  ProcessGroup pg = ProcessGroup::spawn(command, opt);

  const std::string watcher_path = workdir + "/watcher.log";
  std::ofstream watcher(watcher_path, std::ios::trunc);

  LimitHit hit = LimitHit::None;
  ResourceSnapshot snap;
  while (true) {
    std::this_thread::sleep_for(std::chrono::duration<double>(kPollIntervalSeconds));
    snap = pg.measure();
    watcher << fmt_fixed(snap.wall_time, 3) << ' ' << fmt_fixed(snap.cpu_time, 3) << ' '
            << fmt_fixed(snap.max_memory_mib, 1) << '\n';
    if (snap.cpu_time >= limits.cpu_cutoff) {
      hit = LimitHit::Cpu;
      break;
    }
    if (limits.memory_limit_mib > 0 && snap.max_memory_mib >= limits.memory_limit_mib) {
      hit = LimitHit::Memory;
      break;
    }
    if (snap.wall_time >= limits.wall_cutoff) {
      hit = LimitHit::Wall;
      break;
    }
    if (!pg.any_alive()) break;
  }

  try {
    pg.terminate(limits.grace);
  } catch (const AbortError& e) {
    watcher << "VERDICT limit_hit=" << to_string(hit) << " abort=\"" << e.what() << "\"\n";
    watcher.flush();
    throw;
  }

  double rusage_cpu = 0.0;
  int status = pg.reap(&rusage_cpu);

  RawRunOutcome out;
  ResourceSnapshot last = pg.measure();
  out.cpu_time = std::max(last.cpu_time, rusage_cpu);
  out.wall_time = pg.wall_elapsed();
  out.max_memory_mib = last.max_memory_mib;
  out.limit_hit = hit;
  out.stdout_path = workdir + "/stdout.log";
  out.stderr_path = workdir + "/stderr.log";
  if (status >= 0 && WIFEXITED(status)) {
    out.exit_code = WEXITSTATUS(status);
  } else if (status >= 0 && WIFSIGNALED(status)) {
    out.term_signal = WTERMSIG(status);
  }

  out.orphan_count_after = static_cast<int>(find_tagged_pids(tag).size());
  watcher << "VERDICT limit_hit=" << to_string(out.limit_hit) << " cpu=" << fmt_fixed(out.cpu_time)
          << " wall=" << fmt_fixed(out.wall_time) << " mem=" << fmt_fixed(out.max_memory_mib, 1)
          << '\n';
  watcher.flush();
  if (out.orphan_count_after > 0)
    throw AbortError("orphaned processes survived cleanup for tag " + tag);
  return out;
}

}  // namespace actune
