#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <dirent.h>
#include <unistd.h>

namespace actune {

struct ProcStat {
  int pid = 0;
  std::string comm;
  char state = '?';
  int ppid = 0;
  int pgrp = 0;
  int session = 0;
  uint64_t utime = 0, stime = 0, cutime = 0, cstime = 0;  // clock ticks
};

inline double clock_ticks_per_second() {
  static const double tck = static_cast<double>(::sysconf(_SC_CLK_TCK));
  return tck;
}

// /proc/<pid>/stat; comm may contain spaces and parentheses, so fields are
// located from the last ')'.
inline std::optional<ProcStat> read_proc_stat(int pid) {
  std::ifstream in("/proc/" + std::to_string(pid) + "/stat");
  if (!in) return std::nullopt;
  std::string content;
  std::getline(in, content);
  size_t open = content.find('(');
  size_t close = content.rfind(')');
  if (open == std::string::npos || close == std::string::npos || close < open) return std::nullopt;

  ProcStat st;
  st.pid = pid;
  st.comm = content.substr(open + 1, close - open - 1);
  std::istringstream rest(content.substr(close + 2));
  std::string tok;
  // fields after comm: state ppid pgrp session tty tpgid flags minflt cminflt
  // majflt cmajflt utime stime cutime cstime ...
  std::vector<std::string> f;
  while (rest >> tok) f.push_back(tok);
  if (f.size() < 15) return std::nullopt;
  st.state = f[0][0];
  st.ppid = std::atoi(f[1].c_str());
  st.pgrp = std::atoi(f[2].c_str());
  st.session = std::atoi(f[3].c_str());
  st.utime = std::strtoull(f[11].c_str(), nullptr, 10);
  st.stime = std::strtoull(f[12].c_str(), nullptr, 10);
  st.cutime = std::strtoull(f[13].c_str(), nullptr, 10);
  st.cstime = std::strtoull(f[14].c_str(), nullptr, 10);
  return st;
}

inline double proc_rss_mib(int pid) {
  std::ifstream in("/proc/" + std::to_string(pid) + "/statm");
  if (!in) return 0.0;
  long long total = 0, resident = 0;
  in >> total >> resident;
  static const double page_mib = static_cast<double>(::sysconf(_SC_PAGESIZE)) / (1024.0 * 1024.0);
  return static_cast<double>(resident) * page_mib;
}

inline std::vector<int> list_all_pids() {
  std::vector<int> pids;
  DIR* d = ::opendir("/proc");
  if (!d) return pids;
  while (dirent* e = ::readdir(d)) {
    if (!std::isdigit(static_cast<unsigned char>(e->d_name[0]))) continue;
    pids.push_back(std::atoi(e->d_name));
  }
  ::closedir(d);
  return pids;
}

inline std::vector<ProcStat> group_members(int pgid) {
  std::vector<ProcStat> out;
  for (int pid : list_all_pids()) {
    auto st = read_proc_stat(pid);
    if (st && st->pgrp == pgid) out.push_back(*st);
  }
  return out;
}

// True when /proc/<pid>/environ contains an entry starting with
// `key=value_prefix`. Unreadable environs (zombies, foreign processes)
// count as no match.
inline bool environ_has_prefix(int pid, const std::string& key, const std::string& value_prefix) {
  std::ifstream in("/proc/" + std::to_string(pid) + "/environ", std::ios::binary);
  if (!in) return false;
  std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string needle = key + "=" + value_prefix;
  size_t pos = 0;
  while (pos < blob.size()) {
    size_t end = blob.find('\0', pos);
    if (end == std::string::npos) end = blob.size();
    if (blob.compare(pos, needle.size(), needle) == 0) return true;
    pos = end + 1;
  }
  return false;
}

inline constexpr const char* kRunTagEnv = "ACTUNE_RUN_TAG";

// Scans the process table for live processes carrying the given run-tag
// prefix in their environment. The tag survives fork, so escapees that left
// the process group are still attributable (a target that exec()s with a
// scrubbed environment cannot be detected; that limitation is inherent to
// tag-based scanning).
inline std::vector<int> find_tagged_pids(const std::string& tag_prefix) {
  std::vector<int> out;
  const int self = ::getpid();
  for (int pid : list_all_pids()) {
    if (pid == self) continue;
    auto st = read_proc_stat(pid);
    if (!st || st->state == 'Z' || st->state == 'X') continue;
    if (environ_has_prefix(pid, kRunTagEnv, tag_prefix)) out.push_back(pid);
  }
  return out;
}

}  // namespace actune
