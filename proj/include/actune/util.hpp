#pragma once

#include <cerrno>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <fcntl.h>
#include <unistd.h>

namespace actune {

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Unrecoverable harness-level failure; maps to status=ABORT at the wrapper
// boundary and a nonzero process exit.
struct AbortError : Error {
  explicit AbortError(const std::string& what) : Error(what) {}
};

struct ParseError : Error {
  std::string path;
  int line;
  ParseError(std::string p, int ln, const std::string& what)
      : Error(p + ":" + std::to_string(ln) + ": " + what), path(std::move(p)), line(ln) {}
};

inline std::string trim(std::string_view s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  size_t e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(s.substr(start));
      break;
    }
    out.emplace_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

inline std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream is{std::string(s)};
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

// Shortest decimal string that round-trips the double (so 0.8 stays "0.8").
inline std::string repr_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

inline std::string fmt_fixed(double v, int precision = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
  return buf;
}

inline bool parse_double(std::string_view s, double& out) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  char* end = nullptr;
  errno = 0;
  double v = std::strtod(t.c_str(), &end);
  if (errno != 0 || end != t.c_str() + t.size()) return false;
  out = v;
  return true;
}

inline bool parse_int(std::string_view s, long long& out) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  char* end = nullptr;
  errno = 0;
  long long v = std::strtoll(t.c_str(), &end, 10);
  if (errno != 0 || end != t.c_str() + t.size()) return false;
  out = v;
  return true;
}

inline bool parse_uint(std::string_view s, unsigned long long& out) {
  const std::string t = trim(s);
  if (t.empty() || t[0] == '-') return false;
  char* end = nullptr;
  errno = 0;
  unsigned long long v = std::strtoull(t.c_str(), &end, 10);
  if (errno != 0 || end != t.c_str() + t.size()) return false;
  out = v;
  return true;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write file: " + path);
  out << content;
  out.flush();
  if (!out) throw Error("write failed: " + path);
}

// Appends one line with a single write(2) on an O_APPEND descriptor, so
// concurrent writers never interleave within a line.
inline void append_line_atomic(const std::string& path, std::string_view line) {
  int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
  if (fd < 0) throw Error("cannot open for append: " + path);
  std::string buf(line);
  buf.push_back('\n');
  ssize_t n = ::write(fd, buf.data(), buf.size());
  int saved = errno;
  ::close(fd);
  if (n != static_cast<ssize_t>(buf.size()))
    throw Error("append failed: " + path + ": " + std::strerror(saved));
}

inline std::string csv_quote(std::string_view field) {
  if (field.find_first_of(",\"\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    out.push_back(c);
    if (c == '"') out.push_back('"');
  }
  out.push_back('"');
  return out;
}

struct MachineFingerprint {
  std::string hostname;
  std::string cpu_model;
};

// Recorded in reports so results can be attributed to the machine that
// produced them; configured-performance rankings are hardware dependent.
inline MachineFingerprint machine_fingerprint() {
  MachineFingerprint fp;
  char host[256] = {0};
  if (::gethostname(host, sizeof(host) - 1) == 0) fp.hostname = host;
  std::ifstream cpuinfo("/proc/cpuinfo");
  std::string line;
  while (std::getline(cpuinfo, line)) {
    if (line.rfind("model name", 0) == 0) {
      size_t colon = line.find(':');
      if (colon != std::string::npos) fp.cpu_model = trim(line.substr(colon + 1));
      break;
    }
  }
  return fp;
}

}  // namespace actune
