// Synthetic target algorithm used by the test and acceptance suites. The
// `honest` mode busy-loops for the landscape's runtime and prints a parsable
// result; the misbehaving modes deliberately reproduce the classic target-
// algorithm failure patterns (ignoring kill signals, escaping the process
// group, lying about runtime, wrong answers, memory hogging, crashing) so
// the sandbox and wrapper can be tested against them.

#include <cmath>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <ctime>
#include <string>
#include <vector>

#include <unistd.h>

#include "actune/config_space.hpp"
#include "actune/sat.hpp"
#include "actune/synthetic.hpp"

using namespace actune;

namespace {

double process_cpu_seconds() {
  timespec ts{};
  clock_gettime(CLOCK_PROCESS_CPUTIME_ID, &ts);
  return static_cast<double>(ts.tv_sec) + static_cast<double>(ts.tv_nsec) * 1e-9;
}

void busy_for(double seconds) {
  volatile double sink = 0.0;
  const double start = process_cpu_seconds();
  while (process_cpu_seconds() - start < seconds) {
    for (int i = 0; i < 4096; ++i) sink = sink + std::sqrt(static_cast<double>(i) + sink);
  }
}

void sleep_for(double seconds) {
  timespec ts;
  ts.tv_sec = static_cast<time_t>(seconds);
  ts.tv_nsec = static_cast<long>((seconds - static_cast<double>(ts.tv_sec)) * 1e9);
  while (nanosleep(&ts, &ts) != 0 && errno == EINTR) {}
}

[[noreturn]] void busy_forever() {
  volatile double sink = 0.0;
  for (;;) sink = sink + std::sqrt(sink + 1.0);
}

bool looks_like_cnf(const std::string& path) {
  FILE* f = std::fopen(path.c_str(), "r");
  if (!f) return false;
  char buf[64];
  bool cnf = false;
  while (std::fgets(buf, sizeof(buf), f)) {
    if (buf[0] == 'c' || buf[0] == '\n') continue;
    cnf = std::strncmp(buf, "p cnf", 5) == 0;
    break;
  }
  std::fclose(f);
  return cnf;
}

void solve_and_print(const std::string& instance) {
  Cnf cnf = parse_dimacs(instance);
  auto model = dpll_solve(cnf);
  if (model) {
    std::printf("s SATISFIABLE\n");
    std::string line = "v";
    for (int lit : *model) {
      line += " " + std::to_string(lit);
      if (line.size() > 70) {
        std::printf("%s\n", line.c_str());
        line = "v";
      }
    }
    line += " 0";
    std::printf("%s\n", line.c_str());
    std::fflush(stdout);
    std::exit(10);
  }
  std::printf("s UNSATISFIABLE\n");
  std::fflush(stdout);
  std::exit(20);
}

}  // namespace

int main(int argc, char** argv) {
  std::string mode = "honest";
  std::string landscape_path;
  std::string instance;
  uint64_t seed = 0;
  double seconds = -1.0;
  bool use_sleep = false;
  std::string emit = "auto";  // auto | done | quality | sat
  Configuration config;

  for (int i = 1; i < argc; ++i) {
    std::string arg = argv[i];
    auto next = [&](const char* what) -> std::string {
      if (i + 1 >= argc) {
        std::fprintf(stderr, "missing value for %s\n", what);
        std::exit(64);
      }
      return argv[++i];
    };
    if (arg == "--mode") {
      mode = next("--mode");
    } else if (arg == "--landscape") {
      landscape_path = next("--landscape");
    } else if (arg == "--instance") {
      instance = next("--instance");
    } else if (arg == "--seed") {
      seed = std::strtoull(next("--seed").c_str(), nullptr, 10);
    } else if (arg == "--cutoff") {
      (void)next("--cutoff");  // accepted for template compatibility; limits are enforced outside
    } else if (arg == "--seconds") {
      seconds = std::strtod(next("--seconds").c_str(), nullptr);
    } else if (arg == "--sleep") {
      use_sleep = true;
    } else if (arg == "--emit") {
      emit = next("--emit");
    } else if (arg.size() > 1 && arg[0] == '-') {
      std::string name = arg.substr(1);
      std::string value = next(name.c_str());
      char* end = nullptr;
      double d = std::strtod(value.c_str(), &end);
      if (end && *end == '\0')
        config.values[name] = d;
      else
        config.values[name] = value;
    } else {
      std::fprintf(stderr, "unexpected argument '%s'\n", arg.c_str());
      std::exit(64);
    }
  }

  double runtime = 0.05;
  if (seconds >= 0) {
    runtime = seconds;
  } else if (!landscape_path.empty()) {
    try {
      Landscape ls = load_landscape(landscape_path);
      runtime = synth_runtime(ls, config, instance, seed);
    } catch (const std::exception& e) {
      std::fprintf(stderr, "landscape error: %s\n", e.what());
      return 64;
    }
  }

  if (mode == "ignore_kill") {
    std::signal(SIGTERM, SIG_IGN);
    std::signal(SIGINT, SIG_IGN);
    busy_forever();
  }

  if (mode == "fork_escape") {
    pid_t child = fork();
    if (child == 0) {
      // detach: new session, ignore polite termination
      setsid();
      std::signal(SIGTERM, SIG_IGN);
      busy_forever();
    }
    busy_forever();
  }

  if (mode == "memory_hog") {
    std::vector<char*> blocks;
    for (;;) {
      char* block = static_cast<char*>(std::malloc(32u << 20));
      if (!block) break;
      std::memset(block, 0xab, 32u << 20);
      blocks.push_back(block);
      sleep_for(0.02);
    }
    busy_forever();
  }

  if (mode == "crash") {
    busy_for(std::min(runtime, 0.02));
    volatile int* p = nullptr;
    *p = 42;  // SIGSEGV
    return 1;
  }

  if (mode == "wrong_answer") {
    busy_for(std::min(runtime, 0.02));
    std::printf("s UNSATISFIABLE\n");
    return 20;
  }

  if (mode != "honest" && mode != "lie_runtime") {
    std::fprintf(stderr, "unknown mode '%s'\n", mode.c_str());
    return 64;
  }

  if (use_sleep)
    sleep_for(runtime);
  else
    busy_for(runtime);

  if (emit == "sat" || (emit == "auto" && !instance.empty() && looks_like_cnf(instance))) {
    solve_and_print(instance);
  }
  if (emit == "quality") {
    std::printf("%.10g\n", runtime);
    return 0;
  }
  if (mode == "lie_runtime")
    std::printf("runtime=-4.2\n");
  else
    std::printf("runtime=%.6f\n", runtime);
  std::printf("DONE\n");
  return 0;
}
