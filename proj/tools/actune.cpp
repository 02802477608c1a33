// Command-line entry point: run experiments, validate configurations, wrap a
// single target call, check scenarios, and emit health/over-tuning reports.

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "actune/configurator.hpp"
#include "actune/diagnostics.hpp"
#include "actune/evaluation.hpp"
#include "actune/json_io.hpp"
#include "actune/scenario.hpp"
#include "actune/wrapper.hpp"

namespace fs = std::filesystem;
using namespace actune;
using nlohmann::json;

namespace {

std::vector<std::string> parse_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

std::string make_experiment_tag() {
  uint64_t state = static_cast<uint64_t>(::getpid()) ^
                   static_cast<uint64_t>(std::chrono::steady_clock::now().time_since_epoch().count());
  char buf[32];
  std::snprintf(buf, sizeof(buf), "acx%012llx",
                static_cast<unsigned long long>(splitmix64(state) & 0xffffffffffffULL));
  return buf;
}

void write_experiment_json(const std::string& out_dir, const std::string& scenario_path,
                           const std::string& tag, int n_runs, uint64_t run_seed) {
  json j;
  j["tag"] = tag;
  j["scenario"] = fs::absolute(scenario_path).string();
  j["n_runs"] = n_runs;
  j["run_seed"] = run_seed;
  auto fp = machine_fingerprint();
  j["machine"] = {{"hostname", fp.hostname}, {"cpu_model", fp.cpu_model}};
  write_text_file(out_dir + "/experiment.json", j.dump(2) + "\n");
}

// Per-config aggregates out of a validation.csv, penalties re-derived from
// the scenario metric.
std::map<std::string, double> aggregates_from_csv(const std::string& path, const Scenario& sc) {
  std::map<std::string, std::pair<double, size_t>> sums;
  std::vector<std::string> order;
  auto lines = split(read_text_file(path), '\n');
  for (size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    auto f = parse_csv_line(lines[i]);
    if (f.size() < 5) throw Error(path + ": malformed row " + std::to_string(i + 1));
    RunStatus st = run_status_from(f[3]);
    double cost;
    if (!parse_double(f[4], cost)) throw Error(path + ": bad cost in row " + std::to_string(i + 1));
    double v = st == RunStatus::Success ? cost
                                        : failure_cost(sc.metric, sc.cutoff_max, sc.worst_quality);
    auto [it, fresh] = sums.try_emplace(f[0], std::make_pair(0.0, size_t{0}));
    if (fresh) order.push_back(f[0]);
    it->second.first += v;
    it->second.second += 1;
  }
  std::map<std::string, double> out;
  for (const auto& id : order) out[id] = sums[id].first / static_cast<double>(sums[id].second);
  return out;
}

std::vector<Configuration> load_configs_file(const std::string& path, const ConfigSpace& space) {
  json j = json::parse(read_text_file(path));
  std::vector<Configuration> configs;
  auto one = [&](const json& item) {
    if (item.contains("config")) return config_from_json(item.at("config"), space);
    return config_from_json(item, space);
  };
  if (j.is_array())
    for (const auto& item : j) configs.push_back(one(item));
  else
    configs.push_back(one(j));
  return configs;
}

int cmd_run(const std::string& scenario_path, const std::string& out_dir, int n_runs,
            uint64_t run_seed, int workers, const std::string& temp_root) {
  Scenario scenario = parse_scenario(scenario_path);
  fs::create_directories(out_dir);
  const std::string tag = make_experiment_tag();
  write_experiment_json(out_dir, scenario_path, tag, n_runs, run_seed);

  std::vector<std::optional<Trajectory>> results(n_runs);
  std::vector<std::string> errors(n_runs);
  std::atomic<int> next{0};
  auto work = [&]() {
    for (;;) {
      int i = next.fetch_add(1);
      if (i >= n_runs) return;
      ConfigureOptions opts;
      opts.out_dir = out_dir + "/run-" + std::to_string(i);
      opts.temp_root = temp_root;
      opts.tag_base = tag + "-w" + std::to_string(i);
      try {
        results[i] = configure(scenario, run_seed + static_cast<uint64_t>(i), opts);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < std::max(1, workers); ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();

  bool aborted = false;
  for (int i = 0; i < n_runs; ++i) {
    if (!errors[i].empty()) {
      std::fprintf(stderr, "run-%d aborted: %s\n", i, errors[i].c_str());
      aborted = true;
    }
  }
  if (aborted) return 2;

  std::vector<Trajectory> trajectories;
  for (auto& r : results) trajectories.push_back(*r);

  // Select the best final incumbent on training data only.
  std::vector<Configuration> unique;
  std::set<uint64_t> seen;
  for (const auto& t : trajectories) {
    const auto& c = t.final_incumbent();
    if (seen.insert(c.id()).second) unique.push_back(c);
  }
  RunOptions vopt;
  vopt.temp_root = temp_root;
  vopt.tag_base = tag + "-sel";
  auto val = validate_configs(unique, scenario.train_instances, scenario.validation_seeds,
                              scenario, vopt);
  write_text_file(out_dir + "/validation-train.csv", val.matrix.to_csv());
  uint64_t winner_seed = 0;
  Configuration best =
      select_best_of_n(trajectories, val.matrix, scenario.worst_quality, &winner_seed);
  double best_cost =
      val.matrix.row_aggregate(static_cast<size_t>(val.matrix.find_config(best)),
                               scenario.worst_quality);

  json inc;
  inc["id"] = best.id_hex();
  inc["run_seed"] = winner_seed;
  inc["train_cost"] = best_cost;
  inc["config"] = config_to_json(best);
  write_text_file(out_dir + "/incumbent.json", inc.dump(2) + "\n");

  for (int i = 0; i < n_runs; ++i)
    std::printf("run-%d: final train cost %s (config %s)\n", i,
                fmt_fixed(trajectories[i].final_train_cost()).c_str(),
                trajectories[i].final_incumbent().id_hex().c_str());
  std::printf("selected incumbent %s with train cost %s -> %s/incumbent.json\n",
              best.id_hex().c_str(), fmt_fixed(best_cost).c_str(), out_dir.c_str());
  return 0;
}

int cmd_validate(const std::string& scenario_path, const std::string& configs_file,
                 const std::string& set_name, int seeds, int random_n, bool include_default,
                 bool scatter, const std::string& out_dir, const std::string& temp_root,
                 uint64_t sample_seed) {
  Scenario scenario = parse_scenario(scenario_path);
  std::vector<Configuration> configs;
  if (include_default) configs.push_back(scenario.space.default_configuration());
  if (!configs_file.empty()) {
    for (auto& c : load_configs_file(configs_file, scenario.space)) configs.push_back(std::move(c));
  }
  if (random_n > 0) {
    RngStream rng(sample_seed);
    for (int i = 0; i < random_n; ++i) configs.push_back(sample_random_config(scenario.space, rng));
  }
  if (configs.empty()) {
    std::fprintf(stderr, "no configurations: pass --configs, --random or --include-default\n");
    return 2;
  }

  const bool test_set = set_name == "test";
  if (test_set && configs.size() > 1 && !scatter) {
    std::fprintf(stderr,
                 "refusing to evaluate %zu candidate configurations on the test set: selecting "
                 "among candidates by test performance peeks at the test data and biases the "
                 "estimate. Select on training data first, or pass --scatter for an explicit "
                 "train-vs-test correlation study.\n",
                 configs.size());
    return 2;
  }

  fs::create_directories(out_dir);
  if (!fs::exists(out_dir + "/experiment.json"))
    write_experiment_json(out_dir, scenario_path, make_experiment_tag(), 0, 0);

  RunOptions opt;
  opt.temp_root = temp_root;
  opt.tag_base = make_experiment_tag() + "-val";
  const auto& instances = test_set ? scenario.test_instances : scenario.train_instances;
  auto res = validate_configs(configs, instances, seeds, scenario, opt);
  for (const auto& w : res.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());

  std::string csv_path;
  if (test_set) {
    fs::create_directories(out_dir + "/test");
    csv_path = out_dir + "/test/validation-test.csv";
  } else {
    csv_path = out_dir + "/validation-train.csv";
  }
  write_text_file(csv_path, res.matrix.to_csv());

  for (size_t i = 0; i < configs.size(); ++i)
    std::printf("%s %s %s\n", configs[i].id_hex().c_str(), to_string(scenario.metric),
                fmt_fixed(res.matrix.row_aggregate(i, scenario.worst_quality)).c_str());
  std::printf("wrote %s\n", csv_path.c_str());
  return 0;
}

int cmd_wrap(const std::string& scenario_path, const std::vector<std::string>& tail,
             const std::string& temp_root) {
  Scenario scenario = parse_scenario(scenario_path);
  uint64_t seed_for_abort = 0;
  if (tail.size() >= 5) {
    unsigned long long s;
    if (parse_uint(tail[4], s)) seed_for_abort = s;
  }
  try {
    RunRequest req = parse_call(tail, scenario);
    RunOptions opt;
    opt.temp_root = temp_root;
    RunResult res = run_request(req, scenario, opt);
    std::printf("%s\n", emit_result(res).c_str());
    std::fflush(stdout);
    return 0;
  } catch (const std::exception& e) {
    RunResult res;
    res.status = RunStatus::Abort;
    res.seed = seed_for_abort;
    std::printf("%s\n", emit_result(res).c_str());
    std::fflush(stdout);
    std::fprintf(stderr, "ABORT: %s\n", e.what());
    return 2;
  }
}

int cmd_check(const std::string& scenario_path, int probe_n, uint64_t probe_seed,
              const std::string& temp_root) {
  Scenario scenario = parse_scenario(scenario_path);
  std::optional<CostMatrix> probe;
  if (probe_n > 0) {
    std::vector<std::string> insts = scenario.train_instances;
    RngStream rng(probe_seed);
    rng.shuffle(insts);
    insts.resize(std::min<size_t>(insts.size(), static_cast<size_t>(probe_n)));
    RunOptions opt;
    opt.temp_root = temp_root;
    opt.tag_base = make_experiment_tag() + "-probe";
    opt.context.role = "probe";
    auto res = validate_configs({scenario.space.default_configuration()}, insts, 1, scenario, opt);
    probe = std::move(res.matrix);
  }
  auto warnings = check_scenario(scenario, probe ? &*probe : nullptr);
  for (const auto& w : warnings)
    std::printf("warning [%s]: %s\n", w.code.c_str(), w.message.c_str());
  if (warnings.empty()) std::printf("scenario looks healthy\n");
  return warnings.empty() ? 0 : 1;
}

int cmd_health(const std::string& exp_dir) {
  std::vector<RunLogEntry> runs;
  std::vector<double> aggregates;
  for (const auto& entry : fs::directory_iterator(exp_dir)) {
    if (!entry.is_directory() || entry.path().filename().string().rfind("run-", 0) != 0) continue;
    std::string log_path = entry.path() / "runs.jsonl";
    if (fs::exists(log_path))
      for (auto& e : parse_run_log(log_path)) runs.push_back(std::move(e));
    std::string traj_path = entry.path() / "trajectory.csv";
    if (fs::exists(traj_path)) {
      auto lines = split(read_text_file(traj_path), '\n');
      for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
        if (trim(*it).empty()) continue;
        auto f = parse_csv_line(*it);
        double v;
        if (f.size() >= 3 && parse_double(f[2], v)) aggregates.push_back(v);
        break;
      }
    }
  }

  std::string tag;
  if (fs::exists(exp_dir + "/experiment.json")) {
    json j = json::parse(read_text_file(exp_dir + "/experiment.json"));
    tag = j.value("tag", "");
  }
  std::vector<int> orphans = tag.empty() ? std::vector<int>{} : scan_orphans(tag);

  HealthReport rep = experiment_health(runs, aggregates, orphans);
  write_text_file(exp_dir + "/health.json", health_to_json(rep).dump(2) + "\n");
  for (const auto& w : rep.warnings) std::printf("warning: %s\n", w.c_str());
  std::printf("runs=%zu crash_rate=%s variance_ratio=%s anomalies=%zu orphans=%zu -> %s\n",
              rep.total_runs, fmt_fixed(rep.crash_rate, 3).c_str(),
              fmt_fixed(rep.variance_ratio, 2).c_str(), rep.anomaly_count, rep.orphans.size(),
              (exp_dir + "/health.json").c_str());
  return rep.exit_code();
}

int cmd_report(const std::string& exp_dir, std::string scenario_path, double subset) {
  if (scenario_path.empty()) {
    if (!fs::exists(exp_dir + "/experiment.json"))
      throw Error("no experiment.json in " + exp_dir + "; pass --scenario");
    json j = json::parse(read_text_file(exp_dir + "/experiment.json"));
    scenario_path = j.value("scenario", "");
    if (scenario_path.empty()) throw Error("experiment.json lacks a scenario path");
  }
  Scenario scenario = parse_scenario(scenario_path);

  const std::string train_csv = exp_dir + "/validation-train.csv";
  const std::string test_csv = exp_dir + "/test/validation-test.csv";
  if (!fs::exists(train_csv) || !fs::exists(test_csv))
    throw Error("need both " + train_csv + " and " + test_csv +
                " (run `actune validate` for both sets first)");
  auto train = aggregates_from_csv(train_csv, scenario);
  auto test = aggregates_from_csv(test_csv, scenario);

  std::vector<std::string> ids;
  std::vector<double> tr, te;
  for (const auto& [id, cost] : train) {
    auto it = test.find(id);
    if (it == test.end()) continue;
    ids.push_back(id);
    tr.push_back(cost);
    te.push_back(it->second);
  }
  if (ids.size() < 2) throw Error("fewer than 2 configurations appear in both validation sets");

  auto rep = overtuning_report(tr, te, subset > 0 ? std::optional<double>(subset) : std::nullopt);
  fs::create_directories(exp_dir + "/test");
  write_text_file(exp_dir + "/test/report.json", overtuning_report_to_json(rep).dump(2) + "\n");

  std::string scatter = "config_id,train_cost,test_cost\n";
  for (size_t i = 0; i < ids.size(); ++i)
    scatter += ids[i] + "," + fmt_fixed(tr[i]) + "," + fmt_fixed(te[i]) + "\n";
  write_text_file(exp_dir + "/test/scatter.csv", scatter);

  std::printf("configs=%zu rho=%s", ids.size(),
              rep.rho_all.defined ? fmt_fixed(rep.rho_all.rho, 4).c_str() : "undefined");
  if (rep.subset_fraction)
    std::printf(" rho_best_%.0f%%=%s", *rep.subset_fraction * 100,
                rep.rho_subset.defined ? fmt_fixed(rep.rho_subset.rho, 4).c_str() : "undefined");
  std::printf(" -> %s/test/report.json\n", exp_dir.c_str());
  for (const auto& f : rep.flags) std::printf("flag: %s\n", f.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGPIPE, SIG_IGN);
  CLI::App app{"Algorithm-configuration harness: sandboxed target execution, racing "
               "configuration, validation and experiment health reports"};
  app.require_subcommand(1);

  std::string scenario_path, out_dir = "actune-out", temp_root, configs_file, set_name = "train";
  std::string exp_dir;
  int n_runs = 1, workers = 1, seeds = 1, probe_n = 0, random_n = 0;
  uint64_t run_seed = 1, sample_seed = 1;
  bool include_default = false, scatter = false;
  double subset = 0.2;

  auto* run = app.add_subcommand("run", "Run independent configuration runs and select the best");
  run->add_option("scenario", scenario_path, "scenario file")->required();
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--n-runs", n_runs, "number of independent runs")->check(CLI::PositiveNumber);
  run->add_option("--run-seed", run_seed, "first run seed; run i uses seed+i");
  run->add_option("--workers", workers, "concurrent workers")->check(CLI::PositiveNumber);
  run->add_option("--temp-root", temp_root, "temp root for run working dirs");

  auto* validate = app.add_subcommand("validate", "Evaluate configurations on train or test set");
  validate->add_option("scenario", scenario_path, "scenario file")->required();
  validate->add_option("--configs", configs_file, "JSON file with configuration(s)");
  validate->add_option("--set", set_name, "train|test")->check(CLI::IsMember({"train", "test"}));
  validate->add_option("--seeds", seeds, "seeds per instance")->check(CLI::PositiveNumber);
  validate->add_option("--random", random_n, "add N randomly sampled configurations");
  validate->add_option("--random-seed", sample_seed, "seed for --random sampling");
  validate->add_flag("--include-default", include_default, "include the default configuration");
  validate->add_flag("--scatter", scatter,
                     "explicit train-vs-test correlation study (lifts the one-config test guard)");
  validate->add_option("--out", out_dir, "output directory");
  validate->add_option("--temp-root", temp_root, "temp root for run working dirs");

  auto* wrap = app.add_subcommand(
      "wrap", "Run one target call from wire format v1: <instance> <instance_info> <cutoff> "
              "<runlength> <seed> [-param value]...");
  wrap->add_option("scenario", scenario_path, "scenario file")->required();
  wrap->add_option("--temp-root", temp_root, "temp root for run working dirs");
  wrap->allow_extras();

  auto* check = app.add_subcommand("check", "Static scenario sanity checks");
  check->add_option("scenario", scenario_path, "scenario file")->required();
  check->add_option("--probe", probe_n, "run the default config on N random train instances");
  check->add_option("--probe-seed", sample_seed, "seed for probe instance sampling");
  check->add_option("--temp-root", temp_root, "temp root for run working dirs");

  auto* health = app.add_subcommand("health", "Experiment health report from run logs");
  health->add_option("dir", exp_dir, "experiment output directory")->required();

  auto* report = app.add_subcommand("report", "Train/test over-tuning report from validation CSVs");
  report->add_option("dir", exp_dir, "experiment output directory")->required();
  report->add_option("--scenario", scenario_path, "scenario file (default: from experiment.json)");
  report->add_option("--subset", subset, "also correlate the best fraction by train cost (0=off)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(scenario_path, out_dir, n_runs, run_seed, workers, temp_root);
    if (validate->parsed())
      return cmd_validate(scenario_path, configs_file, set_name, seeds, random_n, include_default,
                          scatter, out_dir, temp_root, sample_seed);
    if (wrap->parsed()) {
      std::vector<std::string> tail = wrap->remaining();
      return cmd_wrap(scenario_path, tail, temp_root);
    }
    if (check->parsed()) return cmd_check(scenario_path, probe_n, sample_seed, temp_root);
    if (health->parsed()) return cmd_health(exp_dir);
    if (report->parsed()) return cmd_report(exp_dir, scenario_path, subset);
  } catch (const AbortError& e) {
    std::fprintf(stderr, "ABORT: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
