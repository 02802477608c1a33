#include <catch2/catch_amalgamated.hpp>

#include "actune/scenario.hpp"

#include "support/test_support.hpp"

using namespace actune;
using testsup::Scratch;

namespace {

std::string minimal_scenario_text(const std::string& extra = "") {
  return "command = solver {instance} {seed} {params}\n"
         "pcs_file = space.pcs\n"
         "train_instance_file = train.txt\n"
         "test_instance_file = test.txt\n"
         "cutoff_time = 300\n"
         "memory_limit = 2048\n"
         "metric = runtime_par10\n"
         "budget_runs = 100\n" +
         extra;
}

Scratch& prepare(Scratch& scratch, int train_n = 2, int test_n = 2) {
  write_text_file(scratch.path("space.pcs"), "x real [0,1] default 0.5\n");
  auto train = testsup::make_instances(scratch.dir() / "instances", "train", train_n);
  auto test = testsup::make_instances(scratch.dir() / "instances", "test", test_n);
  testsup::write_instance_list(scratch.dir() / "train.txt", scratch.dir() / "instances", train);
  testsup::write_instance_list(scratch.dir() / "test.txt", scratch.dir() / "instances", test);
  return scratch;
}

}  // namespace

TEST_CASE("minimal scenario parses with direct field mapping") {
  Scratch scratch("scenario");
  prepare(scratch);
  write_text_file(scratch.path("scenario.txt"), minimal_scenario_text());
  Scenario sc = parse_scenario(scratch.path("scenario.txt"));
  CHECK(sc.cutoff_max == 300.0);
  CHECK(sc.memory_limit_mib == 2048.0);
  CHECK(sc.metric == Metric::RuntimePar10);
  CHECK(sc.budget_runs == 100);
  CHECK(sc.train_instances.size() == 2);
  CHECK(sc.test_instances.size() == 2);
  CHECK(sc.space.size() == 1);
  // instance paths resolved relative to the scenario directory
  CHECK(sc.train_instances[0].find(scratch.dir().string()) == 0);
}

TEST_CASE("scenario parsed via a relative path still yields absolute instance strings") {
  Scratch scratch("rel-parse");
  prepare(scratch);
  write_text_file(scratch.path("scenario.txt"), minimal_scenario_text());
  auto cwd = std::filesystem::current_path();
  std::filesystem::current_path(scratch.dir());
  Scenario sc = parse_scenario("scenario.txt");
  std::filesystem::current_path(cwd);
  REQUIRE(!sc.train_instances.empty());
  CHECK(sc.train_instances[0].front() == '/');
  CHECK(sc.scenario_dir.front() == '/');
  CHECK(sc.pcs_file.front() == '/');
}

TEST_CASE("train/test overlap is rejected") {
  Scratch scratch("overlap");
  prepare(scratch);
  // make test list share one instance with train
  write_text_file(scratch.path("test.txt"),
                  (scratch.dir() / "instances" / "train_0000").string() + "\n");
  write_text_file(scratch.path("scenario.txt"), minimal_scenario_text());
  CHECK_THROWS_WITH(parse_scenario(scratch.path("scenario.txt")),
                    Catch::Matchers::ContainsSubstring("train/test overlap"));
}

TEST_CASE("missing instance file fails at load time") {
  Scratch scratch("missing-inst");
  prepare(scratch);
  write_text_file(scratch.path("train.txt"),
                  (scratch.dir() / "instances" / "does_not_exist").string() + "\n");
  write_text_file(scratch.path("scenario.txt"), minimal_scenario_text());
  CHECK_THROWS_WITH(parse_scenario(scratch.path("scenario.txt")),
                    Catch::Matchers::ContainsSubstring("train instance missing"));
}

TEST_CASE("scenario parse errors name the offending key") {
  Scratch scratch("bad-keys");
  prepare(scratch);

  SECTION("missing required key") {
    write_text_file(scratch.path("scenario.txt"),
                    "command = solver {instance}\npcs_file = space.pcs\n");
    CHECK_THROWS_WITH(parse_scenario(scratch.path("scenario.txt")),
                      Catch::Matchers::ContainsSubstring("missing required key"));
  }
  SECTION("unknown key") {
    write_text_file(scratch.path("scenario.txt"), minimal_scenario_text("no_such_key = 1\n"));
    CHECK_THROWS_WITH(parse_scenario(scratch.path("scenario.txt")),
                      Catch::Matchers::ContainsSubstring("unknown key 'no_such_key'"));
  }
  SECTION("no budget at all") {
    std::string text = minimal_scenario_text();
    text.replace(text.find("budget_runs = 100\n"), 18, "");
    write_text_file(scratch.path("scenario.txt"), text);
    CHECK_THROWS_WITH(parse_scenario(scratch.path("scenario.txt")),
                      Catch::Matchers::ContainsSubstring("budget"));
  }
  SECTION("bad cutoff carries the line number") {
    std::string text = minimal_scenario_text();
    text.replace(text.find("cutoff_time = 300"), 17, "cutoff_time = 0");
    write_text_file(scratch.path("scenario.txt"), text);
    CHECK_THROWS_WITH(parse_scenario(scratch.path("scenario.txt")),
                      Catch::Matchers::ContainsSubstring(":5:"));
  }
  SECTION("quality metric requires worst_quality") {
    std::string text = minimal_scenario_text();
    text.replace(text.find("metric = runtime_par10"), 22, "metric = quality");
    write_text_file(scratch.path("scenario.txt"), text);
    CHECK_THROWS_WITH(parse_scenario(scratch.path("scenario.txt")),
                      Catch::Matchers::ContainsSubstring("worst_quality"));
  }
}

TEST_CASE("scenario round-trips through serialization") {
  Scratch scratch("roundtrip");
  prepare(scratch);
  write_text_file(scratch.path("scenario.txt"),
                  minimal_scenario_text("deterministic = true\nseed_policy = fixed:3\n"
                                        "validation_seeds = 5\nwrapper_hooks = sat\n"
                                        "solution_checking = on\ncapping_multiplier = 1.5\n"
                                        "budget_wallclock = 3600\n"));
  Scenario sc = parse_scenario(scratch.path("scenario.txt"));
  std::string serialized = to_scenario_text(sc);
  write_text_file(scratch.path("scenario2.txt"), serialized);
  Scenario sc2 = parse_scenario(scratch.path("scenario2.txt"));

  CHECK(sc.command_template == sc2.command_template);
  CHECK(sc.space == sc2.space);
  CHECK(sc.train_instances == sc2.train_instances);
  CHECK(sc.test_instances == sc2.test_instances);
  CHECK(sc.cutoff_max == sc2.cutoff_max);
  CHECK(sc.memory_limit_mib == sc2.memory_limit_mib);
  CHECK(sc.metric == sc2.metric);
  CHECK(sc.budget_runs == sc2.budget_runs);
  CHECK(sc.budget_wallclock == sc2.budget_wallclock);
  CHECK(sc.deterministic == sc2.deterministic);
  CHECK(sc.seed_policy == sc2.seed_policy);
  CHECK(sc.validation_seeds == sc2.validation_seeds);
  CHECK(sc.parser_hook == sc2.parser_hook);
  CHECK(sc.solution_checking == sc2.solution_checking);
  CHECK(sc.capping_multiplier == sc2.capping_multiplier);
  CHECK(sc.max_seeds_per_instance == sc2.max_seeds_per_instance);
}

namespace {

CostMatrix probe_matrix(const Scenario& sc, int solved, int total, double solved_cost) {
  CostMatrix m(sc.metric, sc.cutoff_max);
  m.add_config(sc.space.default_configuration());
  for (int i = 0; i < total; ++i) {
    size_t col = m.add_column({"probe_" + std::to_string(i), 0});
    if (i < solved)
      m.set(0, col, RunStatus::Success, solved_cost);
    else
      m.set(0, col, RunStatus::Timeout, 10 * sc.cutoff_max);
  }
  return m;
}

Scenario healthy_scenario(Scratch& scratch) {
  prepare(scratch, 320, 50);
  write_text_file(scratch.path("scenario.txt"),
                  minimal_scenario_text("deterministic = true\nbudget_wallclock = 100000\n"));
  return parse_scenario(scratch.path("scenario.txt"));
}

}  // namespace

TEST_CASE("check_scenario warning matrix") {
  Scratch scratch("check");
  Scenario sc = healthy_scenario(scratch);

  SECTION("healthy reference raises nothing") {
    auto probe = probe_matrix(sc, 41, 50, 2.0);  // 82% solved, generous budget
    CHECK(check_scenario(sc, &probe).empty());
  }
  SECTION("82 percent solve rate passes the 75 percent rule") {
    auto probe = probe_matrix(sc, 41, 50, 2.0);
    for (const auto& w : check_scenario(sc, &probe)) CHECK(w.code != "probe-solve-rate");
  }
  SECTION("50 percent solve rate trips the 75 percent rule") {
    auto probe = probe_matrix(sc, 25, 50, 2.0);
    bool found = false;
    for (const auto& w : check_scenario(sc, &probe))
      if (w.code == "probe-solve-rate") {
        found = true;
        CHECK(w.message.find("75%") != std::string::npos);
      }
    CHECK(found);
  }
  SECTION("budget of 100 default runtimes trips the 200 to 1000 rule") {
    Scratch s2("check-budget");
    prepare(s2, 320, 50);
    write_text_file(s2.path("scenario.txt"), minimal_scenario_text("deterministic = true\n"));
    Scenario sc2 = parse_scenario(s2.path("scenario.txt"));
    auto probe = probe_matrix(sc2, 50, 50, 2.0);
    bool found = false;
    for (const auto& w : check_scenario(sc2, &probe))
      if (w.code == "budget-rule-of-thumb") found = true;
    CHECK(found);
  }
  SECTION("small training set warns") {
    Scratch s3("check-small");
    prepare(s3, 10, 10);
    write_text_file(s3.path("scenario.txt"),
                    minimal_scenario_text("deterministic = true\nbudget_wallclock = 100000\n"));
    Scenario sc3 = parse_scenario(s3.path("scenario.txt"));
    auto warnings = check_scenario(sc3);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].code == "train-set-small");
    CHECK(warnings[0].message.find("300") != std::string::npos);
  }
  SECTION("stochastic target with a single validation seed warns") {
    Scratch s4("check-seeds");
    prepare(s4, 320, 50);
    write_text_file(s4.path("scenario.txt"),
                    minimal_scenario_text("deterministic = false\nbudget_wallclock = 100000\n"));
    Scenario sc4 = parse_scenario(s4.path("scenario.txt"));
    auto warnings = check_scenario(sc4);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].code == "single-seed-validation");
  }
  SECTION("fixed seed policy warns") {
    Scratch s5("check-fixed");
    prepare(s5, 320, 50);
    write_text_file(s5.path("scenario.txt"),
                    minimal_scenario_text("deterministic = false\nvalidation_seeds = 5\n"
                                          "seed_policy = fixed:1\nbudget_wallclock = 100000\n"));
    Scenario sc5 = parse_scenario(s5.path("scenario.txt"));
    auto warnings = check_scenario(sc5);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].code == "fixed-seed-policy");
  }
}
