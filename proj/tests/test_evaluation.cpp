#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "actune/evaluation.hpp"

#include "support/test_support.hpp"

using namespace actune;
using testsup::Scratch;

namespace {

// Independent O(n^2) rank oracle: rank = (#smaller) + (#equal + 1) / 2,
// correlation accumulated in long double straight from the definition.
double spearman_oracle(const std::vector<double>& x, const std::vector<double>& y) {
  const size_t n = x.size();
  auto ranks = [&](const std::vector<double>& v) {
    std::vector<long double> r(n);
    for (size_t i = 0; i < n; ++i) {
      size_t smaller = 0, equal = 0;
      for (size_t j = 0; j < n; ++j) {
        if (v[j] < v[i]) ++smaller;
        if (v[j] == v[i]) ++equal;
      }
      r[i] = static_cast<long double>(smaller) + (static_cast<long double>(equal) + 1.0L) / 2.0L;
    }
    return r;
  };
  auto rx = ranks(x), ry = ranks(y);
  long double mx = 0, my = 0;
  for (size_t i = 0; i < n; ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  long double sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < n; ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return static_cast<double>(sxy / std::sqrt(sxx * syy));
}

}  // namespace

TEST_CASE("spearman basics") {
  SECTION("monotone transform gives rho 1") {
    std::vector<double> x{1, 2, 3, 4, 5};
    std::vector<double> y;
    for (double v : x) y.push_back(2 * v + 1);
    auto r = spearman(x, y);
    REQUIRE(r.defined);
    CHECK(r.rho == Catch::Approx(1.0));
  }
  SECTION("reversal gives rho -1") {
    std::vector<double> x{1, 2, 3, 4, 5};
    std::vector<double> y{5, 4, 3, 2, 1};
    auto r = spearman(x, y);
    REQUIRE(r.defined);
    CHECK(r.rho == Catch::Approx(-1.0));
  }
  SECTION("hand-computed rank example") {
    // ranks of y are (1,3,2,5,4): sum d^2 = 4, rho = 1 - 6*4/(5*24) = 0.8
    std::vector<double> x{1, 2, 3, 4, 5};
    std::vector<double> y{1, 3, 2, 5, 4};
    auto r = spearman(x, y);
    REQUIRE(r.defined);
    CHECK(r.rho == Catch::Approx(0.8).margin(1e-15));
  }
  SECTION("zero rank variance is reported as undefined") {
    std::vector<double> x{1, 1, 1};
    std::vector<double> y{1, 2, 3};
    CHECK_FALSE(spearman(x, y).defined);
  }
  SECTION("length mismatch is an error") {
    CHECK_THROWS_AS(spearman({1, 2}, {1, 2, 3}), Error);
    CHECK_THROWS_AS(spearman({1}, {1}), Error);
  }
}

TEST_CASE("spearman matches the rank oracle on random vectors with ties") {
  RngStream rng(314);
  for (int trial = 0; trial < 100; ++trial) {
    size_t n = 3 + rng.index(40);
    std::vector<double> x, y;
    for (size_t i = 0; i < n; ++i) {
      // coarse grid forces plenty of ties
      x.push_back(std::floor(rng.uniform(0, 8)));
      y.push_back(std::floor(rng.uniform(0, 8)));
    }
    auto r = spearman(x, y);
    if (!r.defined) continue;
    double expected = spearman_oracle(x, y);
    CAPTURE(n, trial);
    CHECK(std::fabs(r.rho - expected) < 1e-12);
  }
}

TEST_CASE("validate_configs fills the matrix from the closed form") {
  Scratch scratch("val");
  testsup::ScenarioSpec spec;
  spec.dims = 2;
  spec.train_n = 4;
  spec.test_n = 3;
  spec.landscape = testsup::bowl_landscape(2, 0.7);
  spec.landscape.instance_hardness["train_0001"] = 2.0;
  Scenario sc = testsup::build_scenario(scratch, spec);
  const Landscape ls = load_landscape(sc.oracle_landscape);

  Configuration c;
  c.values["x1"] = 1.0;
  c.values["x2"] = 2.0;
  auto res = validate_configs({c}, sc.train_instances, 1, sc);
  REQUIRE(res.matrix.rows() == 1);
  REQUIRE(res.matrix.cols() == 4);
  for (size_t j = 0; j < res.matrix.cols(); ++j) {
    double expected = synth_runtime(ls, c, res.matrix.columns()[j].instance, 0);
    CHECK(res.matrix.cost(0, j) == Catch::Approx(expected).epsilon(1e-12));
    CHECK(res.matrix.status(0, j) == RunStatus::Success);
  }
  // hardness multiplier visible in exactly one column
  int harder = 0;
  for (size_t j = 0; j < res.matrix.cols(); ++j)
    if (res.matrix.cost(0, j) > 1.5 * res.matrix.cost(0, 0)) ++harder;
  CHECK(harder == 1);
}

TEST_CASE("validate_configs collapses seeds for deterministic targets") {
  Scratch scratch("val-det");
  testsup::ScenarioSpec spec;
  spec.landscape = testsup::bowl_landscape(2, 0.7);
  Scenario sc = testsup::build_scenario(scratch, spec);
  auto res = validate_configs({sc.space.default_configuration()}, sc.train_instances, 3, sc);
  CHECK(res.matrix.cols() == sc.train_instances.size());  // one seed, not three
  REQUIRE(res.warnings.size() == 1);
  CHECK(res.warnings[0].find("collapsing") != std::string::npos);
}

TEST_CASE("validation always runs at the full scenario cutoff") {
  Scratch scratch("val-kappa");
  testsup::ScenarioSpec spec;
  spec.train_n = 3;
  spec.landscape = testsup::bowl_landscape(2, 0.7);
  Scenario sc = testsup::build_scenario(scratch, spec);

  Scratch logdir("val-kappa-log");
  RunLog log(logdir.path("runs.jsonl"));
  RunOptions opt;
  opt.sink = &log;
  validate_configs({sc.space.default_configuration()}, sc.train_instances, 1, sc, opt);
  auto lines = split(trim(read_text_file(log.path())), '\n');
  REQUIRE(lines.size() == 3);
  for (const auto& line : lines) {
    auto j = nlohmann::json::parse(line);
    CHECK(j.at("cutoff").get<double>() == sc.cutoff_max);
    CHECK(j.at("role") == "validation");
  }
}

namespace {

Trajectory fake_trajectory(uint64_t run_seed, const Configuration& final_config) {
  Trajectory t;
  t.run_seed = run_seed;
  TrajectoryEntry e;
  e.elapsed_s = 1.0;
  e.config = final_config;
  e.train_cost = 0.0;
  t.entries.push_back(e);
  return t;
}

}  // namespace

TEST_CASE("select_best_of_n") {
  Scratch scratch("best-of-n");
  testsup::ScenarioSpec spec;
  spec.train_n = 5;
  spec.landscape = testsup::bowl_landscape(2, 0.7);
  Scenario sc = testsup::build_scenario(scratch, spec);

  Configuration near, mid, far;
  near.values["x1"] = 0.7;
  near.values["x2"] = 0.7;
  mid.values["x1"] = 1.5;
  mid.values["x2"] = 1.5;
  far.values["x1"] = 3.0;
  far.values["x2"] = 3.0;

  auto val = validate_configs({near, mid, far}, sc.train_instances, 1, sc);

  SECTION("n = 1 returns that incumbent") {
    auto best = select_best_of_n({fake_trajectory(4, mid)}, val.matrix);
    CHECK(best == mid);
  }
  SECTION("argmin of training aggregate wins") {
    auto best = select_best_of_n(
        {fake_trajectory(1, far), fake_trajectory(2, near), fake_trajectory(3, mid)}, val.matrix);
    CHECK(best == near);
  }
  SECTION("ties break toward the lower run seed") {
    uint64_t winner = 0;
    auto best = select_best_of_n({fake_trajectory(9, mid), fake_trajectory(2, mid)}, val.matrix,
                                 0.0, &winner);
    CHECK(best == mid);
    CHECK(winner == 2);
  }
  SECTION("missing incumbent row is an error") {
    Configuration other;
    other.values["x1"] = 2.22;
    other.values["x2"] = 2.22;
    CHECK_THROWS_AS(select_best_of_n({fake_trajectory(1, other)}, val.matrix), Error);
  }
  SECTION("argmin is invariant under monotone transforms of the aggregates") {
    // same selection when every cell cost is squashed monotonically
    CostMatrix squashed(val.matrix.metric, val.matrix.kappa_max);
    for (const auto& col : val.matrix.columns()) squashed.add_column(col);
    for (size_t i = 0; i < val.matrix.rows(); ++i) {
      squashed.add_config(val.matrix.configs()[i]);
      for (size_t j = 0; j < val.matrix.cols(); ++j)
        squashed.set(i, j, val.matrix.status(i, j), std::log1p(val.matrix.cost(i, j)));
    }
    auto trajs = {fake_trajectory(1, far), fake_trajectory(2, near), fake_trajectory(3, mid)};
    CHECK(select_best_of_n(trajs, val.matrix) == select_best_of_n(trajs, squashed));
  }
}

TEST_CASE("overtuning_report flags and subset") {
  RngStream rng(2718);
  std::vector<double> train;
  for (int i = 0; i < 100; ++i) train.push_back(rng.uniform(1, 50));

  SECTION("identical vectors: rho 1, no flags") {
    auto rep = overtuning_report(train, train);
    REQUIRE(rep.rho_all.defined);
    CHECK(rep.rho_all.rho == Catch::Approx(1.0));
    CHECK(rep.flags.empty());
  }
  SECTION("independently shuffled test costs decorrelate and raise the flag") {
    int flagged = 0;
    for (int rep_i = 0; rep_i < 20; ++rep_i) {
      std::vector<double> test = train;
      rng.shuffle(test);
      auto rep = overtuning_report(train, test);
      REQUIRE(rep.rho_all.defined);
      if (std::fabs(rep.rho_all.rho) < 0.3 && !rep.flags.empty()) ++flagged;
    }
    CHECK(flagged >= 18);  // |rho| < 0.3 holds with probability ~0.997 per shuffle
  }
  SECTION("subset of 0.2 on 100 configs correlates exactly 20 configs") {
    std::vector<double> test = train;
    auto rep = overtuning_report(train, test, 0.2);
    REQUIRE(rep.subset_fraction.has_value());
    // reconstruct: the subset rho of identical vectors is defined and 1
    REQUIRE(rep.rho_subset.defined);
    CHECK(rep.rho_subset.rho == Catch::Approx(1.0));
    // size check via a vector with a unique marker ordering
    std::vector<double> tr2, te2;
    for (int i = 0; i < 100; ++i) {
      tr2.push_back(i);
      te2.push_back(i < 20 ? 100 - i : i);  // best-20 reversed on test
    }
    auto rep2 = overtuning_report(tr2, te2, 0.2);
    REQUIRE(rep2.rho_subset.defined);
    CHECK(rep2.rho_subset.rho == Catch::Approx(-1.0));  // exactly the 20 best, reversed
  }
  SECTION("report json carries a machine fingerprint") {
    auto j = overtuning_report_to_json(overtuning_report(train, train));
    CHECK(j.at("machine").contains("hostname"));
    CHECK(j.at("pairs").size() == 100);
  }
}

TEST_CASE("trajectory_validation aligns validated costs to incumbent changes") {
  Scratch scratch("traj-val");
  testsup::ScenarioSpec spec;
  spec.budget_runs = 200;
  spec.train_n = 10;
  spec.test_n = 10;
  spec.landscape = testsup::bowl_landscape(2, 0.7);
  Scenario sc = testsup::build_scenario(scratch, spec);

  Trajectory t = configure(sc, 11);
  auto series = trajectory_validation(t, sc.test_instances, sc, 1, sc.train_instances);
  REQUIRE(series.size() == t.entries.size());
  for (size_t i = 0; i < series.size(); ++i) {
    CHECK(series[i].elapsed_s == t.entries[i].elapsed_s);
    REQUIRE(series[i].train_cost.has_value());
  }
  // synthetic improving scenario: the test series is non-increasing
  for (size_t i = 1; i < series.size(); ++i)
    CHECK(series[i].test_cost <= series[i - 1].test_cost + 1e-12);

  SECTION("single-entry trajectory yields one point equal to the default's test cost") {
    Trajectory single;
    single.run_seed = 0;
    TrajectoryEntry e;
    e.elapsed_s = 0.5;
    e.config = sc.space.default_configuration();
    e.train_cost = 0;
    single.entries.push_back(e);
    auto s = trajectory_validation(single, sc.test_instances, sc, 1);
    REQUIRE(s.size() == 1);
    auto direct = validate_configs({sc.space.default_configuration()}, sc.test_instances, 1, sc);
    CHECK(s[0].test_cost == direct.matrix.row_aggregate(0));
  }
}
