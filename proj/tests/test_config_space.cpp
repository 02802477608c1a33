#include <catch2/catch_amalgamated.hpp>

#include "actune/config_space.hpp"
#include "actune/rng.hpp"

#include "support/test_support.hpp"

using namespace actune;

TEST_CASE("parse single real parameter") {
  auto space = parse_config_space_text("x real [0,1] default 0.5\n", "inline");
  REQUIRE(space.size() == 1);
  const Parameter& p = space.parameters()[0];
  CHECK(p.name == "x");
  CHECK(p.kind == ParamKind::Real);
  CHECK(p.lo == 0.0);
  CHECK(p.hi == 1.0);
  CHECK(std::get<double>(p.default_value) == 0.5);
  CHECK_FALSE(p.log_scale);
}

TEST_CASE("parse conditional categorical space") {
  auto space = parse_config_space_text(
      "alg categorical {a,b} default a\n"
      "beta real [0,1] default 0.1 | alg==b\n",
      "inline");
  REQUIRE(space.size() == 2);
  const Parameter& beta = space.parameters()[1];
  REQUIRE(beta.condition.has_value());
  CHECK(beta.condition->parent == "alg");
  CHECK(beta.condition->trigger_repr == "b");

  // default config: alg=a, so beta inactive
  Configuration def = space.default_configuration();
  CHECK(def.values.count("alg") == 1);
  CHECK(def.values.count("beta") == 0);
}

TEST_CASE("parse integer and log-scale parameters") {
  auto space = parse_config_space_text(
      "n integer [1,100] default 10\n"
      "lr real [0.001,1] default 0.01 log\n",
      "inline");
  CHECK(space.parameters()[0].kind == ParamKind::Integer);
  CHECK(space.parameters()[1].log_scale);
}

TEST_CASE("a 75-parameter space parses completely") {
  std::string text;
  for (int i = 0; i < 75; ++i)
    text += "p" + std::to_string(i) + " real [0,1] default 0.5\n";
  auto space = parse_config_space_text(text, "inline");
  CHECK(space.size() == 75);
}

TEST_CASE("parse errors carry line numbers and name the offence") {
  CHECK_THROWS_WITH(parse_config_space_text("x real [0,1] default 2\n", "f"),
                    Catch::Matchers::ContainsSubstring("default outside domain"));
  CHECK_THROWS_WITH(parse_config_space_text("x real [0,1] default 0.5\nx real [0,1] default 0.5\n", "f"),
                    Catch::Matchers::ContainsSubstring("duplicate parameter name"));
  CHECK_THROWS_WITH(parse_config_space_text("b real [0,1] default 0.5 | a==1\n", "f"),
                    Catch::Matchers::ContainsSubstring("unknown parent"));
  CHECK_THROWS_WITH(parse_config_space_text("x real [0,1] default 0.5 log\n", "f"),
                    Catch::Matchers::ContainsSubstring("log scale requires lo > 0"));
  CHECK_THROWS_WITH(parse_config_space_text("x real [1,1] default 1\n", "f"),
                    Catch::Matchers::ContainsSubstring("lo must be < hi"));
  CHECK_THROWS_AS(parse_config_space_text("x real [0,1] default 0.5\n# ok\ny real [1,0] default 0.5\n", "f"),
                  ParseError);
}

TEST_CASE("parameter named seed is rejected") {
  CHECK_THROWS_WITH(parse_config_space_text("seed integer [0,100] default 0\n", "f"),
                    Catch::Matchers::ContainsSubstring("reserved"));
}

TEST_CASE("sampling is deterministic given the stream seed") {
  auto space = parse_config_space_text("x real [0,1] default 0.5\n", "inline");
  RngStream a(42), b(42);
  for (int i = 0; i < 10; ++i) {
    auto ca = sample_random_config(space, a);
    auto cb = sample_random_config(space, b);
    CHECK(ca == cb);
  }
}

TEST_CASE("categorical sampling is roughly uniform") {
  auto space = parse_config_space_text("c categorical {a,b} default a\n", "inline");
  RngStream rng(7);
  int count_a = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    auto c = sample_random_config(space, rng);
    if (std::get<std::string>(c.values["c"]) == "a") ++count_a;
  }
  double freq = static_cast<double>(count_a) / n;
  CHECK(freq > 0.47);
  CHECK(freq < 0.53);
}

TEST_CASE("conditional child absent when parent not at trigger value") {
  auto space = parse_config_space_text(
      "alg categorical {a,b} default a\n"
      "beta real [0,1] default 0.1 | alg==b\n",
      "inline");
  RngStream rng(3);
  for (int i = 0; i < 200; ++i) {
    auto c = sample_random_config(space, rng);
    bool parent_is_b = std::get<std::string>(c.values["alg"]) == "b";
    CHECK(c.values.count("beta") == (parent_is_b ? 1u : 0u));
  }
}

TEST_CASE("validate_config reports each violation kind") {
  auto space = parse_config_space_text(
      "x real [0,1] default 0.5\n"
      "alg categorical {a,b} default a\n"
      "beta real [0,1] default 0.1 | alg==b\n",
      "inline");

  SECTION("default is always valid") {
    CHECK(validate_config(space, space.default_configuration()).empty());
  }
  SECTION("out of range") {
    Configuration c = space.default_configuration();
    c.values["x"] = 1.5;
    auto v = validate_config(space, c);
    REQUIRE(v.size() == 1);
    CHECK(v[0] == "'x' out of range");
  }
  SECTION("inactive parameter assigned") {
    Configuration c = space.default_configuration();
    c.values["beta"] = 0.2;  // alg == a, so beta is inactive
    auto v = validate_config(space, c);
    REQUIRE(v.size() == 1);
    CHECK(v[0] == "inactive parameter assigned: 'beta'");
  }
  SECTION("unknown parameter") {
    Configuration c = space.default_configuration();
    c.values["zzz"] = 1.0;
    auto v = validate_config(space, c);
    REQUIRE(v.size() == 1);
    CHECK(v[0] == "unknown parameter 'zzz'");
  }
  SECTION("missing active parameter") {
    Configuration c = space.default_configuration();
    c.values.erase("x");
    auto v = validate_config(space, c);
    REQUIRE(v.size() == 1);
    CHECK(v[0] == "missing value for active parameter 'x'");
  }
}

namespace {

// Random space generator for property tests: parents always precede
// children, single-parent equality conditions only.
actune::ConfigSpace random_space(actune::RngStream& rng) {
  using namespace actune;
  int n = 1 + static_cast<int>(rng.index(6));
  std::string text;
  std::vector<std::pair<std::string, std::vector<std::string>>> categoricals;
  std::vector<std::string> names;
  for (int i = 0; i < n; ++i) {
    std::string name = "p" + std::to_string(i);
    double kind_draw = rng.unit();
    if (kind_draw < 0.4) {
      double lo = rng.uniform(-5, 5);
      double hi = lo + rng.uniform(0.5, 5);
      double def = lo + rng.unit() * (hi - lo);
      bool log = lo > 0 && rng.unit() < 0.3;
      text += name + " real [" + repr_double(lo) + "," + repr_double(hi) + "] default " +
              repr_double(def) + (log ? " log" : "");
    } else if (kind_draw < 0.7) {
      int64_t lo = rng.uniform_int(-10, 10);
      int64_t hi = lo + rng.uniform_int(0, 20);
      int64_t def = rng.uniform_int(lo, hi);
      text += name + " integer [" + std::to_string(lo) + "," + std::to_string(hi) + "] default " +
              std::to_string(def);
    } else {
      int k = 2 + static_cast<int>(rng.index(4));
      std::vector<std::string> cats;
      std::string domain;
      for (int j = 0; j < k; ++j) {
        cats.push_back("v" + std::to_string(j));
        domain += (j ? "," : "") + cats.back();
      }
      text += name + " categorical {" + domain + "} default " + cats[rng.index(cats.size())];
      categoricals.emplace_back(name, cats);
    }
    // optionally condition on an earlier categorical
    if (!categoricals.empty() && rng.unit() < 0.4) {
      auto& [pname, cats] = categoricals[rng.index(categoricals.size())];
      if (pname != name) text += " | " + pname + "==" + cats[rng.index(cats.size())];
    }
    text += "\n";
    names.push_back(name);
  }
  return parse_config_space_text(text, "generated");
}

}  // namespace

TEST_CASE("property: sampled configurations always validate") {
  RngStream rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    auto space = random_space(rng);
    for (int s = 0; s < 5; ++s) {
      auto c = sample_random_config(space, rng);
      auto violations = validate_config(space, c);
      CAPTURE(to_pcs_text(space), c.canonical());
      REQUIRE(violations.empty());
    }
  }
}

TEST_CASE("property: pcs round-trip preserves the space") {
  RngStream rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    auto space = random_space(rng);
    auto reparsed = parse_config_space_text(to_pcs_text(space), "roundtrip");
    REQUIRE(space == reparsed);
  }
}

TEST_CASE("configuration id is order independent and value stable") {
  auto space = parse_config_space_text(
      "a real [0,1] default 0.5\n"
      "b integer [0,9] default 3\n"
      "c categorical {x,y} default x\n",
      "inline");
  Configuration c1, c2;
  c1.values["a"] = 0.25;
  c1.values["b"] = int64_t{7};
  c1.values["c"] = std::string("y");
  c2.values["c"] = std::string("y");
  c2.values["b"] = int64_t{7};
  c2.values["a"] = 0.25;
  CHECK(c1.id() == c2.id());
  CHECK(c1.id_hex() == c2.id_hex());

  // also invariant under reordering parameters in the space itself
  auto space_reordered = parse_config_space_text(
      "c categorical {x,y} default x\n"
      "b integer [0,9] default 3\n"
      "a real [0,1] default 0.5\n",
      "inline");
  (void)space_reordered;
  Configuration c3;
  c3.values["b"] = int64_t{7};
  c3.values["a"] = 0.25;
  c3.values["c"] = std::string("y");
  CHECK(c3.id() == c1.id());

  Configuration different = c1;
  different.values["a"] = 0.26;
  CHECK(different.id() != c1.id());
}
