#include <doctest.h>

#include "driftlab/config.hpp"
#include "driftlab/manifest.hpp"

using driftlab::Config;

TEST_CASE("config parsing: sections, numbers, strings, arrays, comments") {
  const std::string text = R"(
# experiment header
[experiment]
id = "beta4-suite"
seed = 42
[sim]
T = 6.47e1          # scientific notation
dt = 1e-3
output_times = [0.0, 0.5, 1.0]
exact = true
)";
  Config c = Config::parse(text);
  CHECK(c.str("experiment.id") == "beta4-suite");
  CHECK(c.number("experiment.seed") == 42.0);
  CHECK(c.number("sim.T") == doctest::Approx(64.7));
  CHECK(c.number("sim.dt") == doctest::Approx(1e-3));
  CHECK(c.array("sim.output_times") == std::vector<double>{0.0, 0.5, 1.0});
  CHECK(c.boolean_or("sim.exact", false));
  CHECK_NOTHROW(c.ensure_all_consumed());
}

TEST_CASE("config rejects unknown leftovers and malformed input") {
  Config c = Config::parse("[a]\nx = 1\ntypo_key = 2\n");
  CHECK(c.number("a.x") == 1.0);
  CHECK_THROWS_WITH_AS(c.ensure_all_consumed(),
                       "config: unrecognized keys: a.typo_key",
                       std::invalid_argument);

  CHECK_THROWS_AS((void)Config::parse("[unclosed\nx=1\n"), std::invalid_argument);
  CHECK_THROWS_AS((void)Config::parse("[a]\njust a line\n"), std::invalid_argument);
  CHECK_THROWS_AS((void)Config::parse("[a]\nx = 1\nx = 2\n"), std::invalid_argument);

  Config bad = Config::parse("[a]\nx = notanumber\n");
  CHECK_THROWS_AS((void)bad.number("a.x"), std::invalid_argument);
  Config missing = Config::parse("[a]\nx = 1\n");
  CHECK_THROWS_AS((void)missing.number("a.c"), std::invalid_argument);
}

TEST_CASE("number_map consumes a whole section") {
  Config c = Config::parse("[model]\nid = power\nbeta = 4\nr = 1\n");
  CHECK(c.str("model.id") == "power");
  const auto params = c.number_map("model");
  CHECK(params.at("beta") == 4.0);
  CHECK(params.at("r") == 1.0);
  CHECK(params.count("id") == 0);  // already consumed as a string
  CHECK_NOTHROW(c.ensure_all_consumed());
}

TEST_CASE("csv writer fixed format") {
  driftlab::CsvWriter csv({"t", "value"});
  csv.row({0.5, 1.25e-7});
  CHECK(csv.str() == "t,value\n0.5,1.25e-07\n");
  CHECK_THROWS_AS(csv.row({1.0}), std::invalid_argument);
}

TEST_CASE("fnv1a64 digest is stable") {
  CHECK(driftlab::fnv1a64("") == 0xCBF29CE484222325ull);
  CHECK(driftlab::fnv1a64("a") == 0xAF63DC4C8601EC8Cull);
}
