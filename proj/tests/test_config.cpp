#include <doctest.h>

#include "mad/config.hpp"
#include "mad/errors.hpp"

using namespace mad;

TEST_CASE("key=value parsing with comments and overrides") {
  const std::string text =
      "# run settings\n"
      "seed = 7\n"
      "env.name = keydoor   # trailing comment\n"
      "train.steps = 1234\n"
      "train.hidden = 64,32\n";
  const RunConfig rc = resolve_config_text(text, {"train.steps=99"}, nullptr);
  CHECK(rc.seed == 7);
  CHECK(rc.env_name == "keydoor");
  CHECK(rc.maddist.steps == 99);  // override wins
  CHECK(rc.maddist.hidden == std::vector<int64_t>{64, 32});
  CHECK(rc.tdmaddist.hidden == std::vector<int64_t>{64, 32});
}

TEST_CASE("defaults carry the published hyperparameters") {
  const RunConfig rc = resolve_config_text("seed = 1\n", {}, nullptr);
  CHECK(rc.maddist.w_r == 1.0);
  CHECK(rc.maddist.w_c == 0.1);
  CHECK(rc.maddist.d_max == 100.0);
  CHECK(rc.maddist.h_c == 6);
  CHECK(rc.maddist.batch_objective == 256);
  CHECK(rc.maddist.batch_constraint == 1024);
  CHECK(rc.maddist.learning_rate == 1e-4);
  CHECK(rc.maddist.steps == 50000);
  CHECK(rc.maddist.latent_dim == 256);
  CHECK(rc.maddist.hidden == std::vector<int64_t>{512, 512});
  CHECK(rc.tdmaddist.polyak_beta == 0.005);
  CHECK(rc.maddist.quasimetric.to_string() == "simple(0.5)");
  CHECK(rc.adam_beta1 == 0.9);
  CHECK(rc.adam_beta2 == 0.999);
}

TEST_CASE("missing seed is a config error, MAD_SEED fallback works") {
  CHECK_THROWS_AS(resolve_config_text("env.name = cliffwalking\n", {}, nullptr), ConfigError);
  CHECK_THROWS_AS(resolve_config_text("", {}, ""), ConfigError);
  const RunConfig rc = resolve_config_text("", {}, "31337");
  CHECK(rc.seed == 31337);
  // Explicit seed beats the environment fallback.
  const RunConfig rc2 = resolve_config_text("seed = 5\n", {}, "31337");
  CHECK(rc2.seed == 5);
}

TEST_CASE("unknown keys are rejected") {
  CHECK_THROWS_AS(resolve_config_text("seed = 1\ntrain.stepz = 10\n", {}, nullptr), ConfigError);
}

TEST_CASE("bad values are rejected") {
  CHECK_THROWS_AS(resolve_config_text("seed = 1\ntrain.steps = soon\n", {}, nullptr), ConfigError);
  CHECK_THROWS_AS(resolve_config_text("seed = one\n", {}, nullptr), ConfigError);
  CHECK_THROWS_AS(resolve_config_text("seed = 1\nalgo = qrl\n", {}, nullptr), ConfigError);
  CHECK_THROWS_AS(resolve_config_text("seed = 1\nplan.metric = guess\n", {}, nullptr), ConfigError);
  CHECK_THROWS_AS(resolve_config_text("seed = 1\nbroken line\n", {}, nullptr), ParseError);
}

TEST_CASE("resolved echo contains every defaulted value and reparses") {
  const RunConfig rc = resolve_config_text("seed = 3\nalgo = tdmaddist\n", {}, nullptr);
  const std::string echo = rc.resolved_text();
  CHECK(echo.find("train.polyak_beta = 0.005") != std::string::npos);
  CHECK(echo.find("optimizer.beta1 = 0.9") != std::string::npos);
  CHECK(echo.find("train.weight_decay = 0.0001") != std::string::npos);
  CHECK(echo.find("quasimetric = simple(0.5)") != std::string::npos);
  // The echo is itself a valid config that resolves to the same settings.
  const RunConfig again = resolve_config_text(echo, {}, nullptr);
  CHECK(again.seed == rc.seed);
  CHECK(again.algorithm == rc.algorithm);
  CHECK(again.tdmaddist.polyak_beta == rc.tdmaddist.polyak_beta);
  CHECK(again.resolved_text() == echo);
}

TEST_CASE("quasimetric specs thread through the config") {
  const RunConfig rc =
      resolve_config_text("seed = 1\nquasimetric = convex(0.25*max+0.75*mean)\n", {}, nullptr);
  CHECK(rc.maddist.quasimetric.kind == QuasimetricSpec::Kind::Convex);
  CHECK(rc.maddist.quasimetric.weights[1] == 0.75);
}
