#include "locolab/config/config.h"

#include <cmath>
#include <string>

#include <gtest/gtest.h>

#include "locolab/errors.h"

namespace locolab::config {
namespace {

std::string ErrorText(const std::string& text) {
  try {
    FromJsonText(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(ConfigTest, EmptyObjectGivesDefaults) {
  const RunConfig c = FromJsonText("{}");
  const RunConfig d;
  EXPECT_EQ(ToJsonText(c), ToJsonText(d));
  EXPECT_TRUE(c.Problems().empty());
  EXPECT_TRUE(std::isnan(c.env.fixed_command));
}

TEST(ConfigTest, RoundTripIsExact) {
  RunConfig c;
  c.seed = 77;
  c.env.fixed_command = 0.5;
  c.env.randomization.friction_coeff = {0.3, 1.1};
  c.env.physics.motor_gain_scale[3] = 0.9;
  c.train.ppo.n_envs = 8;
  c.train.disc.hidden = {32, 16};
  c.train.disc.activation = nn::Activation::kTanh;
  c.distill.mode = adapt::DistillMode::kTeacher;
  c.eval.cells = {{terrain::TerrainKind::kStairs, 4, 1.0}};
  c.motion.gaits.pop_back();
  const std::string text = ToJsonText(c);
  const RunConfig back = FromJsonText(text);
  EXPECT_EQ(ToJsonText(back), text);
  EXPECT_EQ(back.seed, 77u);
  EXPECT_EQ(back.env.fixed_command, 0.5);
  EXPECT_EQ(back.env.physics.motor_gain_scale[3], 0.9);
  EXPECT_EQ(back.eval.cells.size(), 1u);
  EXPECT_EQ(back.eval.cells[0].kind, terrain::TerrainKind::kStairs);
  EXPECT_EQ(back.distill.mode, adapt::DistillMode::kTeacher);
  EXPECT_EQ(back.motion.gaits.size(), 3u);
}

TEST(ConfigTest, PartialOverlayKeepsSiblings) {
  const RunConfig c =
      FromJsonText(R"({"train": {"ppo": {"horizon": 12}}, "seed": 5})");
  const RunConfig d;
  EXPECT_EQ(c.train.ppo.horizon, 12);
  EXPECT_EQ(c.train.ppo.n_envs, d.train.ppo.n_envs);
  EXPECT_EQ(c.train.ppo.gamma, d.train.ppo.gamma);
  EXPECT_EQ(c.seed, 5u);
}

TEST(ConfigTest, UnknownKeyNamesItsPath) {
  const std::string e = ErrorText(R"({"train": {"ppo": {"horizn": 12}}})");
  EXPECT_NE(e.find("train.ppo.horizn"), std::string::npos) << e;
}

TEST(ConfigTest, WrongTypeIsRejected) {
  const std::string e = ErrorText(R"({"train": {"iterations": "many"}})");
  EXPECT_NE(e.find("train.iterations"), std::string::npos) << e;
  EXPECT_FALSE(ErrorText(R"({"env": {"randomize": 1}})").empty());
}

TEST(ConfigTest, ListElementsOverlayTheFirstDefault) {
  const RunConfig c =
      FromJsonText(R"({"motion": {"gaits": [{"step_height": 0.05}]}})");
  ASSERT_EQ(c.motion.gaits.size(), 1u);
  EXPECT_EQ(c.motion.gaits[0].step_height, 0.05);
  EXPECT_EQ(c.motion.gaits[0].period, RunConfig{}.motion.gaits[0].period);
  const std::string e =
      ErrorText(R"({"motion": {"gaits": [{}, {"dty": 0.5}]}})");
  EXPECT_NE(e.find("motion.gaits[1].dty"), std::string::npos) << e;
}

TEST(ConfigTest, BadEnumNameIsRejected) {
  EXPECT_FALSE(ErrorText(R"({"train": {"terrain_kinds": ["lava"]}})").empty());
  EXPECT_FALSE(ErrorText(R"({"eval": {"cells": ["stairs:x:1"]}})").empty());
}

TEST(ConfigTest, MalformedJson) {
  EXPECT_NE(ErrorText("{").find("malformed"), std::string::npos);
  EXPECT_FALSE(ErrorText("[1, 2]").empty());
}

TEST(ConfigTest, SchemaVersionMismatch) {
  EXPECT_THROW(FromJsonText(R"({"schema_version": 2})"), SchemaVersionMismatch);
  EXPECT_NO_THROW(FromJsonText(R"({"schema_version": 1})"));
}

TEST(ConfigTest, FixedCommandNullMeansSampled) {
  EXPECT_EQ(FromJsonText(R"({"env": {"fixed_command": 1.0}})").env.fixed_command,
            1.0);
  EXPECT_TRUE(std::isnan(
      FromJsonText(R"({"env": {"fixed_command": null}})").env.fixed_command));
}

TEST(ConfigTest, ProblemsListsEveryIssue) {
  RunConfig c;
  c.train.ppo.n_envs = 0;
  c.motion.gaits[1].duty_factor = 1.5;
  c.distill_level = 12;
  c.eval_agent = "nobody";
  const auto problems = c.Problems();
  ASSERT_GE(problems.size(), 4u) << ::testing::PrintToString(problems);
  std::string all;
  for (const auto& p : problems) all += p + "\n";
  EXPECT_NE(all.find("motion.gaits[1]"), std::string::npos) << all;
  EXPECT_NE(all.find("distill.level"), std::string::npos) << all;
  EXPECT_NE(all.find("eval.agent"), std::string::npos) << all;
  EXPECT_NE(all.find("train"), std::string::npos) << all;
  EXPECT_THROW(c.Validate(), ConfigError);
}

TEST(ConfigTest, ResolvedCopiesShareEnvAndSeed) {
  RunConfig c;
  c.seed = 9;
  c.env.spawn_x = 2.0;
  EXPECT_EQ(c.ResolvedTrain().seed, 9u);
  EXPECT_EQ(c.ResolvedTrain().env.spawn_x, 2.0);
  EXPECT_EQ(c.ResolvedDistill().seed, 9u);
  EXPECT_EQ(c.ResolvedEval().env.spawn_x, 2.0);
}

TEST(ConfigTest, PathsJoinOntoOutDir) {
  RunConfig c;
  c.out_dir = "/tmp/run";
  EXPECT_EQ(c.Path("clips"), "/tmp/run/clips");
  EXPECT_EQ(c.Path("/abs/x"), "/abs/x");
}

TEST(ConfigTest, LoadMissingFile) {
  EXPECT_THROW(LoadRunConfig("/nonexistent/cfg.json"), IoError);
}

}  // namespace
}  // namespace locolab::config
