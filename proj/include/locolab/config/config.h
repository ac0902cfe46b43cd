#ifndef LOCOLAB_CONFIG_CONFIG_H_
#define LOCOLAB_CONFIG_CONFIG_H_

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "locolab/adapt/adapt.h"
#include "locolab/eval/eval.h"
#include "locolab/motion/motion.h"
#include "locolab/ppo/env.h"
#include "locolab/ppo/trainer.h"

namespace locolab::config {

inline constexpr int kRunConfigSchemaVersion = 1;

struct MotionConfig {
  std::vector<motion::GaitParams> gaits = {
      motion::GaitParams::Preset(motion::GaitLabel::kTrot, 1.0),
      motion::GaitParams::Preset(motion::GaitLabel::kPace, 1.0),
      motion::GaitParams::Preset(motion::GaitLabel::kGallop, 1.5),
      motion::GaitParams::Preset(motion::GaitLabel::kWalk, 0.5)};
  int frames = 200;
  double frame_rate = 50.0;  // Hz
  bool mirror = true;
};

// Everything one experiment needs. `env` is shared by training,
// distillation and evaluation; the `env` and `seed` fields inside
// `train`, `distill` and `eval` are filled from here by Resolved*().
struct RunConfig {
  int schema_version = kRunConfigSchemaVersion;
  std::uint64_t seed = 1;
  // Always single-threaded; kept so configs state it explicitly.
  bool deterministic = true;
  std::string out_dir = "runs/default";
  std::string clips_dir = "clips";  // relative paths live under out_dir
  std::string checkpoint_dir = "checkpoints";
  std::string log_dir = "logs";
  int checkpoint_every = 50;
  MotionConfig motion;
  ppo::EnvConfig env;
  ppo::TrainConfig train;
  adapt::DistillConfig distill;
  std::vector<terrain::TerrainKind> distill_terrain_kinds = {
      terrain::TerrainKind::kPlane, terrain::TerrainKind::kUniformNoise,
      terrain::TerrainKind::kDiscreteObstacles, terrain::TerrainKind::kStairs};
  int distill_level = 5;
  // Episode length of the distillation environments; NaN keeps env's.
  double distill_episode_seconds = std::numeric_limits<double>::quiet_NaN();
  eval::EvalConfig eval;
  std::string eval_agent = "student";  // student, teacher, scripted_fall,
                                       // scripted_oracle
  // evaluate fails when a cell's success rate is below this; NaN disables.
  double eval_min_success_rate = std::numeric_limits<double>::quiet_NaN();

  ppo::TrainConfig ResolvedTrain() const;
  adapt::DistillConfig ResolvedDistill() const;
  eval::EvalConfig ResolvedEval() const;
  ppo::EnvConfig DistillEnv() const;
  // Joins a relative directory onto out_dir.
  std::string Path(const std::string& dir) const;

  // Every problem, one message each; empty when valid.
  std::vector<std::string> Problems() const;
  // Throws ConfigError listing every problem.
  void Validate() const;
};

// Missing keys keep their defaults. Throws ConfigError for unknown keys,
// type mismatches or malformed JSON, SchemaVersionMismatch for another
// schema_version.
RunConfig FromJsonText(const std::string& text);
// Throws IoError plus the FromJsonText errors.
RunConfig LoadRunConfig(const std::string& path);
// All fields, defaults included, pretty-printed.
std::string ToJsonText(const RunConfig& config);

}  // namespace locolab::config

#endif  // LOCOLAB_CONFIG_CONFIG_H_
