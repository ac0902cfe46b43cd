#ifndef LOCOLAB_PPO_ENV_H_
#define LOCOLAB_PPO_ENV_H_

#include <cstdint>
#include <limits>
#include <optional>

#include <Eigen/Core>

#include "locolab/amp/amp.h"
#include "locolab/binary_io.h"
#include "locolab/ppo/reward.h"
#include "locolab/rng.h"
#include "locolab/sim/physics.h"
#include "locolab/sim/types.h"
#include "locolab/terrain/terrain.h"

namespace locolab::ppo {

struct EnvConfig {
  sim::RobotMorphology morphology;
  sim::PhysicsParams physics;
  bool randomize = true;
  sim::RandomizationRanges randomization;
  sim::NoiseSpec noise;
  bool perturb = true;
  sim::PerturbationSpec perturbation;
  terrain::CommandRanges command_ranges = terrain::DefaultCommandRanges();
  // When finite, every episode uses this command instead of sampling.
  double fixed_command = std::numeric_limits<double>::quiet_NaN();
  double episode_seconds = 20.0;
  double fall_pitch = 1.2;   // rad
  double spawn_x = 1.0;      // m, inside the flat landing
  double action_limit = 1.5; // rad, offsets from the nominal pose
  bool curriculum = true;
  RewardWeights reward;

  void Validate() const;
  int MaxSteps() const;
  friend bool operator==(const EnvConfig&, const EnvConfig&) = default;
};

struct EpisodeSummary {
  terrain::TerrainKind kind = terrain::TerrainKind::kPlane;
  int level = 0;       // level the episode was played at
  int next_level = 0;  // after the curriculum update
  double command = 0.0;
  double elapsed = 0.0;
  double distance = 0.0;
  double mean_task_reward = 0.0;
  bool fell = false;
  bool timeout = false;
  bool non_finite = false;
  terrain::CurriculumRecord record;
};

struct StepOutcome {
  double task_reward = 0.0;
  Eigen::VectorXd pair;     // AMP transition (before, after)
  bool pair_valid = true;   // false when the step blew up
  bool done = false;
  bool timeout = false;     // done because of the time limit only
  std::optional<EpisodeSummary> episode;
};

// One planar robot on one terrain block. Steps do not reset automatically;
// call Reset() after a done step.
class LocomotionEnv {
 public:
  LocomotionEnv() = default;
  LocomotionEnv(const EnvConfig& config, terrain::TerrainKind kind, int level,
                std::uint64_t seed);

  // New terrain, randomized parameters and command, robot standing at spawn.
  void Reset();
  // `action` is the joint target offset from the nominal pose before
  // filtering.
  StepOutcome Step(const sim::JointVector& action);

  const EnvConfig& config() const { return config_; }
  const sim::RobotState& state() const { return state_; }
  const sim::ProprioObs& obs() const { return obs_; }
  sim::PrivilegedInfo Privileged() const;
  amp::Features Features() const;
  const terrain::Terrain& terrain() const { return terrain_; }
  const sim::PhysicsParams& physics() const { return physics_; }
  terrain::TerrainKind kind() const { return kind_; }
  int level() const { return level_; }
  double command() const { return command_; }
  int episode_steps() const { return steps_; }
  const sim::ContactDiagnostics& diagnostics() const { return diagnostics_; }

  // Overrides the state mid-episode (tests and scripted agents).
  void set_state(const sim::RobotState& state);

  void Save(BinaryWriter& out) const;
  static LocomotionEnv Load(BinaryReader& in, const EnvConfig& config);

 private:
  bool Fallen() const;
  EpisodeSummary Finish(bool fell, bool timeout, bool non_finite);

  EnvConfig config_;
  terrain::TerrainKind kind_ = terrain::TerrainKind::kPlane;
  int level_ = 0;
  Rng rng_;
  std::uint64_t terrain_seed_ = 0;
  terrain::Terrain terrain_;
  sim::PhysicsParams physics_;
  double command_ = 0.0;
  sim::JointVector nominal_ = sim::JointVector::Zero();
  sim::JointVector filtered_ = sim::JointVector::Zero();
  sim::JointVector prev_action_ = sim::JointVector::Zero();
  sim::RobotState state_;
  sim::ProprioObs obs_;
  sim::ContactDiagnostics diagnostics_;
  double start_x_ = 0.0;
  double task_reward_sum_ = 0.0;
  int steps_ = 0;
};

}  // namespace locolab::ppo

#endif  // LOCOLAB_PPO_ENV_H_
