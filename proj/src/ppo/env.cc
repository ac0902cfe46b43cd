#include "locolab/ppo/env.h"

#include <algorithm>
#include <cmath>

#include "locolab/errors.h"
#include "locolab/sim/kinematics.h"

namespace locolab::ppo {

namespace {

void WriteState(BinaryWriter& out, const sim::RobotState& s) {
  out.WriteVector(s.Positions());
  out.WriteVector(s.Velocities());
  for (bool c : s.foot_contact) out.Write<std::uint8_t>(c ? 1 : 0);
  out.Write(s.time);
  out.Write(s.step_count);
  for (double f : s.contact_force) out.Write(f);
  out.WriteVector(s.applied_torque);
}

sim::RobotState ReadState(BinaryReader& in) {
  sim::RobotState s;
  const Eigen::VectorXd q = in.ReadVector();
  const Eigen::VectorXd v = in.ReadVector();
  if (q.size() != sim::kNumDof || v.size() != sim::kNumDof)
    throw DimMismatch("stored robot state has the wrong size");
  s.SetPositions(q);
  s.SetVelocities(v);
  for (bool& c : s.foot_contact) c = in.Read<std::uint8_t>() != 0;
  s.time = in.Read<double>();
  s.step_count = in.Read<std::int64_t>();
  for (double& f : s.contact_force) f = in.Read<double>();
  s.applied_torque = in.ReadVector();
  return s;
}

void WriteObs(BinaryWriter& out, const sim::ProprioObs& obs) {
  out.WriteVector(obs.ToVector());
}

sim::ProprioObs ReadObs(BinaryReader& in) {
  const Eigen::VectorXd v = in.ReadVector();
  if (v.size() != sim::kObsDim) throw DimMismatch("stored observation size");
  sim::ProprioObs obs;
  obs.joint_angles = v.segment<8>(0);
  obs.joint_vels = v.segment<8>(8);
  obs.projected_gravity = v.segment<2>(16);
  obs.pitch_rate = v[18];
  for (int leg = 0; leg < sim::kNumLegs; ++leg)
    obs.foot_contact[leg] = v[19 + leg] != 0.0;
  obs.prev_action = v.segment<8>(23);
  obs.command = v[31];
  return obs;
}

}  // namespace

void EnvConfig::Validate() const {
  morphology.Validate();
  physics.Validate();
  noise.Validate();
  perturbation.Validate();
  reward.Validate();
  for (const sim::Range& r : {randomization.friction_coeff, randomization.mass_scale,
                         randomization.motor_gain_scale})
    if (!(r.lo <= r.hi)) throw InvalidRange("randomization range has lo > hi");
  for (const auto& r : command_ranges)
    if (!(r.lo <= r.hi)) throw InvalidRange("command range has lo > hi");
  if (!(episode_seconds > 0.0)) throw ConfigError("episode_seconds must be > 0");
  if (!(fall_pitch > 0.0)) throw ConfigError("fall_pitch must be > 0");
  if (!(action_limit > 0.0)) throw ConfigError("action_limit must be > 0");
  if (!(spawn_x >= 0.0 && spawn_x < terrain::kBlockLength))
    throw ConfigError("spawn_x must lie inside the terrain block");
}

int EnvConfig::MaxSteps() const {
  return static_cast<int>(std::lround(episode_seconds / physics.ControlDt()));
}

LocomotionEnv::LocomotionEnv(const EnvConfig& config, terrain::TerrainKind kind,
                             int level, std::uint64_t seed)
    : config_(config), kind_(kind), level_(level), rng_(seed) {
  config_.Validate();
  if (level < 0 || level > terrain::kMaxDifficulty)
    throw InvalidDifficulty("curriculum level must be in 0..9");
  nominal_ = sim::NominalJointAngles(config_.morphology);
  Reset();
}

void LocomotionEnv::Reset() {
  terrain_seed_ = rng_.NextU64();
  terrain_ = terrain::Terrain::Generate(kind_, level_, terrain_seed_);
  physics_ = config_.randomize ? sim::RandomizeParams(config_.physics,
                                                      config_.randomization, rng_)
                               : config_.physics;
  command_ = std::isfinite(config_.fixed_command)
                 ? config_.fixed_command
                 : terrain::SampleCommand(kind_, level_, config_.command_ranges,
                                          rng_);
  state_ = sim::StandingState(config_.morphology, terrain_, config_.spawn_x,
                              nominal_);
  filtered_.setZero();
  prev_action_.setZero();
  diagnostics_ = {};
  obs_ = sim::Observe(state_, config_.noise, prev_action_, command_, rng_);
  start_x_ = state_.base_pos.x();
  task_reward_sum_ = 0.0;
  steps_ = 0;
}

sim::PrivilegedInfo LocomotionEnv::Privileged() const {
  return sim::Privileged(state_, terrain_, physics_);
}

amp::Features LocomotionEnv::Features() const {
  return amp::AmpFeatures(state_, config_.morphology, terrain_);
}

void LocomotionEnv::set_state(const sim::RobotState& state) { state_ = state; }

bool LocomotionEnv::Fallen() const {
  if (std::abs(state_.base_pitch) > config_.fall_pitch) return true;
  for (const auto& tip : sim::TrunkTips(config_.morphology, state_))
    if (tip.y() <= terrain_.HeightAt(tip.x())) return true;
  return false;
}

StepOutcome LocomotionEnv::Step(const sim::JointVector& action) {
  StepOutcome out;
  const amp::Features before = Features();
  const sim::JointVector a =
      action.cwiseMax(-config_.action_limit).cwiseMin(config_.action_limit);
  filtered_ = sim::LowPassFilter(filtered_, a);
  sim::PerturbationSpec perturbation = config_.perturbation;
  if (!config_.perturb)
    perturbation.lin_vel_kick = perturbation.ang_vel_kick =
        perturbation.torque_noise = 0.0;
  try {
    state_ = sim::Step(state_, nominal_ + filtered_, physics_,
                       config_.morphology, terrain_, perturbation, rng_,
                       &diagnostics_);
  } catch (const NonFiniteState&) {
    ++steps_;
    out.pair = amp::PairVector(before, before);
    out.pair_valid = false;
    out.done = true;
    out.episode = Finish(true, false, true);
    return out;
  }
  ++steps_;
  out.task_reward =
      PlanarTaskReward(command_, state_.base_lin_vel.x(), config_.reward);
  task_reward_sum_ += out.task_reward;
  prev_action_ = a;
  obs_ = sim::Observe(state_, config_.noise, prev_action_, command_, rng_);
  out.pair = amp::PairVector(before, Features());
  const bool fell = Fallen();
  const bool timeout = !fell && steps_ >= config_.MaxSteps();
  if (fell || timeout) {
    out.done = true;
    out.timeout = timeout;
    out.episode = Finish(fell, timeout, false);
  }
  return out;
}

EpisodeSummary LocomotionEnv::Finish(bool fell, bool timeout, bool non_finite) {
  EpisodeSummary s;
  s.kind = kind_;
  s.level = level_;
  s.command = command_;
  s.elapsed = steps_ * physics_.ControlDt();
  s.distance = std::max(0.0, state_.base_pos.x() - start_x_);
  s.mean_task_reward = steps_ > 0 ? task_reward_sum_ / steps_ : 0.0;
  s.fell = fell;
  s.timeout = timeout;
  s.non_finite = non_finite;
  s.record.crossed_center = state_.base_pos.x() >= terrain_.block_center_x();
  s.record.tracking_reward_ratio =
      s.mean_task_reward / config_.reward.MaxTaskReward();
  s.record.distance_traveled = s.distance;
  s.record.commanded_distance = std::abs(command_) * s.elapsed;
  s.next_level =
      config_.curriculum ? terrain::CurriculumUpdate(level_, s.record) : level_;
  level_ = s.next_level;
  return s;
}

void LocomotionEnv::Save(BinaryWriter& out) const {
  out.WriteString("env");
  out.Write<std::int32_t>(static_cast<std::int32_t>(kind_));
  out.Write<std::int32_t>(level_);
  out.WriteString(rng_.Serialize());
  out.Write<std::int32_t>(terrain_.difficulty());
  out.Write(terrain_seed_);
  out.Write(physics_.friction_coeff);
  out.WriteVector(physics_.motor_gain_scale);
  out.Write(physics_.mass_scale);
  out.Write(command_);
  out.WriteVector(filtered_);
  out.WriteVector(prev_action_);
  WriteState(out, state_);
  WriteObs(out, obs_);
  out.Write(start_x_);
  out.Write(task_reward_sum_);
  out.Write<std::int32_t>(steps_);
}

LocomotionEnv LocomotionEnv::Load(BinaryReader& in, const EnvConfig& config) {
  in.Expect("env");
  LocomotionEnv env;
  env.config_ = config;
  env.config_.Validate();
  env.nominal_ = sim::NominalJointAngles(config.morphology);
  env.kind_ = static_cast<terrain::TerrainKind>(in.Read<std::int32_t>());
  env.level_ = in.Read<std::int32_t>();
  env.rng_.Deserialize(in.ReadString());
  const int terrain_level = in.Read<std::int32_t>();
  env.terrain_seed_ = in.Read<std::uint64_t>();
  env.terrain_ =
      terrain::Terrain::Generate(env.kind_, terrain_level, env.terrain_seed_);
  env.physics_ = config.physics;
  env.physics_.friction_coeff = in.Read<double>();
  env.physics_.motor_gain_scale = in.ReadVector();
  env.physics_.mass_scale = in.Read<double>();
  env.command_ = in.Read<double>();
  env.filtered_ = in.ReadVector();
  env.prev_action_ = in.ReadVector();
  env.state_ = ReadState(in);
  env.obs_ = ReadObs(in);
  env.start_x_ = in.Read<double>();
  env.task_reward_sum_ = in.Read<double>();
  env.steps_ = in.Read<std::int32_t>();
  return env;
}

}  // namespace locolab::ppo
