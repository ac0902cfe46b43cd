#ifndef LOCOLAB_PPO_TRAINER_H_
#define LOCOLAB_PPO_TRAINER_H_

#include <array>
#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "locolab/amp/amp.h"
#include "locolab/motion/motion.h"
#include "locolab/nn/adam.h"
#include "locolab/ppo/bundle.h"
#include "locolab/ppo/env.h"
#include "locolab/rng.h"

namespace locolab::ppo {

struct PpoHyper {
  double gamma = 0.99;
  double lambda = 0.95;
  double clip = 0.2;
  int epochs = 5;
  int minibatches = 4;
  double learning_rate = 3e-4;
  double entropy_coef = 0.0;
  double max_grad_norm = 1.0;
  int horizon = 24;
  int n_envs = 64;

  void Validate() const;
  friend bool operator==(const PpoHyper&, const PpoHyper&) = default;
};

struct TrainConfig {
  EnvConfig env;
  PpoHyper ppo;
  NetworkConfig nets;
  amp::DiscriminatorConfig disc;
  // Environment i plays terrain_kinds[i % size].
  std::vector<terrain::TerrainKind> terrain_kinds = {
      terrain::TerrainKind::kPlane, terrain::TerrainKind::kUniformNoise,
      terrain::TerrainKind::kDiscreteObstacles, terrain::TerrainKind::kStairs};
  int initial_level = 0;
  bool amp_enabled = true;
  // Style rewards still come from D, but D keeps its initial parameters.
  bool freeze_discriminator = false;
  int policy_pair_capacity = 100000;
  int iterations = 1000;
  std::uint64_t seed = 1;

  // Every problem found, one message each; empty when valid.
  std::vector<std::string> Problems() const;
  // Throws ConfigError listing all problems.
  void Validate() const;
};

// Column k = t * n_envs + e holds environment e at step t.
struct RolloutBatch {
  int n_envs = 0;
  int horizon = 0;
  Eigen::MatrixXd obs;         // kObsDim x size, scaled
  Eigen::MatrixXd privileged;  // kPrivilegedDim x size, scaled
  Eigen::MatrixXd actions;
  Eigen::VectorXd log_probs;
  Eigen::VectorXd values;
  Eigen::VectorXd task_rewards;
  Eigen::VectorXd style_rewards;
  Eigen::VectorXd rewards;  // combined, with time-limit bootstrap folded in
  std::vector<bool> dones;
  std::vector<bool> pair_valid;
  Eigen::MatrixXd pairs;    // kPairDim x size
  Eigen::VectorXd bootstrap_values;  // per environment
  std::vector<EpisodeSummary> episodes;
  Eigen::VectorXd advantages;  // raw GAE
  Eigen::VectorXd returns;

  int size() const { return n_envs * horizon; }
};

// Per-environment GAE over the batch.
void ComputeAdvantages(RolloutBatch& batch, double gamma, double lambda);

struct Minibatch {
  Eigen::MatrixXd privileged;
  Eigen::MatrixXd obs;
  Eigen::MatrixXd actions;
  Eigen::VectorXd old_log_probs;
  Eigen::VectorXd advantages;  // normalized
  Eigen::VectorXd returns;
};

struct ActorGrads {
  double loss = 0.0;  // -clipped surrogate - entropy_coef * entropy
  double surrogate = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  nn::MlpGradients policy;
  Eigen::VectorXd log_std;
  nn::MlpGradients encoder;
};

// Clipped-surrogate loss and its gradients for the policy, the action head
// and, through the latent, the privileged encoder.
ActorGrads ActorLossAndGrads(const PolicyBundle& bundle, const Minibatch& mb,
                             double clip, double entropy_coef);

struct ValueGrads {
  double loss = 0.0;  // mean squared return error
  nn::MlpGradients value;
};
ValueGrads ValueLossAndGrads(const PolicyBundle& bundle, const Minibatch& mb);

struct IterationStats {
  int iteration = 0;
  std::int64_t env_steps = 0;
  double mean_task_reward = 0.0;
  double mean_style_reward = 0.0;
  double mean_reward = 0.0;
  double disc_loss = 0.0;
  double mean_d_data = 0.0;
  double mean_d_policy = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  int episodes = 0;
  double mean_tracking_ratio = 0.0;  // finished episodes, NaN if none
  double mean_level = 0.0;
  std::array<int, terrain::kMaxDifficulty + 1> level_histogram{};
};

std::string StatsCsvHeader();
std::string StatsCsvRow(const IterationStats& stats);

class TeacherTrainer {
 public:
  // Throws ConfigError, or EmptyDataset when AMP is on and there are no clips.
  TeacherTrainer(const TrainConfig& config,
                 const std::vector<motion::MotionClip>& clips);

  RolloutBatch Collect();
  IterationStats Update(RolloutBatch& batch);
  IterationStats RunIteration();

  const TrainConfig& config() const { return config_; }
  const PolicyBundle& bundle() const { return bundle_; }
  PolicyBundle& mutable_bundle() { return bundle_; }
  int iteration() const { return iteration_; }
  const std::vector<LocomotionEnv>& envs() const { return envs_; }

  // Full trainer state; resuming reproduces later iterations bitwise.
  void SaveCheckpoint(const std::string& path) const;
  static TeacherTrainer LoadCheckpoint(
      const std::string& path, const TrainConfig& config,
      const std::vector<motion::MotionClip>& clips);

 private:
  TeacherTrainer() = default;
  void UpdateDiscriminator(IterationStats& stats, int updates);

  TrainConfig config_;
  PolicyBundle bundle_;
  nn::Adam actor_adam_;
  nn::Adam critic_adam_;
  std::vector<LocomotionEnv> envs_;
  amp::MotionDataset dataset_;
  amp::PairBuffer policy_pairs_{1, amp::PairSource::kPolicy};
  Rng action_rng_;
  Rng update_rng_;
  sim::JointVector nominal_ = sim::JointVector::Zero();
  int iteration_ = 0;
  std::int64_t env_steps_ = 0;
};

struct TrainOutputs {
  std::string log_path;         // per-iteration CSV, empty to skip
  std::string checkpoint_path;  // trainer checkpoint, empty to skip
  int checkpoint_every = 50;
  std::string bundle_path;      // final bundle, empty to skip
};

// Runs the configured iterations (continuing `trainer`'s count) and returns
// the final bundle. `progress` is called after every iteration.
PolicyBundle TrainTeacher(
    TeacherTrainer& trainer, const TrainOutputs& outputs,
    const std::function<void(const IterationStats&)>& progress = {});

}  // namespace locolab::ppo

#endif  // LOCOLAB_PPO_TRAINER_H_
