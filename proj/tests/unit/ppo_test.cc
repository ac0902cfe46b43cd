#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "finite_difference.h"
#include "locolab/errors.h"
#include "locolab/motion/motion.h"
#include "locolab/ppo/bundle.h"
#include "locolab/ppo/env.h"
#include "locolab/ppo/gae.h"
#include "locolab/ppo/reward.h"
#include "locolab/ppo/trainer.h"
#include "locolab/sim/kinematics.h"

namespace locolab::ppo {
namespace {

using ::locolab::testing::NumericGradient;
using ::locolab::testing::RelativeError;

Eigen::MatrixXd RandomMatrix(int rows, int cols, Rng& rng, double scale = 1.0) {
  Eigen::MatrixXd m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = scale * rng.Normal();
  return m;
}

NetworkConfig TinyNets() {
  NetworkConfig nets;
  nets.policy_hidden = {12};
  nets.value_hidden = {12};
  nets.encoder_hidden = {8};
  nets.latent_dim = 4;
  nets.predictor_hidden = {8};
  nets.history_length = 3;
  return nets;
}

amp::DiscriminatorConfig TinyDisc() {
  amp::DiscriminatorConfig disc;
  disc.hidden = {16};
  disc.batch_size = 32;
  return disc;
}

// Perturbs biases away from zero so every parameter carries gradient.
PolicyBundle RandomBundle(Rng& rng) {
  PolicyBundle b = PolicyBundle::Create(TinyNets(), TinyDisc(), rng);
  b.policy.InitOrthogonal(rng, 1.0, 1.0);
  for (nn::Mlp* net : {&b.policy, &b.value, &b.encoder})
    for (auto& layer : net->mutable_layers())
      for (Eigen::Index i = 0; i < layer.bias.size(); ++i)
        layer.bias[i] = 0.3 * rng.Normal();
  for (Eigen::Index i = 0; i < b.head.log_std.size(); ++i)
    b.head.log_std[i] = -1.0 + 0.2 * rng.Normal();
  return b;
}

Minibatch RandomMinibatch(const PolicyBundle& b, int n, Rng& rng) {
  Minibatch mb{RandomMatrix(sim::kPrivilegedDim, n, rng),
               RandomMatrix(sim::kObsDim, n, rng),
               Eigen::MatrixXd(), Eigen::VectorXd(n),
               RandomMatrix(n, 1, rng), RandomMatrix(n, 1, rng, 3.0)};
  const Eigen::MatrixXd mean = b.ActionMean(b.Latent(mb.privileged), mb.obs);
  mb.actions = mean + 0.3 * RandomMatrix(sim::kNumJoints, n, rng);
  const Eigen::VectorXd logp = b.head.LogProbBatch(mean, mb.actions);
  // Old log-probabilities spread the ratio across both sides of the clip.
  for (int i = 0; i < n; ++i) mb.old_log_probs[i] = logp[i] + 0.3 * rng.Normal();
  return mb;
}

std::vector<motion::MotionClip> Clips() {
  const auto trot = motion::SynthGait(
      motion::GaitParams::Preset(motion::GaitLabel::kTrot, 0.5), 60, 50.0);
  return {trot, motion::Mirror(trot)};
}

TrainConfig TinyTrainConfig() {
  TrainConfig c;
  c.nets = TinyNets();
  c.disc = TinyDisc();
  c.ppo.n_envs = 4;
  c.ppo.horizon = 8;
  c.ppo.epochs = 2;
  c.ppo.minibatches = 2;
  c.policy_pair_capacity = 500;
  c.iterations = 2;
  c.seed = 11;
  return c;
}

// ---------------------------------------------------------------- rewards

TEST(TaskRewardTest, PerfectTrackingGivesMaximum) {
  EXPECT_EQ(TaskReward(0.7, 0.7, 0.0, 0.0, 1.0, 0.5), 1.5);
  RewardWeights w;
  EXPECT_EQ(PlanarTaskReward(1.2, 1.2, w), w.MaxTaskReward());
}

TEST(TaskRewardTest, HandEvaluatedValue) {
  // e^-1 = 0.36787944117144233...
  EXPECT_NEAR(TaskReward(1.0, 0.0, 0.3, 0.3, 1.0, 0.5),
              0.36787944117144233 + 0.5, 1e-12);
}

TEST(TaskRewardTest, StrictlyDecreasingInVelocityError) {
  double previous = TaskReward(0.5, 0.5, 0, 0, 1.0, 0.5);
  for (double err = 0.05; err < 5.0; err += 0.05) {
    const double r = TaskReward(0.5, 0.5 + err, 0, 0, 1.0, 0.5);
    EXPECT_LT(r, previous);
    EXPECT_NEAR(r, TaskReward(0.5, 0.5 - err, 0, 0, 1.0, 0.5), 1e-12);
    previous = r;
  }
}

TEST(CombinedRewardTest, DefaultMixing) {
  const RewardWeights w;
  EXPECT_EQ(w.w_goal, 0.35);
  EXPECT_EQ(w.w_style, 0.65);
  EXPECT_NEAR(CombinedReward(1.0, 1.0, w), 1.0, 1e-12);
  EXPECT_NEAR(CombinedReward(0.8, 0.0, w), 0.35 * 0.8, 1e-12);
  RewardWeights task_only;
  task_only.w_goal = 1.0;
  task_only.w_style = 0.0;
  EXPECT_EQ(CombinedReward(1.3, 0.9, task_only), 1.3);
}

TEST(CombinedRewardTest, StaysInRange) {
  const RewardWeights w;
  Rng rng(1);
  const double hi = w.w_goal * w.MaxTaskReward() + w.w_style;
  for (int i = 0; i < 10000; ++i) {
    const double rg = PlanarTaskReward(rng.Uniform(-2, 2), rng.Uniform(-2, 2), w);
    const double rs = amp::StyleReward(rng.Uniform(-4, 4));
    const double r = CombinedReward(rg, rs, w);
    EXPECT_GE(r, 0.0);
    EXPECT_LE(r, hi);
  }
}

TEST(RewardWeightsTest, Validation) {
  RewardWeights w;
  EXPECT_NO_THROW(w.Validate());
  w.w_goal = 0.5;
  EXPECT_THROW(w.Validate(), ConfigError);
  w = {};
  w.w_v = -1.0;
  EXPECT_THROW(w.Validate(), ConfigError);
}

// -------------------------------------------------------------------- GAE

// Exhaustive lambda-return: weighted n-step advantages, each n-step estimate
// summed term by term and stopped at the episode end.
std::vector<double> BruteForceGae(const std::vector<double>& r,
                                  const std::vector<double>& v,
                                  const std::vector<bool>& done, double last,
                                  double gamma, double lambda) {
  const int n = static_cast<int>(r.size());
  std::vector<double> out(n);
  for (int t = 0; t < n; ++t) {
    int horizon = 0;  // steps available until a terminal or the segment end
    for (int k = t; k < n; ++k) {
      ++horizon;
      if (done[k]) break;
    }
    auto value_after = [&](int k) {  // V of the state after step k
      if (done[k]) return 0.0;
      return k + 1 < n ? v[k + 1] : last;
    };
    auto n_step = [&](int steps) {
      double g = 0.0, discount = 1.0;
      for (int i = 0; i < steps; ++i) {
        g += discount * r[t + i];
        discount *= gamma;
      }
      return g + discount * value_after(t + steps - 1) - v[t];
    };
    double total = 0.0, weight = 1.0;
    for (int k = 1; k < horizon; ++k) {
      total += (1.0 - lambda) * weight * n_step(k);
      weight *= lambda;
    }
    total += weight * n_step(horizon);
    out[t] = total;
  }
  return out;
}

TEST(GaeTest, UndiscountedZeroValuesSumFutureRewardsInEpisode) {
  Eigen::VectorXd r(5);
  r << 1, 2, 3, 4, 5;
  const std::vector<bool> done = {false, true, false, false, false};
  const GaeResult g = Gae(r, Eigen::VectorXd::Zero(5), done, 0.0, 1.0, 1.0);
  EXPECT_DOUBLE_EQ(g.advantages[0], 3);
  EXPECT_DOUBLE_EQ(g.advantages[1], 2);
  EXPECT_DOUBLE_EQ(g.advantages[2], 12);
  EXPECT_DOUBLE_EQ(g.advantages[4], 5);
}

TEST(GaeTest, SingleTerminalStep) {
  const GaeResult g = Gae(Eigen::VectorXd::Constant(1, 2.5),
                          Eigen::VectorXd::Constant(1, 0.75), {true}, 100.0,
                          0.99, 0.95);
  EXPECT_DOUBLE_EQ(g.advantages[0], 2.5 - 0.75);
  EXPECT_DOUBLE_EQ(g.returns[0], 2.5);
}

TEST(GaeTest, MatchesBruteForceOracle) {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(rng.Index(30));
    std::vector<double> r(n), v(n);
    std::vector<bool> done(n);
    Eigen::VectorXd er(n), ev(n);
    for (int i = 0; i < n; ++i) {
      er[i] = r[i] = rng.Normal();
      ev[i] = v[i] = rng.Normal();
      done[i] = rng.Uniform01() < 0.15;
    }
    const double last = rng.Normal();
    const double gamma = rng.Uniform(0.8, 1.0);
    const double lambda = rng.Uniform(0.5, 1.0);
    const GaeResult g = Gae(er, ev, done, last, gamma, lambda);
    const auto oracle = BruteForceGae(r, v, done, last, gamma, lambda);
    for (int i = 0; i < n; ++i) {
      EXPECT_NEAR(g.advantages[i], oracle[i], 1e-10);
      EXPECT_NEAR(g.returns[i], oracle[i] + v[i], 1e-10);
    }
  }
}

TEST(GaeTest, LengthMismatchThrows) {
  EXPECT_THROW(Gae(Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(2),
                   {false, false, false}, 0, 0.9, 0.9),
               DimMismatch);
  EXPECT_THROW(Gae(Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(3), {false},
                   0, 0.9, 0.9),
               DimMismatch);
}

TEST(GaeTest, NormalizedAdvantagesHaveUnitMoments) {
  Rng rng(3);
  const Eigen::VectorXd a = 5.0 * RandomMatrix(257, 1, rng).array() + 3.0;
  const Eigen::VectorXd z = NormalizeAdvantages(a);
  EXPECT_LT(std::abs(z.mean()), 1e-6);
  const double sd = std::sqrt((z.array() - z.mean()).square().mean());
  EXPECT_NEAR(sd, 1.0, 1e-6);
  EXPECT_EQ(NormalizeAdvantages(Eigen::VectorXd::Constant(1, 4.0))[0], 4.0);
}

// ---------------------------------------------------------------- losses

TEST(ActorLossTest, UnitRatioGivesNegativeMeanAdvantage) {
  Rng rng(4);
  const PolicyBundle b = RandomBundle(rng);
  Minibatch mb = RandomMinibatch(b, 10, rng);
  const Eigen::MatrixXd mean = b.ActionMean(b.Latent(mb.privileged), mb.obs);
  mb.old_log_probs = b.head.LogProbBatch(mean, mb.actions);
  const ActorGrads g = ActorLossAndGrads(b, mb, 0.2, 0.0);
  EXPECT_NEAR(g.loss, -mb.advantages.mean(), 1e-12);
  EXPECT_NEAR(g.approx_kl, 0.0, 1e-15);
  EXPECT_EQ(g.clip_fraction, 0.0);
}

TEST(ActorLossTest, ClippedRatioUsesBound) {
  Rng rng(5);
  const PolicyBundle b = RandomBundle(rng);
  Minibatch mb = RandomMinibatch(b, 1, rng);
  const Eigen::MatrixXd mean = b.ActionMean(b.Latent(mb.privileged), mb.obs);
  mb.old_log_probs = b.head.LogProbBatch(mean, mb.actions).array() - std::log(1.5);
  mb.advantages[0] = 2.0;
  const ActorGrads g = ActorLossAndGrads(b, mb, 0.2, 0.0);
  EXPECT_NEAR(g.surrogate, 1.2 * 2.0, 1e-12);
  EXPECT_EQ(g.clip_fraction, 1.0);
  // The clipped branch carries no gradient.
  EXPECT_EQ(g.policy.SquaredNorm(), 0.0);
  EXPECT_EQ(g.encoder.SquaredNorm(), 0.0);
}

TEST(ActorLossTest, GradientsMatchFiniteDifferences) {
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    PolicyBundle b = RandomBundle(rng);
    const Minibatch mb = RandomMinibatch(b, 6, rng);
    ActorGrads g = ActorLossAndGrads(b, mb, 0.2, 0.01);
    auto loss = [&] { return ActorLossAndGrads(b, mb, 0.2, 0.01).loss; };
    EXPECT_LT(RelativeError(g.policy.Blocks(), NumericGradient(b.policy.Blocks(), loss)),
              1e-4);
    EXPECT_LT(RelativeError(g.encoder.Blocks(),
                            NumericGradient(b.encoder.Blocks(), loss)),
              1e-4);
    std::vector<std::span<double>> head = {
        {b.head.log_std.data(), static_cast<std::size_t>(b.head.log_std.size())}};
    std::vector<std::span<const double>> analytic = {
        {g.log_std.data(), static_cast<std::size_t>(g.log_std.size())}};
    EXPECT_LT(RelativeError(analytic, NumericGradient(head, loss)), 1e-4);
  }
}

TEST(ValueLossTest, GradientsMatchFiniteDifferences) {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    PolicyBundle b = RandomBundle(rng);
    const Minibatch mb = RandomMinibatch(b, 6, rng);
    const ValueGrads g = ValueLossAndGrads(b, mb);
    auto loss = [&] { return ValueLossAndGrads(b, mb).loss; };
    EXPECT_LT(RelativeError(g.value.Blocks(), NumericGradient(b.value.Blocks(), loss)),
              1e-4);
  }
}

TEST(ActorLossTest, SmallStepDecreasesSurrogateLoss) {
  Rng rng(8);
  PolicyBundle b = RandomBundle(rng);
  const Minibatch mb = RandomMinibatch(b, 32, rng);
  const ActorGrads g = ActorLossAndGrads(b, mb, 0.2, 0.0);
  const double step = 1e-3;
  auto params = b.policy.Blocks();
  auto grads = g.policy.Blocks();
  for (std::size_t k = 0; k < params.size(); ++k)
    for (std::size_t i = 0; i < params[k].size(); ++i)
      params[k][i] -= step * grads[k][i];
  auto enc_params = b.encoder.Blocks();
  auto enc_grads = g.encoder.Blocks();
  for (std::size_t k = 0; k < enc_params.size(); ++k)
    for (std::size_t i = 0; i < enc_params[k].size(); ++i)
      enc_params[k][i] -= step * enc_grads[k][i];
  b.head.log_std -= step * g.log_std;
  EXPECT_LT(ActorLossAndGrads(b, mb, 0.2, 0.0).loss, g.loss);
}

// ------------------------------------------------------------ environment

TEST(EnvTest, ResetStandsAtSpawnWithCommand) {
  EnvConfig config;
  config.fixed_command = 0.5;
  const LocomotionEnv env(config, terrain::TerrainKind::kPlane, 0, 1);
  EXPECT_DOUBLE_EQ(env.state().base_pos.x(), config.spawn_x);
  EXPECT_EQ(env.command(), 0.5);
  EXPECT_EQ(env.obs().command, 0.5);
  EXPECT_EQ(env.episode_steps(), 0);
}

TEST(EnvTest, TimeoutEndsEpisode) {
  EnvConfig config;
  config.episode_seconds = 0.1;
  config.perturb = false;
  LocomotionEnv env(config, terrain::TerrainKind::kPlane, 0, 2);
  StepOutcome out;
  for (int i = 0; i < 5; ++i) {
    EXPECT_FALSE(out.done);
    out = env.Step(sim::JointVector::Zero());
  }
  ASSERT_TRUE(out.done);
  EXPECT_TRUE(out.timeout);
  ASSERT_TRUE(out.episode.has_value());
  EXPECT_FALSE(out.episode->fell);
  EXPECT_NEAR(out.episode->elapsed, 0.1, 1e-12);
}

TEST(EnvTest, LargePitchCountsAsFall) {
  EnvConfig config;
  config.perturb = false;
  LocomotionEnv env(config, terrain::TerrainKind::kPlane, 0, 3);
  sim::RobotState s = env.state();
  s.base_pitch = 1.3;
  s.base_pos.y() = 1.0;
  env.set_state(s);
  const StepOutcome out = env.Step(sim::JointVector::Zero());
  ASSERT_TRUE(out.done);
  EXPECT_FALSE(out.timeout);
  EXPECT_TRUE(out.episode->fell);
}

TEST(EnvTest, TrunkTouchingGroundCountsAsFall) {
  EnvConfig config;
  config.perturb = false;
  LocomotionEnv env(config, terrain::TerrainKind::kPlane, 0, 4);
  sim::RobotState s = env.state();
  s.base_pos.y() = 0.0;
  env.set_state(s);
  const StepOutcome out = env.Step(sim::JointVector::Zero());
  EXPECT_TRUE(out.done && out.episode->fell);
}

TEST(EnvTest, LevelChangesOnlyAtEpisodeEnd) {
  EnvConfig config;
  config.episode_seconds = 0.2;
  LocomotionEnv env(config, terrain::TerrainKind::kUniformNoise, 5, 5);
  for (int episode = 0; episode < 3; ++episode) {
    const int level = env.level();
    StepOutcome out;
    while (!out.done) {
      EXPECT_EQ(env.level(), level);
      out = env.Step(sim::JointVector::Zero());
    }
    // Ten steps at a walking command cannot reach half the distance.
    EXPECT_EQ(out.episode->next_level, out.episode->record.distance_traveled <
                                                   0.5 * out.episode->record.commanded_distance
                                               ? std::max(level - 1, 0)
                                               : level);
    EXPECT_EQ(env.level(), out.episode->next_level);
    env.Reset();
  }
}

TEST(EnvTest, SameSeedSameTrajectory) {
  EnvConfig config;
  LocomotionEnv a(config, terrain::TerrainKind::kStairs, 3, 9);
  LocomotionEnv b(config, terrain::TerrainKind::kStairs, 3, 9);
  for (int i = 0; i < 50; ++i) {
    const sim::JointVector act = sim::JointVector::Constant(0.1 * std::sin(0.3 * i));
    const StepOutcome oa = a.Step(act);
    const StepOutcome ob = b.Step(act);
    EXPECT_EQ(oa.pair, ob.pair);
    if (oa.done) {
      a.Reset();
      b.Reset();
    }
  }
  EXPECT_EQ(a.state(), b.state());
}

TEST(EnvTest, CheckpointRestoresEverything) {
  EnvConfig config;
  LocomotionEnv a(config, terrain::TerrainKind::kUniformNoise, 4, 10);
  for (int i = 0; i < 7; ++i) a.Step(sim::JointVector::Constant(0.05));
  std::stringstream buffer;
  BinaryWriter writer(buffer);
  a.Save(writer);
  BinaryReader reader(buffer);
  LocomotionEnv b = LocomotionEnv::Load(reader, config);
  for (int i = 0; i < 20; ++i) {
    const StepOutcome oa = a.Step(sim::JointVector::Constant(-0.05));
    const StepOutcome ob = b.Step(sim::JointVector::Constant(-0.05));
    ASSERT_EQ(oa.pair, ob.pair);
    ASSERT_EQ(oa.task_reward, ob.task_reward);
  }
  EXPECT_EQ(a.obs(), b.obs());
}

// ---------------------------------------------------------------- bundle

TEST(BundleTest, FileRoundTripIsExact) {
  Rng rng(12);
  const PolicyBundle b = RandomBundle(rng);
  const auto path = std::filesystem::temp_directory_path() / "locolab_bundle.bin";
  b.Save(path.string());
  EXPECT_EQ(PolicyBundle::Load(path.string()), b);
  std::filesystem::remove(path);
}

TEST(BundleTest, RejectsForeignFiles) {
  const auto path = std::filesystem::temp_directory_path() / "locolab_junk.bin";
  {
    std::ofstream out(path, std::ios::binary);
    out << "definitely not a bundle";
  }
  EXPECT_THROW(PolicyBundle::Load(path.string()), Error);
  std::filesystem::remove(path);
  EXPECT_THROW(PolicyBundle::Load("/nonexistent/bundle.bin"), IoError);
}

TEST(BundleTest, ChecksumsTrackTheirNetworks) {
  Rng rng(13);
  PolicyBundle b = RandomBundle(rng);
  const auto policy = b.PolicyChecksum();
  const auto teacher = b.TeacherChecksum();
  b.predictor.mutable_layers()[0].bias[0] += 1.0;
  b.value.mutable_layers()[0].bias[0] += 1.0;
  EXPECT_EQ(b.PolicyChecksum(), policy);
  EXPECT_EQ(b.TeacherChecksum(), teacher);
  b.encoder.mutable_layers()[0].bias[0] += 1e-12;
  EXPECT_EQ(b.PolicyChecksum(), policy);
  EXPECT_NE(b.TeacherChecksum(), teacher);
  b.head.log_std[3] += 1e-12;
  EXPECT_NE(b.PolicyChecksum(), policy);
}

// ---------------------------------------------------------------- trainer

TEST(TrainerTest, ZeroHorizonGivesEmptyBatch) {
  TrainConfig c = TinyTrainConfig();
  c.ppo.horizon = 0;
  TeacherTrainer t(c, Clips());
  RolloutBatch batch = t.Collect();
  EXPECT_EQ(batch.size(), 0);
  const PolicyBundle before = t.bundle();
  t.Update(batch);
  EXPECT_EQ(t.bundle().policy, before.policy);
}

TEST(TrainerTest, StyleRewardsBoundedAndRewardsMixed) {
  TeacherTrainer t(TinyTrainConfig(), Clips());
  const RolloutBatch b = t.Collect();
  const RewardWeights w;
  for (int k = 0; k < b.size(); ++k) {
    EXPECT_GE(b.style_rewards[k], 0.0);
    EXPECT_LE(b.style_rewards[k], 1.0);
    if (!b.dones[k])
      EXPECT_NEAR(b.rewards[k],
                  CombinedReward(b.task_rewards[k], b.style_rewards[k], w), 1e-12);
  }
}

TEST(TrainerTest, SameSeedSameBatches) {
  TeacherTrainer a(TinyTrainConfig(), Clips());
  TeacherTrainer b(TinyTrainConfig(), Clips());
  for (int i = 0; i < 2; ++i) {
    RolloutBatch ba = a.Collect();
    RolloutBatch bb = b.Collect();
    EXPECT_EQ(ba.actions, bb.actions);
    EXPECT_EQ(ba.rewards, bb.rewards);
    a.Update(ba);
    b.Update(bb);
  }
  EXPECT_EQ(a.bundle(), b.bundle());
}

TEST(TrainerTest, ResumeReproducesNextIterationBitwise) {
  const auto path = std::filesystem::temp_directory_path() / "locolab_ckpt.bin";
  TeacherTrainer a(TinyTrainConfig(), Clips());
  a.RunIteration();
  a.SaveCheckpoint(path.string());
  const IterationStats sa = a.RunIteration();
  TeacherTrainer b =
      TeacherTrainer::LoadCheckpoint(path.string(), TinyTrainConfig(), Clips());
  EXPECT_EQ(b.iteration(), 1);
  const IterationStats sb = b.RunIteration();
  EXPECT_EQ(StatsCsvRow(sa), StatsCsvRow(sb));
  EXPECT_EQ(a.bundle(), b.bundle());
  std::filesystem::remove(path);
}

TEST(TrainerTest, ZeroIterationsWritesHeaderOnlyLog) {
  TrainConfig c = TinyTrainConfig();
  c.iterations = 0;
  TeacherTrainer t(c, Clips());
  const PolicyBundle initial = t.bundle();
  const auto log = std::filesystem::temp_directory_path() / "locolab_log.csv";
  const PolicyBundle out = TrainTeacher(t, {log.string(), "", 0, ""});
  EXPECT_EQ(out, initial);
  std::ifstream in(log);
  std::stringstream text;
  text << in.rdbuf();
  EXPECT_EQ(text.str(), StatsCsvHeader() + "\n");
  std::filesystem::remove(log);
}

TEST(TrainerTest, FrozenDiscriminatorKeepsParameters) {
  TrainConfig c = TinyTrainConfig();
  c.freeze_discriminator = true;
  TeacherTrainer t(c, Clips());
  const nn::Mlp before = t.bundle().discriminator.net();
  t.RunIteration();
  EXPECT_EQ(t.bundle().discriminator.net(), before);
  TeacherTrainer live(TinyTrainConfig(), Clips());
  live.RunIteration();
  EXPECT_NE(live.bundle().discriminator.net(), before);
}

TEST(TrainerTest, ConfigProblemsAreListedTogether) {
  TrainConfig c = TinyTrainConfig();
  c.ppo.gamma = 1.5;
  c.env.reward.w_goal = 0.9;
  c.terrain_kinds.clear();
  const auto problems = c.Problems();
  EXPECT_EQ(problems.size(), 3u);
  try {
    c.Validate();
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("gamma"), std::string::npos);
    EXPECT_NE(what.find("w_goal"), std::string::npos);
    EXPECT_NE(what.find("terrain_kinds"), std::string::npos);
  }
}

TEST(TrainerTest, AmpWithoutClipsThrows) {
  EXPECT_THROW(TeacherTrainer(TinyTrainConfig(), {}), EmptyDataset);
}

}  // namespace
}  // namespace locolab::ppo
