#include "locolab/ppo/trainer.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "locolab/errors.h"
#include "locolab/ppo/gae.h"
#include "locolab/sim/kinematics.h"

namespace locolab::ppo {

namespace {

constexpr char kCheckpointMagic[] = "locolab-trainer";
constexpr int kCheckpointVersion = 1;

template <typename F>
void Collect(std::vector<std::string>& problems, F&& check) {
  try {
    check();
  } catch (const Error& e) {
    problems.push_back(e.what());
  }
}

std::vector<std::span<double>> ActorParams(PolicyBundle& b) {
  auto blocks = b.policy.Blocks();
  blocks.emplace_back(b.head.log_std.data(),
                      static_cast<std::size_t>(b.head.log_std.size()));
  for (auto block : b.encoder.Blocks()) blocks.push_back(block);
  return blocks;
}

std::vector<std::span<double>> ActorGradBlocks(ActorGrads& g) {
  auto blocks = g.policy.MutableBlocks();
  blocks.emplace_back(g.log_std.data(),
                      static_cast<std::size_t>(g.log_std.size()));
  for (auto block : g.encoder.MutableBlocks()) blocks.push_back(block);
  return blocks;
}

std::vector<std::span<const double>> Const(
    const std::vector<std::span<double>>& blocks) {
  return {blocks.begin(), blocks.end()};
}

Minibatch Gather(const RolloutBatch& batch, const Eigen::VectorXd& advantages,
                 const std::vector<int>& index, std::size_t begin,
                 std::size_t end) {
  const auto n = static_cast<Eigen::Index>(end - begin);
  Minibatch mb{Eigen::MatrixXd(batch.privileged.rows(), n),
               Eigen::MatrixXd(batch.obs.rows(), n),
               Eigen::MatrixXd(batch.actions.rows(), n),
               Eigen::VectorXd(n), Eigen::VectorXd(n), Eigen::VectorXd(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const int k = index[begin + static_cast<std::size_t>(i)];
    mb.privileged.col(i) = batch.privileged.col(k);
    mb.obs.col(i) = batch.obs.col(k);
    mb.actions.col(i) = batch.actions.col(k);
    mb.old_log_probs[i] = batch.log_probs[k];
    mb.advantages[i] = advantages[k];
    mb.returns[i] = batch.returns[k];
  }
  return mb;
}

std::string Fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

void PpoHyper::Validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("ppo.gamma must be in (0, 1]");
  if (!(lambda > 0.0 && lambda <= 1.0))
    throw ConfigError("ppo.lambda must be in (0, 1]");
  if (!(clip > 0.0)) throw ConfigError("ppo.clip must be > 0");
  if (epochs < 1) throw ConfigError("ppo.epochs must be >= 1");
  if (minibatches < 1) throw ConfigError("ppo.minibatches must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("ppo.learning_rate must be > 0");
  if (!(entropy_coef >= 0.0)) throw ConfigError("ppo.entropy_coef must be >= 0");
  if (!(max_grad_norm > 0.0)) throw ConfigError("ppo.max_grad_norm must be > 0");
  if (horizon < 0) throw ConfigError("ppo.horizon must be >= 0");
  if (n_envs < 1) throw ConfigError("ppo.n_envs must be >= 1");
}

std::vector<std::string> TrainConfig::Problems() const {
  std::vector<std::string> problems;
  Collect(problems, [&] { env.Validate(); });
  Collect(problems, [&] { ppo.Validate(); });
  Collect(problems, [&] { nets.Validate(); });
  Collect(problems, [&] { disc.Validate(); });
  if (terrain_kinds.empty()) problems.push_back("terrain_kinds must not be empty");
  if (initial_level < 0 || initial_level > terrain::kMaxDifficulty)
    problems.push_back("initial_level must be in 0..9");
  if (policy_pair_capacity < 1)
    problems.push_back("policy_pair_capacity must be >= 1");
  if (iterations < 0) problems.push_back("iterations must be >= 0");
  if (ppo.horizon * ppo.n_envs > 0 &&
      ppo.horizon * ppo.n_envs < ppo.minibatches)
    problems.push_back("ppo.minibatches exceeds the rollout size");
  return problems;
}

void TrainConfig::Validate() const {
  const auto problems = Problems();
  if (problems.empty()) return;
  std::string message = "invalid training config:";
  for (const auto& p : problems) message += "\n  - " + p;
  throw ConfigError(message);
}

void ComputeAdvantages(RolloutBatch& batch, double gamma, double lambda) {
  const int n = batch.n_envs;
  const int h = batch.horizon;
  batch.advantages.resize(batch.size());
  batch.returns.resize(batch.size());
  Eigen::VectorXd r(h), v(h);
  std::vector<bool> d(h);
  for (int e = 0; e < n; ++e) {
    for (int t = 0; t < h; ++t) {
      r[t] = batch.rewards[t * n + e];
      v[t] = batch.values[t * n + e];
      d[t] = batch.dones[t * n + e];
    }
    const GaeResult g = Gae(r, v, d, batch.bootstrap_values[e], gamma, lambda);
    for (int t = 0; t < h; ++t) {
      batch.advantages[t * n + e] = g.advantages[t];
      batch.returns[t * n + e] = g.returns[t];
    }
  }
}

ActorGrads ActorLossAndGrads(const PolicyBundle& bundle, const Minibatch& mb,
                             double clip, double entropy_coef) {
  const Eigen::Index m = mb.obs.cols();
  if (m == 0) throw EmptyBatch("actor loss on an empty minibatch");
  nn::ForwardCache enc_cache, pol_cache;
  const Eigen::MatrixXd latent = bundle.encoder.Forward(mb.privileged, &enc_cache);
  const Eigen::MatrixXd mean =
      bundle.policy.Forward(Stack(latent, mb.obs), &pol_cache);
  const Eigen::VectorXd logp = bundle.head.LogProbBatch(mean, mb.actions);
  ActorGrads g;
  Eigen::VectorXd dlogp(m);
  double surrogate = 0.0, kl = 0.0;
  int clipped = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double log_ratio = logp[i] - mb.old_log_probs[i];
    const double ratio = std::exp(log_ratio);
    const double adv = mb.advantages[i];
    const double unclipped = ratio * adv;
    const double bounded = std::clamp(ratio, 1.0 - clip, 1.0 + clip) * adv;
    surrogate += std::min(unclipped, bounded);
    dlogp[i] = unclipped <= bounded ? -unclipped / m : 0.0;
    kl += (ratio - 1.0) - log_ratio;
    if (std::abs(ratio - 1.0) > clip) ++clipped;
  }
  g.surrogate = surrogate / m;
  g.entropy = bundle.head.Entropy();
  g.loss = -g.surrogate - entropy_coef * g.entropy;
  g.approx_kl = kl / m;
  g.clip_fraction = static_cast<double>(clipped) / m;
  const Eigen::MatrixXd dmean =
      bundle.head.LogProbGradMean(mean, mb.actions) * dlogp.asDiagonal();
  g.log_std = bundle.head.LogProbGradLogStd(mean, mb.actions) * dlogp;
  g.log_std.array() -= entropy_coef;
  Eigen::MatrixXd dx;
  g.policy = bundle.policy.Backward(pol_cache, dmean, &dx);
  g.encoder = bundle.encoder.Backward(enc_cache, dx.topRows(latent.rows()));
  return g;
}

ValueGrads ValueLossAndGrads(const PolicyBundle& bundle, const Minibatch& mb) {
  const Eigen::Index m = mb.obs.cols();
  if (m == 0) throw EmptyBatch("value loss on an empty minibatch");
  nn::ForwardCache cache;
  const Eigen::MatrixXd v =
      bundle.value.Forward(Stack(mb.privileged, mb.obs), &cache);
  const Eigen::RowVectorXd diff = v.row(0) - mb.returns.transpose();
  ValueGrads g;
  g.loss = diff.squaredNorm() / m;
  g.value = bundle.value.Backward(cache, (2.0 / m) * diff);
  return g;
}

std::string StatsCsvHeader() {
  std::string h =
      "iteration,env_steps,mean_task_reward,mean_style_reward,mean_reward,"
      "disc_loss,mean_d_data,mean_d_policy,policy_loss,value_loss,entropy,"
      "approx_kl,clip_fraction,episodes,mean_tracking_ratio,mean_level";
  for (int l = 0; l <= terrain::kMaxDifficulty; ++l)
    h += ",level_" + std::to_string(l);
  return h;
}

std::string StatsCsvRow(const IterationStats& s) {
  std::string row = std::to_string(s.iteration) + "," +
                    std::to_string(s.env_steps);
  for (double v : {s.mean_task_reward, s.mean_style_reward, s.mean_reward,
                   s.disc_loss, s.mean_d_data, s.mean_d_policy, s.policy_loss,
                   s.value_loss, s.entropy, s.approx_kl, s.clip_fraction})
    row += "," + Fmt(v);
  row += "," + std::to_string(s.episodes);
  row += "," + (std::isfinite(s.mean_tracking_ratio) ? Fmt(s.mean_tracking_ratio)
                                                     : std::string());
  row += "," + Fmt(s.mean_level);
  for (int c : s.level_histogram) row += "," + std::to_string(c);
  return row;
}

TeacherTrainer::TeacherTrainer(const TrainConfig& config,
                               const std::vector<motion::MotionClip>& clips)
    : config_(config) {
  config_.Validate();
  Rng init = Rng::Stream(config_.seed, 0);
  bundle_ = PolicyBundle::Create(config_.nets, config_.disc, init);
  actor_adam_ = nn::Adam(nn::AdamConfig{config_.ppo.learning_rate});
  critic_adam_ = nn::Adam(nn::AdamConfig{config_.ppo.learning_rate});
  for (int i = 0; i < config_.ppo.n_envs; ++i)
    envs_.emplace_back(config_.env,
                       config_.terrain_kinds[i % config_.terrain_kinds.size()],
                       config_.initial_level, MixSeed(config_.seed, 100 + i));
  if (config_.amp_enabled) {
    dataset_ = amp::MotionDataset::FromClips(
        clips, 1.0 / config_.env.physics.ControlDt(), config_.env.morphology);
    bundle_.discriminator.FitNormalizer(dataset_);
  }
  policy_pairs_ = amp::PairBuffer(config_.policy_pair_capacity,
                                  amp::PairSource::kPolicy);
  action_rng_ = Rng::Stream(config_.seed, 1);
  update_rng_ = Rng::Stream(config_.seed, 2);
  nominal_ = sim::NominalJointAngles(config_.env.morphology);
}

RolloutBatch TeacherTrainer::Collect() {
  const int n = config_.ppo.n_envs;
  const int h = config_.ppo.horizon;
  const int size = n * h;
  RolloutBatch b;
  b.n_envs = n;
  b.horizon = h;
  b.obs.resize(sim::kObsDim, size);
  b.privileged.resize(sim::kPrivilegedDim, size);
  b.actions.resize(sim::kNumJoints, size);
  b.log_probs.resize(size);
  b.values.resize(size);
  b.task_rewards.resize(size);
  b.style_rewards = Eigen::VectorXd::Zero(size);
  b.rewards.resize(size);
  b.dones.assign(size, false);
  b.pair_valid.assign(size, false);
  b.pairs.resize(amp::kPairDim, size);
  Eigen::VectorXd time_limit_bonus = Eigen::VectorXd::Zero(size);
  const double gamma = config_.ppo.gamma;

  Eigen::MatrixXd obs(sim::kObsDim, n), priv(sim::kPrivilegedDim, n);
  auto gather = [&] {
    for (int e = 0; e < n; ++e) {
      obs.col(e) = ObsVector(envs_[e].obs(), nominal_);
      priv.col(e) = PrivilegedVector(envs_[e].Privileged());
    }
  };
  for (int t = 0; t < h; ++t) {
    gather();
    const Eigen::MatrixXd mean = bundle_.ActionMean(bundle_.Latent(priv), obs);
    const Eigen::MatrixXd values = bundle_.Value(priv, obs);
    for (int e = 0; e < n; ++e) {
      const int k = t * n + e;
      const Eigen::VectorXd a = bundle_.head.Sample(mean.col(e), action_rng_);
      b.obs.col(k) = obs.col(e);
      b.privileged.col(k) = priv.col(e);
      b.actions.col(k) = a;
      b.log_probs[k] = bundle_.head.LogProb(mean.col(e), a);
      b.values[k] = values(0, e);
      const StepOutcome out = envs_[e].Step(a);
      b.task_rewards[k] = out.task_reward;
      b.pairs.col(k) = out.pair;
      b.pair_valid[k] = out.pair_valid;
      b.dones[k] = out.done;
      if (out.timeout) {
        // Truncation is not failure: keep the value of the cut-off state.
        const Eigen::MatrixXd v = bundle_.Value(
            PrivilegedVector(envs_[e].Privileged()),
            ObsVector(envs_[e].obs(), nominal_));
        time_limit_bonus[k] = gamma * v(0, 0);
      }
      if (out.episode) b.episodes.push_back(*out.episode);
      if (out.done) envs_[e].Reset();
    }
  }
  gather();
  b.bootstrap_values = bundle_.Value(priv, obs).row(0).transpose();
  if (config_.amp_enabled && size > 0) {
    const Eigen::VectorXd style = bundle_.discriminator.StyleRewards(b.pairs);
    for (int k = 0; k < size; ++k) {
      if (!b.pair_valid[k]) continue;
      b.style_rewards[k] = style[k];
      policy_pairs_.Add(b.pairs.col(k));
    }
  }
  const RewardWeights& w = config_.env.reward;
  for (int k = 0; k < size; ++k)
    b.rewards[k] = CombinedReward(b.task_rewards[k], b.style_rewards[k], w) +
                   time_limit_bonus[k];
  ComputeAdvantages(b, gamma, config_.ppo.lambda);
  env_steps_ += size;
  return b;
}

void TeacherTrainer::UpdateDiscriminator(IterationStats& stats, int updates) {
  if (policy_pairs_.size() == 0) return;
  const int batch = config_.disc.batch_size;
  double loss = 0.0, d_data = 0.0, d_policy = 0.0;
  for (int u = 0; u < updates; ++u) {
    const Eigen::MatrixXd data = dataset_.Sample(batch, update_rng_);
    const Eigen::MatrixXd policy = policy_pairs_.Sample(batch, update_rng_);
    amp::DiscLoss l;
    if (config_.freeze_discriminator) {
      const auto& d = bundle_.discriminator;
      l = amp::DiscLossAndGrads(d.net(), d.Normalize(data), d.Normalize(policy),
                                d.config().w_gp, d.config().penalty_mode);
    } else {
      l = bundle_.discriminator.Update(data, policy);
    }
    loss += l.loss;
    d_data += l.mean_d_data;
    d_policy += l.mean_d_policy;
  }
  stats.disc_loss = loss / updates;
  stats.mean_d_data = d_data / updates;
  stats.mean_d_policy = d_policy / updates;
}

IterationStats TeacherTrainer::Update(RolloutBatch& batch) {
  IterationStats stats;
  stats.iteration = iteration_;
  const int size = batch.size();
  if (size > 0) {
    stats.mean_task_reward = batch.task_rewards.mean();
    stats.mean_style_reward = batch.style_rewards.mean();
    stats.mean_reward = batch.rewards.mean();
  }
  double ratio_sum = 0.0;
  for (const auto& ep : batch.episodes) ratio_sum += ep.record.tracking_reward_ratio;
  stats.episodes = static_cast<int>(batch.episodes.size());
  stats.mean_tracking_ratio = batch.episodes.empty()
                                  ? std::numeric_limits<double>::quiet_NaN()
                                  : ratio_sum / stats.episodes;

  if (size > 0) {
    const PpoHyper& hp = config_.ppo;
    const Eigen::VectorXd adv = NormalizeAdvantages(batch.advantages);
    std::vector<int> index(size);
    std::iota(index.begin(), index.end(), 0);
    int updates = 0;
    for (int epoch = 0; epoch < hp.epochs; ++epoch) {
      for (int i = size - 1; i > 0; --i)
        std::swap(index[i], index[update_rng_.Index(i + 1)]);
      for (int m = 0; m < hp.minibatches; ++m) {
        const std::size_t begin = static_cast<std::size_t>(size) * m / hp.minibatches;
        const std::size_t end =
            static_cast<std::size_t>(size) * (m + 1) / hp.minibatches;
        if (begin == end) continue;
        const Minibatch mb = Gather(batch, adv, index, begin, end);
        ActorGrads ag = ActorLossAndGrads(bundle_, mb, hp.clip, hp.entropy_coef);
        ValueGrads vg = ValueLossAndGrads(bundle_, mb);
        if (!std::isfinite(ag.loss) || !std::isfinite(vg.loss))
          throw NonFiniteLoss(
              "PPO loss is not finite at iteration " + std::to_string(iteration_) +
              " (policy loss " + Fmt(ag.loss) + ", value loss " + Fmt(vg.loss) +
              ", approx kl " + Fmt(ag.approx_kl) + ")");
        auto actor_grads = ActorGradBlocks(ag);
        nn::ClipGlobalNorm(actor_grads, hp.max_grad_norm);
        actor_adam_.Step(ActorParams(bundle_), Const(actor_grads));
        auto value_grads = vg.value.MutableBlocks();
        nn::ClipGlobalNorm(value_grads, hp.max_grad_norm);
        critic_adam_.Step(bundle_.value.Blocks(), Const(value_grads));
        stats.policy_loss += ag.loss;
        stats.value_loss += vg.loss;
        stats.entropy += ag.entropy;
        stats.approx_kl += ag.approx_kl;
        stats.clip_fraction += ag.clip_fraction;
        ++updates;
      }
      if (config_.amp_enabled) UpdateDiscriminator(stats, 1);
    }
    stats.policy_loss /= updates;
    stats.value_loss /= updates;
    stats.entropy /= updates;
    stats.approx_kl /= updates;
    stats.clip_fraction /= updates;
  }
  for (const auto& env : envs_) {
    ++stats.level_histogram[env.level()];
    stats.mean_level += env.level();
  }
  stats.mean_level /= static_cast<double>(envs_.size());
  stats.env_steps = env_steps_;
  ++iteration_;
  return stats;
}

IterationStats TeacherTrainer::RunIteration() {
  RolloutBatch batch = Collect();
  return Update(batch);
}

void TeacherTrainer::SaveCheckpoint(const std::string& path) const {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream file(tmp, std::ios::binary);
    if (!file) throw IoError("cannot open '" + tmp + "' for writing");
    BinaryWriter out(file);
    out.WriteString(kCheckpointMagic);
    out.Write<std::int32_t>(kCheckpointVersion);
    out.Write<std::int32_t>(iteration_);
    out.Write(env_steps_);
    bundle_.Write(out);
    actor_adam_.Save(out);
    critic_adam_.Save(out);
    out.WriteString(action_rng_.Serialize());
    out.WriteString(update_rng_.Serialize());
    policy_pairs_.Save(out);
    out.Write<std::int32_t>(static_cast<std::int32_t>(envs_.size()));
    for (const auto& env : envs_) env.Save(out);
    if (!file) throw IoError("failed writing '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

TeacherTrainer TeacherTrainer::LoadCheckpoint(
    const std::string& path, const TrainConfig& config,
    const std::vector<motion::MotionClip>& clips) {
  config.Validate();
  std::ifstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open checkpoint '" + path + "'");
  BinaryReader in(file);
  if (in.ReadString() != kCheckpointMagic)
    throw IoError("'" + path + "' is not a trainer checkpoint");
  const int version = in.Read<std::int32_t>();
  if (version != kCheckpointVersion)
    throw SchemaVersionMismatch("trainer checkpoint version " +
                                std::to_string(version) + " (expected " +
                                std::to_string(kCheckpointVersion) + ")");
  TeacherTrainer t;
  t.config_ = config;
  t.iteration_ = in.Read<std::int32_t>();
  t.env_steps_ = in.Read<std::int64_t>();
  t.bundle_ = PolicyBundle::Read(in);
  if (!(t.bundle_.nets == config.nets))
    throw BundleMismatch("checkpoint network sizes differ from the config");
  t.actor_adam_ = nn::Adam::Load(in);
  t.critic_adam_ = nn::Adam::Load(in);
  t.action_rng_.Deserialize(in.ReadString());
  t.update_rng_.Deserialize(in.ReadString());
  t.policy_pairs_ = amp::PairBuffer::Load(in);
  const int n = in.Read<std::int32_t>();
  if (n != config.ppo.n_envs)
    throw ConfigError("checkpoint has " + std::to_string(n) +
                      " environments but the config asks for " +
                      std::to_string(config.ppo.n_envs));
  for (int i = 0; i < n; ++i)
    t.envs_.push_back(LocomotionEnv::Load(in, config.env));
  if (config.amp_enabled)
    t.dataset_ = amp::MotionDataset::FromClips(
        clips, 1.0 / config.env.physics.ControlDt(), config.env.morphology);
  t.nominal_ = sim::NominalJointAngles(config.env.morphology);
  return t;
}

PolicyBundle TrainTeacher(
    TeacherTrainer& trainer, const TrainOutputs& outputs,
    const std::function<void(const IterationStats&)>& progress) {
  std::ofstream log;
  if (!outputs.log_path.empty()) {
    const bool append =
        trainer.iteration() > 0 && std::filesystem::exists(outputs.log_path);
    log.open(outputs.log_path, append ? std::ios::app : std::ios::trunc);
    if (!log) throw IoError("cannot open log '" + outputs.log_path + "'");
    if (!append) log << StatsCsvHeader() << '\n' << std::flush;
  }
  while (trainer.iteration() < trainer.config().iterations) {
    const IterationStats stats = trainer.RunIteration();
    if (log.is_open()) log << StatsCsvRow(stats) << '\n' << std::flush;
    if (progress) progress(stats);
    if (!outputs.checkpoint_path.empty() && outputs.checkpoint_every > 0 &&
        trainer.iteration() % outputs.checkpoint_every == 0)
      trainer.SaveCheckpoint(outputs.checkpoint_path);
  }
  if (!outputs.checkpoint_path.empty())
    trainer.SaveCheckpoint(outputs.checkpoint_path);
  if (!outputs.bundle_path.empty()) trainer.bundle().Save(outputs.bundle_path);
  return trainer.bundle();
}

}  // namespace locolab::ppo
