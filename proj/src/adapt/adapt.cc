#include "locolab/adapt/adapt.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "locolab/errors.h"
#include "locolab/sim/kinematics.h"

namespace locolab::adapt {

HistoryBuffer::HistoryBuffer(int length, int dim)
    : length_(length), dim_(dim), ring_(Eigen::MatrixXd::Zero(dim, length)) {
  if (length <= 0 || dim <= 0)
    throw ConfigError("history length and dimension must be > 0");
}

void HistoryBuffer::Push(const Eigen::VectorXd& obs) {
  if (obs.size() != dim_)
    throw DimMismatch("history expects observations of size " +
                      std::to_string(dim_) + ", got " +
                      std::to_string(obs.size()));
  ring_.col(next_) = obs;
  next_ = (next_ + 1) % length_;
  filled_ = std::min(filled_ + 1, length_);
}

void HistoryBuffer::Clear() {
  ring_.setZero();
  next_ = 0;
  filled_ = 0;
}

Eigen::VectorXd HistoryBuffer::Window() const {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(length_ * dim_);
  for (int i = 0; i < filled_; ++i) {
    const int slot = length_ - filled_ + i;
    const int col = (next_ - filled_ + i + length_) % length_;
    w.segment(slot * dim_, dim_) = ring_.col(col);
  }
  return w;
}

Eigen::VectorXd EncodePrivileged(const ppo::PolicyBundle& bundle,
                                 const Eigen::VectorXd& privileged) {
  return bundle.encoder.ForwardOne(privileged);
}

Eigen::VectorXd PredictLatent(const ppo::PolicyBundle& bundle,
                              const HistoryBuffer& history) {
  return bundle.predictor.ForwardOne(history.Window());
}

Eigen::VectorXd TeacherAct(const ppo::PolicyBundle& bundle,
                           const Eigen::VectorXd& privileged,
                           const Eigen::VectorXd& obs) {
  return bundle.ActionMean(EncodePrivileged(bundle, privileged), obs).col(0);
}

void CheckStudent(const ppo::PolicyBundle& bundle) {
  if (!bundle.has_student)
    throw BundleMismatch("bundle has no distilled student predictor");
  if (bundle.PolicyChecksum() != bundle.teacher_policy_checksum)
    throw BundleMismatch(
        "policy checksum differs from the teacher the student was "
        "distilled against");
}

Eigen::VectorXd StudentAct(const ppo::PolicyBundle& bundle,
                           const HistoryBuffer& history,
                           const Eigen::VectorXd& obs) {
  CheckStudent(bundle);
  return bundle.ActionMean(PredictLatent(bundle, history), obs).col(0);
}

LocomotionDistillEnv::LocomotionDistillEnv(const ppo::EnvConfig& config,
                                           terrain::TerrainKind kind,
                                           int level, std::uint64_t seed)
    : env_(config, kind, level, seed),
      nominal_(sim::NominalJointAngles(config.morphology)) {}

Eigen::VectorXd LocomotionDistillEnv::Observation() const {
  return ppo::ObsVector(env_.obs(), nominal_);
}

Eigen::VectorXd LocomotionDistillEnv::Privileged() const {
  return ppo::PrivilegedVector(env_.Privileged());
}

bool LocomotionDistillEnv::Step(const Eigen::VectorXd& action) {
  if (action.size() != sim::kNumJoints)
    throw DimMismatch("action must have one entry per joint");
  return env_.Step(action).done;
}

EnvFactory LocomotionEnvFactory(const ppo::EnvConfig& config,
                                std::vector<terrain::TerrainKind> kinds,
                                int level) {
  if (kinds.empty()) throw ConfigError("at least one terrain kind is required");
  return [config, kinds = std::move(kinds), level](int index,
                                                   std::uint64_t seed) {
    return std::make_unique<LocomotionDistillEnv>(
        config, kinds[static_cast<std::size_t>(index) % kinds.size()], level,
        seed);
  };
}

std::string ToString(DistillMode mode) {
  return mode == DistillMode::kStudent ? "student" : "teacher";
}

DistillMode DistillModeFromString(const std::string& text) {
  if (text == "student") return DistillMode::kStudent;
  if (text == "teacher") return DistillMode::kTeacher;
  throw ConfigError("distill mode must be 'student' or 'teacher', got '" +
                    text + "'");
}

void DistillConfig::Validate() const {
  if (epochs < 0) throw ConfigError("distill.epochs must be >= 0");
  if (n_envs <= 0 || validation_envs <= 0)
    throw ConfigError("distill environment counts must be > 0");
  if (steps_per_epoch <= 0 || validation_steps <= 0)
    throw ConfigError("distill step counts must be > 0");
  if (updates_per_epoch < 0)
    throw ConfigError("distill.updates_per_epoch must be >= 0");
  if (batch_size <= 0) throw ConfigError("distill.batch_size must be > 0");
  if (!(learning_rate > 0.0))
    throw ConfigError("distill.learning_rate must be > 0");
  if (!(max_grad_norm > 0.0))
    throw ConfigError("distill.max_grad_norm must be > 0");
  if (dataset_capacity <= 0)
    throw ConfigError("distill.dataset_capacity must be > 0");
}

LatentLoss LatentLossAndGrads(const nn::Mlp& predictor,
                              const Eigen::MatrixXd& windows,
                              const Eigen::MatrixXd& latents) {
  if (windows.cols() != latents.cols())
    throw DimMismatch("windows and latents need equal column counts");
  if (windows.cols() == 0) throw EmptyBatch("latent regression on no samples");
  nn::ForwardCache cache;
  const Eigen::MatrixXd diff = predictor.Forward(windows, &cache) - latents;
  const double n = static_cast<double>(windows.cols());
  LatentLoss out;
  out.loss = diff.squaredNorm() / n;
  if (!std::isfinite(out.loss))
    throw NonFiniteLoss("latent regression loss is not finite");
  out.grads = predictor.Backward(cache, (2.0 / n) * diff);
  return out;
}

double LatentMse(const nn::Mlp& predictor, const LatentDataset& data) {
  if (data.size() == 0) throw EmptyDataset("no latent samples to score");
  return (predictor.Forward(data.windows) - data.latents).squaredNorm() /
         data.size();
}

PredictorFitter::PredictorFitter(double learning_rate, int batch_size,
                                 double max_grad_norm)
    : adam_(nn::AdamConfig{learning_rate}),
      batch_size_(batch_size),
      max_grad_norm_(max_grad_norm) {}

double PredictorFitter::Fit(nn::Mlp& predictor, const LatentDataset& data,
                            int updates, Rng& rng) {
  if (data.size() == 0) throw EmptyDataset("no latent samples to fit");
  const int m = std::min(batch_size_, data.size());
  Eigen::MatrixXd windows(data.windows.rows(), m);
  Eigen::MatrixXd latents(data.latents.rows(), m);
  double total = 0.0;
  for (int u = 0; u < updates; ++u) {
    for (int i = 0; i < m; ++i) {
      const auto k = static_cast<Eigen::Index>(
          rng.Index(static_cast<std::uint64_t>(data.size())));
      windows.col(i) = data.windows.col(k);
      latents.col(i) = data.latents.col(k);
    }
    LatentLoss l = LatentLossAndGrads(predictor, windows, latents);
    total += l.loss;
    const auto grads = l.grads.MutableBlocks();
    nn::ClipGlobalNorm(grads, max_grad_norm_);
    adam_.Step(predictor.Blocks(), {grads.begin(), grads.end()});
  }
  return updates > 0 ? total / updates : 0.0;
}

Distiller::Distiller(ppo::PolicyBundle& bundle, const DistillConfig& config,
                     const EnvFactory& factory)
    : bundle_(bundle),
      config_(config),
      fitter_(config.learning_rate, config.batch_size, config.max_grad_norm),
      rng_(Rng::Stream(config.seed, 3)) {
  config_.Validate();
  const int t = bundle.nets.history_length;
  if (bundle.predictor.input_dim() != t * sim::kObsDim ||
      bundle.predictor.output_dim() != bundle.encoder.output_dim())
    throw DimMismatch("predictor shape does not match history and latent");
  teacher_checksum_ = bundle.TeacherChecksum();
  bundle_.teacher_policy_checksum = bundle.PolicyChecksum();
  bundle_.has_student = true;

  std::vector<std::unique_ptr<DistillEnv>> held_out;
  std::vector<HistoryBuffer> held_out_histories;
  for (int i = 0; i < config_.validation_envs; ++i) {
    held_out.push_back(factory(i, MixSeed(config_.seed, 300 + i)));
    held_out_histories.emplace_back(t);
  }
  validation_ = Rollout(held_out, held_out_histories, config_.validation_steps,
                        DistillMode::kTeacher);
  for (int i = 0; i < config_.n_envs; ++i) {
    envs_.push_back(factory(i, MixSeed(config_.seed, 200 + i)));
    histories_.emplace_back(t);
  }
  data_.windows.resize(t * sim::kObsDim, 0);
  data_.latents.resize(bundle.encoder.output_dim(), 0);
}

LatentDataset Distiller::Rollout(std::vector<std::unique_ptr<DistillEnv>>& envs,
                                 std::vector<HistoryBuffer>& histories,
                                 int steps, DistillMode mode) const {
  const int n = static_cast<int>(envs.size());
  const int window = bundle_.nets.history_length * sim::kObsDim;
  LatentDataset out;
  out.windows.resize(window, n * steps);
  out.latents.resize(bundle_.encoder.output_dim(), n * steps);
  Eigen::MatrixXd priv(sim::kPrivilegedDim, n), obs(sim::kObsDim, n),
      windows(window, n);
  for (int t = 0; t < steps; ++t) {
    for (int e = 0; e < n; ++e) {
      obs.col(e) = envs[e]->Observation();
      priv.col(e) = envs[e]->Privileged();
      histories[e].Push(obs.col(e));
      windows.col(e) = histories[e].Window();
    }
    const Eigen::MatrixXd labels = bundle_.Latent(priv);
    out.windows.middleCols(t * n, n) = windows;
    out.latents.middleCols(t * n, n) = labels;
    const Eigen::MatrixXd latent = mode == DistillMode::kTeacher
                                       ? labels
                                       : bundle_.PredictLatent(windows);
    const Eigen::MatrixXd actions = bundle_.ActionMean(latent, obs);
    for (int e = 0; e < n; ++e) {
      if (envs[e]->Step(actions.col(e))) {
        envs[e]->Reset();
        histories[e].Clear();
      }
    }
  }
  return out;
}

void Distiller::Aggregate(const LatentDataset& fresh) {
  const int cap = config_.dataset_capacity;
  const int grown = std::min(cap, data_filled_ + fresh.size());
  if (grown > data_filled_) {
    data_.windows.conservativeResize(Eigen::NoChange, grown);
    data_.latents.conservativeResize(Eigen::NoChange, grown);
    data_filled_ = grown;
  }
  for (int k = 0; k < fresh.size(); ++k) {
    data_.windows.col(data_next_) = fresh.windows.col(k);
    data_.latents.col(data_next_) = fresh.latents.col(k);
    data_next_ = (data_next_ + 1) % cap;
  }
}

void Distiller::CheckTeacher() const {
  if (bundle_.TeacherChecksum() != teacher_checksum_)
    throw FrozenTeacherViolation(
        "teacher policy or encoder changed during distillation");
}

double Distiller::ValidationMse() const {
  return LatentMse(bundle_.predictor, validation_);
}

DistillEpochStats Distiller::RunEpoch() {
  CheckTeacher();
  Aggregate(Rollout(envs_, histories_, config_.steps_per_epoch, config_.mode));
  fitter_.Fit(bundle_.predictor, data_, config_.updates_per_epoch, rng_);
  CheckTeacher();
  DistillEpochStats stats;
  stats.epoch = ++epoch_;
  stats.samples = data_filled_;
  stats.train_mse = LatentMse(bundle_.predictor, data_);
  stats.validation_mse = ValidationMse();
  return stats;
}

DistillResult Distill(
    ppo::PolicyBundle& bundle, const DistillConfig& config,
    const EnvFactory& factory,
    const std::function<void(const DistillEpochStats&)>& progress) {
  Distiller d(bundle, config, factory);
  DistillResult result;
  result.initial_validation_mse = d.ValidationMse();
  for (int e = 0; e < config.epochs; ++e) {
    result.epochs.push_back(d.RunEpoch());
    if (progress) progress(result.epochs.back());
  }
  return result;
}

std::string DistillCsvHeader() {
  return "epoch,samples,train_mse,validation_mse";
}

std::string DistillCsvRow(const DistillEpochStats& s) {
  std::ostringstream out;
  out.precision(9);
  out << s.epoch << ',' << s.samples << ',' << s.train_mse << ','
      << s.validation_mse;
  return out.str();
}

double PairedActionGap(const ppo::PolicyBundle& bundle,
                       const EnvFactory& factory, int n_envs, int steps,
                       std::uint64_t seed) {
  CheckStudent(bundle);
  if (n_envs <= 0 || steps <= 0)
    throw ConfigError("paired rollout needs environments and steps");
  double total = 0.0;
  for (int e = 0; e < n_envs; ++e) {
    auto env = factory(e, MixSeed(seed, 400 + e));
    HistoryBuffer history(bundle.nets.history_length);
    for (int t = 0; t < steps; ++t) {
      const Eigen::VectorXd obs = env->Observation();
      history.Push(obs);
      const Eigen::VectorXd student = StudentAct(bundle, history, obs);
      const Eigen::VectorXd teacher = TeacherAct(bundle, env->Privileged(), obs);
      total += (student - teacher).cwiseAbs().mean();
      if (env->Step(student)) {
        env->Reset();
        history.Clear();
      }
    }
  }
  return total / (static_cast<double>(n_envs) * steps);
}

}  // namespace locolab::adapt
