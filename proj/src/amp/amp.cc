#include "locolab/amp/amp.h"

#include <algorithm>
#include <cmath>

#include "locolab/errors.h"
#include "locolab/motion/motion.h"
#include "locolab/sim/kinematics.h"

namespace locolab::amp {

namespace {

Eigen::Vector2d WorldToBody(double pitch, const Eigen::Vector2d& v) {
  const double c = std::cos(pitch);
  const double s = std::sin(pitch);
  return {c * v.x() + s * v.y(), -s * v.x() + c * v.y()};
}

Features Assemble(const sim::JointVector& q, const sim::JointVector& dq,
                  double height, const Eigen::Vector2d& body_vel,
                  double pitch_rate,
                  const std::array<Eigen::Vector2d, sim::kNumLegs>& feet) {
  Features f;
  f.segment<sim::kNumJoints>(0) = q;
  f.segment<sim::kNumJoints>(8) = dq;
  f[16] = height;
  f.segment<2>(17) = body_vel;
  f[19] = pitch_rate;
  for (int leg = 0; leg < sim::kNumLegs; ++leg)
    f.segment<2>(20 + 2 * leg) = feet[leg];
  return f;
}

// Per-sample parameter gradient of a scalar network, flattened.
Eigen::VectorXd FlatParamGrad(const nn::Mlp& net, const Eigen::VectorXd& x) {
  nn::ForwardCache cache;
  net.Forward(x, &cache);
  const nn::MlpGradients g = net.Backward(cache, Eigen::MatrixXd::Ones(1, 1));
  Eigen::VectorXd flat(static_cast<Eigen::Index>(net.ParameterCount()));
  Eigen::Index k = 0;
  for (const auto& block : g.Blocks())
    for (double v : block) flat[k++] = v;
  return flat;
}

void AddToParams(nn::Mlp& net, const Eigen::VectorXd& delta) {
  Eigen::Index k = 0;
  for (auto block : net.Blocks())
    for (double& v : block) v += delta[k++];
}

nn::MlpGradients Unflatten(const nn::Mlp& net, const Eigen::VectorXd& flat) {
  nn::MlpGradients g = net.ZeroGradients();
  Eigen::Index k = 0;
  for (auto block : g.MutableBlocks())
    for (double& v : block) v = flat[k++];
  return g;
}

// mean_x |d D(x) / d params|^2 and its gradient, using a central-difference
// Hessian-vector product along each per-sample gradient.
std::pair<double, nn::MlpGradients> ParamGradPenalty(const nn::Mlp& net,
                                                     const Eigen::MatrixXd& x) {
  const Eigen::Index n = x.cols();
  Eigen::VectorXd total = Eigen::VectorXd::Zero(
      static_cast<Eigen::Index>(net.ParameterCount()));
  double penalty = 0.0;
  constexpr double kStep = 1e-5;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd xi = x.col(i);
    const Eigen::VectorXd g = FlatParamGrad(net, xi);
    const double norm = g.norm();
    penalty += norm * norm;
    if (norm == 0.0) continue;
    const Eigen::VectorXd dir = g / norm;
    nn::Mlp plus = net;
    nn::Mlp minus = net;
    AddToParams(plus, kStep * dir);
    AddToParams(minus, -kStep * dir);
    const Eigen::VectorXd hv =
        (FlatParamGrad(plus, xi) - FlatParamGrad(minus, xi)) / (2.0 * kStep);
    total += 2.0 * norm * hv;
  }
  return {penalty / n, Unflatten(net, total / n)};
}

}  // namespace

Features AmpFeatures(const sim::RobotState& state,
                     const sim::RobotMorphology& morphology,
                     const terrain::Terrain& terrain) {
  std::array<Eigen::Vector2d, sim::kNumLegs> feet;
  for (int leg = 0; leg < sim::kNumLegs; ++leg)
    feet[leg] = sim::FootPositionBody(morphology, leg, state.joint_angles);
  return Assemble(state.joint_angles, state.joint_vels,
                  state.base_pos.y() - terrain.HeightAt(state.base_pos.x()),
                  WorldToBody(state.base_pitch, state.base_lin_vel),
                  state.base_pitch_rate, feet);
}

Features AmpFeatures(const motion::ReferencePose& pose) {
  return Assemble(pose.joint_angles, pose.joint_vels, pose.base_height,
                  WorldToBody(pose.base_pitch, {pose.base_forward_vel,
                                                pose.base_vertical_vel}),
                  pose.base_pitch_rate, pose.foot_positions_body);
}

Eigen::VectorXd PairVector(const Features& now, const Features& next) {
  Eigen::VectorXd pair(kPairDim);
  pair << now, next;
  return pair;
}

PairBuffer::PairBuffer(std::size_t capacity, PairSource source)
    : capacity_(capacity),
      source_(source),
      data_(kPairDim, static_cast<Eigen::Index>(capacity)) {
  if (capacity == 0) throw ConfigError("pair buffer capacity must be > 0");
}

void PairBuffer::Add(const Eigen::VectorXd& pair) {
  if (pair.size() != kPairDim)
    throw DimMismatch("transition pair must have " + std::to_string(kPairDim) +
                      " entries");
  data_.col(static_cast<Eigen::Index>(next_)) = pair;
  next_ = (next_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
}

Eigen::MatrixXd PairBuffer::Sample(int n, Rng& rng) const {
  if (size_ == 0) throw EmptyBatch("cannot sample from an empty pair buffer");
  Eigen::MatrixXd out(kPairDim, n);
  for (int i = 0; i < n; ++i)
    out.col(i) = data_.col(static_cast<Eigen::Index>(rng.Index(size_)));
  return out;
}

void PairBuffer::Save(BinaryWriter& out) const {
  out.WriteString("pair_buffer");
  out.Write<std::uint64_t>(capacity_);
  out.Write<std::int32_t>(static_cast<std::int32_t>(source_));
  out.Write<std::uint64_t>(size_);
  out.Write<std::uint64_t>(next_);
  out.WriteMatrix(data_.leftCols(static_cast<Eigen::Index>(size_)));
}

PairBuffer PairBuffer::Load(BinaryReader& in) {
  in.Expect("pair_buffer");
  const auto capacity = in.Read<std::uint64_t>();
  const auto source = static_cast<PairSource>(in.Read<std::int32_t>());
  PairBuffer buffer(capacity, source);
  buffer.size_ = in.Read<std::uint64_t>();
  buffer.next_ = in.Read<std::uint64_t>();
  const Eigen::MatrixXd stored = in.ReadMatrix();
  if (buffer.size_ > capacity || buffer.next_ >= capacity ||
      stored.rows() != kPairDim ||
      stored.cols() != static_cast<Eigen::Index>(buffer.size_))
    throw DimMismatch("stored pair buffer is inconsistent");
  buffer.data_.leftCols(stored.cols()) = stored;
  return buffer;
}

bool operator==(const PairBuffer& a, const PairBuffer& b) {
  const auto n = static_cast<Eigen::Index>(a.size_);
  return a.capacity_ == b.capacity_ && a.source_ == b.source_ &&
         a.size_ == b.size_ && a.next_ == b.next_ &&
         a.data_.leftCols(n) == b.data_.leftCols(n);
}

MotionDataset MotionDataset::FromClips(
    const std::vector<motion::MotionClip>& clips, double control_rate,
    const sim::RobotMorphology& morphology) {
  if (clips.empty()) throw EmptyDataset("no motion clips were given");
  std::vector<Eigen::VectorXd> pairs;
  for (const auto& clip : clips) {
    const motion::MotionClip resampled =
        clip.frame_rate == control_rate
            ? clip
            : motion::Resample(clip, control_rate, morphology);
    for (std::size_t i = 0; i + 1 < resampled.frames.size(); ++i)
      pairs.push_back(PairVector(AmpFeatures(resampled.frames[i]),
                                 AmpFeatures(resampled.frames[i + 1])));
  }
  if (pairs.empty()) throw EmptyDataset("motion clips produced no pairs");
  MotionDataset dataset;
  dataset.pairs_.resize(kPairDim, static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t i = 0; i < pairs.size(); ++i)
    dataset.pairs_.col(static_cast<Eigen::Index>(i)) = pairs[i];
  return dataset;
}

Eigen::MatrixXd MotionDataset::Sample(int n, Rng& rng) const {
  if (pairs_.cols() == 0) throw EmptyDataset("motion dataset is empty");
  Eigen::MatrixXd out(kPairDim, n);
  for (int i = 0; i < n; ++i)
    out.col(i) = pairs_.col(static_cast<Eigen::Index>(
        rng.Index(static_cast<std::uint64_t>(pairs_.cols()))));
  return out;
}

Eigen::VectorXd MotionDataset::Mean() const { return pairs_.rowwise().mean(); }

Eigen::VectorXd MotionDataset::Std(double floor) const {
  const Eigen::MatrixXd centered = pairs_.colwise() - Mean();
  Eigen::VectorXd sd =
      (centered.array().square().rowwise().sum() / pairs_.cols()).sqrt();
  return sd.cwiseMax(floor);
}

std::string ToString(PenaltyMode mode) {
  return mode == PenaltyMode::kInputGradient ? "input" : "parameter";
}

PenaltyMode PenaltyModeFromString(const std::string& name) {
  if (name == "input") return PenaltyMode::kInputGradient;
  if (name == "parameter") return PenaltyMode::kParameterGradient;
  throw ConfigError("unknown gradient penalty mode '" + name +
                    "' (expected input or parameter)");
}

DiscLoss DiscLossAndGrads(const nn::Mlp& d, const Eigen::MatrixXd& data,
                          const Eigen::MatrixXd& policy, double w_gp,
                          PenaltyMode mode) {
  if (data.cols() == 0 || policy.cols() == 0)
    throw EmptyBatch("discriminator loss needs non-empty dataset and policy "
                     "batches");
  DiscLoss out;
  nn::ForwardCache data_cache, policy_cache;
  const Eigen::MatrixXd d_data = d.Forward(data, &data_cache);
  const Eigen::MatrixXd d_policy = d.Forward(policy, &policy_cache);
  const double nd = static_cast<double>(data.cols());
  const double np = static_cast<double>(policy.cols());
  const Eigen::ArrayXXd err_data = d_data.array() - 1.0;
  const Eigen::ArrayXXd err_policy = d_policy.array() + 1.0;
  out.data_term = err_data.square().sum() / nd;
  out.policy_term = err_policy.square().sum() / np;
  out.mean_d_data = d_data.mean();
  out.mean_d_policy = d_policy.mean();
  out.grads = d.Backward(data_cache, (2.0 / nd) * err_data.matrix());
  out.grads += d.Backward(policy_cache, (2.0 / np) * err_policy.matrix());
  if (w_gp != 0.0) {
    nn::MlpGradients penalty_grads;
    if (mode == PenaltyMode::kInputGradient) {
      nn::PenaltyResult p = d.InputGradPenalty(data);
      out.penalty = p.penalty;
      penalty_grads = std::move(p.grads);
    } else {
      auto [value, grads] = ParamGradPenalty(d, data);
      out.penalty = value;
      penalty_grads = std::move(grads);
    }
    penalty_grads *= 0.5 * w_gp;
    out.grads += penalty_grads;
  }
  out.loss = out.data_term + out.policy_term + 0.5 * w_gp * out.penalty;
  if (!std::isfinite(out.loss))
    throw NonFiniteLoss("discriminator loss is not finite");
  return out;
}

double StyleReward(double d) {
  return std::max(0.0, 1.0 - 0.25 * (d - 1.0) * (d - 1.0));
}

void DiscriminatorConfig::Validate() const {
  if (hidden.empty()) throw ConfigError("discriminator.hidden must not be empty");
  for (int h : hidden)
    if (h <= 0) throw ConfigError("discriminator.hidden sizes must be > 0");
  if (!nn::IsSmooth(activation))
    throw NonSmoothActivation(
        "discriminator.activation must be smooth for the gradient penalty");
  if (!(w_gp >= 0.0)) throw ConfigError("discriminator.w_gp must be >= 0");
  if (!(learning_rate > 0.0))
    throw ConfigError("discriminator.learning_rate must be > 0");
  if (batch_size <= 0) throw ConfigError("discriminator.batch_size must be > 0");
  if (!(max_grad_norm > 0.0))
    throw ConfigError("discriminator.max_grad_norm must be > 0");
}

Discriminator::Discriminator(const DiscriminatorConfig& config, Rng& rng)
    : config_(config),
      net_(kPairDim, config.hidden, 1, config.activation,
           nn::Activation::kIdentity),
      adam_(nn::AdamConfig{config.learning_rate}) {
  config_.Validate();
  net_.InitOrthogonal(rng, 1.0, 1.0);
}

void Discriminator::FitNormalizer(const MotionDataset& dataset) {
  mean_ = dataset.Mean();
  inv_std_ = dataset.Std().cwiseInverse();
}

Eigen::MatrixXd Discriminator::Normalize(const Eigen::MatrixXd& pairs) const {
  if (pairs.rows() != kPairDim)
    throw DimMismatch("discriminator input must have " +
                      std::to_string(kPairDim) + " rows");
  return (pairs.colwise() - mean_).array().colwise() * inv_std_.array();
}

Eigen::VectorXd Discriminator::Evaluate(const Eigen::MatrixXd& pairs) const {
  return net_.Forward(Normalize(pairs)).row(0).transpose();
}

double Discriminator::Evaluate(const Eigen::VectorXd& pair) const {
  return Evaluate(Eigen::MatrixXd(pair))[0];
}

Eigen::VectorXd Discriminator::StyleRewards(const Eigen::MatrixXd& pairs) const {
  Eigen::VectorXd d = Evaluate(pairs);
  for (Eigen::Index i = 0; i < d.size(); ++i) d[i] = StyleReward(d[i]);
  return d;
}

DiscLoss Discriminator::Update(const Eigen::MatrixXd& data,
                               const Eigen::MatrixXd& policy) {
  DiscLoss loss = DiscLossAndGrads(net_, Normalize(data), Normalize(policy),
                                   config_.w_gp, config_.penalty_mode);
  nn::ClipGlobalNorm(loss.grads.MutableBlocks(), config_.max_grad_norm);
  adam_.Step(net_.Blocks(), loss.grads.Blocks());
  return loss;
}

void Discriminator::Save(BinaryWriter& out) const {
  out.WriteString("discriminator");
  out.WriteInts(config_.hidden);
  out.WriteString(nn::ToString(config_.activation));
  out.Write(config_.w_gp);
  out.Write(config_.learning_rate);
  out.Write<std::int32_t>(config_.batch_size);
  out.WriteString(ToString(config_.penalty_mode));
  out.Write(config_.max_grad_norm);
  net_.Save(out);
  adam_.Save(out);
  out.WriteVector(mean_);
  out.WriteVector(inv_std_);
}

Discriminator Discriminator::Load(BinaryReader& in) {
  in.Expect("discriminator");
  Discriminator d;
  d.config_.hidden = in.ReadInts();
  d.config_.activation = nn::ActivationFromString(in.ReadString());
  d.config_.w_gp = in.Read<double>();
  d.config_.learning_rate = in.Read<double>();
  d.config_.batch_size = in.Read<std::int32_t>();
  d.config_.penalty_mode = PenaltyModeFromString(in.ReadString());
  d.config_.max_grad_norm = in.Read<double>();
  d.net_ = nn::Mlp::Load(in);
  d.adam_ = nn::Adam::Load(in);
  d.mean_ = in.ReadVector();
  d.inv_std_ = in.ReadVector();
  if (d.net_.input_dim() != kPairDim || d.net_.output_dim() != 1 ||
      d.mean_.size() != kPairDim || d.inv_std_.size() != kPairDim)
    throw DimMismatch("stored discriminator has the wrong shape");
  return d;
}

}  // namespace locolab::amp
