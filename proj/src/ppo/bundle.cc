#include "locolab/ppo/bundle.h"

#include <cmath>
#include <cstring>
#include <fstream>

#include "locolab/errors.h"

namespace locolab::ppo {

namespace {

constexpr char kMagic[] = "locolab-bundle";

std::uint64_t Fnv(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t MixChecksum(std::uint64_t h, const nn::Mlp& net) {
  const std::uint64_t c = net.Checksum();
  return Fnv(h, &c, sizeof(c));
}

std::uint64_t MixChecksum(std::uint64_t h, const Eigen::VectorXd& v) {
  return Fnv(h, v.data(), sizeof(double) * static_cast<std::size_t>(v.size()));
}

constexpr std::uint64_t kFnvOffset = 1469598103934665603ull;

void ExpectShape(const nn::Mlp& net, int in, int out, const char* name) {
  if (net.input_dim() != in || net.output_dim() != out)
    throw DimMismatch(std::string("stored ") + name + " network has shape " +
                      std::to_string(net.input_dim()) + "->" +
                      std::to_string(net.output_dim()) + ", expected " +
                      std::to_string(in) + "->" + std::to_string(out));
}

}  // namespace

void NetworkConfig::Validate() const {
  for (const auto* sizes :
       {&policy_hidden, &value_hidden, &encoder_hidden, &predictor_hidden})
    for (int h : *sizes)
      if (h <= 0) throw ConfigError("network hidden sizes must be > 0");
  if (latent_dim <= 0) throw ConfigError("networks.latent_dim must be > 0");
  if (history_length <= 0)
    throw ConfigError("networks.history_length must be > 0");
  if (!(init_std > 0.0)) throw ConfigError("networks.init_std must be > 0");
}

Eigen::VectorXd ObsVector(const sim::ProprioObs& obs,
                          const sim::JointVector& nominal) {
  Eigen::VectorXd v = obs.ToVector();
  v.segment<8>(0) -= nominal;
  v.segment<8>(8) *= 0.1;
  v[18] *= 0.25;
  return v;
}

Eigen::VectorXd PrivilegedVector(const sim::PrivilegedInfo& info) {
  Eigen::VectorXd v = info.ToVector();
  v.segment<sim::kNumHeightSamples>(2) =
      2.0 * (v.segment<sim::kNumHeightSamples>(2).array() + 0.27);
  v[13] = 2.0 * (v[13] - 0.7);
  v.segment<8>(14) = 10.0 * (v.segment<8>(14).array() - 1.0);
  v[22] = 5.0 * (v[22] - 1.0);
  v.segment<4>(23) *= 0.01;
  return v;
}

Eigen::MatrixXd Stack(const Eigen::MatrixXd& top, const Eigen::MatrixXd& bottom) {
  if (top.cols() != bottom.cols())
    throw DimMismatch("stacked blocks need equal column counts");
  Eigen::MatrixXd out(top.rows() + bottom.rows(), top.cols());
  out << top, bottom;
  return out;
}

PolicyBundle PolicyBundle::Create(const NetworkConfig& nets,
                                  const amp::DiscriminatorConfig& disc,
                                  Rng& rng) {
  nets.Validate();
  PolicyBundle b;
  b.nets = nets;
  const auto tanh = nn::Activation::kTanh;
  const auto identity = nn::Activation::kIdentity;
  b.policy = nn::Mlp(nets.PolicyInputDim(), nets.policy_hidden, sim::kNumJoints,
                     tanh, identity);
  b.policy.InitOrthogonal(rng, 1.0, 0.01);
  b.head.log_std = Eigen::VectorXd::Constant(sim::kNumJoints,
                                             std::log(nets.init_std));
  b.value = nn::Mlp(nets.ValueInputDim(), nets.value_hidden, 1, tanh, identity);
  b.value.InitOrthogonal(rng, 1.0, 1.0);
  b.encoder = nn::Mlp(sim::kPrivilegedDim, nets.encoder_hidden, nets.latent_dim,
                      tanh, tanh);
  b.encoder.InitOrthogonal(rng, 1.0, 1.0);
  b.predictor = nn::Mlp(nets.PredictorInputDim(), nets.predictor_hidden,
                        nets.latent_dim, tanh, identity);
  b.predictor.InitOrthogonal(rng, 1.0, 1.0);
  b.discriminator = amp::Discriminator(disc, rng);
  return b;
}

Eigen::MatrixXd PolicyBundle::Latent(const Eigen::MatrixXd& privileged) const {
  return encoder.Forward(privileged);
}

Eigen::MatrixXd PolicyBundle::ActionMean(const Eigen::MatrixXd& latent,
                                         const Eigen::MatrixXd& obs) const {
  return policy.Forward(Stack(latent, obs));
}

Eigen::MatrixXd PolicyBundle::Value(const Eigen::MatrixXd& privileged,
                                    const Eigen::MatrixXd& obs) const {
  return value.Forward(Stack(privileged, obs));
}

Eigen::MatrixXd PolicyBundle::PredictLatent(const Eigen::MatrixXd& history) const {
  return predictor.Forward(history);
}

std::uint64_t PolicyBundle::PolicyChecksum() const {
  return MixChecksum(MixChecksum(kFnvOffset, policy), head.log_std);
}

std::uint64_t PolicyBundle::TeacherChecksum() const {
  return MixChecksum(PolicyChecksum(), encoder);
}

void PolicyBundle::Write(BinaryWriter& out) const {
  out.WriteString(kMagic);
  out.Write<std::int32_t>(kBundleSchemaVersion);
  out.WriteInts(nets.policy_hidden);
  out.WriteInts(nets.value_hidden);
  out.WriteInts(nets.encoder_hidden);
  out.Write<std::int32_t>(nets.latent_dim);
  out.WriteInts(nets.predictor_hidden);
  out.Write<std::int32_t>(nets.history_length);
  out.Write(nets.init_std);
  policy.Save(out);
  out.WriteVector(head.log_std);
  value.Save(out);
  encoder.Save(out);
  predictor.Save(out);
  discriminator.Save(out);
  out.Write(teacher_policy_checksum);
  out.Write<std::uint8_t>(has_student ? 1 : 0);
}

PolicyBundle PolicyBundle::Read(BinaryReader& in) {
  if (in.ReadString() != kMagic) throw IoError("not a locolab policy bundle");
  const int version = in.Read<std::int32_t>();
  if (version != kBundleSchemaVersion)
    throw SchemaVersionMismatch("bundle schema_version " +
                                std::to_string(version) + " (expected " +
                                std::to_string(kBundleSchemaVersion) + ")");
  PolicyBundle b;
  b.nets.policy_hidden = in.ReadInts();
  b.nets.value_hidden = in.ReadInts();
  b.nets.encoder_hidden = in.ReadInts();
  b.nets.latent_dim = in.Read<std::int32_t>();
  b.nets.predictor_hidden = in.ReadInts();
  b.nets.history_length = in.Read<std::int32_t>();
  b.nets.init_std = in.Read<double>();
  b.policy = nn::Mlp::Load(in);
  b.head.log_std = in.ReadVector();
  b.value = nn::Mlp::Load(in);
  b.encoder = nn::Mlp::Load(in);
  b.predictor = nn::Mlp::Load(in);
  b.discriminator = amp::Discriminator::Load(in);
  b.teacher_policy_checksum = in.Read<std::uint64_t>();
  b.has_student = in.Read<std::uint8_t>() != 0;
  ExpectShape(b.policy, b.nets.PolicyInputDim(), sim::kNumJoints, "policy");
  ExpectShape(b.value, b.nets.ValueInputDim(), 1, "value");
  ExpectShape(b.encoder, sim::kPrivilegedDim, b.nets.latent_dim, "encoder");
  ExpectShape(b.predictor, b.nets.PredictorInputDim(), b.nets.latent_dim,
              "predictor");
  if (b.head.log_std.size() != sim::kNumJoints)
    throw DimMismatch("stored action head has the wrong size");
  return b;
}

void PolicyBundle::Save(const std::string& path) const {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open '" + path + "' for writing");
  BinaryWriter out(file);
  Write(out);
  if (!file) throw IoError("failed writing '" + path + "'");
}

PolicyBundle PolicyBundle::Load(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open bundle '" + path + "'");
  BinaryReader in(file);
  return Read(in);
}

}  // namespace locolab::ppo
