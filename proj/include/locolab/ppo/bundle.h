#ifndef LOCOLAB_PPO_BUNDLE_H_
#define LOCOLAB_PPO_BUNDLE_H_

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "locolab/amp/amp.h"
#include "locolab/nn/gaussian.h"
#include "locolab/nn/mlp.h"
#include "locolab/rng.h"
#include "locolab/sim/types.h"

namespace locolab::ppo {

inline constexpr int kBundleSchemaVersion = 1;

struct NetworkConfig {
  std::vector<int> policy_hidden = {512, 256, 128};
  std::vector<int> value_hidden = {512, 256, 128};
  std::vector<int> encoder_hidden = {256, 128};
  int latent_dim = 32;
  std::vector<int> predictor_hidden = {512, 256};
  int history_length = 50;
  double init_std = 0.3;  // rad

  void Validate() const;
  int PolicyInputDim() const { return latent_dim + sim::kObsDim; }
  int ValueInputDim() const { return sim::kPrivilegedDim + sim::kObsDim; }
  int PredictorInputDim() const { return history_length * sim::kObsDim; }
  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

// Network inputs are offset and scaled to order one; these are fixed
// constants, not learned statistics.
Eigen::VectorXd ObsVector(const sim::ProprioObs& obs,
                          const sim::JointVector& nominal);
Eigen::VectorXd PrivilegedVector(const sim::PrivilegedInfo& info);

// Every parameter set of the pipeline. Policy inputs are (latent; obs); the
// value net sees the raw privileged vector with the observation; the
// encoder output is tanh-bounded.
struct PolicyBundle {
  NetworkConfig nets;
  nn::Mlp policy;
  nn::GaussianHead head;
  nn::Mlp value;
  nn::Mlp encoder;
  nn::Mlp predictor;
  amp::Discriminator discriminator;
  // Set by distillation: checksum of the teacher's policy and head.
  std::uint64_t teacher_policy_checksum = 0;
  bool has_student = false;

  static PolicyBundle Create(const NetworkConfig& nets,
                             const amp::DiscriminatorConfig& disc, Rng& rng);

  // Column-batched forwards.
  Eigen::MatrixXd Latent(const Eigen::MatrixXd& privileged) const;
  Eigen::MatrixXd ActionMean(const Eigen::MatrixXd& latent,
                             const Eigen::MatrixXd& obs) const;
  Eigen::MatrixXd Value(const Eigen::MatrixXd& privileged,
                        const Eigen::MatrixXd& obs) const;
  Eigen::MatrixXd PredictLatent(const Eigen::MatrixXd& history) const;

  std::uint64_t PolicyChecksum() const;   // policy + head
  std::uint64_t TeacherChecksum() const;  // policy + head + encoder

  void Save(const std::string& path) const;
  // Throws IoError, SchemaVersionMismatch or DimMismatch.
  static PolicyBundle Load(const std::string& path);
  void Write(BinaryWriter& out) const;
  static PolicyBundle Read(BinaryReader& in);

  friend bool operator==(const PolicyBundle&, const PolicyBundle&) = default;
};

Eigen::MatrixXd Stack(const Eigen::MatrixXd& top, const Eigen::MatrixXd& bottom);

}  // namespace locolab::ppo

#endif  // LOCOLAB_PPO_BUNDLE_H_
