#ifndef LOCOLAB_AMP_AMP_H_
#define LOCOLAB_AMP_AMP_H_

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "locolab/binary_io.h"
#include "locolab/motion/motion.h"
#include "locolab/nn/adam.h"
#include "locolab/nn/mlp.h"
#include "locolab/rng.h"
#include "locolab/sim/types.h"
#include "locolab/terrain/terrain.h"

namespace locolab::amp {

inline constexpr int kFeatureDim = 28;
inline constexpr int kPairDim = 2 * kFeatureDim;

// Layout: joint angles (8), joint velocities (8), base height above the
// ground (1), body-frame base velocity (2), pitch rate (1), body-frame foot
// positions (4 x 2).
using Features = Eigen::Matrix<double, kFeatureDim, 1>;

Features AmpFeatures(const sim::RobotState& state,
                     const sim::RobotMorphology& morphology,
                     const terrain::Terrain& terrain);
Features AmpFeatures(const motion::ReferencePose& pose);
Eigen::VectorXd PairVector(const Features& now, const Features& next);

enum class PairSource { kDataset, kPolicy };

// Fixed-capacity ring buffer of transition pairs.
class PairBuffer {
 public:
  PairBuffer(std::size_t capacity, PairSource source);

  void Add(const Eigen::VectorXd& pair);
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  PairSource source() const { return source_; }
  Eigen::VectorXd At(std::size_t i) const { return data_.col(i); }
  // Uniform draws with replacement, one pair per column. Throws EmptyBatch
  // when the buffer is empty.
  Eigen::MatrixXd Sample(int n, Rng& rng) const;
  void Clear() { size_ = next_ = 0; }

  void Save(BinaryWriter& out) const;
  static PairBuffer Load(BinaryReader& in);
  // Compares stored pairs only.
  friend bool operator==(const PairBuffer& a, const PairBuffer& b);

 private:
  std::size_t capacity_;
  PairSource source_;
  Eigen::MatrixXd data_;
  std::size_t size_ = 0;
  std::size_t next_ = 0;
};

// Every consecutive-frame pair of every clip, after resampling to the control
// rate. Throws EmptyDataset when there are no clips.
class MotionDataset {
 public:
  static MotionDataset FromClips(const std::vector<motion::MotionClip>& clips,
                                 double control_rate,
                                 const sim::RobotMorphology& morphology = {});

  int size() const { return static_cast<int>(pairs_.cols()); }
  const Eigen::MatrixXd& pairs() const { return pairs_; }
  Eigen::MatrixXd Sample(int n, Rng& rng) const;
  Eigen::VectorXd Mean() const;
  Eigen::VectorXd Std(double floor = 1e-2) const;

 private:
  Eigen::MatrixXd pairs_;  // kPairDim x count
};

// Which gradient the penalty term differentiates: the discriminator input
// (default) or its parameters.
enum class PenaltyMode { kInputGradient, kParameterGradient };
std::string ToString(PenaltyMode mode);
PenaltyMode PenaltyModeFromString(const std::string& name);

struct DiscLoss {
  double loss = 0.0;
  double data_term = 0.0;    // E_data[(D - 1)^2]
  double policy_term = 0.0;  // E_policy[(D + 1)^2]
  double penalty = 0.0;      // E_data[|grad D|^2], before the w_gp/2 factor
  double mean_d_data = 0.0;
  double mean_d_policy = 0.0;
  nn::MlpGradients grads;
};

// Least-squares discriminator loss with the gradient penalty on dataset
// samples. Inputs are (input_dim x batch). Throws EmptyBatch.
DiscLoss DiscLossAndGrads(const nn::Mlp& d, const Eigen::MatrixXd& data,
                          const Eigen::MatrixXd& policy, double w_gp,
                          PenaltyMode mode = PenaltyMode::kInputGradient);

// max(0, 1 - 0.25 (d - 1)^2).
double StyleReward(double d);

struct DiscriminatorConfig {
  std::vector<int> hidden = {512, 256};
  nn::Activation activation = nn::Activation::kTanh;
  double w_gp = 10.0;
  double learning_rate = 1e-4;
  int batch_size = 256;
  PenaltyMode penalty_mode = PenaltyMode::kInputGradient;
  double max_grad_norm = 1.0;

  void Validate() const;
  friend bool operator==(const DiscriminatorConfig&,
                         const DiscriminatorConfig&) = default;
};

// Network plus a fixed input normalizer fitted on the dataset; the penalty
// is taken with respect to the normalized pair.
class Discriminator {
 public:
  Discriminator() = default;
  Discriminator(const DiscriminatorConfig& config, Rng& rng);

  void FitNormalizer(const MotionDataset& dataset);
  Eigen::MatrixXd Normalize(const Eigen::MatrixXd& pairs) const;
  // D on raw (unnormalized) pairs.
  Eigen::VectorXd Evaluate(const Eigen::MatrixXd& pairs) const;
  double Evaluate(const Eigen::VectorXd& pair) const;
  Eigen::VectorXd StyleRewards(const Eigen::MatrixXd& pairs) const;

  // One Adam step on raw dataset and policy batches.
  DiscLoss Update(const Eigen::MatrixXd& data, const Eigen::MatrixXd& policy);

  const nn::Mlp& net() const { return net_; }
  nn::Mlp& mutable_net() { return net_; }
  const DiscriminatorConfig& config() const { return config_; }

  void Save(BinaryWriter& out) const;
  static Discriminator Load(BinaryReader& in);
  friend bool operator==(const Discriminator&, const Discriminator&) = default;

 private:
  DiscriminatorConfig config_;
  nn::Mlp net_;
  nn::Adam adam_;
  Eigen::VectorXd mean_ = Eigen::VectorXd::Zero(kPairDim);
  Eigen::VectorXd inv_std_ = Eigen::VectorXd::Ones(kPairDim);
};

}  // namespace locolab::amp

#endif  // LOCOLAB_AMP_AMP_H_
