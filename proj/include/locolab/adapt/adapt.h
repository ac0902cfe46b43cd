#ifndef LOCOLAB_ADAPT_ADAPT_H_
#define LOCOLAB_ADAPT_ADAPT_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "locolab/nn/adam.h"
#include "locolab/nn/mlp.h"
#include "locolab/ppo/bundle.h"
#include "locolab/ppo/env.h"
#include "locolab/rng.h"

namespace locolab::adapt {

// Last `length` observation vectors. Window() is oldest first; slots not yet
// filled are zero and sit at the old end.
class HistoryBuffer {
 public:
  explicit HistoryBuffer(int length = 50, int dim = sim::kObsDim);

  // Throws DimMismatch.
  void Push(const Eigen::VectorXd& obs);
  void Clear();
  Eigen::VectorXd Window() const;

  int length() const { return length_; }
  int dim() const { return dim_; }
  int filled() const { return filled_; }

 private:
  int length_;
  int dim_;
  Eigen::MatrixXd ring_;  // dim x length
  int next_ = 0;
  int filled_ = 0;
};

// Inputs are the network-scaled vectors of ppo::ObsVector and
// ppo::PrivilegedVector.
Eigen::VectorXd EncodePrivileged(const ppo::PolicyBundle& bundle,
                                 const Eigen::VectorXd& privileged);
Eigen::VectorXd PredictLatent(const ppo::PolicyBundle& bundle,
                              const HistoryBuffer& history);
Eigen::VectorXd TeacherAct(const ppo::PolicyBundle& bundle,
                           const Eigen::VectorXd& privileged,
                           const Eigen::VectorXd& obs);

// Throws BundleMismatch unless the bundle holds a distilled predictor and
// its policy still matches the teacher it was distilled against.
void CheckStudent(const ppo::PolicyBundle& bundle);
// Deterministic student action. `history` must already contain `obs`.
Eigen::VectorXd StudentAct(const ppo::PolicyBundle& bundle,
                           const HistoryBuffer& history,
                           const Eigen::VectorXd& obs);

// What distillation needs from an environment.
class DistillEnv {
 public:
  virtual ~DistillEnv() = default;
  virtual void Reset() = 0;
  virtual Eigen::VectorXd Observation() const = 0;
  virtual Eigen::VectorXd Privileged() const = 0;
  // True when the episode ended; the caller resets.
  virtual bool Step(const Eigen::VectorXd& action) = 0;
};

class LocomotionDistillEnv : public DistillEnv {
 public:
  LocomotionDistillEnv(const ppo::EnvConfig& config, terrain::TerrainKind kind,
                       int level, std::uint64_t seed);
  void Reset() override { env_.Reset(); }
  Eigen::VectorXd Observation() const override;
  Eigen::VectorXd Privileged() const override;
  bool Step(const Eigen::VectorXd& action) override;
  const ppo::LocomotionEnv& env() const { return env_; }

 private:
  ppo::LocomotionEnv env_;
  sim::JointVector nominal_;
};

using EnvFactory =
    std::function<std::unique_ptr<DistillEnv>(int index, std::uint64_t seed)>;

// Environment i plays kinds[i % size] at `level`.
EnvFactory LocomotionEnvFactory(const ppo::EnvConfig& config,
                                std::vector<terrain::TerrainKind> kinds,
                                int level);

// Which actions drive the distillation rollouts.
enum class DistillMode { kStudent, kTeacher };
std::string ToString(DistillMode mode);
// Throws ConfigError.
DistillMode DistillModeFromString(const std::string& text);

struct DistillConfig {
  int epochs = 20;
  int n_envs = 16;
  int steps_per_epoch = 100;  // per environment
  int validation_envs = 8;
  int validation_steps = 100;
  int updates_per_epoch = 200;
  int batch_size = 256;
  double learning_rate = 1e-3;
  double max_grad_norm = 1.0;
  int dataset_capacity = 20000;
  DistillMode mode = DistillMode::kStudent;
  std::uint64_t seed = 1;

  void Validate() const;
};

struct LatentDataset {
  Eigen::MatrixXd windows;  // history window per column
  Eigen::MatrixXd latents;  // teacher latent per column

  int size() const { return static_cast<int>(windows.cols()); }
};

struct LatentLoss {
  double loss = 0.0;  // mean over samples of |predicted - target|^2
  nn::MlpGradients grads;
};
LatentLoss LatentLossAndGrads(const nn::Mlp& predictor,
                              const Eigen::MatrixXd& windows,
                              const Eigen::MatrixXd& latents);
// Throws EmptyDataset.
double LatentMse(const nn::Mlp& predictor, const LatentDataset& data);

// Minibatch Adam regression of the predictor onto fixed targets.
class PredictorFitter {
 public:
  PredictorFitter(double learning_rate, int batch_size, double max_grad_norm);
  // `updates` minibatch steps; returns the mean minibatch loss.
  double Fit(nn::Mlp& predictor, const LatentDataset& data, int updates,
             Rng& rng);

 private:
  nn::Adam adam_;
  int batch_size_;
  double max_grad_norm_;
};

struct DistillEpochStats {
  int epoch = 0;
  int samples = 0;  // aggregated dataset size
  double train_mse = 0.0;
  double validation_mse = 0.0;
};

class Distiller {
 public:
  // Records the teacher checksum and collects the held-out validation set
  // with teacher actions. Throws ConfigError or DimMismatch.
  Distiller(ppo::PolicyBundle& bundle, const DistillConfig& config,
            const EnvFactory& factory);

  // Collect with the configured action path, aggregate, fit, validate.
  // Throws FrozenTeacherViolation if the teacher changed.
  DistillEpochStats RunEpoch();
  double ValidationMse() const;
  const LatentDataset& validation() const { return validation_; }
  int epoch() const { return epoch_; }

 private:
  LatentDataset Rollout(std::vector<std::unique_ptr<DistillEnv>>& envs,
                        std::vector<HistoryBuffer>& histories, int steps,
                        DistillMode mode) const;
  void Aggregate(const LatentDataset& fresh);
  void CheckTeacher() const;

  ppo::PolicyBundle& bundle_;
  DistillConfig config_;
  std::uint64_t teacher_checksum_ = 0;
  std::vector<std::unique_ptr<DistillEnv>> envs_;
  std::vector<HistoryBuffer> histories_;
  LatentDataset validation_;
  LatentDataset data_;  // ring of dataset_capacity columns
  int data_next_ = 0;
  int data_filled_ = 0;
  PredictorFitter fitter_;
  Rng rng_;
  int epoch_ = 0;
};

struct DistillResult {
  double initial_validation_mse = 0.0;
  std::vector<DistillEpochStats> epochs;

  double final_validation_mse() const {
    return epochs.empty() ? initial_validation_mse
                          : epochs.back().validation_mse;
  }
};

// Trains bundle.predictor and marks the bundle as carrying a student.
DistillResult Distill(
    ppo::PolicyBundle& bundle, const DistillConfig& config,
    const EnvFactory& factory,
    const std::function<void(const DistillEpochStats&)>& progress = {});

std::string DistillCsvHeader();
std::string DistillCsvRow(const DistillEpochStats& stats);

// Student drives; the teacher is queried on the same states. Mean absolute
// action difference per joint and step.
double PairedActionGap(const ppo::PolicyBundle& bundle,
                       const EnvFactory& factory, int n_envs, int steps,
                       std::uint64_t seed);

}  // namespace locolab::adapt

#endif  // LOCOLAB_ADAPT_ADAPT_H_
