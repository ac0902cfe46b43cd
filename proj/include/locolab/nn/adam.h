#ifndef LOCOLAB_NN_ADAM_H_
#define LOCOLAB_NN_ADAM_H_

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "locolab/binary_io.h"

namespace locolab::nn {

struct AdamConfig {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  friend bool operator==(const AdamConfig&, const AdamConfig&) = default;
};

// Bias-corrected Adam over an ordered list of parameter blocks. Moment
// buffers are allocated on the first step and must keep matching shapes.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  void Step(const std::vector<std::span<double>>& params,
            const std::vector<std::span<const double>>& grads);

  const AdamConfig& config() const { return config_; }
  void set_learning_rate(double lr) { config_.learning_rate = lr; }
  std::int64_t step_count() const { return step_; }
  const std::vector<Eigen::VectorXd>& first_moments() const { return m_; }
  const std::vector<Eigen::VectorXd>& second_moments() const { return v_; }

  void Save(BinaryWriter& out) const;
  static Adam Load(BinaryReader& in);

  friend bool operator==(const Adam&, const Adam&) = default;

 private:
  AdamConfig config_;
  std::int64_t step_ = 0;
  std::vector<Eigen::VectorXd> m_;
  std::vector<Eigen::VectorXd> v_;
};

// Euclidean norm over all blocks.
double GlobalNorm(const std::vector<std::span<const double>>& blocks);
// Rescales gradients in place so their global norm is at most `max_norm`.
// Returns the norm before clipping.
double ClipGlobalNorm(const std::vector<std::span<double>>& blocks,
                      double max_norm);

}  // namespace locolab::nn

#endif  // LOCOLAB_NN_ADAM_H_
