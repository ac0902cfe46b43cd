#ifndef LOCOLAB_NN_GAUSSIAN_H_
#define LOCOLAB_NN_GAUSSIAN_H_

#include <Eigen/Core>

#include "locolab/rng.h"

namespace locolab::nn {

// Diagonal Gaussian with a state-independent log standard deviation.
struct GaussianHead {
  Eigen::VectorXd log_std;

  int dim() const { return static_cast<int>(log_std.size()); }
  Eigen::VectorXd Std() const { return log_std.array().exp().matrix(); }

  double LogProb(const Eigen::VectorXd& mean,
                 const Eigen::VectorXd& action) const;
  // Column-wise log densities for (dim x batch) matrices.
  Eigen::VectorXd LogProbBatch(const Eigen::MatrixXd& mean,
                               const Eigen::MatrixXd& actions) const;
  // mean + std * eps with eps ~ N(0, I).
  Eigen::VectorXd Sample(const Eigen::VectorXd& mean, Rng& rng) const;
  double Entropy() const;

  // d logp / d mean, per column.
  Eigen::MatrixXd LogProbGradMean(const Eigen::MatrixXd& mean,
                                  const Eigen::MatrixXd& actions) const;
  // d logp / d log_std, per column.
  Eigen::MatrixXd LogProbGradLogStd(const Eigen::MatrixXd& mean,
                                    const Eigen::MatrixXd& actions) const;

  friend bool operator==(const GaussianHead&, const GaussianHead&) = default;
};

}  // namespace locolab::nn

#endif  // LOCOLAB_NN_GAUSSIAN_H_
