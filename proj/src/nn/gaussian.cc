#include "locolab/nn/gaussian.h"

#include <cmath>
#include <numbers>

#include "locolab/errors.h"

namespace locolab::nn {

namespace {
const double kHalfLogTwoPi = 0.5 * std::log(2.0 * std::numbers::pi);
}  // namespace

double GaussianHead::LogProb(const Eigen::VectorXd& mean,
                             const Eigen::VectorXd& action) const {
  if (mean.size() != log_std.size() || action.size() != log_std.size())
    throw DimMismatch("Gaussian head dimension mismatch");
  const Eigen::ArrayXd z =
      (action - mean).array() / log_std.array().exp();
  return (-0.5 * z.square() - log_std.array() - kHalfLogTwoPi).sum();
}

Eigen::VectorXd GaussianHead::LogProbBatch(
    const Eigen::MatrixXd& mean, const Eigen::MatrixXd& actions) const {
  if (mean.rows() != log_std.size() || actions.rows() != log_std.size() ||
      mean.cols() != actions.cols())
    throw DimMismatch("Gaussian head dimension mismatch");
  const Eigen::ArrayXd inv_std = (-log_std.array()).exp();
  const Eigen::ArrayXXd z =
      (actions - mean).array().colwise() * inv_std;
  const double norm = -log_std.sum() - kHalfLogTwoPi * dim();
  return ((-0.5 * z.square()).colwise().sum() + norm).transpose().matrix();
}

Eigen::VectorXd GaussianHead::Sample(const Eigen::VectorXd& mean,
                                     Rng& rng) const {
  if (mean.size() != log_std.size())
    throw DimMismatch("Gaussian head dimension mismatch");
  Eigen::VectorXd out(mean.size());
  for (Eigen::Index i = 0; i < mean.size(); ++i)
    out[i] = mean[i] + std::exp(log_std[i]) * rng.Normal();
  return out;
}

double GaussianHead::Entropy() const {
  return (log_std.array() + 0.5 + kHalfLogTwoPi).sum();
}

Eigen::MatrixXd GaussianHead::LogProbGradMean(
    const Eigen::MatrixXd& mean, const Eigen::MatrixXd& actions) const {
  const Eigen::ArrayXd inv_var = (-2.0 * log_std.array()).exp();
  return ((actions - mean).array().colwise() * inv_var).matrix();
}

Eigen::MatrixXd GaussianHead::LogProbGradLogStd(
    const Eigen::MatrixXd& mean, const Eigen::MatrixXd& actions) const {
  const Eigen::ArrayXd inv_std = (-log_std.array()).exp();
  const Eigen::ArrayXXd z = (actions - mean).array().colwise() * inv_std;
  return (z.square() - 1.0).matrix();
}

}  // namespace locolab::nn
