#include "locolab/nn/adam.h"

#include <cmath>

#include "locolab/errors.h"

namespace locolab::nn {

void Adam::Step(const std::vector<std::span<double>>& params,
                const std::vector<std::span<const double>>& grads) {
  if (params.size() != grads.size())
    throw DimMismatch("parameter and gradient block counts differ");
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.size())));
      v_.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.size())));
    }
  }
  if (m_.size() != params.size())
    throw DimMismatch("parameter block count changed between steps");
  for (std::size_t b = 0; b < params.size(); ++b) {
    if (params[b].size() != grads[b].size() ||
        static_cast<Eigen::Index>(params[b].size()) != m_[b].size())
      throw DimMismatch("parameter block " + std::to_string(b) +
                        " does not match its gradient or moment shape");
  }
  ++step_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));
  for (std::size_t b = 0; b < params.size(); ++b) {
    double* p = params[b].data();
    const double* g = grads[b].data();
    double* m = m_[b].data();
    double* v = v_[b].data();
    for (std::size_t i = 0; i < params[b].size(); ++i) {
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g[i];
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      p[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
  }
}

void Adam::Save(BinaryWriter& out) const {
  out.WriteString("adam");
  out.Write(config_.learning_rate);
  out.Write(config_.beta1);
  out.Write(config_.beta2);
  out.Write(config_.epsilon);
  out.Write<std::int64_t>(step_);
  out.Write<std::uint64_t>(m_.size());
  for (std::size_t b = 0; b < m_.size(); ++b) {
    out.WriteVector(m_[b]);
    out.WriteVector(v_[b]);
  }
}

Adam Adam::Load(BinaryReader& in) {
  in.Expect("adam");
  AdamConfig config;
  config.learning_rate = in.Read<double>();
  config.beta1 = in.Read<double>();
  config.beta2 = in.Read<double>();
  config.epsilon = in.Read<double>();
  Adam adam(config);
  adam.step_ = in.Read<std::int64_t>();
  const auto blocks = in.Read<std::uint64_t>();
  if (blocks > 4096) throw IoError("implausible optimizer block count");
  for (std::uint64_t b = 0; b < blocks; ++b) {
    adam.m_.push_back(in.ReadVector());
    adam.v_.push_back(in.ReadVector());
  }
  return adam;
}

double GlobalNorm(const std::vector<std::span<const double>>& blocks) {
  double s = 0.0;
  for (const auto& block : blocks)
    for (double g : block) s += g * g;
  return std::sqrt(s);
}

double ClipGlobalNorm(const std::vector<std::span<double>>& blocks,
                      double max_norm) {
  double s = 0.0;
  for (const auto& block : blocks)
    for (double g : block) s += g * g;
  const double norm = std::sqrt(s);
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (const auto& block : blocks)
      for (double& g : block) g *= scale;
  }
  return norm;
}

}  // namespace locolab::nn
