#include "locolab/ppo/gae.h"

#include <cmath>

#include "locolab/errors.h"

namespace locolab::ppo {

GaeResult Gae(const Eigen::VectorXd& rewards, const Eigen::VectorXd& values,
              const std::vector<bool>& dones, double bootstrap_value,
              double gamma, double lambda) {
  const Eigen::Index n = rewards.size();
  if (values.size() != n || static_cast<Eigen::Index>(dones.size()) != n)
    throw DimMismatch("gae: rewards, values and dones must have equal length");
  GaeResult out{Eigen::VectorXd(n), Eigen::VectorXd(n)};
  double running = 0.0;
  double next_value = bootstrap_value;
  for (Eigen::Index t = n - 1; t >= 0; --t) {
    const double live = dones[t] ? 0.0 : 1.0;
    const double delta = rewards[t] + gamma * next_value * live - values[t];
    running = delta + gamma * lambda * live * running;
    out.advantages[t] = running;
    next_value = values[t];
  }
  out.returns = out.advantages + values;
  return out;
}

Eigen::VectorXd NormalizeAdvantages(const Eigen::VectorXd& advantages) {
  if (advantages.size() < 2) return advantages;
  const double mean = advantages.mean();
  const Eigen::ArrayXd centered = advantages.array() - mean;
  const double sd = std::sqrt(centered.square().mean());
  if (sd == 0.0) return centered.matrix();
  return (centered / sd).matrix();
}

}  // namespace locolab::ppo
