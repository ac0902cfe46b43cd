#ifndef LOCOLAB_PPO_GAE_H_
#define LOCOLAB_PPO_GAE_H_

#include <vector>

#include <Eigen/Core>

namespace locolab::ppo {

struct GaeResult {
  Eigen::VectorXd advantages;
  Eigen::VectorXd returns;  // advantages + values
};

// One environment's segment. dones[t] marks that step t ended an episode, so
// nothing is bootstrapped across it; `bootstrap_value` is V of the state after
// the last step. Throws DimMismatch on unequal lengths.
GaeResult Gae(const Eigen::VectorXd& rewards, const Eigen::VectorXd& values,
              const std::vector<bool>& dones, double bootstrap_value,
              double gamma, double lambda);

// Zero mean, unit (population) std. A single sample is returned unchanged
// and a constant batch becomes all zeros.
Eigen::VectorXd NormalizeAdvantages(const Eigen::VectorXd& advantages);

}  // namespace locolab::ppo

#endif  // LOCOLAB_PPO_GAE_H_
