#include "locolab/ppo/reward.h"

#include <cmath>

#include "locolab/errors.h"

namespace locolab::ppo {

void RewardWeights::Validate() const {
  if (!(w_goal >= 0.0) || !(w_style >= 0.0) || !(w_v >= 0.0) ||
      !(w_omega >= 0.0))
    throw ConfigError("reward weights must be >= 0");
  if (std::abs(w_goal + w_style - 1.0) > 1e-12)
    throw ConfigError("reward.w_goal + reward.w_style must equal 1");
}

double TaskReward(double cmd_v, double v, double cmd_omega, double omega,
                  double w_v, double w_omega) {
  return w_v * std::exp(-std::abs(cmd_v - v)) +
         w_omega * std::exp(-std::abs(cmd_omega - omega));
}

double CombinedReward(double r_goal, double r_style,
                      const RewardWeights& weights) {
  return weights.w_goal * r_goal + weights.w_style * r_style;
}

}  // namespace locolab::ppo
