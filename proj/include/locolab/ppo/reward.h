#ifndef LOCOLAB_PPO_REWARD_H_
#define LOCOLAB_PPO_REWARD_H_

namespace locolab::ppo {

struct RewardWeights {
  double w_goal = 0.35;
  double w_style = 0.65;
  double w_v = 1.0;      // linear velocity term
  double w_omega = 0.5;  // angular velocity term

  // Throws ConfigError; w_goal + w_style must be 1.
  void Validate() const;
  double MaxTaskReward() const { return w_v + w_omega; }
  friend bool operator==(const RewardWeights&, const RewardWeights&) = default;
};

// w_v exp(-|cmd_v - v|) + w_omega exp(-|cmd_omega - omega|).
double TaskReward(double cmd_v, double v, double cmd_omega, double omega,
                  double w_v, double w_omega);

// The planar model has no yaw, so the angular term is taken at zero error.
inline double PlanarTaskReward(double cmd_v, double v,
                               const RewardWeights& weights) {
  return TaskReward(cmd_v, v, 0.0, 0.0, weights.w_v, weights.w_omega);
}

double CombinedReward(double r_goal, double r_style,
                      const RewardWeights& weights);

}  // namespace locolab::ppo

#endif  // LOCOLAB_PPO_REWARD_H_
