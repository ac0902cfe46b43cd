#ifndef LOCOLAB_SIM_KINEMATICS_H_
#define LOCOLAB_SIM_KINEMATICS_H_

#include <array>
#include <cmath>

#include <Eigen/Core>

#include "locolab/sim/types.h"

namespace locolab::sim {

// Unit vector of a link at absolute angle `alpha` from the downward vertical.
inline Eigen::Vector2d LinkDirection(double alpha);

// Foot relative to its hip, in the body frame.
Eigen::Vector2d FootRelativeToHip(double hip, double knee, double thigh,
                                  double shank);
// Foot relative to the trunk center, in the body frame.
Eigen::Vector2d FootPositionBody(const RobotMorphology& morphology, int leg,
                                 const JointVector& joints);
Eigen::Vector2d BodyToWorld(const RobotState& state, const Eigen::Vector2d& p);
Eigen::Vector2d FootPositionWorld(const RobotMorphology& morphology,
                                  const RobotState& state, int leg);
// Trunk front and back tips in the world frame.
std::array<Eigen::Vector2d, 2> TrunkTips(const RobotMorphology& morphology,
                                         const RobotState& state);

// Knee-backward two-link inverse kinematics for a foot target relative to the
// hip. Returns {hip, knee}; throws UnreachableFootTarget outside the annulus.
std::array<double, 2> LegInverseKinematics(const Eigen::Vector2d& foot,
                                           double thigh, double shank);

// Foot targets of the default standing pose, relative to each hip. The stance
// is a little wider than the hips so that the trunk does not tip backwards.
Eigen::Vector2d NominalFootOffset(int leg);
JointVector NominalJointAngles(const RobotMorphology& morphology);

inline Eigen::Vector2d LinkDirection(double alpha) {
  return {std::sin(alpha), -std::cos(alpha)};
}

}  // namespace locolab::sim

#endif  // LOCOLAB_SIM_KINEMATICS_H_
