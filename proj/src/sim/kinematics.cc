#include "locolab/sim/kinematics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "locolab/errors.h"

namespace locolab::sim {

Eigen::Vector2d FootRelativeToHip(double hip, double knee, double thigh,
                                  double shank) {
  return thigh * LinkDirection(hip) + shank * LinkDirection(hip + knee);
}

Eigen::Vector2d FootPositionBody(const RobotMorphology& morphology, int leg,
                                 const JointVector& joints) {
  return Eigen::Vector2d(morphology.leg_attach_x[leg], 0.0) +
         FootRelativeToHip(joints[HipIndex(leg)], joints[KneeIndex(leg)],
                           morphology.thigh_length, morphology.shank_length);
}

Eigen::Vector2d BodyToWorld(const RobotState& state, const Eigen::Vector2d& p) {
  const double c = std::cos(state.base_pitch);
  const double s = std::sin(state.base_pitch);
  return state.base_pos + Eigen::Vector2d(c * p.x() - s * p.y(),
                                          s * p.x() + c * p.y());
}

Eigen::Vector2d FootPositionWorld(const RobotMorphology& morphology,
                                  const RobotState& state, int leg) {
  return BodyToWorld(state,
                     FootPositionBody(morphology, leg, state.joint_angles));
}

std::array<Eigen::Vector2d, 2> TrunkTips(const RobotMorphology& morphology,
                                         const RobotState& state) {
  const double half = 0.5 * morphology.trunk_length;
  return {BodyToWorld(state, {half, 0.0}), BodyToWorld(state, {-half, 0.0})};
}

std::array<double, 2> LegInverseKinematics(const Eigen::Vector2d& foot,
                                           double thigh, double shank) {
  const double d2 = foot.squaredNorm();
  const double cos_knee = (d2 - thigh * thigh - shank * shank) /
                          (2.0 * thigh * shank);
  if (!std::isfinite(cos_knee) || cos_knee < -1.0 - 1e-12 ||
      cos_knee > 1.0 + 1e-12) {
    char buf[128];
    std::snprintf(buf, sizeof(buf),
                  "foot target (%.4f, %.4f) is outside the leg workspace",
                  foot.x(), foot.y());
    throw UnreachableFootTarget(buf);
  }
  const double knee = std::acos(std::clamp(cos_knee, -1.0, 1.0));
  const double direction = std::atan2(foot.x(), -foot.y());
  const double hip =
      direction - std::atan2(shank * std::sin(knee), thigh + shank * std::cos(knee));
  return {hip, knee};
}

Eigen::Vector2d NominalFootOffset(int leg) {
  constexpr double kDepth = 0.30;
  return {leg == kFL || leg == kFR ? 0.04 : -0.07, -kDepth};
}

JointVector NominalJointAngles(const RobotMorphology& morphology) {
  JointVector q;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    const auto angles = LegInverseKinematics(
        NominalFootOffset(leg), morphology.thigh_length, morphology.shank_length);
    q[HipIndex(leg)] = angles[0];
    q[KneeIndex(leg)] = angles[1];
  }
  return q;
}

}  // namespace locolab::sim
