#ifndef LOCOLAB_SIM_TYPES_H_
#define LOCOLAB_SIM_TYPES_H_

#include <array>
#include <cstdint>

#include <Eigen/Core>

namespace locolab::sim {

inline constexpr int kNumLegs = 4;
inline constexpr int kNumJoints = 8;  // hip, knee per leg
inline constexpr int kNumDof = 3 + kNumJoints;
inline constexpr int kObsDim = 32;
inline constexpr int kPrivilegedDim = 27;
inline constexpr int kNumHeightSamples = 11;

// Leg order used everywhere: front-left, front-right, hind-left, hind-right.
enum Leg : int { kFL = 0, kFR = 1, kHL = 2, kHR = 3 };

inline int HipIndex(int leg) { return 2 * leg; }
inline int KneeIndex(int leg) { return 2 * leg + 1; }

using JointVector = Eigen::Matrix<double, kNumJoints, 1>;
using DofVector = Eigen::Matrix<double, kNumDof, 1>;

// Planar sagittal quadruped. Hip angles are measured from the body's
// downward axis (positive swings the foot forward); knee angles are relative
// to the thigh, positive folding the shank forward (knee points backward).
struct RobotMorphology {
  double trunk_mass = 7.0;        // kg
  double trunk_inertia = 0.08;    // kg m^2, pitch axis
  double trunk_length = 0.45;     // m
  std::array<double, kNumLegs> leg_attach_x = {0.183, 0.183, -0.183, -0.183};
  double thigh_length = 0.2;      // m
  double shank_length = 0.2;      // m
  double thigh_mass = 1.0;        // kg
  double shank_mass = 0.2;        // kg, foot lumped in
  double joint_torque_limit = 33.5;  // N m
  double hip_min = -2.0;
  double hip_max = 1.2;
  double knee_min = 0.0;
  double knee_max = 2.7;

  // Throws ConfigError naming the first offending field.
  void Validate() const;
  double LegLength() const { return thigh_length + shank_length; }
  double TotalMass(double mass_scale = 1.0) const {
    return trunk_mass * mass_scale + kNumLegs * (thigh_mass + shank_mass);
  }
  double JointMin(int joint) const { return joint % 2 == 0 ? hip_min : knee_min; }
  double JointMax(int joint) const { return joint % 2 == 0 ? hip_max : knee_max; }

  friend bool operator==(const RobotMorphology&,
                         const RobotMorphology&) = default;
};

struct RobotState {
  Eigen::Vector2d base_pos = Eigen::Vector2d::Zero();      // world (x, z), m
  double base_pitch = 0.0;                                 // rad, nose up > 0
  Eigen::Vector2d base_lin_vel = Eigen::Vector2d::Zero();  // world, m/s
  double base_pitch_rate = 0.0;                            // rad/s
  JointVector joint_angles = JointVector::Zero();
  JointVector joint_vels = JointVector::Zero();
  std::array<bool, kNumLegs> foot_contact = {false, false, false, false};
  double time = 0.0;                                       // s
  std::int64_t step_count = 0;                             // control steps
  // Outputs of the last control period.
  std::array<double, kNumLegs> contact_force = {0, 0, 0, 0};  // normal, N
  JointVector applied_torque = JointVector::Zero();           // mean, N m

  DofVector Positions() const;
  DofVector Velocities() const;
  void SetPositions(const DofVector& q);
  void SetVelocities(const DofVector& v);
  bool AllFinite() const;

  friend bool operator==(const RobotState&, const RobotState&) = default;
};

struct PhysicsParams {
  double gravity = -9.81;          // vertical acceleration, m/s^2
  double friction_coeff = 1.0;
  JointVector motor_gain_scale = JointVector::Ones();
  double mass_scale = 1.0;         // trunk payload scale
  double kp = 20.0;                // N m / rad
  double kd = 0.5;                 // N m s / rad
  double dt_physics = 0.005;       // s
  int substeps_per_control = 4;

  double ControlDt() const { return dt_physics * substeps_per_control; }
  // Throws ConfigError naming the first offending field.
  void Validate() const;

  friend bool operator==(const PhysicsParams&, const PhysicsParams&) = default;
};

// Closed interval used for randomization draws.
struct Range {
  double lo = 1.0;
  double hi = 1.0;
  friend bool operator==(const Range&, const Range&) = default;
};

struct RandomizationRanges {
  Range friction_coeff{0.2, 1.25};
  Range mass_scale{0.8, 1.2};
  Range motor_gain_scale{0.9, 1.1};

  friend bool operator==(const RandomizationRanges&,
                         const RandomizationRanges&) = default;
};

// Symmetric ranges: each kick is drawn from [-value, value].
struct PerturbationSpec {
  double lin_vel_kick = 0.5;   // m/s, horizontal
  double ang_vel_kick = 0.5;   // rad/s, pitch
  double torque_noise = 0.5;   // N m per joint, drawn each control step
  int interval = 200;          // control steps between kicks

  void Validate() const;
  friend bool operator==(const PerturbationSpec&,
                         const PerturbationSpec&) = default;
};

// Uniform additive noise amplitudes per observation channel.
struct NoiseSpec {
  double joint_angle = 0.01;
  double joint_vel = 0.2;
  double projected_gravity = 0.05;
  double pitch_rate = 0.2;

  void Validate() const;
  static NoiseSpec Zero() { return {0.0, 0.0, 0.0, 0.0}; }
  friend bool operator==(const NoiseSpec&, const NoiseSpec&) = default;
};

struct ProprioObs {
  JointVector joint_angles = JointVector::Zero();
  JointVector joint_vels = JointVector::Zero();
  Eigen::Vector2d projected_gravity{0.0, -1.0};
  double pitch_rate = 0.0;
  std::array<bool, kNumLegs> foot_contact = {false, false, false, false};
  JointVector prev_action = JointVector::Zero();
  double command = 0.0;  // desired forward velocity, m/s

  Eigen::Matrix<double, kObsDim, 1> ToVector() const;
  friend bool operator==(const ProprioObs&, const ProprioObs&) = default;
};

struct PrivilegedInfo {
  Eigen::Vector2d base_lin_vel = Eigen::Vector2d::Zero();
  std::array<double, kNumHeightSamples> height_samples{};  // relative to base
  double friction_coeff = 0.0;
  JointVector motor_gain_scale = JointVector::Ones();
  double mass_scale = 1.0;
  std::array<double, kNumLegs> contact_force{};

  Eigen::Matrix<double, kPrivilegedDim, 1> ToVector() const;
  friend bool operator==(const PrivilegedInfo&,
                         const PrivilegedInfo&) = default;
};

}  // namespace locolab::sim

#endif  // LOCOLAB_SIM_TYPES_H_
