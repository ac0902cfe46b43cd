#ifndef LOCOLAB_MOTION_MOTION_H_
#define LOCOLAB_MOTION_MOTION_H_

#include <array>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "locolab/sim/types.h"

namespace locolab::motion {

enum class GaitLabel { kWalk, kTrot, kPace, kGallop, kOther };
enum class ClipSource { kSynthetic, kImported };

std::string ToString(GaitLabel label);
std::string ToString(ClipSource source);
// Throw ConfigError for unknown names.
GaitLabel GaitLabelFromString(const std::string& name);
ClipSource ClipSourceFromString(const std::string& name);

struct ReferencePose {
  double base_height = 0.0;        // m above the ground
  double base_pitch = 0.0;         // rad
  double base_forward_vel = 0.0;   // m/s, world frame
  double base_vertical_vel = 0.0;  // m/s, world frame
  double base_pitch_rate = 0.0;    // rad/s
  sim::JointVector joint_angles = sim::JointVector::Zero();
  sim::JointVector joint_vels = sim::JointVector::Zero();
  // Foot positions relative to the trunk center, body frame.
  std::array<Eigen::Vector2d, sim::kNumLegs> foot_positions_body{};
  std::array<bool, sim::kNumLegs> foot_contact{};

  friend bool operator==(const ReferencePose&, const ReferencePose&) = default;
};

struct MotionClip {
  double frame_rate = 50.0;  // Hz
  std::vector<ReferencePose> frames;
  GaitLabel gait_label = GaitLabel::kOther;
  ClipSource source = ClipSource::kSynthetic;
  bool mirrored = false;
  // Geometry of the body the clip was recorded on, used for retargeting.
  double source_leg_length = 0.4;
  std::array<double, sim::kNumLegs> source_hip_x = {0.183, 0.183, -0.183,
                                                    -0.183};

  double Duration() const { return (frames.size() - 1) / frame_rate; }
  // Throws ConfigError when fewer than two frames or frame_rate <= 0.
  void Validate() const;

  friend bool operator==(const MotionClip&, const MotionClip&) = default;
};

struct GaitParams {
  double period = 0.5;      // s
  double duty_factor = 0.5;
  std::array<double, sim::kNumLegs> phase_offsets = {0.0, 0.5, 0.5, 0.0};
  double step_length = 0.0;  // m, stance sweep; must equal v * duty * period
  double step_height = 0.06;  // m
  double base_height = 0.28;  // m
  double forward_vel = 0.0;   // m/s
  GaitLabel label = GaitLabel::kTrot;

  // Throws ConfigError naming the first offending field.
  void Validate() const;

  // Preset footfall pattern at the given speed, with a skate-free stride.
  static GaitParams Preset(GaitLabel label, double forward_vel);
};

// Cycloidal swing, straight-line stance at -forward_vel in the body frame,
// joints from LegInverseKinematics. Velocity fields come from central
// differences. Throws UnreachableFootTarget naming the frame.
MotionClip SynthGait(const GaitParams& params, int n_frames, double frame_rate,
                     const sim::RobotMorphology& morphology = {});

// Knee-backward two-link IK for a foot target relative to the hip.
std::array<double, 2> IkLeg(const Eigen::Vector2d& foot_target, double thigh,
                            double shank);

// Scales the clip by the leg-length ratio about the source hips, solves IK
// per foot, clamps to the joint limits and recomputes the feet by forward
// kinematics. Throws UnreachableFootTarget naming the frame.
MotionClip Retarget(const MotionClip& clip,
                    const sim::RobotMorphology& morphology);

// Exchanges left and right legs. Involution.
MotionClip Mirror(const MotionClip& clip);

// Linear interpolation of the base and joint trajectories to a new rate;
// feet from forward kinematics, contacts from the earlier frame, velocities
// re-differenced.
MotionClip Resample(const MotionClip& clip, double frame_rate,
                    const sim::RobotMorphology& morphology = {});

// Fills the velocity fields by central differences (one-sided at the ends).
void DifferentiateVelocities(MotionClip& clip);

// Largest |FK(q) - foot_positions_body| over the clip, m.
double MaxFkError(const MotionClip& clip,
                  const sim::RobotMorphology& morphology = {});

// Clip file I/O. Load throws ParseError, SchemaVersionMismatch or IoError.
inline constexpr int kClipSchemaVersion = 1;
void SaveClip(const MotionClip& clip, const std::string& path);
MotionClip LoadClip(const std::string& path);
std::string ClipToString(const MotionClip& clip);
MotionClip ClipFromString(const std::string& text);

}  // namespace locolab::motion

#endif  // LOCOLAB_MOTION_MOTION_H_
