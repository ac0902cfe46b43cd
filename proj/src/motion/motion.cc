#include "locolab/motion/motion.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "locolab/errors.h"
#include "locolab/sim/kinematics.h"

namespace locolab::motion {

namespace {

constexpr GaitLabel kAllLabels[] = {GaitLabel::kWalk, GaitLabel::kTrot,
                                    GaitLabel::kPace, GaitLabel::kGallop,
                                    GaitLabel::kOther};

// Left/right partner of each leg.
constexpr int kMirrorLeg[sim::kNumLegs] = {sim::kFR, sim::kFL, sim::kHR,
                                           sim::kHL};

Eigen::Vector2d HipPosition(const sim::RobotMorphology& morphology, int leg) {
  return {morphology.leg_attach_x[leg], 0.0};
}

void FillFeetFromJoints(ReferencePose& pose,
                        const sim::RobotMorphology& morphology) {
  for (int leg = 0; leg < sim::kNumLegs; ++leg)
    pose.foot_positions_body[leg] =
        sim::FootPositionBody(morphology, leg, pose.joint_angles);
}

std::string FrameError(std::size_t frame, const std::string& what) {
  return "frame " + std::to_string(frame) + ": " + what;
}

}  // namespace

std::string ToString(GaitLabel label) {
  switch (label) {
    case GaitLabel::kWalk:
      return "walk";
    case GaitLabel::kTrot:
      return "trot";
    case GaitLabel::kPace:
      return "pace";
    case GaitLabel::kGallop:
      return "gallop";
    case GaitLabel::kOther:
      return "other";
  }
  return "other";
}

std::string ToString(ClipSource source) {
  return source == ClipSource::kSynthetic ? "synthetic" : "imported";
}

GaitLabel GaitLabelFromString(const std::string& name) {
  for (GaitLabel label : kAllLabels)
    if (ToString(label) == name) return label;
  throw ConfigError("unknown gait label '" + name + "'");
}

ClipSource ClipSourceFromString(const std::string& name) {
  if (name == "synthetic") return ClipSource::kSynthetic;
  if (name == "imported") return ClipSource::kImported;
  throw ConfigError("unknown clip source '" + name + "'");
}

void MotionClip::Validate() const {
  if (!(frame_rate > 0.0)) throw ConfigError("frame_rate must be > 0");
  if (frames.size() < 2) throw ConfigError("a clip needs at least 2 frames");
  if (!(source_leg_length > 0.0))
    throw ConfigError("source_leg_length must be > 0");
}

void GaitParams::Validate() const {
  if (!(period > 0.0)) throw ConfigError("period must be > 0");
  if (!(duty_factor > 0.0 && duty_factor < 1.0))
    throw ConfigError("duty_factor must be in (0, 1)");
  for (double offset : phase_offsets)
    if (!(offset >= 0.0 && offset < 1.0))
      throw ConfigError("phase_offsets must be in [0, 1)");
  if (!(step_length >= 0.0)) throw ConfigError("step_length must be >= 0");
  if (!(step_height >= 0.0)) throw ConfigError("step_height must be >= 0");
  if (!(base_height > 0.0)) throw ConfigError("base_height must be > 0");
  const double stride = std::abs(forward_vel) * duty_factor * period;
  if (std::abs(step_length - stride) > 1e-9)
    throw ConfigError(
        "step_length must equal |forward_vel| * duty_factor * period (" +
        std::to_string(stride) + " m) for skate-free stance");
}

GaitParams GaitParams::Preset(GaitLabel label, double forward_vel) {
  GaitParams p;
  p.label = label;
  p.forward_vel = forward_vel;
  switch (label) {
    case GaitLabel::kWalk:
      p.period = 0.8;
      p.duty_factor = 0.75;
      p.phase_offsets = {0.0, 0.5, 0.75, 0.25};
      p.step_height = 0.05;
      break;
    case GaitLabel::kTrot:
    case GaitLabel::kOther:
      p.period = 0.5;
      p.duty_factor = 0.5;
      p.phase_offsets = {0.0, 0.5, 0.5, 0.0};
      break;
    case GaitLabel::kPace:
      p.period = 0.5;
      p.duty_factor = 0.5;
      p.phase_offsets = {0.0, 0.5, 0.0, 0.5};
      break;
    case GaitLabel::kGallop:
      p.period = 0.4;
      p.duty_factor = 0.35;
      p.phase_offsets = {0.0, 0.1, 0.5, 0.6};
      p.step_height = 0.08;
      break;
  }
  // Faster gaits shorten the period so the stance sweep stays reachable.
  constexpr double kMaxStride = 0.3;  // m
  const double speed = std::abs(forward_vel);
  if (speed * p.duty_factor * p.period > kMaxStride)
    p.period = kMaxStride / (speed * p.duty_factor);
  p.step_length = speed * p.duty_factor * p.period;
  return p;
}

MotionClip SynthGait(const GaitParams& params, int n_frames, double frame_rate,
                     const sim::RobotMorphology& morphology) {
  params.Validate();
  if (n_frames < 2) throw ConfigError("n_frames must be >= 2");
  if (!(frame_rate > 0.0)) throw ConfigError("frame_rate must be > 0");
  MotionClip clip;
  clip.frame_rate = frame_rate;
  clip.gait_label = params.label;
  clip.source = ClipSource::kSynthetic;
  clip.source_leg_length = morphology.LegLength();
  clip.source_hip_x = morphology.leg_attach_x;
  clip.frames.resize(n_frames);
  const double direction = params.forward_vel < 0.0 ? -1.0 : 1.0;
  const double stride = direction * params.step_length;
  for (int i = 0; i < n_frames; ++i) {
    const double t = i / frame_rate;
    ReferencePose& pose = clip.frames[i];
    pose.base_height = params.base_height;
    pose.base_forward_vel = params.forward_vel;
    for (int leg = 0; leg < sim::kNumLegs; ++leg) {
      double phase = t / params.period + params.phase_offsets[leg];
      phase -= std::floor(phase);
      const double neutral =
          morphology.leg_attach_x[leg] + sim::NominalFootOffset(leg).x();
      double dx;
      double dz = 0.0;
      if (phase < params.duty_factor) {
        dx = stride * (0.5 - phase / params.duty_factor);
        pose.foot_contact[leg] = true;
      } else {
        const double s = (phase - params.duty_factor) / (1.0 - params.duty_factor);
        const double angle = 2.0 * std::numbers::pi * s;
        dx = stride * (-0.5 + s - std::sin(angle) / (2.0 * std::numbers::pi));
        dz = params.step_height * 0.5 * (1.0 - std::cos(angle));
        pose.foot_contact[leg] = false;
      }
      const Eigen::Vector2d foot(neutral + dx, -params.base_height + dz);
      std::array<double, 2> angles;
      try {
        angles = IkLeg(foot - HipPosition(morphology, leg),
                       morphology.thigh_length, morphology.shank_length);
      } catch (const UnreachableFootTarget& e) {
        throw UnreachableFootTarget(FrameError(i, e.what()));
      }
      pose.joint_angles[sim::HipIndex(leg)] = angles[0];
      pose.joint_angles[sim::KneeIndex(leg)] = angles[1];
      pose.foot_positions_body[leg] = foot;
    }
  }
  DifferentiateVelocities(clip);
  return clip;
}

std::array<double, 2> IkLeg(const Eigen::Vector2d& foot_target, double thigh,
                            double shank) {
  return sim::LegInverseKinematics(foot_target, thigh, shank);
}

MotionClip Retarget(const MotionClip& clip,
                    const sim::RobotMorphology& morphology) {
  clip.Validate();
  const double ratio = morphology.LegLength() / clip.source_leg_length;
  MotionClip out = clip;
  out.source_leg_length = morphology.LegLength();
  out.source_hip_x = morphology.leg_attach_x;
  for (std::size_t i = 0; i < out.frames.size(); ++i) {
    const ReferencePose& src = clip.frames[i];
    ReferencePose& pose = out.frames[i];
    pose.base_height = src.base_height * ratio;
    pose.base_forward_vel = src.base_forward_vel * ratio;
    for (int leg = 0; leg < sim::kNumLegs; ++leg) {
      const Eigen::Vector2d source_hip(clip.source_hip_x[leg], 0.0);
      const Eigen::Vector2d target =
          (src.foot_positions_body[leg] - source_hip) * ratio;
      std::array<double, 2> angles;
      try {
        angles = IkLeg(target, morphology.thigh_length, morphology.shank_length);
      } catch (const UnreachableFootTarget& e) {
        throw UnreachableFootTarget(FrameError(i, e.what()));
      }
      const int hi = sim::HipIndex(leg);
      const int ki = sim::KneeIndex(leg);
      pose.joint_angles[hi] =
          std::clamp(angles[0], morphology.JointMin(hi), morphology.JointMax(hi));
      pose.joint_angles[ki] =
          std::clamp(angles[1], morphology.JointMin(ki), morphology.JointMax(ki));
    }
    FillFeetFromJoints(pose, morphology);
  }
  DifferentiateVelocities(out);
  return out;
}

MotionClip Mirror(const MotionClip& clip) {
  MotionClip out = clip;
  out.mirrored = !clip.mirrored;
  for (std::size_t i = 0; i < clip.frames.size(); ++i) {
    const ReferencePose& src = clip.frames[i];
    ReferencePose& pose = out.frames[i];
    for (int leg = 0; leg < sim::kNumLegs; ++leg) {
      const int other = kMirrorLeg[leg];
      pose.joint_angles[sim::HipIndex(leg)] =
          src.joint_angles[sim::HipIndex(other)];
      pose.joint_angles[sim::KneeIndex(leg)] =
          src.joint_angles[sim::KneeIndex(other)];
      pose.joint_vels[sim::HipIndex(leg)] = src.joint_vels[sim::HipIndex(other)];
      pose.joint_vels[sim::KneeIndex(leg)] =
          src.joint_vels[sim::KneeIndex(other)];
      pose.foot_positions_body[leg] = src.foot_positions_body[other];
      pose.foot_contact[leg] = src.foot_contact[other];
    }
  }
  for (int leg = 0; leg < sim::kNumLegs; ++leg)
    out.source_hip_x[leg] = clip.source_hip_x[kMirrorLeg[leg]];
  return out;
}

MotionClip Resample(const MotionClip& clip, double frame_rate,
                    const sim::RobotMorphology& morphology) {
  clip.Validate();
  if (!(frame_rate > 0.0)) throw ConfigError("frame_rate must be > 0");
  const double duration = clip.Duration();
  const int n = static_cast<int>(std::floor(duration * frame_rate + 1e-9)) + 1;
  if (n < 2)
    throw ConfigError("clip is too short to resample at " +
                      std::to_string(frame_rate) + " Hz");
  MotionClip out = clip;
  out.frame_rate = frame_rate;
  out.frames.assign(n, ReferencePose{});
  const int last = static_cast<int>(clip.frames.size()) - 1;
  for (int k = 0; k < n; ++k) {
    const double u = k / frame_rate * clip.frame_rate;
    const int i = std::min(static_cast<int>(std::floor(u + 1e-9)), last);
    const int j = std::min(i + 1, last);
    const double w = std::clamp(u - i, 0.0, 1.0);
    const ReferencePose& a = clip.frames[i];
    const ReferencePose& b = clip.frames[j];
    ReferencePose& pose = out.frames[k];
    auto lerp = [w](double x, double y) { return x + w * (y - x); };
    pose.base_height = lerp(a.base_height, b.base_height);
    pose.base_pitch = lerp(a.base_pitch, b.base_pitch);
    pose.base_forward_vel = lerp(a.base_forward_vel, b.base_forward_vel);
    pose.joint_angles = a.joint_angles + w * (b.joint_angles - a.joint_angles);
    pose.foot_contact = a.foot_contact;
    FillFeetFromJoints(pose, morphology);
  }
  DifferentiateVelocities(out);
  return out;
}

void DifferentiateVelocities(MotionClip& clip) {
  const int n = static_cast<int>(clip.frames.size());
  if (n < 2) return;
  const double rate = clip.frame_rate;
  for (int i = 0; i < n; ++i) {
    const int lo = std::max(i - 1, 0);
    const int hi = std::min(i + 1, n - 1);
    const double scale = rate / (hi - lo);
    const ReferencePose& a = clip.frames[lo];
    const ReferencePose& b = clip.frames[hi];
    ReferencePose& pose = clip.frames[i];
    pose.base_vertical_vel = (b.base_height - a.base_height) * scale;
    pose.base_pitch_rate = (b.base_pitch - a.base_pitch) * scale;
    pose.joint_vels = (b.joint_angles - a.joint_angles) * scale;
  }
}

double MaxFkError(const MotionClip& clip,
                  const sim::RobotMorphology& morphology) {
  double worst = 0.0;
  for (const ReferencePose& pose : clip.frames)
    for (int leg = 0; leg < sim::kNumLegs; ++leg)
      worst = std::max(
          worst, (sim::FootPositionBody(morphology, leg, pose.joint_angles) -
                  pose.foot_positions_body[leg])
                     .norm());
  return worst;
}

}  // namespace locolab::motion
