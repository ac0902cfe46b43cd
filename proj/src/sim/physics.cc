#include "locolab/sim/physics.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Cholesky>

#include "locolab/errors.h"
#include "locolab/sim/kinematics.h"

namespace locolab::sim {

namespace {

using RowJacobian = Eigen::Matrix<double, 1, kNumDof>;
using PointJacobian = Eigen::Matrix<double, 2, kNumDof>;
using MassMatrix = Eigen::Matrix<double, kNumDof, kNumDof>;

constexpr int kPgsIterations = 60;
constexpr double kPenetrationSlop = 1e-3;   // m
constexpr double kBaumgarte = 0.2;
constexpr double kMaxCorrectionSpeed = 0.5;  // m/s
constexpr int kRiserSearchCells = 10;
constexpr double kSpeculativeMargin = 0.02;  // m
constexpr double kLimitMargin = 1e-3;        // rad

struct Model {
  MassMatrix mass;
  DofVector force;  // gravity minus velocity-product terms
  std::array<Eigen::Vector2d, kNumLegs> foot;
  std::array<PointJacobian, kNumLegs> foot_jacobian;
  double potential = 0.0;
};

// Mass matrix and generalized forces by summing body contributions:
// M = sum m Jv^T Jv + I Jw^T Jw, f = sum m Jv^T (g - dJv/dt v).
Model ComputeModel(const DofVector& q, const DofVector& v,
                   const RobotMorphology& morph, const PhysicsParams& params) {
  Model model;
  model.mass.setZero();
  model.force.setZero();
  const Eigen::Vector2d g(0.0, params.gravity);
  auto add_body = [&](double m, double inertia, const Eigen::Vector2d& com,
                      const PointJacobian& jv, const RowJacobian& jw,
                      const Eigen::Vector2d& bias_acc) {
    model.mass.noalias() += m * jv.transpose() * jv;
    model.mass.noalias() += inertia * jw.transpose() * jw;
    model.force.noalias() += m * jv.transpose() * (g - bias_acc);
    model.potential -= m * params.gravity * com.y();
  };

  const Eigen::Vector2d base(q[0], q[1]);
  const double theta = q[2];
  const double theta_dot = v[2];
  const Eigen::Vector2d e(std::cos(theta), std::sin(theta));
  const Eigen::Vector2d e_prime(-std::sin(theta), std::cos(theta));

  PointJacobian j_base = PointJacobian::Zero();
  j_base(0, 0) = 1.0;
  j_base(1, 1) = 1.0;
  RowJacobian jw_trunk = RowJacobian::Zero();
  jw_trunk[2] = 1.0;
  add_body(morph.trunk_mass * params.mass_scale,
           morph.trunk_inertia * params.mass_scale, base, j_base, jw_trunk,
           Eigen::Vector2d::Zero());

  const double l1 = morph.thigh_length;
  const double l2 = morph.shank_length;
  const double i1 = morph.thigh_mass * l1 * l1 / 12.0;
  const double i2 = morph.shank_mass * l2 * l2 / 12.0;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    const int hi = 3 + HipIndex(leg);
    const int ki = 3 + KneeIndex(leg);
    const double ax = morph.leg_attach_x[leg];

    const Eigen::Vector2d hip = base + ax * e;
    PointJacobian j_hip = j_base;
    j_hip.col(2) += ax * e_prime;
    const Eigen::Vector2d a_hip = -ax * theta_dot * theta_dot * e;

    const double alpha1 = theta + q[hi];
    const double alpha1_dot = theta_dot + v[hi];
    const Eigen::Vector2d u1 = LinkDirection(alpha1);
    const Eigen::Vector2d w1(std::cos(alpha1), std::sin(alpha1));
    RowJacobian jw1 = jw_trunk;
    jw1[hi] = 1.0;

    PointJacobian j_thigh = j_hip;
    j_thigh.col(2) += 0.5 * l1 * w1;
    j_thigh.col(hi) += 0.5 * l1 * w1;
    add_body(morph.thigh_mass, i1, hip + 0.5 * l1 * u1, j_thigh, jw1,
             a_hip - 0.5 * l1 * alpha1_dot * alpha1_dot * u1);

    const Eigen::Vector2d knee = hip + l1 * u1;
    PointJacobian j_knee = j_hip;
    j_knee.col(2) += l1 * w1;
    j_knee.col(hi) += l1 * w1;
    const Eigen::Vector2d a_knee = a_hip - l1 * alpha1_dot * alpha1_dot * u1;

    const double alpha2 = alpha1 + q[ki];
    const double alpha2_dot = alpha1_dot + v[ki];
    const Eigen::Vector2d u2 = LinkDirection(alpha2);
    const Eigen::Vector2d w2(std::cos(alpha2), std::sin(alpha2));
    RowJacobian jw2 = jw1;
    jw2[ki] = 1.0;

    PointJacobian j_shank = j_knee;
    for (int c : {2, hi, ki}) j_shank.col(c) += 0.5 * l2 * w2;
    add_body(morph.shank_mass, i2, knee + 0.5 * l2 * u2, j_shank, jw2,
             a_knee - 0.5 * l2 * alpha2_dot * alpha2_dot * u2);

    PointJacobian j_foot = j_knee;
    for (int c : {2, hi, ki}) j_foot.col(c) += l2 * w2;
    model.foot[leg] = knee + l2 * u2;
    model.foot_jacobian[leg] = j_foot;
  }
  return model;
}

struct Contact {
  Eigen::Vector2d normal;
  Eigen::Vector2d tangent;
  double depth;  // > 0 when penetrating
};

// Picks the shallowest way out of the terrain: up through the cell top, or
// sideways through a riser into a neighbouring cell lower than the foot.
Contact TerrainContact(const terrain::Terrain& terrain,
                       const Eigen::Vector2d& p) {
  const auto& heights = terrain.heights();
  const int cell = terrain::Terrain::CellIndex(p.x());
  Contact contact{{0.0, 1.0}, {1.0, 0.0}, heights[cell] - p.y()};
  if (contact.depth <= kPenetrationSlop) return contact;
  const int n = static_cast<int>(heights.size());
  for (int j = cell - 1; j >= std::max(0, cell - kRiserSearchCells); --j) {
    if (heights[j] < p.y()) {
      const double depth = p.x() - terrain::Terrain::CellLeft(j + 1);
      if (depth >= 0.0 && depth < contact.depth)
        contact = {{-1.0, 0.0}, {0.0, 1.0}, depth};
      break;
    }
  }
  for (int j = cell + 1; j <= std::min(n - 1, cell + kRiserSearchCells); ++j) {
    if (heights[j] < p.y()) {
      const double depth = terrain::Terrain::CellLeft(j) - p.x();
      if (depth >= 0.0 && depth < contact.depth)
        contact = {{1.0, 0.0}, {0.0, 1.0}, depth};
      break;
    }
  }
  return contact;
}

enum class RowKind { kNormal, kFriction, kLimit };

struct Row {
  RowJacobian jacobian;
  RowKind kind;
  int partner = -1;  // normal row paired with a friction row
  int leg = -1;
  double target = 0.0;  // minimum constraint velocity
};

// Velocity target for a limit row given the remaining gap (negative once the
// stop has been passed).
double LimitTarget(double gap, double dt) {
  return gap >= 0.0 ? -gap / dt : std::min(kMaxCorrectionSpeed, -kBaumgarte * gap / dt);
}

double CorrectionSpeed(double depth, double dt) {
  return std::min(kMaxCorrectionSpeed,
                  kBaumgarte * std::max(0.0, depth - kPenetrationSlop) / dt);
}

}  // namespace

void RobotMorphology::Validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw ConfigError(std::string(name) + " must be > 0");
  };
  positive(trunk_mass, "trunk_mass");
  positive(trunk_inertia, "trunk_inertia");
  positive(trunk_length, "trunk_length");
  positive(thigh_length, "thigh_length");
  positive(shank_length, "shank_length");
  positive(thigh_mass, "thigh_mass");
  positive(shank_mass, "shank_mass");
  positive(joint_torque_limit, "joint_torque_limit");
  if (leg_attach_x[kFL] != leg_attach_x[kFR])
    throw ConfigError("leg_attach_x: FL and FR must share attach_x");
  if (leg_attach_x[kHL] != leg_attach_x[kHR])
    throw ConfigError("leg_attach_x: HL and HR must share attach_x");
  if (!(hip_min < hip_max)) throw ConfigError("hip_min must be < hip_max");
  if (!(knee_min < knee_max)) throw ConfigError("knee_min must be < knee_max");
}

void PhysicsParams::Validate() const {
  if (!(friction_coeff >= 0.0)) throw ConfigError("friction_coeff must be >= 0");
  if (!(dt_physics > 0.0)) throw ConfigError("dt_physics must be > 0");
  if (substeps_per_control < 1)
    throw ConfigError("substeps_per_control must be >= 1");
  if (!(kp >= 0.0)) throw ConfigError("kp must be >= 0");
  if (!(kd >= 0.0)) throw ConfigError("kd must be >= 0");
  if (!(mass_scale > 0.0)) throw ConfigError("mass_scale must be > 0");
  if (!((motor_gain_scale.array() >= 0.0).all()))
    throw ConfigError("motor_gain_scale must be >= 0");
}

void PerturbationSpec::Validate() const {
  if (!(lin_vel_kick >= 0.0)) throw ConfigError("lin_vel_kick must be >= 0");
  if (!(ang_vel_kick >= 0.0)) throw ConfigError("ang_vel_kick must be >= 0");
  if (!(torque_noise >= 0.0)) throw ConfigError("torque_noise must be >= 0");
  if (interval < 1) throw ConfigError("perturbation interval must be >= 1");
}

void NoiseSpec::Validate() const {
  if (!(joint_angle >= 0.0 && joint_vel >= 0.0 && projected_gravity >= 0.0 &&
        pitch_rate >= 0.0))
    throw ConfigError("noise amplitudes must be >= 0");
}

DofVector RobotState::Positions() const {
  DofVector q;
  q << base_pos, base_pitch, joint_angles;
  return q;
}

DofVector RobotState::Velocities() const {
  DofVector v;
  v << base_lin_vel, base_pitch_rate, joint_vels;
  return v;
}

void RobotState::SetPositions(const DofVector& q) {
  base_pos = q.head<2>();
  base_pitch = q[2];
  joint_angles = q.tail<kNumJoints>();
}

void RobotState::SetVelocities(const DofVector& v) {
  base_lin_vel = v.head<2>();
  base_pitch_rate = v[2];
  joint_vels = v.tail<kNumJoints>();
}

bool RobotState::AllFinite() const {
  return Positions().allFinite() && Velocities().allFinite() &&
         std::isfinite(time);
}

Eigen::Matrix<double, kObsDim, 1> ProprioObs::ToVector() const {
  Eigen::Matrix<double, kObsDim, 1> out;
  out << joint_angles, joint_vels, projected_gravity, pitch_rate,
      static_cast<double>(foot_contact[0]), static_cast<double>(foot_contact[1]),
      static_cast<double>(foot_contact[2]), static_cast<double>(foot_contact[3]),
      prev_action, command;
  return out;
}

Eigen::Matrix<double, kPrivilegedDim, 1> PrivilegedInfo::ToVector() const {
  Eigen::Matrix<double, kPrivilegedDim, 1> out;
  int k = 0;
  out[k++] = base_lin_vel.x();
  out[k++] = base_lin_vel.y();
  for (double h : height_samples) out[k++] = h;
  out[k++] = friction_coeff;
  for (int j = 0; j < kNumJoints; ++j) out[k++] = motor_gain_scale[j];
  out[k++] = mass_scale;
  for (double f : contact_force) out[k++] = f;
  return out;
}

JointVector LowPassFilter(const JointVector& u_prev, const JointVector& a) {
  return 0.2 * u_prev + 0.8 * a;
}

JointVector PdTorque(const JointVector& target, const JointVector& q,
                     const JointVector& qdot, const PhysicsParams& params,
                     const RobotMorphology& morphology) {
  const double limit = morphology.joint_torque_limit;
  JointVector tau;
  for (int j = 0; j < kNumJoints; ++j) {
    const double raw = params.kp * params.motor_gain_scale[j] *
                           (target[j] - q[j]) -
                       params.kd * qdot[j];
    tau[j] = std::clamp(raw, -limit, limit);
  }
  return tau;
}

RobotState Step(const RobotState& state, const JointVector& filtered_targets,
                const PhysicsParams& params, const RobotMorphology& morphology,
                const terrain::Terrain& terrain,
                const PerturbationSpec& perturbation, Rng& rng,
                ContactDiagnostics* diagnostics) {
  const double dt = params.dt_physics;
  const int substeps = params.substeps_per_control;
  const double mu = params.friction_coeff;

  JointVector torque_noise = JointVector::Zero();
  if (perturbation.torque_noise > 0.0) {
    for (int j = 0; j < kNumJoints; ++j)
      torque_noise[j] =
          rng.Uniform(-perturbation.torque_noise, perturbation.torque_noise);
  }

  DofVector q = state.Positions();
  DofVector v = state.Velocities();
  JointVector torque_sum = JointVector::Zero();
  std::array<double, kNumLegs> normal_sum{};
  std::array<double, kNumLegs> tangent_sum{};
  double worst_cone = -1.0;
  double worst_impulse_energy = 0.0;
  std::vector<Row> rows;
  rows.reserve(2 * kNumLegs + kNumJoints);

  for (int sub = 0; sub < substeps; ++sub) {
    const Model model = ComputeModel(q, v, morphology, params);
    JointVector tau =
        PdTorque(filtered_targets, q.tail<kNumJoints>(), v.tail<kNumJoints>(),
                 params, morphology) +
        torque_noise;
    torque_sum += tau;
    DofVector force = model.force;
    force.tail<kNumJoints>() += tau;
    const Eigen::LLT<MassMatrix> llt(model.mass);
    const DofVector v_free = v + dt * llt.solve(force);

    rows.clear();
    for (int leg = 0; leg < kNumLegs; ++leg) {
      const Contact c = TerrainContact(terrain, model.foot[leg]);
      if (c.depth < -kSpeculativeMargin) continue;
      // Separated feet may approach at most until they touch the surface.
      const double target =
          c.depth >= 0.0 ? CorrectionSpeed(c.depth, dt) : c.depth / dt;
      const int normal_row = static_cast<int>(rows.size());
      rows.push_back({c.normal.transpose() * model.foot_jacobian[leg],
                      RowKind::kNormal, -1, leg, target});
      rows.push_back({c.tangent.transpose() * model.foot_jacobian[leg],
                      RowKind::kFriction, normal_row, leg, 0.0});
    }
    // Joint limits are speculative too: a joint may close at most the gap to
    // its stop within one substep, and is pushed back out once past it.
    for (int j = 0; j < kNumJoints; ++j) {
      const double angle = q[3 + j];
      const double rate = v_free[3 + j];
      const double lower_gap = angle - morphology.JointMin(j);
      const double upper_gap = morphology.JointMax(j) - angle;
      RowJacobian jac = RowJacobian::Zero();
      if (lower_gap + dt * std::min(rate, 0.0) <= kLimitMargin) {
        jac[3 + j] = 1.0;
        rows.push_back({jac, RowKind::kLimit, -1, -1,
                        LimitTarget(lower_gap, dt)});
      } else if (upper_gap - dt * std::max(rate, 0.0) <= kLimitMargin) {
        jac[3 + j] = -1.0;
        rows.push_back({jac, RowKind::kLimit, -1, -1,
                        LimitTarget(upper_gap, dt)});
      }
    }

    DofVector v_new = v_free;
    std::vector<double> impulse(rows.size(), 0.0);
    if (!rows.empty()) {
      const auto n = static_cast<Eigen::Index>(rows.size());
      Eigen::Matrix<double, Eigen::Dynamic, kNumDof> jac(n, kNumDof);
      for (Eigen::Index r = 0; r < n; ++r) jac.row(r) = rows[r].jacobian;
      const Eigen::Matrix<double, kNumDof, Eigen::Dynamic> minv_jt =
          llt.solve(jac.transpose());
      Eigen::VectorXd diag(n);
      for (Eigen::Index r = 0; r < n; ++r)
        diag[r] = std::max(1e-12, jac.row(r).dot(minv_jt.col(r)));
      // Projected Gauss-Seidel on the impulses.
      for (int it = 0; it < kPgsIterations; ++it) {
        double change = 0.0;
        for (Eigen::Index r = 0; r < n; ++r) {
          const Row& row = rows[r];
          const double vel = row.jacobian.dot(v_new);
          double updated = impulse[r] - (vel - row.target) / diag[r];
          if (row.kind == RowKind::kFriction) {
            const double bound = mu * impulse[row.partner];
            updated = std::clamp(updated, -bound, bound);
          } else {
            updated = std::max(0.0, updated);
          }
          const double delta = updated - impulse[r];
          if (delta != 0.0) {
            v_new.noalias() += minv_jt.col(r) * delta;
            impulse[r] = updated;
            change = std::max(change, std::abs(delta));
          }
        }
        if (change < 1e-12) break;
      }
    }

    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].kind == RowKind::kNormal) {
        const int leg = rows[r].leg;
        normal_sum[leg] += impulse[r] / dt;
        tangent_sum[leg] += impulse[r + 1] / dt;
        worst_cone = std::max(worst_cone,
                              std::abs(impulse[r + 1]) - mu * impulse[r]);
      }
    }

    worst_impulse_energy =
        std::max(worst_impulse_energy, 0.5 * v_new.dot(model.mass * v_new) -
                                           0.5 * v_free.dot(model.mass * v_free));
    v = v_new;
    q += dt * v;
    // The limit rows already stop the joints at their stops; this only removes
    // round-off. Velocities are left to the next solve, since zeroing one
    // coordinate of v can raise the kinetic energy.
    for (int j = 0; j < kNumJoints; ++j)
      q[3 + j] = std::clamp(q[3 + j], morphology.JointMin(j),
                            morphology.JointMax(j));
    if (!q.allFinite() || !v.allFinite())
      throw NonFiniteState("simulation produced a non-finite state at t=" +
                           std::to_string(state.time + (sub + 1) * dt));
  }

  RobotState next = state;
  next.SetPositions(q);
  next.SetVelocities(v);
  next.time = state.time + substeps * dt;
  next.step_count = state.step_count + 1;
  next.applied_torque = torque_sum / substeps;
  for (int leg = 0; leg < kNumLegs; ++leg)
    next.contact_force[leg] = normal_sum[leg] / substeps;

  if (next.step_count % perturbation.interval == 0 &&
      (perturbation.lin_vel_kick > 0.0 || perturbation.ang_vel_kick > 0.0)) {
    next.base_lin_vel.x() +=
        rng.Uniform(-perturbation.lin_vel_kick, perturbation.lin_vel_kick);
    next.base_pitch_rate +=
        rng.Uniform(-perturbation.ang_vel_kick, perturbation.ang_vel_kick);
  }

  for (int leg = 0; leg < kNumLegs; ++leg) {
    const Eigen::Vector2d foot = FootPositionWorld(morphology, next, leg);
    next.foot_contact[leg] =
        foot.y() <= terrain.HeightAt(foot.x()) + kContactTolerance;
  }
  if (diagnostics) {
    for (int leg = 0; leg < kNumLegs; ++leg) {
      diagnostics->normal_force[leg] = normal_sum[leg] / substeps;
      diagnostics->tangential_force[leg] = tangent_sum[leg] / substeps;
    }
    diagnostics->max_cone_violation = worst_cone;
    diagnostics->max_impulse_energy_change = worst_impulse_energy;
  }
  return next;
}

ProprioObs Observe(const RobotState& state, const NoiseSpec& noise,
                   const JointVector& prev_action, double command, Rng& rng) {
  auto jitter = [&rng](double amplitude) {
    return amplitude > 0.0 ? rng.Uniform(-amplitude, amplitude) : 0.0;
  };
  ProprioObs obs;
  for (int j = 0; j < kNumJoints; ++j)
    obs.joint_angles[j] = state.joint_angles[j] + jitter(noise.joint_angle);
  for (int j = 0; j < kNumJoints; ++j)
    obs.joint_vels[j] = state.joint_vels[j] + jitter(noise.joint_vel);
  // World gravity direction (0, -1) expressed in the body frame.
  obs.projected_gravity = {-std::sin(state.base_pitch),
                           -std::cos(state.base_pitch)};
  obs.projected_gravity.x() += jitter(noise.projected_gravity);
  obs.projected_gravity.y() += jitter(noise.projected_gravity);
  obs.pitch_rate = state.base_pitch_rate + jitter(noise.pitch_rate);
  obs.foot_contact = state.foot_contact;
  obs.prev_action = prev_action;
  obs.command = command;
  return obs;
}

PrivilegedInfo Privileged(const RobotState& state,
                          const terrain::Terrain& terrain,
                          const PhysicsParams& params) {
  PrivilegedInfo info;
  info.base_lin_vel = state.base_lin_vel;
  for (int k = 0; k < kNumHeightSamples; ++k) {
    const double offset = 0.1 * (k - kNumHeightSamples / 2);
    info.height_samples[k] =
        terrain.HeightAt(state.base_pos.x() + offset) - state.base_pos.y();
  }
  info.friction_coeff = params.friction_coeff;
  info.motor_gain_scale = params.motor_gain_scale;
  info.mass_scale = params.mass_scale;
  info.contact_force = state.contact_force;
  return info;
}

PhysicsParams RandomizeParams(const PhysicsParams& base,
                              const RandomizationRanges& ranges, Rng& rng) {
  auto check = [](const Range& r, const char* name) {
    if (r.lo > r.hi)
      throw InvalidRange(std::string(name) + " range has lo > hi");
  };
  check(ranges.friction_coeff, "friction_coeff");
  check(ranges.mass_scale, "mass_scale");
  check(ranges.motor_gain_scale, "motor_gain_scale");
  PhysicsParams out = base;
  out.friction_coeff =
      rng.Uniform(ranges.friction_coeff.lo, ranges.friction_coeff.hi);
  out.mass_scale = rng.Uniform(ranges.mass_scale.lo, ranges.mass_scale.hi);
  for (int j = 0; j < kNumJoints; ++j)
    out.motor_gain_scale[j] =
        rng.Uniform(ranges.motor_gain_scale.lo, ranges.motor_gain_scale.hi);
  return out;
}

RobotState StandingState(const RobotMorphology& morphology,
                         const terrain::Terrain& terrain, double x,
                         const JointVector& joints) {
  RobotState state;
  state.joint_angles = joints;
  double z = -1e9;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    const Eigen::Vector2d foot = FootPositionBody(morphology, leg, joints);
    z = std::max(z, terrain.HeightAt(x + foot.x()) - foot.y());
  }
  state.base_pos = {x, z};
  for (int leg = 0; leg < kNumLegs; ++leg) {
    const Eigen::Vector2d foot = FootPositionWorld(morphology, state, leg);
    state.foot_contact[leg] =
        foot.y() <= terrain.HeightAt(foot.x()) + kContactTolerance;
  }
  return state;
}

double MechanicalEnergy(const RobotState& state,
                        const RobotMorphology& morphology,
                        const PhysicsParams& params) {
  const DofVector v = state.Velocities();
  const Model model = ComputeModel(state.Positions(), v, morphology, params);
  return 0.5 * v.dot(model.mass * v) + model.potential;
}

}  // namespace locolab::sim
