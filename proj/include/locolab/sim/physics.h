#ifndef LOCOLAB_SIM_PHYSICS_H_
#define LOCOLAB_SIM_PHYSICS_H_

#include <array>

#include "locolab/rng.h"
#include "locolab/sim/types.h"
#include "locolab/terrain/terrain.h"

namespace locolab::sim {

// Action smoothing applied at the control rate: u = 0.2 u_prev + 0.8 a.
JointVector LowPassFilter(const JointVector& u_prev, const JointVector& a);

// PD law with per-joint motor gain scale, saturated at the torque limit.
JointVector PdTorque(const JointVector& target, const JointVector& q,
                     const JointVector& qdot, const PhysicsParams& params,
                     const RobotMorphology& morphology);

// Per-foot contact forces averaged over the last control period.
struct ContactDiagnostics {
  std::array<double, kNumLegs> normal_force{};
  std::array<double, kNumLegs> tangential_force{};
  // Largest single-substep |tangential| - mu * normal over the period.
  double max_cone_violation = -1.0;
  // Largest single-substep kinetic energy change caused by the impulses, J.
  double max_impulse_energy_change = 0.0;
};

// Advances one control period with semi-implicit Euler over the substeps.
// Point feet and joint limits are resolved with velocity-level impulses under
// a Coulomb cone. Throws NonFiniteState if the state blows up.
RobotState Step(const RobotState& state, const JointVector& filtered_targets,
                const PhysicsParams& params, const RobotMorphology& morphology,
                const terrain::Terrain& terrain,
                const PerturbationSpec& perturbation, Rng& rng,
                ContactDiagnostics* diagnostics = nullptr);

ProprioObs Observe(const RobotState& state, const NoiseSpec& noise,
                   const JointVector& prev_action, double command, Rng& rng);

// Heights are sampled at base_x + {-0.5, -0.4, ..., 0.5} m, relative to the
// base height.
PrivilegedInfo Privileged(const RobotState& state,
                          const terrain::Terrain& terrain,
                          const PhysicsParams& params);

// Throws InvalidRange if any range has lo > hi.
PhysicsParams RandomizeParams(const PhysicsParams& base,
                              const RandomizationRanges& ranges, Rng& rng);

// Robot at rest in `joints` with its lowest foot touching the terrain.
RobotState StandingState(const RobotMorphology& morphology,
                         const terrain::Terrain& terrain, double x,
                         const JointVector& joints);

// Kinetic plus gravitational potential energy.
double MechanicalEnergy(const RobotState& state,
                        const RobotMorphology& morphology,
                        const PhysicsParams& params);

// Vertical contact margin used for the foot_contact flags.
inline constexpr double kContactTolerance = 2e-3;

}  // namespace locolab::sim

#endif  // LOCOLAB_SIM_PHYSICS_H_
